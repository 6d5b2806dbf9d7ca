//! Two-column `object,group` files.
//!
//! An object is named either with its kind prefix (`s:patient3`, `v:gene12`)
//! or bare, in which case it matches a sample or variable of that name.

use std::collections::HashMap;
use std::path::Path;

use cumbia_core::export::prefixed_label;
use cumbia_core::{Error, ObjectKind, Result};

use crate::output::read_file;

#[derive(Debug, Clone, Default)]
pub struct LabelFile {
    groups: HashMap<String, String>,
}

impl LabelFile {
    pub fn read(path: &Path, delimiter: u8) -> Result<Self> {
        let bytes = read_file(path)?;
        Self::parse(&bytes, delimiter).map_err(|e| match e {
            Error::Parse { line, message, .. } => {
                Error::Input(format!("{} line {line}: {message}", path.display()))
            }
            other => other,
        })
    }

    pub fn parse(bytes: &[u8], delimiter: u8) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .from_reader(bytes);
        let mut groups = HashMap::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::Parse {
                line,
                column: None,
                message: e.to_string(),
            })?;
            if record.len() < 2 {
                return Err(Error::Parse {
                    line,
                    column: None,
                    message: "expected `object,group`".into(),
                });
            }
            let object = record[0].trim().to_string();
            if groups
                .insert(object.clone(), record[1].trim().to_string())
                .is_some()
            {
                return Err(Error::Parse {
                    line,
                    column: Some(1),
                    message: format!("`{object}` is listed twice"),
                });
            }
        }
        Ok(LabelFile { groups })
    }

    pub fn group(&self, kind: ObjectKind, label: &str) -> Option<&str> {
        self.groups
            .get(&prefixed_label(kind, label))
            .or_else(|| self.groups.get(label))
            .map(String::as_str)
    }

    /// Group of every object, `None` where the file is silent.
    pub fn assign(&self, kinds: &[ObjectKind], labels: &[String]) -> Vec<Option<String>> {
        kinds
            .iter()
            .zip(labels)
            .map(|(&k, l)| self.group(k, l).map(str::to_string))
            .collect()
    }

    /// Group of every sample; all of them must be present.
    pub fn sample_groups(&self, samples: &[String]) -> Result<Vec<String>> {
        samples
            .iter()
            .map(|s| {
                self.group(ObjectKind::Sample, s)
                    .map(str::to_string)
                    .ok_or_else(|| Error::Input(format!("sample `{s}` has no group")))
            })
            .collect()
    }
}
