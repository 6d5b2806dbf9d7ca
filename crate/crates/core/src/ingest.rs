//! Tabular input, preprocessing and the planted-block synthetic benchmark.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{default_labels, DataMatrix};

/// Which axis of the file holds samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    SamplesRows,
    VariablesRows,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableFormat {
    pub delimiter: u8,
    pub orientation: Orientation,
    /// Cell text treated as missing in addition to the empty cell.
    pub missing_token: String,
}

impl Default for TableFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            orientation: Orientation::SamplesRows,
            missing_token: "NA".to_string(),
        }
    }
}

/// Reads a delimited table: header row of variable labels, first column of
/// sample labels (after orientation is applied). Missing cells become NaN.
pub fn load_table(path: &Path, format: &TableFormat) -> Result<DataMatrix> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_table(&text, format)
}

pub fn parse_table(text: &str, format: &TableFormat) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut row_labels = Vec::new();
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let Some(cols) = header.as_ref() else {
            if record.len() < 2 {
                return Err(Error::Parse {
                    line,
                    column: None,
                    message: "header needs a label column and at least one data column".into(),
                });
            }
            header = Some(
                record
                    .iter()
                    .skip(1)
                    .map(|s| s.trim().to_string())
                    .collect(),
            );
            continue;
        };
        if record.len() != cols.len() + 1 {
            return Err(Error::Parse {
                line,
                column: None,
                message: format!(
                    "expected {} fields, found {} (ragged row)",
                    cols.len() + 1,
                    record.len()
                ),
            });
        }
        row_labels.push(record[0].trim().to_string());
        for (j, raw) in record.iter().skip(1).enumerate() {
            let cell = raw.trim();
            let value = if cell.is_empty() || cell == format.missing_token {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            column: Some(j + 2),
                            message: format!("non-numeric cell {cell:?}"),
                        })
                    }
                }
            };
            cells.push(value);
        }
    }
    let col_labels = header.ok_or_else(|| Error::input("empty table"))?;
    if row_labels.is_empty() {
        return Err(Error::input("table has a header but no data rows"));
    }
    let p = col_labels.len();
    let values = Mat::from_fn(row_labels.len(), p, |i, j| cells[i * p + j]);
    let m = DataMatrix::with_missing(values, row_labels, col_labels)?;
    Ok(match format.orientation {
        Orientation::SamplesRows => m,
        Orientation::VariablesRows => m.transposed(),
    })
}

/// What preprocessing did to a matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessReport {
    pub dropped_missing: usize,
    pub dropped_negative: usize,
    pub dropped_constant: usize,
    pub zscored: bool,
    pub log2: bool,
}

/// Drops variables with any missing value, then variables with any value
/// `<= 0`, then takes log2 of what remains.
pub fn filter_and_log2(x: &DataMatrix) -> Result<(DataMatrix, PreprocessReport)> {
    let mut report = PreprocessReport {
        log2: true,
        ..Default::default()
    };
    let mut keep = Vec::new();
    for j in 0..x.n_variables() {
        let column = (0..x.n_samples()).map(|i| x.get(i, j));
        if x.variable_has_missing(j) {
            report.dropped_missing += 1;
        } else if column.clone().any(|v| v <= 0.0) {
            report.dropped_negative += 1;
        } else {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::input("no variables survive filtering"));
    }
    let kept = x.select_variables(&keep)?;
    let (values, samples, variables) = kept.into_parts();
    let logged = Mat::from_fn(values.nrows(), values.ncols(), |i, j| values[(i, j)].log2());
    Ok((DataMatrix::new(logged, samples, variables)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroVariancePolicy {
    #[default]
    Error,
    Drop,
}

/// Standardizes every variable to mean 0 and sample standard deviation 1
/// (denominator N−1). Returns the labels of any constant variables dropped.
pub fn zscore_variables(
    x: &DataMatrix,
    policy: ZeroVariancePolicy,
) -> Result<(DataMatrix, Vec<String>)> {
    x.ensure_finite()?;
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::parameter("z-scoring needs at least two samples"));
    }
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..x.n_variables() {
        let first = x.get(0, j);
        if (1..n).all(|i| x.get(i, j) == first) {
            match policy {
                ZeroVariancePolicy::Error => {
                    return Err(Error::input(format!(
                        "variable {:?} has zero variance",
                        x.variable_labels()[j]
                    )))
                }
                ZeroVariancePolicy::Drop => dropped.push(x.variable_labels()[j].clone()),
            }
        } else {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::input("every variable has zero variance"));
    }
    let kept = x.select_variables(&keep)?;
    let (mut values, samples, variables) = kept.into_parts();
    for j in 0..values.ncols() {
        let col: Vec<f64> = (0..n).map(|i| values[(i, j)]).collect();
        let (mean, var) = mean_var(&col);
        let sd = var.sqrt();
        for i in 0..n {
            values[(i, j)] = (col[i] - mean) / sd;
        }
    }
    Ok((DataMatrix::new(values, samples, variables)?, dropped))
}

/// Two-pass mean and sample variance (denominator len−1).
fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Group membership of each sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLabels {
    assignment: Vec<String>,
}

impl GroupLabels {
    pub fn new<S: Into<String>>(assignment: impl IntoIterator<Item = S>) -> Result<Self> {
        let assignment: Vec<String> = assignment.into_iter().map(Into::into).collect();
        if assignment.is_empty() {
            return Err(Error::input("group labels are empty"));
        }
        Ok(Self { assignment })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[String] {
        &self.assignment
    }

    /// Distinct groups in order of first appearance.
    pub fn groups(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for g in &self.assignment {
            if !seen.contains(&g.as_str()) {
                seen.push(g.as_str());
            }
        }
        seen
    }

    pub fn members(&self, group: &str) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == group)
            .collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.assignment.len() != n {
            return Err(Error::input(format!(
                "{} group labels for {n} samples",
                self.assignment.len()
            )));
        }
        Ok(())
    }
}

/// Per-variable pooled-variance two-sample t statistic of `target_group`
/// against every other sample. Positive when the target group is higher.
pub fn t_statistic(x: &DataMatrix, groups: &GroupLabels, target_group: &str) -> Result<Vec<f64>> {
    x.ensure_finite()?;
    groups.check_len(x.n_samples())?;
    let (inside, outside): (Vec<usize>, Vec<usize>) =
        (0..x.n_samples()).partition(|&i| groups.assignment[i] == target_group);
    if inside.len() < 2 || outside.len() < 2 {
        return Err(Error::parameter(format!(
            "t statistic needs at least two samples in group {target_group:?} ({}) and in its complement ({})",
            inside.len(),
            outside.len()
        )));
    }
    let (n1, n2) = (inside.len() as f64, outside.len() as f64);
    Ok((0..x.n_variables())
        .map(|j| {
            let a: Vec<f64> = inside.iter().map(|&i| x.get(i, j)).collect();
            let b: Vec<f64> = outside.iter().map(|&i| x.get(i, j)).collect();
            let (ma, va) = mean_var(&a);
            let (mb, vb) = mean_var(&b);
            let pooled = ((n1 - 1.0) * va + (n2 - 1.0) * vb) / (n1 + n2 - 2.0);
            let diff = ma - mb;
            if pooled == 0.0 {
                degenerate_ratio(diff)
            } else {
                diff / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt()
            }
        })
        .collect())
}

fn degenerate_ratio(numerator: f64) -> f64 {
    if numerator > 0.0 {
        f64::INFINITY
    } else if numerator < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Per-variable one-way ANOVA F statistic across all groups.
pub fn f_statistic(x: &DataMatrix, groups: &GroupLabels) -> Result<Vec<f64>> {
    x.ensure_finite()?;
    groups.check_len(x.n_samples())?;
    let names = groups.groups();
    let g = names.len();
    let n = x.n_samples();
    if g < 2 {
        return Err(Error::parameter("F statistic needs at least two groups"));
    }
    if n <= g {
        return Err(Error::parameter(format!(
            "F statistic needs more samples ({n}) than groups ({g})"
        )));
    }
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let member: Vec<usize> = groups
        .assignment
        .iter()
        .map(|s| index[s.as_str()])
        .collect();
    let mut sizes = vec![0.0; g];
    for &k in &member {
        sizes[k] += 1.0;
    }
    Ok((0..x.n_variables())
        .map(|j| {
            let mut sums = vec![0.0; g];
            let mut total = 0.0;
            for i in 0..n {
                sums[member[i]] += x.get(i, j);
                total += x.get(i, j);
            }
            let grand = total / n as f64;
            let means: Vec<f64> = sums.iter().zip(&sizes).map(|(s, c)| s / c).collect();
            let between: f64 = (0..g)
                .map(|k| sizes[k] * (means[k] - grand) * (means[k] - grand))
                .sum();
            let within: f64 = (0..n)
                .map(|i| {
                    let d = x.get(i, j) - means[member[i]];
                    d * d
                })
                .sum();
            if within == 0.0 {
                if between > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (between / (g - 1) as f64) / (within / (n - g) as f64)
            }
        })
        .collect())
}

/// Indices of the `m` largest statistics, largest first (index breaks ties).
pub fn top_indices(stats: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..stats.len()).collect();
    idx.sort_by(|&a, &b| stats[b].total_cmp(&stats[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// Indices of the `m` smallest statistics, smallest first.
pub fn bottom_indices(stats: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..stats.len()).collect();
    idx.sort_by(|&a, &b| stats[a].total_cmp(&stats[b]).then(a.cmp(&b)));
    idx.truncate(m);
    idx
}

/// Parameters for a Gaussian matrix with one shifted top-left block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_variables: usize,
    pub planted_samples: usize,
    pub planted_variables: usize,
    pub shift: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 60,
            n_variables: 1500,
            planted_samples: 6,
            planted_variables: 25,
            shift: 2.0,
            seed: 0,
        }
    }
}

pub const PLANTED: &str = "planted";
pub const BACKGROUND: &str = "background";

#[derive(Debug, Clone)]
pub struct SyntheticBlock {
    pub matrix: DataMatrix,
    pub sample_groups: GroupLabels,
    pub variable_groups: GroupLabels,
}

/// Standard normal entries with `shift` added to the planted block.
///
/// Draws come from ChaCha8 seeded with `seed`, consumed in row-major order.
pub fn synth_block(cfg: &SynthConfig) -> Result<SyntheticBlock> {
    if cfg.n_samples == 0 || cfg.n_variables == 0 {
        return Err(Error::parameter("synthetic matrix needs N >= 1 and p >= 1"));
    }
    if cfg.planted_samples > cfg.n_samples || cfg.planted_variables > cfg.n_variables {
        return Err(Error::parameter(format!(
            "planted block {}x{} does not fit in {}x{}",
            cfg.planted_samples, cfg.planted_variables, cfg.n_samples, cfg.n_variables
        )));
    }
    if !cfg.shift.is_finite() {
        return Err(Error::parameter("shift must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draws = Vec::with_capacity(cfg.n_samples * cfg.n_variables);
    for i in 0..cfg.n_samples {
        for j in 0..cfg.n_variables {
            let z: f64 = StandardNormal.sample(&mut rng);
            let planted = i < cfg.planted_samples && j < cfg.planted_variables;
            draws.push(if planted { z + cfg.shift } else { z });
        }
    }
    let p = cfg.n_variables;
    let values = Mat::from_fn(cfg.n_samples, p, |i, j| draws[i * p + j]);
    let matrix = DataMatrix::new(
        values,
        default_labels("s", cfg.n_samples),
        default_labels("v", cfg.n_variables),
    )?;
    let tag = |planted: bool| if planted { PLANTED } else { BACKGROUND };
    Ok(SyntheticBlock {
        matrix,
        sample_groups: GroupLabels::new((0..cfg.n_samples).map(|i| tag(i < cfg.planted_samples)))?,
        variable_groups: GroupLabels::new(
            (0..cfg.n_variables).map(|j| tag(j < cfg.planted_variables)),
        )?,
    })
}
