//! Delimited-text writers for matrices, embeddings, spectra and traces.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::io::Write;

use crate::bicluster::ShaveTrace;
use crate::dissimilarity::{JointDissimilarity, ObjectKind};
use crate::embedding::{BiplotCoordinates, Embedding, Scree};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

fn writer<W: Write>(out: W, delimiter: u8) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::input(format!("write failed: {e}"))
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(io_err)?.flush().map_err(io_err)
}

/// Samples in rows, header `id,<variables>`. Missing cells are written as `NA`.
pub fn write_matrix<W: Write>(out: W, x: &DataMatrix, delimiter: u8) -> Result<()> {
    let mut w = writer(out, delimiter);
    let header = std::iter::once("id".to_string()).chain(x.variable_labels().iter().cloned());
    w.write_record(header).map_err(io_err)?;
    for i in 0..x.n_samples() {
        let row =
            std::iter::once(x.sample_labels()[i].clone()).chain((0..x.n_variables()).map(|j| {
                if x.is_missing(i, j) {
                    "NA".to_string()
                } else {
                    x.get(i, j).to_string()
                }
            }));
        w.write_record(row).map_err(io_err)?;
    }
    finish(w)
}

fn coord_header(dims: usize) -> impl Iterator<Item = String> {
    ["object_label".to_string(), "kind".to_string()]
        .into_iter()
        .chain((1..=dims).map(|k| format!("coord_{k}")))
}

/// `object_label,kind,coord_1..coord_d`, one row per object.
pub fn write_embedding<W: Write>(out: W, e: &Embedding, delimiter: u8) -> Result<()> {
    let mut w = writer(out, delimiter);
    w.write_record(coord_header(e.dims_used()))
        .map_err(io_err)?;
    for i in 0..e.len() {
        let row = [e.labels()[i].clone(), e.kinds()[i].name().to_string()]
            .into_iter()
            .chain((0..e.dims_used()).map(|k| e.coordinate(i, k).to_string()));
        w.write_record(row).map_err(io_err)?;
    }
    finish(w)
}

/// Samples then variables, in the same layout as [`write_embedding`].
pub fn write_biplot<W: Write>(out: W, b: &BiplotCoordinates, delimiter: u8) -> Result<()> {
    let mut w = writer(out, delimiter);
    w.write_record(coord_header(b.rank)).map_err(io_err)?;
    let blocks = [
        (ObjectKind::Sample, &b.sample_labels, &b.sample_coords),
        (ObjectKind::Variable, &b.variable_labels, &b.variable_coords),
    ];
    for (kind, labels, coords) in blocks {
        for (i, label) in labels.iter().enumerate() {
            let row = [label.clone(), kind.name().to_string()]
                .into_iter()
                .chain((0..b.rank).map(|k| coords[(i, k)].to_string()));
            w.write_record(row).map_err(io_err)?;
        }
    }
    finish(w)
}

/// One signed eigenvalue per line, in the order given (descending for MDS).
pub fn write_spectrum<W: Write>(mut out: W, eigenvalues: &[f64]) -> Result<()> {
    for v in eigenvalues {
        writeln!(out, "{v}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// `component,value,fraction`; negative eigenvalues follow the positive
/// components with an empty fraction.
pub fn write_scree<W: Write>(out: W, scree: &Scree, delimiter: u8) -> Result<()> {
    let mut w = writer(out, delimiter);
    w.write_record(["component", "value", "fraction"])
        .map_err(io_err)?;
    for (k, (v, f)) in scree.components.iter().zip(&scree.fractions).enumerate() {
        w.write_record([(k + 1).to_string(), v.to_string(), f.to_string()])
            .map_err(io_err)?;
    }
    let offset = scree.components.len();
    for (k, v) in scree.negatives.iter().enumerate() {
        w.write_record([(offset + k + 1).to_string(), v.to_string(), String::new()])
            .map_err(io_err)?;
    }
    finish(w)
}

/// Label of an object with its kind prefix, e.g. `s:patient3`.
pub fn prefixed_label(kind: ObjectKind, label: &str) -> String {
    format!("{}:{label}", kind.prefix())
}

/// Full symmetric matrix with `s:`/`v:` prefixed labels on both axes.
pub fn write_dissimilarity<W: Write>(out: W, d: &JointDissimilarity, delimiter: u8) -> Result<()> {
    let mut w = writer(out, delimiter);
    let names: Vec<String> = d
        .kinds()
        .iter()
        .zip(d.labels())
        .map(|(&k, l)| prefixed_label(k, l))
        .collect();
    w.write_record(std::iter::once("object".to_string()).chain(names.iter().cloned()))
        .map_err(io_err)?;
    for (a, name) in names.iter().enumerate() {
        let row =
            std::iter::once(name.clone()).chain((0..d.len()).map(|b| d.get(a, b).to_string()));
        w.write_record(row).map_err(io_err)?;
    }
    finish(w)
}

/// `round,step,kind,label,score`, one record per surviving object per step.
pub fn write_trace<W: Write>(
    out: W,
    traces: &[(usize, &ShaveTrace)],
    x: &DataMatrix,
    delimiter: u8,
) -> Result<()> {
    let mut w = writer(out, delimiter);
    w.write_record(["round", "step", "kind", "label", "score"])
        .map_err(io_err)?;
    for &(round, trace) in traces {
        for (t, step) in trace.steps.iter().enumerate() {
            for kind in [ObjectKind::Sample, ObjectKind::Variable] {
                let labels = match kind {
                    ObjectKind::Sample => x.sample_labels(),
                    ObjectKind::Variable => x.variable_labels(),
                };
                for (&obj, score) in step.survivors(kind).iter().zip(step.scores(kind)) {
                    w.write_record([
                        round.to_string(),
                        t.to_string(),
                        kind.name().to_string(),
                        labels[obj].clone(),
                        score.to_string(),
                    ])
                    .map_err(io_err)?;
                }
            }
        }
    }
    finish(w)
}
