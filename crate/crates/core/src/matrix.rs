//! Dense data matrix container and the thin SVD machinery built on it.

use std::collections::HashSet;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by [`svd`] when callers have no
/// reason to pick their own.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

/// An N×p matrix of samples (rows) by variables (columns), with labels.
///
/// Entries are finite, except for a matrix produced by table loading which
/// may carry missing cells (stored as NaN) until they are filtered out.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Mat<f64>,
    sample_labels: Vec<String>,
    variable_labels: Vec<String>,
}

impl DataMatrix {
    /// Builds a matrix, rejecting non-finite entries and inconsistent labels.
    pub fn new(
        values: Mat<f64>,
        sample_labels: Vec<String>,
        variable_labels: Vec<String>,
    ) -> Result<Self> {
        let m = Self::with_missing(values, sample_labels, variable_labels)?;
        m.ensure_finite()?;
        Ok(m)
    }

    /// Like [`DataMatrix::new`] but NaN entries are accepted as missing
    /// cells. Infinite entries are still rejected.
    pub fn with_missing(
        values: Mat<f64>,
        sample_labels: Vec<String>,
        variable_labels: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = (values.nrows(), values.ncols());
        if n == 0 || p == 0 {
            return Err(Error::input(format!(
                "data matrix must have at least one sample and one variable (got {n}x{p})"
            )));
        }
        if sample_labels.len() != n {
            return Err(Error::input(format!(
                "{} sample labels for {n} rows",
                sample_labels.len()
            )));
        }
        if variable_labels.len() != p {
            return Err(Error::input(format!(
                "{} variable labels for {p} columns",
                variable_labels.len()
            )));
        }
        check_unique(&sample_labels, "sample")?;
        check_unique(&variable_labels, "variable")?;
        for j in 0..p {
            for i in 0..n {
                if values[(i, j)].is_infinite() {
                    return Err(Error::input(format!(
                        "infinite entry at row {} ({}), column {} ({})",
                        i + 1,
                        sample_labels[i],
                        j + 1,
                        variable_labels[j]
                    )));
                }
            }
        }
        Ok(Self {
            values,
            sample_labels,
            variable_labels,
        })
    }

    /// Matrix with generated labels `s1..sN` and `v1..vp`.
    pub fn from_mat(values: Mat<f64>) -> Result<Self> {
        let samples = default_labels("s", values.nrows());
        let variables = default_labels("v", values.ncols());
        Self::new(values, samples, variables)
    }

    /// Row-major convenience constructor with generated labels.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::input("rows have differing lengths"));
        }
        Self::from_mat(Mat::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_variables(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> MatRef<'_, f64> {
        self.values.as_ref()
    }

    pub fn get(&self, sample: usize, variable: usize) -> f64 {
        self.values[(sample, variable)]
    }

    pub fn sample_labels(&self) -> &[String] {
        &self.sample_labels
    }

    pub fn variable_labels(&self) -> &[String] {
        &self.variable_labels
    }

    pub fn is_missing(&self, sample: usize, variable: usize) -> bool {
        self.values[(sample, variable)].is_nan()
    }

    pub fn has_missing(&self) -> bool {
        (0..self.n_variables()).any(|j| self.variable_has_missing(j))
    }

    pub fn variable_has_missing(&self, variable: usize) -> bool {
        (0..self.n_samples()).any(|i| self.is_missing(i, variable))
    }

    /// Errors with the first missing cell's coordinates, if any.
    pub fn ensure_finite(&self) -> Result<()> {
        for j in 0..self.n_variables() {
            for i in 0..self.n_samples() {
                if !self.values[(i, j)].is_finite() {
                    return Err(Error::input(format!(
                        "non-finite entry at row {} ({}), column {} ({})",
                        i + 1,
                        self.sample_labels[i],
                        j + 1,
                        self.variable_labels[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Submatrix keeping the given samples and variables, in the given order.
    pub fn select(&self, samples: &[usize], variables: &[usize]) -> Result<Self> {
        let values = Mat::from_fn(samples.len(), variables.len(), |i, j| {
            self.values[(samples[i], variables[j])]
        });
        Self::with_missing(
            values,
            samples
                .iter()
                .map(|&i| self.sample_labels[i].clone())
                .collect(),
            variables
                .iter()
                .map(|&j| self.variable_labels[j].clone())
                .collect(),
        )
    }

    pub fn select_variables(&self, variables: &[usize]) -> Result<Self> {
        let all: Vec<usize> = (0..self.n_samples()).collect();
        self.select(&all, variables)
    }

    /// Swaps the roles of samples and variables.
    pub fn transposed(&self) -> Self {
        Self {
            values: self.values.transpose().to_owned(),
            sample_labels: self.variable_labels.clone(),
            variable_labels: self.sample_labels.clone(),
        }
    }

    pub fn into_parts(self) -> (Mat<f64>, Vec<String>, Vec<String>) {
        (self.values, self.sample_labels, self.variable_labels)
    }
}

pub(crate) fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_unique(labels: &[String], kind: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::input(format!("duplicate {kind} label {l:?}")));
        }
    }
    Ok(())
}

/// Thin SVD `X = U diag(singular_values) Vᵀ` restricted to the numerical rank.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    u: Mat<f64>,
    singular_values: Vec<f64>,
    v: Mat<f64>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// N×r left singular vectors.
    pub fn u(&self) -> MatRef<'_, f64> {
        self.u.as_ref()
    }

    /// p×r right singular vectors.
    pub fn v(&self) -> MatRef<'_, f64> {
        self.v.as_ref()
    }

    /// Singular values, nonincreasing and strictly positive.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Largest singular value.
    pub fn lambda1(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn n_rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.v.nrows()
    }
}

/// Thin SVD of a data matrix, truncated to the singular values exceeding
/// `rank_tolerance` times the largest one.
///
/// Each singular pair is sign-normalized so that the largest-magnitude entry
/// of its U column is positive (first such entry on ties).
pub fn svd(x: &DataMatrix, rank_tolerance: f64) -> Result<SvdFactors> {
    x.ensure_finite()?;
    svd_of(x.values(), rank_tolerance)
}

pub(crate) fn svd_of(x: MatRef<'_, f64>, rank_tolerance: f64) -> Result<SvdFactors> {
    if !(rank_tolerance >= 0.0 && rank_tolerance.is_finite()) {
        return Err(Error::parameter(format!(
            "rank tolerance must be a nonnegative finite number, got {rank_tolerance}"
        )));
    }
    let dec = x
        .thin_svd()
        .map_err(|e| Error::invariant(format!("SVD did not converge: {e:?}")))?;
    let s = dec.S().column_vector();
    let top = if s.nrows() == 0 { 0.0 } else { s[0] };
    if top.is_nan() || top <= 0.0 {
        return Err(Error::input("rank zero, no decomposition"));
    }
    let cutoff = rank_tolerance * top;
    let r = (0..s.nrows()).take_while(|&k| s[k] > cutoff).count();

    let mut u = dec.U().subcols(0, r).to_owned();
    let mut v = dec.V().subcols(0, r).to_owned();
    let singular_values: Vec<f64> = (0..r).map(|k| s[k]).collect();
    for k in 0..r {
        let col = u.col(k);
        let mut pivot = 0;
        for i in 1..col.nrows() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            u.col_mut(k).iter_mut().for_each(|e| *e = -*e);
            v.col_mut(k).iter_mut().for_each(|e| *e = -*e);
        }
    }
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

/// Rank-`s` approximation `U_s Λ_s V_sᵀ`.
pub fn truncate(f: &SvdFactors, s: usize) -> Result<Mat<f64>> {
    if s < 1 || s > f.rank() {
        return Err(Error::parameter(format!(
            "truncation rank must be in 1..={}, got {s}",
            f.rank()
        )));
    }
    let scaled = Mat::from_fn(f.n_rows(), s, |i, k| f.u[(i, k)] * f.singular_values[k]);
    Ok(&scaled * f.v.subcols(0, s).transpose())
}

/// `sqrt(Σ A_ij²)`. Errors if any entry is not finite.
pub fn frobenius_norm(a: MatRef<'_, f64>) -> Result<f64> {
    let mut sum = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(Error::input(format!(
                    "non-finite entry at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
            sum += v * v;
        }
    }
    Ok(sum.sqrt())
}
