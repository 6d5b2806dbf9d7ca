//! Joint sample/variable dissimilarities.
//!
//! A sample and a variable are close when the (possibly rank-reduced) data
//! value linking them is large: `d(s_i, w_j) = sqrt(λ₁ − X_ij)`. Two objects
//! of the same kind are compared through every object of the other kind:
//! each intermediary `k` gives a two-edge path of length
//! `d(a, k) + d(b, k)` and the dissimilarity is the mean of the `K`
//! shortest such paths.
//!
//! Selection among equal path lengths is by intermediary index, so the
//! result does not depend on how the pairs are scheduled across threads.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use faer::{Mat, MatRef};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{default_labels, truncate, DataMatrix, SvdFactors};

/// Radicands down to `-CLAMP_BAND * λ₁` are rounding noise and map to zero.
pub const CLAMP_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKind {
    Sample,
    Variable,
}

impl ObjectKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ObjectKind::Sample => "s",
            ObjectKind::Variable => "v",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Sample => "sample",
            ObjectKind::Variable => "variable",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rank used for the data approximation behind the dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationRank {
    /// `s = r`: the data values themselves.
    #[default]
    Full,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CumbiaConfig {
    pub rank: TruncationRank,
    /// Paths averaged for sample pairs.
    pub k_samples: usize,
    /// Paths averaged for variable pairs; `None` reuses `k_samples`.
    pub k_variables: Option<usize>,
}

impl Default for CumbiaConfig {
    fn default() -> Self {
        Self {
            rank: TruncationRank::Full,
            k_samples: 3,
            k_variables: None,
        }
    }
}

impl CumbiaConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k_samples: k,
            ..Default::default()
        }
    }

    pub fn k_variables(&self) -> usize {
        self.k_variables.unwrap_or(self.k_samples)
    }

    /// Resolves the truncation rank against the data's numerical rank.
    pub fn resolve_rank(&self, rank: usize) -> Result<usize> {
        match self.rank {
            TruncationRank::Full => Ok(rank),
            TruncationRank::Fixed(s) if (1..=rank).contains(&s) => Ok(s),
            TruncationRank::Fixed(s) => Err(Error::parameter(format!(
                "truncation rank must be in 1..={rank}, got {s}"
            ))),
        }
    }
}

/// Non-fatal adjustments made while building a dissimilarity matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// `K` exceeded the number of intermediaries available for this kind.
    KClamped {
        kind: ObjectKind,
        requested: usize,
        used: usize,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::KClamped {
                kind,
                requested,
                used,
            } => write!(
                f,
                "K = {requested} for {kind} pairs exceeds the {used} available intermediaries; using {used}"
            ),
        }
    }
}

/// Symmetric, zero-diagonal, nonnegative dissimilarities over all samples
/// followed by all variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDissimilarity {
    values: Mat<f64>,
    kinds: Vec<ObjectKind>,
    labels: Vec<String>,
    warnings: Vec<Warning>,
}

impl JointDissimilarity {
    /// Wraps an arbitrary dissimilarity matrix, checking symmetry (to 1e-12
    /// relative to the largest entry), an exactly zero diagonal and
    /// nonnegativity.
    pub fn new(values: Mat<f64>, kinds: Vec<ObjectKind>, labels: Vec<String>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::input("dissimilarity matrix must be square"));
        }
        if kinds.len() != n || labels.len() != n {
            return Err(Error::input("one kind and one label needed per object"));
        }
        let mut scale: f64 = 1.0;
        for j in 0..n {
            for i in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::input(format!(
                        "dissimilarity ({}, {}) = {v} is not a finite nonnegative number",
                        i + 1,
                        j + 1
                    )));
                }
                scale = scale.max(v);
            }
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::input(format!(
                    "nonzero diagonal at object {}",
                    i + 1
                )));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::input(format!(
                        "dissimilarity matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            values,
            kinds,
            labels,
            warnings: Vec::new(),
        })
    }

    /// Every object tagged as a sample, labelled `o1..on`.
    pub fn unlabelled(values: Mat<f64>) -> Result<Self> {
        let n = values.nrows();
        Self::new(values, vec![ObjectKind::Sample; n], default_labels("o", n))
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn values(&self) -> MatRef<'_, f64> {
        self.values.as_ref()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }

    pub fn kinds(&self) -> &[ObjectKind] {
        &self.kinds
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn n_samples(&self) -> usize {
        self.kinds
            .iter()
            .filter(|&&k| k == ObjectKind::Sample)
            .count()
    }

    pub fn n_variables(&self) -> usize {
        self.len() - self.n_samples()
    }
}

/// `sqrt(λ₁ − X_ij)` for every sample/variable pair.
pub fn sample_variable_diss(xs: MatRef<'_, f64>, lambda1: f64) -> Result<Mat<f64>> {
    if !(lambda1 > 0.0 && lambda1.is_finite()) {
        return Err(Error::parameter(format!(
            "largest singular value must be positive, got {lambda1}"
        )));
    }
    let mut out = Mat::zeros(xs.nrows(), xs.ncols());
    for j in 0..xs.ncols() {
        for i in 0..xs.nrows() {
            out[(i, j)] = edge_weight(xs[(i, j)], lambda1).map_err(|excess| {
                Error::invariant(format!(
                    "entry ({}, {}) exceeds the largest singular value {lambda1} by {excess}",
                    i + 1,
                    j + 1
                ))
            })?;
        }
    }
    Ok(out)
}

/// Single edge weight; `Err` carries how far the entry overshoots `λ₁`.
#[inline]
fn edge_weight(x: f64, lambda1: f64) -> std::result::Result<f64, f64> {
    let radicand = lambda1 - x;
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= -CLAMP_BAND * lambda1 {
        Ok(0.0)
    } else {
        Err(-radicand)
    }
}

/// Total order on candidate paths: length, then intermediary index.
#[inline]
fn path_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Mean of the `k` smallest entries after ordering by [`path_order`],
/// summed in ascending order. `paths` is reordered.
fn mean_of_k_smallest(paths: &mut [(f64, usize)], k: usize) -> f64 {
    if k < paths.len() {
        paths.select_nth_unstable_by(k - 1, path_order);
    }
    let head = &mut paths[..k];
    head.sort_unstable_by(path_order);
    head.iter().map(|p| p.0).sum::<f64>() / k as f64
}

fn clamp_k(k: usize, available: usize, kind: ObjectKind) -> Result<(usize, Option<Warning>)> {
    if k == 0 {
        return Err(Error::parameter(format!(
            "K for {kind} pairs must be at least 1"
        )));
    }
    if k > available {
        Ok((
            available,
            Some(Warning::KClamped {
                kind,
                requested: k,
                used: available,
            }),
        ))
    } else {
        Ok((k, None))
    }
}

/// Same-kind dissimilarities from the N×p sample/variable block.
///
/// Entry `(a, b)` is the mean of the `k` shortest two-edge paths between
/// `a` and `b`. Pairs listed in `identical` (index pairs of objects with
/// identical profiles) are set to zero after averaging.
pub fn within_kind_diss(
    d_sv: MatRef<'_, f64>,
    k: usize,
    kind: ObjectKind,
    identical: &[(usize, usize)],
) -> Result<(Mat<f64>, Option<Warning>)> {
    let profiles: Vec<Vec<f64>> = match kind {
        ObjectKind::Sample => (0..d_sv.nrows())
            .map(|i| (0..d_sv.ncols()).map(|j| d_sv[(i, j)]).collect())
            .collect(),
        ObjectKind::Variable => (0..d_sv.ncols())
            .map(|j| (0..d_sv.nrows()).map(|i| d_sv[(i, j)]).collect())
            .collect(),
    };
    let n = profiles.len();
    let via = profiles.first().map_or(0, Vec::len);
    let (k, warning) = clamp_k(k, via, kind)?;

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(via),
            |paths, a| {
                let pa = &profiles[a];
                ((a + 1)..n)
                    .map(|b| {
                        let pb = &profiles[b];
                        paths.clear();
                        paths.extend((0..via).map(|m| (pa[m] + pb[m], m)));
                        mean_of_k_smallest(paths, k)
                    })
                    .collect()
            },
        )
        .collect();

    let mut out = Mat::zeros(n, n);
    for (a, row) in upper.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let b = a + 1 + offset;
            out[(a, b)] = d;
            out[(b, a)] = d;
        }
    }
    for &(a, b) in identical {
        if a != b {
            out[(a, b)] = 0.0;
            out[(b, a)] = 0.0;
        }
    }
    Ok((out, warning))
}

/// Pairs of rows (or columns) that are bitwise identical.
pub fn identical_pairs(x: MatRef<'_, f64>, kind: ObjectKind) -> Vec<(usize, usize)> {
    let (count, len) = match kind {
        ObjectKind::Sample => (x.nrows(), x.ncols()),
        ObjectKind::Variable => (x.ncols(), x.nrows()),
    };
    let at = |obj: usize, t: usize| match kind {
        ObjectKind::Sample => x[(obj, t)],
        ObjectKind::Variable => x[(t, obj)],
    };
    let mut classes: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for obj in 0..count {
        let key: Vec<u64> = (0..len).map(|t| at(obj, t).to_bits()).collect();
        classes.entry(key).or_default().push(obj);
    }
    let mut pairs: Vec<(usize, usize)> = classes
        .values()
        .filter(|members| members.len() > 1)
        .flat_map(|members| {
            members
                .iter()
                .enumerate()
                .flat_map(move |(t, &a)| members[t + 1..].iter().map(move |&b| (a, b)))
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Joint dissimilarity from an already-truncated matrix and `λ₁`.
pub fn joint_from_truncated(
    xs: MatRef<'_, f64>,
    lambda1: f64,
    k_samples: usize,
    k_variables: usize,
    sample_labels: &[String],
    variable_labels: &[String],
) -> Result<JointDissimilarity> {
    let (n, p) = (xs.nrows(), xs.ncols());
    if sample_labels.len() != n || variable_labels.len() != p {
        return Err(Error::input("label counts do not match the matrix"));
    }
    let d_sv = sample_variable_diss(xs, lambda1)?;
    let (ss, ws) = within_kind_diss(
        d_sv.as_ref(),
        k_samples,
        ObjectKind::Sample,
        &identical_pairs(xs, ObjectKind::Sample),
    )?;
    let (vv, wv) = within_kind_diss(
        d_sv.as_ref(),
        k_variables,
        ObjectKind::Variable,
        &identical_pairs(xs, ObjectKind::Variable),
    )?;

    let total = n + p;
    let values = Mat::from_fn(total, total, |a, b| match (a < n, b < n) {
        (true, true) => ss[(a, b)],
        (false, false) => vv[(a - n, b - n)],
        (true, false) => d_sv[(a, b - n)],
        (false, true) => d_sv[(b, a - n)],
    });
    let mut kinds = vec![ObjectKind::Sample; n];
    kinds.resize(total, ObjectKind::Variable);
    let labels = sample_labels
        .iter()
        .chain(variable_labels)
        .cloned()
        .collect();
    Ok(JointDissimilarity {
        values,
        kinds,
        labels,
        warnings: ws.into_iter().chain(wv).collect(),
    })
}

/// The full joint dissimilarity for `x` under `cfg`.
///
/// `λ₁` always comes from `f`, the decomposition of the untruncated `x`.
/// At full rank the data values are used directly rather than the
/// reconstruction from `f`.
pub fn joint_matrix(
    x: &DataMatrix,
    f: &SvdFactors,
    cfg: &CumbiaConfig,
) -> Result<JointDissimilarity> {
    x.ensure_finite()?;
    if f.n_rows() != x.n_samples() || f.n_cols() != x.n_variables() {
        return Err(Error::input("SVD factors do not match the data matrix"));
    }
    let s = cfg.resolve_rank(f.rank())?;
    let truncated;
    let xs = if s == f.rank() {
        x.values()
    } else {
        truncated = truncate(f, s)?;
        truncated.as_ref()
    };
    joint_from_truncated(
        xs,
        f.lambda1(),
        cfg.k_samples,
        cfg.k_variables(),
        x.sample_labels(),
        x.variable_labels(),
    )
}

/// Largest N or p accepted by [`graph_oracle`].
pub const ORACLE_MAX_SIZE: usize = 50;

/// Reference construction through an explicit complete bipartite graph.
///
/// Builds adjacency lists with weight `sqrt(λ₁ − X_ij)` on every
/// sample–variable edge, enumerates all two-edge paths between each pair of
/// same-kind nodes, sorts them and averages the `k` shortest. Intended for
/// checking [`joint_matrix`] on small inputs; the result is bitwise equal.
pub fn graph_oracle(xs: MatRef<'_, f64>, lambda1: f64, k: usize) -> Result<JointDissimilarity> {
    let (n, p) = (xs.nrows(), xs.ncols());
    if n > ORACLE_MAX_SIZE || p > ORACLE_MAX_SIZE {
        return Err(Error::parameter(format!(
            "graph oracle limited to {ORACLE_MAX_SIZE}x{ORACLE_MAX_SIZE}, got {n}x{p}"
        )));
    }
    if !(lambda1 > 0.0 && lambda1.is_finite()) {
        return Err(Error::parameter("largest singular value must be positive"));
    }
    let total = n + p;
    // node ids: samples 0..n, variables n..n+p
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    for i in 0..n {
        for j in 0..p {
            let w = edge_weight(xs[(i, j)], lambda1)
                .map_err(|_| Error::invariant("entry exceeds the largest singular value"))?;
            adjacency[i].push((n + j, w));
            adjacency[n + j].push((i, w));
        }
    }
    let weight = |from: usize, to: usize| -> f64 {
        adjacency[from]
            .iter()
            .find(|&&(node, _)| node == to)
            .map(|&(_, w)| w)
            .expect("complete bipartite graph")
    };
    let same_profile = |a: usize, b: usize| -> bool {
        if a < n {
            (0..p).all(|j| xs[(a, j)].to_bits() == xs[(b, j)].to_bits())
        } else {
            (0..n).all(|i| xs[(i, a - n)].to_bits() == xs[(i, b - n)].to_bits())
        }
    };

    let mut values = Mat::zeros(total, total);
    let mut warnings = Vec::new();
    for (kind, range, offset_other) in [
        (ObjectKind::Sample, 0..n, n),
        (ObjectKind::Variable, n..total, 0),
    ] {
        let via = if kind == ObjectKind::Sample { p } else { n };
        let (k_used, warning) = clamp_k(k, via, kind)?;
        warnings.extend(warning);
        for a in range.clone() {
            for b in (a + 1)..range.end {
                let mut paths: Vec<(f64, usize)> = adjacency[a]
                    .iter()
                    .map(|&(mid, w_first)| (w_first + weight(mid, b), mid - offset_other))
                    .collect();
                paths.sort_by(path_order);
                let d = if same_profile(a, b) {
                    0.0
                } else {
                    paths[..k_used].iter().map(|q| q.0).sum::<f64>() / k_used as f64
                };
                values[(a, b)] = d;
                values[(b, a)] = d;
            }
        }
    }
    for a in 0..n {
        for &(mid, w) in &adjacency[a] {
            values[(a, mid)] = w;
            values[(mid, a)] = w;
        }
    }
    let mut kinds = vec![ObjectKind::Sample; n];
    kinds.resize(total, ObjectKind::Variable);
    let labels = default_labels("s", n)
        .into_iter()
        .chain(default_labels("v", p))
        .collect();
    Ok(JointDissimilarity {
        values,
        kinds,
        labels,
        warnings,
    })
}
