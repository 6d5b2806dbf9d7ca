//! Classical MDS, the SVD biplot and the end-to-end joint embedding.

use faer::{Mat, MatRef, Side};

use crate::dissimilarity::{
    joint_matrix, CumbiaConfig, JointDissimilarity, ObjectKind, TruncationRank, Warning,
};
use crate::error::{Error, Result};
use crate::matrix::{svd, DataMatrix, DEFAULT_RANK_TOLERANCE};

/// Eigenvalues at or below this fraction of the spectrum's largest magnitude
/// are treated as zero.
pub const EIGEN_CUTOFF: f64 = 1e-10;

/// Number of components produced when the caller has no preference.
pub const DEFAULT_DIMS: usize = 3;

/// Double-centered squared dissimilarities `−½ J D∘D J`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Mat<f64>,
}

impl GramMatrix {
    pub fn values(&self) -> MatRef<'_, f64> {
        self.values.as_ref()
    }
}

pub fn double_center(d: &JointDissimilarity) -> Result<GramMatrix> {
    let n = d.len();
    let dv = d.values();
    let mut scale: f64 = 1.0;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(dv[(i, j)].abs());
        }
    }
    for j in 0..n {
        for i in 0..j {
            if (dv[(i, j)] - dv[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::input(format!(
                    "dissimilarity matrix is not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let sq = Mat::from_fn(n, n, |i, j| dv[(i, j)] * dv[(i, j)]);
    let means: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| sq[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / n as f64;
    let mut values = Mat::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let c = -0.5 * (sq[(i, j)] - means[i] - means[j] + grand);
            values[(i, j)] = c;
            values[(j, i)] = c;
        }
    }
    Ok(GramMatrix { values })
}

/// Eigenpair of the most negative eigenvalue, when one is significant.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeAxis {
    pub eigenvalue: f64,
    /// Unit eigenvector, one entry per object.
    pub vector: Vec<f64>,
}

/// Object coordinates from classical MDS.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coordinates: Mat<f64>,
    eigenvalues: Vec<f64>,
    kinds: Vec<ObjectKind>,
    labels: Vec<String>,
    dims_requested: usize,
    negative_axis: Option<NegativeAxis>,
    config: Option<CumbiaConfig>,
    warnings: Vec<Warning>,
}

impl Embedding {
    /// n×d coordinates; column k has squared norm equal to eigenvalue k.
    pub fn coordinates(&self) -> MatRef<'_, f64> {
        self.coordinates.as_ref()
    }

    pub fn coordinate(&self, object: usize, component: usize) -> f64 {
        self.coordinates[(object, component)]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.coordinates.nrows())
            .map(|i| self.coordinates[(i, k)])
            .collect()
    }

    /// Complete spectrum of the Gram matrix, signed, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kinds(&self) -> &[ObjectKind] {
        &self.kinds
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims_used(&self) -> usize {
        self.coordinates.ncols()
    }

    pub fn dims_requested(&self) -> usize {
        self.dims_requested
    }

    /// True when fewer positive eigenvalues existed than dimensions requested.
    pub fn shortfall(&self) -> bool {
        self.dims_used() < self.dims_requested
    }

    pub fn negative_axis(&self) -> Option<&NegativeAxis> {
        self.negative_axis.as_ref()
    }

    /// Configuration that produced this embedding, for pipeline runs.
    pub fn config(&self) -> Option<&CumbiaConfig> {
        self.config.as_ref()
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn normalize_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Embeds `d` in up to `dims` dimensions using its positive eigenvalues.
pub fn classical_mds(d: &JointDissimilarity, dims: usize) -> Result<Embedding> {
    if dims == 0 {
        return Err(Error::parameter("embedding needs at least one dimension"));
    }
    let gram = double_center(d)?;
    let n = d.len();
    let evd = gram
        .values()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::invariant(format!("eigendecomposition failed: {e:?}")))?;
    let ascending = evd.S().column_vector();
    let vectors = evd.U();
    // faer returns nondecreasing order; walk it backwards for descending
    let order: Vec<usize> = (0..n).rev().collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&k| ascending[k]).collect();

    let magnitude = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = EIGEN_CUTOFF * magnitude;
    let positive = eigenvalues.iter().take_while(|&&v| v > cutoff).count();
    let used = dims.min(positive);

    let mut coordinates = Mat::zeros(n, used);
    for (c, &k) in order.iter().take(used).enumerate() {
        let mut col: Vec<f64> = (0..n).map(|i| vectors[(i, k)]).collect();
        normalize_sign(&mut col);
        let scale = ascending[k].sqrt();
        for i in 0..n {
            coordinates[(i, c)] = col[i] * scale;
        }
    }

    let negative_axis = (n > 0 && ascending[0] < -cutoff).then(|| {
        let mut vector: Vec<f64> = (0..n).map(|i| vectors[(i, 0)]).collect();
        normalize_sign(&mut vector);
        NegativeAxis {
            eigenvalue: ascending[0],
            vector,
        }
    });

    Ok(Embedding {
        coordinates,
        eigenvalues,
        kinds: d.kinds().to_vec(),
        labels: d.labels().to_vec(),
        dims_requested: dims,
        negative_axis,
        config: None,
        warnings: d.warnings().to_vec(),
    })
}

/// Sample rows of `U_s Λ_s^α` and variable rows of `V_s Λ_s^(1−α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiplotCoordinates {
    pub sample_coords: Mat<f64>,
    pub variable_coords: Mat<f64>,
    pub alpha: f64,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub sample_labels: Vec<String>,
    pub variable_labels: Vec<String>,
}

impl BiplotCoordinates {
    /// `sample_coords · variable_coordsᵀ`, the rank-s data approximation.
    pub fn product(&self) -> Mat<f64> {
        &self.sample_coords * self.variable_coords.transpose()
    }
}

pub fn pca_biplot(x: &DataMatrix, rank: TruncationRank, alpha: f64) -> Result<BiplotCoordinates> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::parameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let f = svd(x, DEFAULT_RANK_TOLERANCE)?;
    let s = match rank {
        TruncationRank::Full => f.rank(),
        TruncationRank::Fixed(s) if (1..=f.rank()).contains(&s) => s,
        TruncationRank::Fixed(s) => {
            return Err(Error::parameter(format!(
                "biplot rank must be in 1..={}, got {s}",
                f.rank()
            )))
        }
    };
    let sv = &f.singular_values()[..s];
    let sample_coords = Mat::from_fn(x.n_samples(), s, |i, k| f.u()[(i, k)] * sv[k].powf(alpha));
    let variable_coords = Mat::from_fn(x.n_variables(), s, |j, k| {
        f.v()[(j, k)] * sv[k].powf(1.0 - alpha)
    });
    Ok(BiplotCoordinates {
        sample_coords,
        variable_coords,
        alpha,
        rank: s,
        singular_values: sv.to_vec(),
        sample_labels: x.sample_labels().to_vec(),
        variable_labels: x.variable_labels().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreeMode {
    /// Fractions of squared singular values.
    SingularValues,
    /// Fractions of the positive eigenvalues; negatives reported apart.
    Eigenvalues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scree {
    /// Spectrum entries behind each fraction, in input order.
    pub components: Vec<f64>,
    pub fractions: Vec<f64>,
    pub negatives: Vec<f64>,
}

pub fn scree(spectrum: &[f64], mode: ScreeMode) -> Result<Scree> {
    if spectrum.is_empty() {
        return Err(Error::parameter("scree needs a nonempty spectrum"));
    }
    if spectrum.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("spectrum contains non-finite values"));
    }
    let (components, weights, negatives): (Vec<f64>, Vec<f64>, Vec<f64>) = match mode {
        ScreeMode::SingularValues => (
            spectrum.to_vec(),
            spectrum.iter().map(|v| v * v).collect(),
            Vec::new(),
        ),
        ScreeMode::Eigenvalues => {
            let positive: Vec<f64> = spectrum.iter().copied().filter(|&v| v > 0.0).collect();
            (
                positive.clone(),
                positive,
                spectrum.iter().copied().filter(|&v| v < 0.0).collect(),
            )
        }
    };
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::input("spectrum has no positive mass"));
    }
    Ok(Scree {
        components,
        fractions: weights.iter().map(|w| w / total).collect(),
        negatives,
    })
}

/// SVD, joint dissimilarity and classical MDS in one call.
pub fn cumbia(x: &DataMatrix, cfg: &CumbiaConfig, dims: usize) -> Result<Embedding> {
    let f = svd(x, DEFAULT_RANK_TOLERANCE)?;
    let d = joint_matrix(x, &f, cfg)?;
    let mut e = classical_mds(&d, dims)?;
    e.config = Some(*cfg);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect()
    }

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    fn distance_matrix(pts: &[Vec<f64>]) -> JointDissimilarity {
        let n = pts.len();
        JointDissimilarity::unlabelled(Mat::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                euclid(&pts[i.min(j)], &pts[i.max(j)])
            }
        }))
        .unwrap()
    }

    fn embedded_distance(e: &Embedding, a: usize, b: usize) -> f64 {
        (0..e.dims_used())
            .map(|k| (e.coordinate(a, k) - e.coordinate(b, k)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn two_objects() {
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 1)] = 2.0;
        m[(1, 0)] = 2.0;
        let d = JointDissimilarity::unlabelled(m).unwrap();
        let c = double_center(&d).unwrap();
        assert_eq!(c.values()[(0, 0)], 1.0);
        assert_eq!(c.values()[(0, 1)], -1.0);
        let e = classical_mds(&d, 1).unwrap();
        assert!((e.coordinate(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!((e.coordinate(0, 0) + e.coordinate(1, 0)).abs() < 1e-12);
    }

    #[test]
    fn zero_dissimilarity_centers_to_zero() {
        let d = JointDissimilarity::unlabelled(Mat::zeros(4, 4)).unwrap();
        let c = double_center(&d).unwrap();
        assert!(c
            .values()
            .col_iter()
            .all(|col| col.iter().all(|&v| v == 0.0)));
        let e = classical_mds(&d, 2).unwrap();
        assert_eq!(e.dims_used(), 0);
        assert!(e.shortfall());
    }

    #[test]
    fn centering_matches_gram_of_points() {
        let pts = points(10, 3, 1);
        let c = double_center(&distance_matrix(&pts)).unwrap();
        let mean: Vec<f64> = (0..3)
            .map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / 10.0)
            .collect();
        for i in 0..10 {
            let mut row = 0.0;
            for j in 0..10 {
                let g: f64 = (0..3)
                    .map(|k| (pts[i][k] - mean[k]) * (pts[j][k] - mean[k]))
                    .sum();
                assert!((c.values()[(i, j)] - g).abs() < 1e-10);
                row += c.values()[(i, j)];
            }
            assert!(row.abs() < 1e-8);
        }
    }

    #[test]
    fn recovers_euclidean_configuration() {
        let pts = points(12, 3, 2);
        let d = distance_matrix(&pts);
        let e = classical_mds(&d, 3).unwrap();
        assert_eq!(e.dims_used(), 3);
        assert!(!e.shortfall());
        for a in 0..12 {
            for b in 0..12 {
                assert!((embedded_distance(&e, a, b) - d.get(a, b)).abs() < 1e-8);
            }
        }
        // column k squared norm equals eigenvalue k; columns orthogonal
        for k in 0..3 {
            let ck = e.component(k);
            let norm: f64 = ck.iter().map(|v| v * v).sum();
            assert!((norm - e.eigenvalues()[k]).abs() < 1e-8 * e.eigenvalues()[0]);
            for l in (k + 1)..3 {
                let dot: f64 = ck.iter().zip(e.component(l)).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-8 * e.eigenvalues()[0]);
            }
        }
        assert!(e.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(e.eigenvalues().len(), 12);
    }

    #[test]
    fn equilateral_triangle() {
        let mut m = Mat::<f64>::from_fn(3, 3, |_, _| 1.0);
        (0..3).for_each(|i| m[(i, i)] = 0.0);
        let e = classical_mds(&JointDissimilarity::unlabelled(m).unwrap(), 2).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!((embedded_distance(&e, a, b) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn shortfall_is_flagged_not_fatal() {
        let pts = points(6, 2, 5);
        let e = classical_mds(&distance_matrix(&pts), 4).unwrap();
        assert_eq!(e.dims_used(), 2);
        assert!(e.shortfall());
        assert!(classical_mds(&distance_matrix(&pts), 0).is_err());
    }

    #[test]
    fn non_euclidean_input_keeps_negative_spectrum() {
        // a 4-cycle with both diagonals long: not embeddable in Euclidean space
        let d = [
            [0.0, 1.0, 3.0, 1.0],
            [1.0, 0.0, 1.0, 3.0],
            [3.0, 1.0, 0.0, 1.0],
            [1.0, 3.0, 1.0, 0.0],
        ];
        let e = classical_mds(
            &JointDissimilarity::unlabelled(Mat::from_fn(4, 4, |i, j| d[i][j])).unwrap(),
            3,
        )
        .unwrap();
        let axis = e.negative_axis().expect("negative eigenvalue");
        assert_eq!(axis.eigenvalue, *e.eigenvalues().last().unwrap());
        assert!(axis.eigenvalue < 0.0);
        let norm: f64 = axis.vector.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_biplot() {
        let x = DataMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = pca_biplot(&x, TruncationRank::Fixed(2), 1.0).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let s = if i == k { [2.0, 1.0][i] } else { 0.0 };
                let v = if i == k { 1.0 } else { 0.0 };
                assert!((b.sample_coords[(i, k)].abs() - s).abs() < 1e-14);
                assert!((b.variable_coords[(i, k)].abs() - v).abs() < 1e-14);
            }
        }
        let prod = b.product();
        assert!((prod[(0, 0)] - 2.0).abs() < 1e-14 && (prod[(1, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn biplot_rejects_bad_alpha() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            pca_biplot(&x, TruncationRank::Full, 1.5),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            pca_biplot(&x, TruncationRank::Fixed(2), 0.5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn biplot_exact_for_all_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x =
            DataMatrix::from_mat(Mat::from_fn(7, 5, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let prod = pca_biplot(&x, TruncationRank::Full, alpha)
                .unwrap()
                .product();
            for i in 0..7 {
                for j in 0..5 {
                    assert!((prod[(i, j)] - x.get(i, j)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn pca_preserves_sample_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let x =
            DataMatrix::from_mat(Mat::from_fn(20, 30, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let b = pca_biplot(&x, TruncationRank::Full, 1.0).unwrap();
        let row =
            |m: MatRef<'_, f64>, i: usize| (0..m.ncols()).map(|k| m[(i, k)]).collect::<Vec<_>>();
        for a in 0..20 {
            for c in 0..20 {
                let direct = euclid(&row(x.values(), a), &row(x.values(), c));
                let coords = euclid(
                    &row(b.sample_coords.as_ref(), a),
                    &row(b.sample_coords.as_ref(), c),
                );
                assert!((direct - coords).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn scree_examples() {
        let s = scree(&[2.0, 1.0], ScreeMode::SingularValues).unwrap();
        assert!((s.fractions[0] - 0.8).abs() < 1e-15 && (s.fractions[1] - 0.2).abs() < 1e-15);
        let s = scree(&[3.0, 1.0, -2.0], ScreeMode::Eigenvalues).unwrap();
        assert_eq!(s.fractions, [0.75, 0.25]);
        assert_eq!(s.negatives, [-2.0]);
        assert_eq!(
            scree(&[7.0], ScreeMode::SingularValues).unwrap().fractions,
            [1.0]
        );
        assert!(matches!(
            scree(&[], ScreeMode::Eigenvalues),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn identity_pipeline_is_symmetric() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = cumbia(&x, &CumbiaConfig::with_k(1), 1).unwrap();
        assert_eq!(e.len(), 4);
        assert_eq!(e.config(), Some(&CumbiaConfig::with_k(1)));
        // each sample sits on the variable it is maximal for; samples stay
        // at their mutual dissimilarity of one
        assert!((e.coordinate(0, 0) - e.coordinate(2, 0)).abs() < 1e-12);
        assert!((e.coordinate(1, 0) - e.coordinate(3, 0)).abs() < 1e-12);
        assert!(((e.coordinate(0, 0) - e.coordinate(1, 0)).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pipeline_is_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x =
            DataMatrix::from_mat(Mat::from_fn(10, 15, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let a = cumbia(&x, &CumbiaConfig::default(), 3).unwrap();
        let b = cumbia(&x, &CumbiaConfig::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn scree_sums_to_one(spectrum in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
                prop_assume!(spectrum.iter().any(|&v| v > 0.0));
                let s = scree(&spectrum, ScreeMode::Eigenvalues).unwrap();
                prop_assert!((s.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let s = scree(&spectrum, ScreeMode::SingularValues).unwrap();
                prop_assert!((s.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn permuting_objects_permutes_coordinates(seed in any::<u64>(), shift in 1usize..7) {
                let pts = points(8, 3, seed);
                let perm: Vec<usize> = (0..8).map(|i| (i + shift) % 8).collect();
                let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
                let a = classical_mds(&distance_matrix(&pts), 3).unwrap();
                let b = classical_mds(&distance_matrix(&permuted), 3).unwrap();
                let gap = a.eigenvalues().windows(2).take(3).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
                prop_assume!(gap > 1e-3 * a.eigenvalues()[0]);
                for k in 0..3 {
                    let dot: f64 = (0..8).map(|i| a.coordinate(perm[i], k) * b.coordinate(i, k)).sum();
                    let sign = dot.signum();
                    for i in 0..8 {
                        prop_assert!((a.coordinate(perm[i], k) - sign * b.coordinate(i, k)).abs() < 1e-8);
                    }
                }
            }

            #[test]
            fn biplot_reconstructs_truncation(seed in any::<u64>(), s in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = DataMatrix::from_mat(Mat::from_fn(6, 5, |_, _| rng.random_range(-1.0..1.0))).unwrap();
                let f = svd(&x, DEFAULT_RANK_TOLERANCE).unwrap();
                let xs = crate::matrix::truncate(&f, s).unwrap();
                for alpha in [0.0, 0.5, 1.0] {
                    let prod = pca_biplot(&x, TruncationRank::Fixed(s), alpha).unwrap().product();
                    for i in 0..6 {
                        for j in 0..5 {
                            prop_assert!((prod[(i, j)] - xs[(i, j)]).abs() < 1e-8);
                        }
                    }
                }
            }
        }
    }
}
