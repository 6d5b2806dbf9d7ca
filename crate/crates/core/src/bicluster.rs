//! Backward elimination of samples and variables into nested biclusters.
//!
//! Each step rebuilds the joint dissimilarity on the surviving submatrix,
//! scores every object by the mean of its `k0` smallest same-kind
//! dissimilarities and drops the worst-scoring fraction of each kind.

use crate::dissimilarity::{
    joint_matrix, CumbiaConfig, JointDissimilarity, ObjectKind, TruncationRank,
};
use crate::error::{Error, Result};
use crate::matrix::{svd, DataMatrix, DEFAULT_RANK_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShaveConfig {
    pub k0: usize,
    pub drop_fraction: f64,
    /// Elimination stops once either kind is down to this many objects.
    pub min_objects: usize,
}

impl Default for ShaveConfig {
    fn default() -> Self {
        Self {
            k0: 3,
            drop_fraction: 0.1,
            min_objects: 2,
        }
    }
}

/// Survivors of one elimination step, as indices into the input matrix,
/// with the score each one had at that step.
#[derive(Debug, Clone, PartialEq)]
pub struct ShaveStep {
    pub samples: Vec<usize>,
    pub variables: Vec<usize>,
    pub sample_scores: Vec<f64>,
    pub variable_scores: Vec<f64>,
}

impl ShaveStep {
    pub fn survivors(&self, kind: ObjectKind) -> &[usize] {
        match kind {
            ObjectKind::Sample => &self.samples,
            ObjectKind::Variable => &self.variables,
        }
    }

    pub fn scores(&self, kind: ObjectKind) -> &[f64] {
        match kind {
            ObjectKind::Sample => &self.sample_scores,
            ObjectKind::Variable => &self.variable_scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShaveTrace {
    pub steps: Vec<ShaveStep>,
    pub warnings: Vec<String>,
}

impl ShaveTrace {
    /// Smallest bicluster reached.
    pub fn last(&self) -> &ShaveStep {
        self.steps
            .last()
            .expect("a trace always has its initial step")
    }

    /// First step at which the survivors of `kind` number fewer than `size`.
    pub fn first_below(&self, kind: ObjectKind, size: usize) -> Option<&ShaveStep> {
        self.steps.iter().find(|s| s.survivors(kind).len() < size)
    }
}

pub fn shave(x: &DataMatrix, cfg: &CumbiaConfig, shave_cfg: &ShaveConfig) -> Result<ShaveTrace> {
    let ShaveConfig {
        k0,
        drop_fraction,
        min_objects,
    } = *shave_cfg;
    if k0 == 0 {
        return Err(Error::parameter("K0 must be at least 1"));
    }
    if !(drop_fraction > 0.0 && drop_fraction < 1.0) {
        return Err(Error::parameter(format!(
            "drop fraction must lie in (0, 1), got {drop_fraction}"
        )));
    }
    if min_objects < 2 {
        return Err(Error::parameter("min objects must be at least 2"));
    }
    x.ensure_finite()?;

    let mut samples: Vec<usize> = (0..x.n_samples()).collect();
    let mut variables: Vec<usize> = (0..x.n_variables()).collect();
    let mut steps = Vec::new();
    let mut warnings = Vec::new();
    loop {
        let step_index = steps.len();
        let sub = x.select(&samples, &variables)?;
        let f = svd(&sub, DEFAULT_RANK_TOLERANCE)?;
        let mut step_cfg = *cfg;
        if let TruncationRank::Fixed(s) = cfg.rank {
            if s > f.rank() {
                warnings.push(format!(
                    "step {step_index}: truncation rank {s} exceeds submatrix rank {}; using full rank",
                    f.rank()
                ));
                step_cfg.rank = TruncationRank::Full;
            }
        }
        let d = joint_matrix(&sub, &f, &step_cfg)?;
        warnings.extend(
            d.warnings()
                .iter()
                .map(|w| format!("step {step_index}: {w}")),
        );

        let n = samples.len();
        let sample_scores =
            kind_scores(&d, 0..n, k0, ObjectKind::Sample, step_index, &mut warnings);
        let variable_scores = kind_scores(
            &d,
            n..d.len(),
            k0,
            ObjectKind::Variable,
            step_index,
            &mut warnings,
        );
        steps.push(ShaveStep {
            samples: samples.clone(),
            variables: variables.clone(),
            sample_scores: sample_scores.clone(),
            variable_scores: variable_scores.clone(),
        });
        if samples.len() <= min_objects || variables.len() <= min_objects {
            break;
        }
        samples = drop_worst(&samples, &sample_scores, drop_fraction, min_objects);
        variables = drop_worst(&variables, &variable_scores, drop_fraction, min_objects);
    }
    Ok(ShaveTrace { steps, warnings })
}

fn kind_scores(
    d: &JointDissimilarity,
    range: std::ops::Range<usize>,
    k0: usize,
    kind: ObjectKind,
    step: usize,
    warnings: &mut Vec<String>,
) -> Vec<f64> {
    let others = range.len().saturating_sub(1);
    let k = k0.min(others);
    if k < k0 {
        warnings.push(format!(
            "step {step}: K0 = {k0} exceeds the {others} other {kind}s; using {k}"
        ));
    }
    range
        .clone()
        .map(|a| {
            if k == 0 {
                return 0.0;
            }
            let mut row: Vec<f64> = range
                .clone()
                .filter(|&b| b != a)
                .map(|b| d.get(a, b))
                .collect();
            row.sort_unstable_by(f64::total_cmp);
            row[..k].iter().sum::<f64>() / k as f64
        })
        .collect()
}

/// Removes the `ceil(fraction * len)` highest scores (lowest position first
/// among ties), never going below `floor` survivors.
fn drop_worst(objects: &[usize], scores: &[f64], fraction: f64, floor: usize) -> Vec<usize> {
    let count = objects.len();
    let remove = ((fraction * count as f64).ceil() as usize).min(count - floor);
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut dropped = vec![false; count];
    for &pos in &order[..remove] {
        dropped[pos] = true;
    }
    objects
        .iter()
        .zip(dropped)
        .filter(|(_, gone)| !gone)
        .map(|(&o, _)| o)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn ceiling_arithmetic() {
        let objs: Vec<usize> = (0..10).collect();
        let scores: Vec<f64> = (0..10).map(|v| v as f64).collect();
        // 0.1 * 10 = 1 → one removal, the highest score
        assert_eq!(
            drop_worst(&objs, &scores, 0.1, 2),
            (0..9).collect::<Vec<_>>()
        );
        // 0.11 * 10 = 1.1 → two removals
        assert_eq!(drop_worst(&objs, &scores, 0.11, 2).len(), 8);
        // never below the floor
        assert_eq!(drop_worst(&objs, &scores, 0.9, 4).len(), 4);
    }

    #[test]
    fn ties_remove_lowest_index_first() {
        let objs = vec![7, 8, 9];
        assert_eq!(drop_worst(&objs, &[1.0, 1.0, 1.0], 0.3, 1), [8, 9]);
    }

    #[test]
    fn identical_samples_still_nest() {
        let x = DataMatrix::from_mat(Mat::from_fn(6, 5, |_, j| j as f64 + 1.0)).unwrap();
        let trace = shave(&x, &CumbiaConfig::with_k(1), &ShaveConfig::default()).unwrap();
        assert!(trace.steps.len() > 1);
        // all sample scores tie at zero, so the index tie-break removes the front
        assert_eq!(trace.steps[1].samples, [1, 2, 3, 4, 5]);
        check_nested(&trace);
    }

    #[test]
    fn one_of_each_kind_per_step() {
        let x = DataMatrix::from_mat(Mat::from_fn(8, 9, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 - 4.0
        }))
        .unwrap();
        let cfg = ShaveConfig {
            drop_fraction: 1.0 / 9.0,
            ..Default::default()
        };
        let trace = shave(&x, &CumbiaConfig::with_k(2), &cfg).unwrap();
        for w in trace.steps.windows(2) {
            assert_eq!(w[0].samples.len() - w[1].samples.len(), 1);
            assert_eq!(w[0].variables.len() - w[1].variables.len(), 1);
        }
        assert_eq!(trace.last().samples.len(), 2);
    }

    #[test]
    fn parameter_checks() {
        let x = DataMatrix::from_mat(Mat::from_fn(4, 4, |i, j| (i + 2 * j) as f64)).unwrap();
        let base = CumbiaConfig::default();
        for bad in [
            ShaveConfig {
                k0: 0,
                ..Default::default()
            },
            ShaveConfig {
                drop_fraction: 0.0,
                ..Default::default()
            },
            ShaveConfig {
                drop_fraction: 1.0,
                ..Default::default()
            },
            ShaveConfig {
                min_objects: 1,
                ..Default::default()
            },
        ] {
            assert!(matches!(shave(&x, &base, &bad), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn k0_is_clamped() {
        let x = DataMatrix::from_mat(Mat::from_fn(3, 6, |i, j| ((i + 1) * (j + 2) % 5) as f64))
            .unwrap();
        let trace = shave(
            &x,
            &CumbiaConfig::with_k(1),
            &ShaveConfig {
                k0: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(trace.warnings.iter().any(|w| w.contains("K0 = 5")));
    }

    #[test]
    fn planted_block_is_recovered() {
        use crate::ingest::{synth_block, zscore_variables, SynthConfig, ZeroVariancePolicy};
        for seed in [3, 11, 42] {
            let block = synth_block(&SynthConfig {
                n_samples: 30,
                n_variables: 200,
                planted_samples: 6,
                planted_variables: 20,
                shift: 2.0,
                seed,
            })
            .unwrap();
            let (x, _) = zscore_variables(&block.matrix, ZeroVariancePolicy::Error).unwrap();
            let trace = shave(&x, &CumbiaConfig::with_k(3), &ShaveConfig::default()).unwrap();
            check_nested(&trace);
            // Samples hit the floor long before variables shrink to 20, so each
            // kind is read at its first step no larger than the planted group,
            // or at the final step if it never gets there.
            let at = |kind: ObjectKind, size: usize| {
                trace.first_below(kind, size + 1).unwrap_or(trace.last())
            };
            let samples = &at(ObjectKind::Sample, 6).samples;
            let variables = &at(ObjectKind::Variable, 20).variables;
            let planted_samples = samples.iter().filter(|&&i| i < 6).count();
            let planted_variables = variables.iter().filter(|&&j| j < 20).count();
            let kept = (planted_samples + planted_variables) as f64 / 26.0;
            assert!(kept >= 0.8, "seed {seed}: recovered {kept}");
            let contamination = (samples.len() - planted_samples) as f64 / samples.len() as f64;
            assert!(
                contamination <= 0.2,
                "seed {seed}: sample contamination {contamination}"
            );
        }
    }

    fn check_nested(trace: &ShaveTrace) {
        for w in trace.steps.windows(2) {
            for kind in [ObjectKind::Sample, ObjectKind::Variable] {
                let (a, b) = (w[0].survivors(kind), w[1].survivors(kind));
                assert!(b.len() < a.len());
                assert!(b.iter().all(|o| a.contains(o)));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn nested_deterministic_and_bounded(
                n in 3usize..9, p in 3usize..12, seed in any::<u64>(), frac in 0.05f64..0.6
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = DataMatrix::from_mat(Mat::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0))).unwrap();
                let cfg = ShaveConfig { drop_fraction: frac, ..Default::default() };
                let a = shave(&x, &CumbiaConfig::default(), &cfg).unwrap();
                let b = shave(&x, &CumbiaConfig::default(), &cfg).unwrap();
                prop_assert_eq!(&a, &b);
                check_nested(&a);
                let count = n.max(p) as f64;
                let bound = count.ln() / (1.0 / (1.0 - frac)).ln() + count;
                prop_assert!((a.steps.len() as f64) <= bound + 1.0);
            }
        }
    }
}
