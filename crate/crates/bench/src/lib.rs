//! Fixtures shared by the benchmarks.

use cumbia_core::{synth_block, zscore_variables, DataMatrix, SynthConfig, ZeroVariancePolicy};

/// Z-scored planted-block matrix of the given shape, planted block scaled
/// with it.
pub fn fixture(n_samples: usize, n_variables: usize, seed: u64) -> DataMatrix {
    let cfg = SynthConfig {
        n_samples,
        n_variables,
        planted_samples: (n_samples / 10).max(2),
        planted_variables: (n_variables / 60).max(2),
        shift: 2.0,
        seed,
    };
    let block = synth_block(&cfg).expect("valid fixture shape");
    zscore_variables(&block.matrix, ZeroVariancePolicy::Drop)
        .expect("gaussian columns are not constant")
        .0
}
