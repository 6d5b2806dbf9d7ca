//! Joint low-dimensional embedding of the samples and variables of a data
//! matrix.
//!
//! The pipeline: take the thin SVD of `X`, define a sample–variable
//! dissimilarity `sqrt(λ₁ − X_ij)` from the (optionally rank-reduced) data,
//! derive sample–sample and variable–variable dissimilarities as averaged
//! two-edge path lengths through the other kind, and embed everything with
//! classical multidimensional scaling. The classical SVD biplot is provided
//! as the baseline, along with preprocessing, a planted-block synthetic
//! generator and a backward-elimination biclustering procedure.
//!
//! ```
//! use cumbia_core::{cumbia, synth_block, zscore_variables, CumbiaConfig, SynthConfig, ZeroVariancePolicy};
//!
//! let cfg = SynthConfig { n_samples: 12, n_variables: 40, planted_samples: 3, planted_variables: 5, ..Default::default() };
//! let block = synth_block(&cfg).unwrap();
//! let (x, _) = zscore_variables(&block.matrix, ZeroVariancePolicy::Error).unwrap();
//! let embedding = cumbia(&x, &CumbiaConfig::default(), 3).unwrap();
//! assert_eq!(embedding.len(), 52);
//! ```

pub mod bicluster;
pub mod dissimilarity;
pub mod embedding;
pub mod error;
pub mod export;
pub mod ingest;
pub mod matrix;

pub use faer;

pub use bicluster::{shave, ShaveConfig, ShaveStep, ShaveTrace};
pub use dissimilarity::{
    graph_oracle, identical_pairs, joint_from_truncated, joint_matrix, sample_variable_diss,
    within_kind_diss, CumbiaConfig, JointDissimilarity, ObjectKind, TruncationRank, Warning,
};
pub use embedding::{
    classical_mds, cumbia, double_center, pca_biplot, scree, BiplotCoordinates, Embedding,
    GramMatrix, NegativeAxis, Scree, ScreeMode, DEFAULT_DIMS,
};
pub use error::{Error, Result};
pub use ingest::{
    bottom_indices, f_statistic, filter_and_log2, load_table, parse_table, synth_block,
    t_statistic, top_indices, zscore_variables, GroupLabels, Orientation, PreprocessReport,
    SynthConfig, SyntheticBlock, TableFormat, ZeroVariancePolicy,
};
pub use matrix::{frobenius_norm, svd, truncate, DataMatrix, SvdFactors, DEFAULT_RANK_TOLERANCE};
