use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cumbia_core::{CumbiaConfig, Orientation, TableFormat, TruncationRank, ZeroVariancePolicy};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "cumbia",
    version,
    about = "Joint low-dimensional embeddings of samples and variables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate the seeded planted-block benchmark matrix
    Synth(SynthArgs),
    /// Filter, log2-transform, select and standardize variables
    Preprocess(PreprocessArgs),
    /// Embed samples and variables jointly
    Cumbia(CumbiaArgs),
    /// SVD biplot coordinates
    Pca(PcaArgs),
    /// Explained-variance table for a PCA or CUMBIA spectrum
    Scree(ScreeArgs),
    /// Nested biclusters by backward elimination
    Shave(ShaveArgs),
    /// Re-run the command recorded in a manifest
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Preprocess(_) => "preprocess",
            Command::Cumbia(_) => "cumbia",
            Command::Pca(_) => "pca",
            Command::Scree(_) => "scree",
            Command::Shave(_) => "shave",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Delim {
    Comma,
    Tab,
}

impl Delim {
    pub fn byte(self) -> u8 {
        match self {
            Delim::Comma => b',',
            Delim::Tab => b'\t',
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orient {
    SamplesRows,
    VariablesRows,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroVariance {
    Error,
    Drop,
}

impl From<ZeroVariance> for ZeroVariancePolicy {
    fn from(z: ZeroVariance) -> Self {
        match z {
            ZeroVariance::Error => ZeroVariancePolicy::Error,
            ZeroVariance::Drop => ZeroVariancePolicy::Drop,
        }
    }
}

/// Truncation rank as given on the command line: a positive integer or `full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rank {
    Full,
    Fixed(usize),
}

impl From<Rank> for TruncationRank {
    fn from(r: Rank) -> Self {
        match r {
            Rank::Full => TruncationRank::Full,
            Rank::Fixed(s) => TruncationRank::Fixed(s),
        }
    }
}

fn parse_rank(s: &str) -> Result<Rank, String> {
    if s == "full" {
        return Ok(Rank::Full);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("rank must be at least 1".into()),
        Ok(v) => Ok(Rank::Fixed(v)),
        Err(_) => Err(format!("expected a positive integer or `full`, got `{s}`")),
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InputArgs {
    /// Delimited text file, header row plus label column
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Delim::Comma)]
    pub delim: Delim,
    #[arg(long, value_enum, default_value_t = Orient::SamplesRows)]
    pub orient: Orient,
    /// Token marking a missing cell (empty cells are always missing)
    #[arg(long, value_name = "TOKEN", default_value = "NA")]
    pub missing: String,
}

impl InputArgs {
    pub fn format(&self) -> TableFormat {
        TableFormat {
            delimiter: self.delim.byte(),
            orientation: match self.orient {
                Orient::SamplesRows => Orientation::SamplesRows,
                Orient::VariablesRows => Orientation::VariablesRows,
            },
            missing_token: self.missing.clone(),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DissimilarityArgs {
    /// Paths averaged per sample pair
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Paths averaged per variable pair [default: same as --k]
    #[arg(long = "k-vars")]
    pub k_vars: Option<usize>,
    /// Truncation rank of the data before building dissimilarities
    #[arg(long = "s", value_name = "INT|full", default_value = "full", value_parser = parse_rank)]
    pub rank: Rank,
}

impl DissimilarityArgs {
    pub fn config(&self) -> CumbiaConfig {
        CumbiaConfig {
            rank: self.rank.into(),
            k_samples: self.k,
            k_variables: self.k_vars,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PlotArgs {
    /// Also write an SVG scatter next to the output
    #[arg(long)]
    pub plot: bool,
    /// Horizontal plot axis, counting components from 1
    #[arg(long = "component-x", default_value_t = 1)]
    pub component_x: usize,
    /// Vertical plot axis, counting components from 1
    #[arg(long = "component-y", default_value_t = 2)]
    pub component_y: usize,
    /// Two-column `object,group` file used to colour the markers
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60)]
    pub samples: usize,
    #[arg(long, default_value_t = 1500)]
    pub variables: usize,
    #[arg(long = "planted-samples", default_value_t = 6)]
    pub planted_samples: usize,
    #[arg(long = "planted-variables", default_value_t = 25)]
    pub planted_variables: usize,
    /// Mean of the planted block
    #[arg(long, default_value_t = 2.0)]
    pub shift: f64,
    #[arg(long, value_enum, default_value_t = Delim::Comma)]
    pub delim: Delim,
    /// Write planted/background membership of every object here
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    /// Select variables on the unstandardized data, then z-score
    SelectFirst,
    /// Z-score, then select variables
    ZscoreFirst,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Drop variables with missing or nonpositive values, then take log2
    #[arg(long)]
    pub log2: bool,
    /// Standardize every variable to mean 0 and sample sd 1
    #[arg(long)]
    pub zscore: bool,
    #[arg(long = "zero-variance", value_enum, default_value_t = ZeroVariance::Error)]
    pub zero_variance: ZeroVariance,
    /// `object,group` file assigning every sample to a group
    #[arg(long, value_name = "PATH")]
    pub groups: Option<PathBuf>,
    /// Keep the M variables with the largest t statistic for GROUP vs the rest
    #[arg(
        long = "t-top",
        value_name = "GROUP=M",
        requires = "groups",
        conflicts_with = "f_bottom"
    )]
    pub t_top: Option<String>,
    /// Keep the M variables with the smallest one-way ANOVA F statistic
    #[arg(long = "f-bottom", value_name = "M", requires = "groups")]
    pub f_bottom: Option<usize>,
    #[arg(long, value_enum, default_value_t = Order::SelectFirst)]
    pub order: Order,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CumbiaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Embedding coordinates
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub dissimilarity: DissimilarityArgs,
    #[arg(long, default_value_t = 3)]
    pub dims: usize,
    /// Also write the full signed MDS spectrum, one value per line
    #[arg(long, value_name = "PATH")]
    pub spectrum: Option<PathBuf>,
    /// Also write the joint dissimilarity matrix
    #[arg(long = "dissimilarity", value_name = "PATH")]
    pub dissimilarity_out: Option<PathBuf>,
    #[command(flatten)]
    pub plot: PlotArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long = "s", value_name = "INT|full", default_value = "full", value_parser = parse_rank)]
    pub rank: Rank,
    /// Share of the singular values given to the sample coordinates
    #[arg(long, default_value_t = 1.0, value_parser = parse_unit)]
    pub alpha: f64,
    #[command(flatten)]
    pub plot: PlotArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScreeSource {
    /// Squared singular values of the data
    Pca,
    /// Eigenvalues of the double-centred CUMBIA dissimilarities
    Cumbia,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScreeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ScreeSource::Pca)]
    pub mode: ScreeSource,
    #[command(flatten)]
    pub dissimilarity: DissimilarityArgs,
    /// Also write an SVG bar chart of the fractions
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShaveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Trace of surviving objects and their scores
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub dissimilarity: DissimilarityArgs,
    /// Same-kind dissimilarities averaged into each object's score
    #[arg(long, default_value_t = 3)]
    pub k0: usize,
    #[arg(long = "drop-fraction", default_value_t = 0.1)]
    pub drop_fraction: f64,
    #[arg(long = "min-objects", default_value_t = 2)]
    pub min_objects: usize,
    /// Disjoint biclusters to extract; each round removes the previous result
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
}
