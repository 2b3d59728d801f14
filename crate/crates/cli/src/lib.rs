//! Batch front-end for the homcluster pipeline. Every stage reads and writes
//! files, so stages can be rerun independently.

pub mod commands;
pub mod drilldown;
pub mod error;
pub mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use homcluster::clustering::{Algorithm, Method};
use homcluster::validation::IndexKind;
use serde::{Serialize, Serializer};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "homcluster", version, about = "Homogeneity-analysis embedding and clustering of mixed data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic mixed dataset with ground-truth labels.
    Synth(SynthArgs),
    /// Fit category quantifications on the categorical attributes.
    Fit(FitArgs),
    /// Map a dataset into Euclidean space with a fitted solution.
    Embed(EmbedArgs),
    /// Cluster an embedded dataset for a single k.
    Cluster(ClusterArgs),
    /// Cluster over a range of k and score each solution.
    Sweep(SweepArgs),
    /// Summarize a continuous target attribute per cluster.
    Profile(ProfileArgs),
    /// Recursively re-cluster each partition of a previous clustering.
    Drilldown(DrilldownArgs),
}

/// Inclusive `A:B` range of cluster counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn values(&self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got `{s}`"))?;
        let lo: usize = a.trim().parse().map_err(|_| format!("bad lower bound `{a}`"))?;
        let hi: usize = b.trim().parse().map_err(|_| format!("bad upper bound `{b}`"))?;
        if lo == 0 || lo > hi {
            return Err(format!("need 1 <= A <= B, got {lo}:{hi}"));
        }
        Ok(KRange { lo, hi })
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl Serialize for KRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: homcluster::Error| e.to_string())
}

fn parse_index(s: &str) -> Result<IndexKind, String> {
    s.parse().map_err(|e: homcluster::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Record wall-clock duration in the manifest.
    #[arg(long)]
    pub timing: bool,
}

/// Loading and preprocessing shared by every stage that reads the raw dataset.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// Treat empty categorical cells as their own level.
    #[arg(long)]
    pub missing_as_level: bool,
    /// Continuous attribute that is clipped (and, where relevant, profiled).
    #[arg(long)]
    pub target: Option<String>,
    /// Rows above this quantile of the target are dropped; 1 disables clipping.
    #[arg(long, default_value_t = 0.99)]
    pub clip_quantile: f64,
    /// Standardize before clipping instead of after.
    #[arg(long)]
    pub clip_after_standardize: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MethodArgs {
    #[arg(long, default_value = "mbk", value_parser = parse_algorithm)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

/// Algorithm parameters; each applies only to its own algorithm.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TuningArgs {
    /// Mini-batch size.
    #[arg(long, default_value_t = 1024)]
    pub batch: usize,
    /// Mini-batch iterations.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// BIRCH merge radius.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// BIRCH branching factor.
    #[arg(long, default_value_t = 50)]
    pub branching: usize,
    /// CLARA sample count.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    /// CLARA sample size (default 40 + 2k).
    #[arg(long)]
    pub sample_size: Option<usize>,
}

impl TuningArgs {
    pub fn method(&self, algorithm: Algorithm) -> Method {
        match algorithm {
            Algorithm::Mbk => Method::Mbk {
                batch: self.batch,
                iters: self.iters,
            },
            Algorithm::Birch => Method::Birch {
                threshold: self.threshold,
                branching: self.branching,
            },
            Algorithm::Clara => Method::Clara {
                samples: self.samples,
                sample_size: self.sample_size,
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distance between cluster centers.
    #[arg(long, default_value_t = 4.0)]
    pub side: f64,
    /// Probability of each cluster's dominant level.
    #[arg(long, default_value_t = 0.8)]
    pub dominant: f64,
    /// Add a target attribute `y` with a displaced group of rows.
    #[arg(long)]
    pub inject_outlier: bool,
    #[arg(long, default_value_t = 0.05)]
    pub outlier_fraction: f64,
    /// Displacement in standard deviations of `y`.
    #[arg(long, default_value_t = 3.0)]
    pub outlier_shift: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Solution JSON written by `fit`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Rescale quantified columns to unit variance.
    #[arg(long)]
    pub restandardize_quantified: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    /// Embedded CSV written by `embed`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Embedded CSV written by `embed`.
    #[arg(long)]
    pub input: PathBuf,
    /// One or more algorithms, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "mbk,birch,clara", value_parser = parse_algorithm)]
    pub algorithm: Vec<Algorithm>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long = "k-range", visible_alias = "k", default_value = "2:6")]
    pub k_range: KRange,
    #[arg(long, default_value = "chi", value_parser = parse_index)]
    pub index: IndexKind,
    /// Ground-truth `row_id,cluster` CSV, required for ARI.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Run `k` uses seed `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `row_id,cluster` CSV written by `cluster`.
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DrilldownArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `row_id,cluster` CSV from the top-level clustering.
    #[arg(long)]
    pub labels: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Fixed k for every partition; otherwise chosen by CHI over `--k-range`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "k-range", default_value = "2:6")]
    pub k_range: KRange,
    /// Levels of analysis, counting the supplied labels as the first.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Partitions with fewer rows are profiled but not re-clustered.
    #[arg(long, default_value_t = 50)]
    pub min_rows: usize,
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Embed(a) => commands::embed(&a),
        Command::Cluster(a) => commands::cluster(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Profile(a) => commands::profile(&a),
        Command::Drilldown(a) => drilldown::drilldown(&a),
    }
}
