use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use splcm_core::splcm::{SolverKind, SplcmConfig};
use splcm_core::wishart_error::PrecisionMode;

#[derive(Parser, Debug)]
#[command(name = "splcm", version, about = "Sparse positive-definite covariance estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit at a single penalty.
    Estimate(EstimateArgs),
    /// BIC search over (lambda, rho).
    Tune(TuneArgs),
    /// Monte Carlo benchmark on a synthetic covariance model.
    Simulate(SimulateArgs),
    /// QDA with estimated class covariances over repeated stratified splits.
    Qda(QdaArgs),
    /// Hierarchical clustering on an estimated correlation matrix.
    Cluster(ClusterArgs),
    /// Bootstrap estimate of the covariance of vech(S).
    #[command(name = "bootstrap-v")]
    BootstrapV(BootstrapArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// JSON config or a manifest from an earlier run; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Run on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Observations, one row each.
    #[arg(long, conflicts_with = "cov")]
    pub data: Option<PathBuf>,
    /// A sample covariance matrix; requires --n.
    #[arg(long)]
    pub cov: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Subtract column means before forming S.
    #[arg(long)]
    pub center: bool,
}

#[derive(Args, Debug)]
pub struct AdmmArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub eps_abs: Option<f64>,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Keep gamma fixed.
    #[arg(long)]
    pub no_adaptive: bool,
}

impl AdmmArgs {
    pub fn apply(&self, c: &mut SplcmConfig) {
        if self.gamma.is_some() {
            c.gamma = self.gamma;
        }
        if self.delta.is_some() {
            c.delta = self.delta;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.eps_abs {
            c.eps_abs = v;
        }
        if let Some(v) = self.eps_rel {
            c.eps_rel = v;
        }
        if let Some(v) = self.solver {
            c.solver = v;
        }
        if self.no_adaptive {
            c.adaptive = false;
        }
    }
}

#[derive(Args, Debug)]
pub struct PrecisionArgs {
    /// Use the identity in place of the error precision (soft thresholding).
    #[arg(long, conflicts_with = "oracle_precision")]
    pub identity_precision: bool,
    /// A known p x p precision matrix instead of CLIME.
    #[arg(long)]
    pub oracle_precision: Option<PathBuf>,
    /// CLIME threshold; defaults to rho.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    pub precision_mode: Option<PrecisionMode>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[command(flatten)]
    pub admm: AdmmArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[command(flatten)]
    pub admm: AdmmArgs,
    /// Comma-separated penalties; otherwise a log grid below lambda_max.
    #[arg(long, value_parser = parse_list)]
    pub lambdas: Option<Grid>,
    #[arg(long)]
    pub lambda_points: Option<usize>,
    #[arg(long)]
    pub lambda_ratio: Option<f64>,
    /// Comma-separated CLIME levels.
    #[arg(long, value_parser = parse_list)]
    pub rhos: Option<Grid>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model_seed: Option<u64>,
    /// Comma-separated: sample, soft, splcm, splcm-oracle.
    #[arg(long)]
    pub methods: Option<String>,
    /// Write ROC points for each replicate and penalized method.
    #[arg(long)]
    pub roc: bool,
    #[arg(long)]
    pub roc_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QdaArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled observations; the last column is an integer class label.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// sample, soft or splcm.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Unlabeled rows to classify with a model fitted on all of --data.
    #[arg(long)]
    pub predict: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: Common,
    /// Observations; columns are the items clustered.
    #[arg(long, conflicts_with = "corr")]
    pub data: Option<PathBuf>,
    /// A correlation matrix to cluster directly.
    #[arg(long)]
    pub corr: Option<PathBuf>,
    /// average or complete.
    #[arg(long)]
    pub linkage: Option<String>,
    /// sample or splcm.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub center: bool,
}

/// A comma-separated list of values.
#[derive(Clone, Debug)]
pub struct Grid(pub Vec<f64>);

fn parse_list(s: &str) -> Result<Grid, String> {
    if s.trim().is_empty() {
        return Err("grid must not be empty".into());
    }
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"))).collect::<Result<_, _>>().map(Grid)
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown solver '{s}'"))
}

fn parse_mode(s: &str) -> Result<PrecisionMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown precision mode '{s}'"))
}
