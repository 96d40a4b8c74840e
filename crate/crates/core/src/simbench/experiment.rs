use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, roc_curve, MetricReport, RocPoint};
use super::{gen_cov_full, sample_cov, sample_gaussian, CovModelSpec, ModelKind};
use crate::densela::Cholesky;
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};
use crate::splcm::{default_delta, log_grid, pd_project, soft_threshold_estimate, Splcm, SplcmConfig, Thresholds};
use crate::symvec::SymMatrix;
use crate::tuning::{clime_precision, grid_search, tune_lambda, LambdaGrid, TuneConfig, TuneGrid};
use crate::wishart_error::ErrorPrecision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sample,
    Soft,
    Splcm,
    SplcmOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sample => "sample",
            Method::Soft => "soft",
            Method::Splcm => "splcm",
            Method::SplcmOracle => "splcm-oracle",
        }
    }

    pub fn all() -> Vec<Method> {
        vec![Method::Sample, Method::Soft, Method::Splcm, Method::SplcmOracle]
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sample" => Ok(Method::Sample),
            "soft" => Ok(Method::Soft),
            "splcm" => Ok(Method::Splcm),
            "splcm-oracle" | "splcm-o" | "oracle" => Ok(Method::SplcmOracle),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Random-split cross-validation for the soft-threshold baseline: train on
/// `n (1 - 1/ln n)` rows, score `||Sigma_train(lambda) - S_test||_F^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftCvConfig {
    pub splits: usize,
    pub points: usize,
    pub ratio: f64,
}

impl Default for SoftCvConfig {
    fn default() -> Self {
        Self { splits: 5, points: 20, ratio: 0.01 }
    }
}

#[derive(Clone, Debug)]
pub struct SoftCvResult {
    pub lambda: f64,
    /// PD-projected soft-threshold estimate on the full sample.
    pub estimate: SymMatrix,
    /// Nonzero off-diagonal pairs of the thresholded (pre-projection) matrix.
    pub support: Vec<(usize, usize)>,
    /// `(lambda, summed risk)` over the grid.
    pub risk: Vec<(f64, f64)>,
}

fn soft_pd(s: &SymMatrix, lambda: f64) -> Result<(SymMatrix, SymMatrix)> {
    let t = soft_threshold_estimate(s, &Thresholds::Scalar(lambda))?;
    let pd = pd_project(&t, default_delta(s))?;
    Ok((t, pd))
}

fn max_offdiag(s: &SymMatrix) -> f64 {
    let p = s.dim();
    (0..p).flat_map(|j| (0..j).map(move |k| (j, k))).fold(0.0_f64, |m, (j, k)| m.max(s.get(j, k).abs()))
}

fn rows(y: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    y.select(Axis(0), idx)
}

pub fn soft_cv(y: &Array2<f64>, cfg: &SoftCvConfig, seed: u64) -> Result<SoftCvResult> {
    let n = y.nrows();
    if n < 3 || cfg.splits == 0 || cfg.points == 0 {
        return Err(Error::InvalidParameter("soft CV needs n >= 3, splits >= 1, points >= 1".into()));
    }
    let s = sample_cov(y);
    let n1 = ((n as f64) * (1.0 - 1.0 / (n as f64).ln())).floor() as usize;
    let n1 = n1.clamp(1, n - 1);
    let mut grid = log_grid(max_offdiag(&s), cfg.ratio, cfg.points);
    grid.push(0.0);
    let mut risk = vec![0.0; grid.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.splits {
        idx.shuffle(&mut rng);
        let train = sample_cov(&rows(y, &idx[..n1]));
        let test = sample_cov(&rows(y, &idx[n1..]));
        for (r, &lam) in risk.iter_mut().zip(&grid) {
            let (_, est) = soft_pd(&train, lam)?;
            *r += est.sub(&test)?.frobenius().powi(2);
        }
    }
    // grid is descending, so strict < keeps the larger lambda on ties
    let mut best = 0;
    for i in 1..grid.len() {
        if risk[i] < risk[best] {
            best = i;
        }
    }
    let lambda = grid[best];
    let (thresholded, estimate) = soft_pd(&s, lambda)?;
    let p = s.dim();
    let support = (0..p)
        .flat_map(|j| (0..j).map(move |k| (j, k)))
        .filter(|&(j, k)| thresholded.get(j, k) != 0.0)
        .collect();
    Ok(SoftCvResult { lambda, estimate, support, risk: grid.into_iter().zip(risk).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub p: usize,
    pub n: usize,
    pub replicates: usize,
    /// Base seed; replicate `r` samples with `seed ^ r`.
    pub seed: u64,
    /// Seed for the random signs of the truth; defaults to `seed`.
    pub model_seed: Option<u64>,
    pub methods: Vec<Method>,
    /// `None` uses the default grid for `(p, n)`.
    pub grid: Option<TuneGrid>,
    pub tune: TuneConfig,
    pub soft_cv: SoftCvConfig,
    /// Also trace ROC paths for the penalized methods.
    pub roc: bool,
    pub roc_points: usize,
    pub execution: Execution,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Ma1,
            p: 50,
            n: 100,
            replicates: 20,
            seed: 1,
            model_seed: None,
            methods: Method::all(),
            grid: None,
            tune: TuneConfig::default(),
            soft_cv: SoftCvConfig::default(),
            roc: false,
            roc_points: 30,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: Method,
    pub metrics: MetricReport,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub converged: bool,
    pub roc: Option<Vec<RocPoint>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub runs: Vec<MethodRun>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    fn of(v: &[f64]) -> Self {
        let n = v.len() as f64;
        if v.is_empty() {
            return Stat { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / n;
        let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Stat { mean, sd }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub offdiag_l2: Stat,
    pub frobenius: Stat,
    pub opnorm: Stat,
    pub tpr: Stat,
    pub fpr: Stat,
    pub converged: usize,
    pub replicates: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub sigma_star: SymMatrix,
    pub model_seed_used: u64,
    pub replicates: Vec<ReplicateResult>,
    pub summary: Vec<MethodSummary>,
}

fn roc_grid(lambda_max: f64, points: usize) -> Vec<f64> {
    let mut g = log_grid(lambda_max, 0.01, points.max(2));
    g.push(0.0);
    g
}

struct Truth<'a> {
    sigma: &'a SymMatrix,
    oracle: Option<&'a ErrorPrecision>,
}

fn run_method(method: Method, y: &Array2<f64>, s: &SymMatrix, truth: &Truth, cfg: &ExperimentConfig, seed: u64) -> Result<MethodRun> {
    let n = y.nrows();
    let star = truth.sigma;
    match method {
        Method::Sample => Ok(MethodRun {
            method,
            metrics: evaluate(s, star, None)?,
            lambda: None,
            rho: None,
            converged: true,
            roc: None,
        }),
        Method::Soft => {
            let cv = soft_cv(y, &cfg.soft_cv, seed)?;
            let roc = if cfg.roc {
                let pts = roc_grid(max_offdiag(s), cfg.roc_points)
                    .into_iter()
                    .map(|lam| {
                        let t = soft_threshold_estimate(s, &Thresholds::Scalar(lam))?;
                        let m = evaluate(&t, star, None)?;
                        Ok(RocPoint { lambda: lam, fpr: m.fpr, tpr: m.tpr })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(pts)
            } else {
                None
            };
            Ok(MethodRun {
                method,
                metrics: evaluate(&cv.estimate, star, Some(&cv.support))?,
                lambda: Some(cv.lambda),
                rho: None,
                converged: true,
                roc,
            })
        }
        Method::Splcm => {
            let grid = cfg.grid.clone().unwrap_or_else(|| TuneGrid::default_for(s.dim(), n));
            let r = grid_search(s, n, &grid, &cfg.tune)?;
            let roc = if cfg.roc {
                let ep = clime_precision(s, n, r.best_rho.expect("rho row"), cfg.tune.tau, cfg.tune.precision_mode)?;
                Some(path_roc(s, &ep, &cfg.tune.splcm, star, cfg.roc_points)?)
            } else {
                None
            };
            Ok(MethodRun {
                method,
                metrics: evaluate(&r.best_fit.sigma_hat, star, Some(&r.best_fit.active_set))?,
                lambda: Some(r.best_lambda),
                rho: r.best_rho,
                converged: r.best_fit.converged,
                roc,
            })
        }
        Method::SplcmOracle => {
            let ep = truth.oracle.expect("oracle precision prepared");
            let lambdas = match &cfg.grid {
                Some(g) => g.lambdas.clone(),
                None => LambdaGrid::default(),
            };
            let r = tune_lambda(s, n, ep, &lambdas, &cfg.tune.splcm)?;
            let roc = if cfg.roc { Some(path_roc(s, ep, &cfg.tune.splcm, star, cfg.roc_points)?) } else { None };
            Ok(MethodRun {
                method,
                metrics: evaluate(&r.best_fit.sigma_hat, star, Some(&r.best_fit.active_set))?,
                lambda: Some(r.best_lambda),
                rho: None,
                converged: r.best_fit.converged,
                roc,
            })
        }
    }
}

fn path_roc(s: &SymMatrix, ep: &ErrorPrecision, cfg: &SplcmConfig, star: &SymMatrix, points: usize) -> Result<Vec<RocPoint>> {
    let solver = Splcm::new(s, ep, cfg)?;
    let path = solver.fit_path(&roc_grid(solver.lambda_max(), points))?;
    roc_curve(&path, star)
}

fn summarize(method: Method, runs: &[&MethodRun]) -> MethodSummary {
    let col = |f: fn(&MetricReport) -> f64| Stat::of(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    MethodSummary {
        method,
        offdiag_l2: col(|m| m.offdiag_l2),
        frobenius: col(|m| m.frobenius),
        opnorm: col(|m| m.opnorm),
        tpr: col(|m| m.tpr),
        fpr: col(|m| m.fpr),
        converged: runs.iter().filter(|r| r.converged).count(),
        replicates: runs.len(),
    }
}

/// Generate the truth once, then run every method on each replicate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if cfg.replicates == 0 || cfg.n == 0 || cfg.methods.is_empty() {
        return Err(Error::InvalidParameter("need replicates >= 1, n >= 1 and at least one method".into()));
    }
    let spec = CovModelSpec::new(cfg.model, cfg.p, cfg.model_seed.unwrap_or(cfg.seed));
    let generated = gen_cov_full(&spec)?;
    let sigma_star = generated.sigma;
    let oracle = if cfg.methods.contains(&Method::SplcmOracle) {
        let omega = Cholesky::factor_sym(&sigma_star)?.inverse();
        Some(ErrorPrecision::new(omega, cfg.n, cfg.tune.precision_mode)?)
    } else {
        None
    };
    let truth = Truth { sigma: &sigma_star, oracle: oracle.as_ref() };
    let replicates = try_map_indexed(cfg.execution, cfg.replicates, |r| {
        let seed = cfg.seed ^ r as u64;
        let (y, s) = sample_gaussian(&sigma_star, cfg.n, seed)?;
        let runs = cfg
            .methods
            .iter()
            .map(|&m| run_method(m, &y, &s, &truth, cfg, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, Error>(ReplicateResult { replicate: r, seed, runs })
    })?;
    let summary = cfg
        .methods
        .iter()
        .map(|&m| {
            let runs: Vec<&MethodRun> = replicates.iter().flat_map(|r| r.runs.iter().filter(move |x| x.method == m)).collect();
            summarize(m, &runs)
        })
        .collect();
    Ok(ExperimentOutcome { sigma_star, model_seed_used: generated.seed_used, replicates, summary })
}
