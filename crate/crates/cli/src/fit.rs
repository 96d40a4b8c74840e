use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splcm_core::par::Execution;
use splcm_core::simbench::{sample_cov, sample_cov_centered};
use splcm_core::splcm::{SplcmConfig, SplcmFit, Splcm};
use splcm_core::symvec::SymMatrix;
use splcm_core::tuning::{
    bic_score, clime_precision, default_rhos, feasible_default_grid, grid_search, tune_lambda, LambdaGrid, TuneConfig,
    TuneGrid, TuneResult,
};
use splcm_core::wishart_error::{ErrorPrecision, PrecisionMode};

use crate::args::{EstimateArgs, InputArgs, PrecisionArgs, TuneArgs};
use crate::error::CliError;
use crate::io::{num, opt, read_sym, read_table, write_json, write_matrix, write_rows};
use crate::manifest::{self, SCHEMA_VERSION};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub data: Option<PathBuf>,
    pub cov: Option<PathBuf>,
    pub n: Option<usize>,
    pub center: bool,
}

impl InputConfig {
    pub fn apply(&mut self, a: &InputArgs) {
        if a.data.is_some() {
            self.data = a.data.clone();
            self.cov = None;
        }
        if a.cov.is_some() {
            self.cov = a.cov.clone();
            self.data = None;
        }
        if a.n.is_some() {
            self.n = a.n;
        }
        self.center |= a.center;
    }
}

pub struct Input {
    pub s: SymMatrix,
    pub n: usize,
    pub labels: Option<Vec<String>>,
}

pub fn load_input(c: &InputConfig) -> Result<Input, CliError> {
    match (&c.data, &c.cov) {
        (Some(path), None) => {
            let t = read_table(path)?;
            let n = t.data.nrows();
            if let Some(m) = c.n.filter(|&m| m != n) {
                return Err(CliError::usage(format!("--n {m} does not match the {n} rows of {}", path.display())));
            }
            let s = if c.center { sample_cov_centered(&t.data) } else { sample_cov(&t.data) };
            Ok(Input { s, n, labels: t.header })
        }
        (None, Some(path)) => {
            let n = c.n.ok_or_else(|| CliError::usage("--cov requires --n"))?;
            if n == 0 {
                return Err(CliError::usage("--n must be positive"));
            }
            let header = read_table(path)?.header;
            Ok(Input { s: read_sym(path)?, n, labels: header })
        }
        (None, None) => Err(CliError::usage("one of --data or --cov is required")),
        (Some(_), Some(_)) => Err(CliError::usage("--data and --cov are mutually exclusive")),
    }
}

/// Where the error precision comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrecisionConfig {
    pub identity: bool,
    pub oracle: Option<PathBuf>,
    pub tau: Option<f64>,
    pub mode: PrecisionMode,
}

impl PrecisionConfig {
    pub fn apply(&mut self, a: &PrecisionArgs) {
        if a.identity_precision {
            self.identity = true;
            self.oracle = None;
        }
        if a.oracle_precision.is_some() {
            self.oracle = a.oracle_precision.clone();
            self.identity = false;
        }
        if a.tau.is_some() {
            self.tau = a.tau;
        }
        if let Some(m) = a.precision_mode {
            self.mode = m;
        }
    }

    fn uses_clime(&self) -> bool {
        !self.identity && self.oracle.is_none()
    }

    fn label(&self) -> &'static str {
        if self.identity {
            "identity"
        } else if self.oracle.is_some() {
            "oracle"
        } else {
            "clime"
        }
    }

    /// The fixed precision, or `None` for CLIME.
    fn fixed(&self, p: usize, n: usize) -> Result<Option<ErrorPrecision>, CliError> {
        if self.identity {
            return Ok(Some(ErrorPrecision::identity(p, n, self.mode)?));
        }
        if let Some(path) = &self.oracle {
            let omega = read_sym(path)?;
            if omega.dim() != p {
                return Err(CliError::usage(format!("oracle precision is {}x{0}, data has p = {p}", omega.dim())));
            }
            return Ok(Some(ErrorPrecision::new(omega, n, self.mode)?));
        }
        Ok(None)
    }
}

fn validate_splcm(c: &SplcmConfig) -> Result<(), CliError> {
    c.validate().map_err(CliError::from)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Serialize)]
struct FitReport<'a> {
    schema_version: u32,
    command: &'a str,
    p: usize,
    n: usize,
    precision: &'a str,
    lambda: f64,
    rho: Option<f64>,
    tau: Option<f64>,
    converged: bool,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    min_eigenvalue: f64,
    support_size: usize,
    bic: f64,
    gamma: f64,
    delta: f64,
    shrink: Option<f64>,
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    tuning: Option<TuneSummary>,
}

#[derive(Serialize)]
struct TuneSummary {
    cells: usize,
    converged_cells: usize,
    failed_rows: Vec<(f64, String)>,
}

fn report<'a>(
    command: &'a str,
    input: &Input,
    prec: &'a PrecisionConfig,
    fit: &'a SplcmFit,
    rho: Option<f64>,
    tuning: Option<TuneSummary>,
) -> Result<FitReport<'a>, CliError> {
    Ok(FitReport {
        schema_version: SCHEMA_VERSION,
        command,
        p: input.s.dim(),
        n: input.n,
        precision: prec.label(),
        lambda: fit.lambda,
        rho,
        tau: rho.map(|r| prec.tau.unwrap_or(r)),
        converged: fit.converged,
        iterations: fit.iterations,
        primal_residual: fit.primal_residual,
        dual_residual: fit.dual_residual,
        min_eigenvalue: fit.min_eigenvalue,
        support_size: fit.support_size(),
        bic: bic_score(&input.s, fit, input.n)?,
        gamma: fit.gamma,
        delta: fit.delta,
        shrink: fit.shrink,
        warnings: &fit.warnings,
        tuning,
    })
}

fn write_fit(dir: &Path, input: &Input, fit: &SplcmFit) -> Result<(), CliError> {
    write_matrix(&dir.join("sigma_hat.csv"), input.labels.as_deref(), fit.sigma_hat.as_array())
}

fn finish(fit: &SplcmFit) -> Result<(), CliError> {
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    if fit.converged {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("ADMM did not converge within {} iterations", fit.iterations)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub input: InputConfig,
    pub lambda: Option<f64>,
    /// CLIME level; defaults to `0.2 sqrt(log p / n)`.
    pub rho: Option<f64>,
    pub precision: PrecisionConfig,
    pub admm: SplcmConfig,
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let mut cfg: EstimateConfig = match &a.common.config {
        Some(p) => manifest::load(p, "estimate")?,
        None => EstimateConfig::default(),
    };
    cfg.input.apply(&a.input);
    cfg.precision.apply(&a.precision);
    a.admm.apply(&mut cfg.admm);
    if a.lambda.is_some() {
        cfg.lambda = a.lambda;
    }
    if a.rho.is_some() {
        cfg.rho = a.rho;
    }
    let lambda = cfg.lambda.ok_or_else(|| CliError::usage("--lambda is required"))?;
    cfg.admm.lambda = lambda;
    validate_splcm(&cfg.admm)?;
    if let Some(r) = cfg.rho.filter(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(CliError::usage(format!("rho must be > 0, got {r}")));
    }
    let input = load_input(&cfg.input)?;
    let (p, n) = (input.s.dim(), input.n);
    let fixed = cfg.precision.fixed(p, n)?;
    let (ep, rho) = match fixed {
        Some(ep) => (ep, None),
        None => {
            let rho = cfg.rho.unwrap_or_else(|| default_rhos(p, n)[2]);
            cfg.rho = Some(rho);
            (clime_precision(&input.s, n, rho, cfg.precision.tau, cfg.precision.mode)?, Some(rho))
        }
    };
    if !cfg.precision.uses_clime() {
        cfg.rho = None;
    }
    let fit = Splcm::new(&input.s, &ep, &cfg.admm)?.fit(lambda)?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    manifest::write(dir, "estimate", &cfg)?;
    write_fit(dir, &input, &fit)?;
    write_json(&dir.join("report.json"), &report("estimate", &input, &cfg.precision, &fit, rho, None)?)?;
    finish(&fit)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneCommandConfig {
    pub input: InputConfig,
    pub lambdas: LambdaGrid,
    /// `None` uses the default grid, extended to a feasible level if needed.
    pub rhos: Option<Vec<f64>>,
    pub precision: PrecisionConfig,
    pub admm: SplcmConfig,
    pub execution: Execution,
}

impl Default for TuneCommandConfig {
    fn default() -> Self {
        Self {
            input: InputConfig::default(),
            lambdas: LambdaGrid::default(),
            rhos: None,
            precision: PrecisionConfig::default(),
            admm: SplcmConfig::default(),
            execution: Execution::default(),
        }
    }
}

pub fn tune(a: &TuneArgs) -> Result<(), CliError> {
    let mut cfg: TuneCommandConfig = match &a.common.config {
        Some(p) => manifest::load(p, "tune")?,
        None => TuneCommandConfig::default(),
    };
    cfg.input.apply(&a.input);
    cfg.precision.apply(&a.precision);
    a.admm.apply(&mut cfg.admm);
    if let Some(l) = &a.lambdas {
        cfg.lambdas = LambdaGrid::Fixed(l.0.clone());
    } else if a.lambda_points.is_some() || a.lambda_ratio.is_some() {
        let (mut points, mut ratio) = match cfg.lambdas {
            LambdaGrid::Auto { points, ratio } => (points, ratio),
            LambdaGrid::Fixed(_) => match LambdaGrid::default() {
                LambdaGrid::Auto { points, ratio } => (points, ratio),
                LambdaGrid::Fixed(_) => unreachable!(),
            },
        };
        points = a.lambda_points.unwrap_or(points);
        ratio = a.lambda_ratio.unwrap_or(ratio);
        cfg.lambdas = LambdaGrid::Auto { points, ratio };
    }
    if let Some(r) = &a.rhos {
        cfg.rhos = Some(r.0.clone());
    }
    if a.common.sequential {
        cfg.execution = Execution::Sequential;
    }
    validate_splcm(&cfg.admm)?;
    TuneGrid { lambdas: cfg.lambdas.clone(), rhos: cfg.rhos.clone().unwrap_or_else(|| vec![1.0]) }.validate()?;

    let input = load_input(&cfg.input)?;
    let (p, n) = (input.s.dim(), input.n);
    let tcfg = TuneConfig {
        splcm: cfg.admm.clone(),
        tau: cfg.precision.tau,
        precision_mode: cfg.precision.mode,
        execution: cfg.execution,
    };
    let result: TuneResult = match cfg.precision.fixed(p, n)? {
        Some(ep) => {
            cfg.rhos = None;
            tune_lambda(&input.s, n, &ep, &cfg.lambdas, &cfg.admm)?
        }
        None => {
            let rhos = match &cfg.rhos {
                Some(r) => r.clone(),
                None => feasible_default_grid(&input.s, n)?.rhos,
            };
            cfg.rhos = Some(rhos.clone());
            grid_search(&input.s, n, &TuneGrid { lambdas: cfg.lambdas.clone(), rhos }, &tcfg)?
        }
    };
    let dir = &a.common.out;
    prepare_out(dir)?;
    manifest::write(dir, "tune", &cfg)?;
    let mut table = result.table.clone();
    table.sort_by(|x, y| y.rho.unwrap_or(0.0).total_cmp(&x.rho.unwrap_or(0.0)).then(y.lambda.total_cmp(&x.lambda)));
    write_rows(
        &dir.join("tuning.csv"),
        &["lambda", "rho", "bic", "support", "converged"],
        table.iter().map(|c| vec![num(c.lambda), opt(c.rho), num(c.bic), c.support.to_string(), c.converged.to_string()]),
    )?;
    let fit = &result.best_fit;
    write_fit(dir, &input, fit)?;
    let summary = TuneSummary {
        cells: result.table.len(),
        converged_cells: result.table.iter().filter(|c| c.converged).count(),
        failed_rows: result.failed_rows.clone(),
    };
    write_json(&dir.join("report.json"), &report("tune", &input, &cfg.precision, fit, result.best_rho, Some(summary))?)?;
    finish(fit)
}
