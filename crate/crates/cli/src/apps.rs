use std::path::PathBuf;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use splcm_core::downstream::{
    bootstrap_error_cov, corr_from_cov, group_by_label, hier_cluster, qda_classify, qda_fit, qda_splits, CovEstimator,
    Linkage, SplitConfig,
};
use splcm_core::par::Execution;
use splcm_core::simbench::{sample_cov, SoftCvConfig};
use splcm_core::splcm::{Splcm, SplcmConfig};
use splcm_core::tuning::{clime_precision, feasible_default_grid, grid_search, TuneConfig};

use crate::args::{BootstrapArgs, ClusterArgs, QdaArgs};
use crate::error::CliError;
use crate::io::{num, read_sym, read_table, write_json, write_matrix, write_rows};
use crate::manifest::{self, SCHEMA_VERSION};

fn out_dir(dir: &std::path::Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn parse_estimator(s: &str) -> Result<CovEstimator, CliError> {
    match s {
        "sample" => Ok(CovEstimator::Sample),
        "soft" => Ok(CovEstimator::Soft { cv: SoftCvConfig::default() }),
        "splcm" => Ok(CovEstimator::default()),
        _ => Err(CliError::usage(format!("unknown estimator '{s}'"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdaConfig {
    pub data: Option<PathBuf>,
    pub predict: Option<PathBuf>,
    pub splits: SplitConfig,
}

impl Default for QdaConfig {
    fn default() -> Self {
        Self { data: None, predict: None, splits: SplitConfig::default() }
    }
}

/// Features and integer labels from the last column.
fn labeled(path: &std::path::Path) -> Result<(Array2<f64>, Vec<i64>), CliError> {
    let t = read_table(path)?;
    let cols = t.data.ncols();
    if cols < 2 {
        return Err(CliError::usage(format!("{}: needs feature columns and a label column", path.display())));
    }
    let last = t.data.column(cols - 1);
    let mut labels = Vec::with_capacity(last.len());
    for (i, &v) in last.iter().enumerate() {
        if !(v.is_finite() && v.fract() == 0.0) {
            return Err(CliError::usage(format!("{}: row {} has non-integer label {v}", path.display(), i + 1)));
        }
        labels.push(v as i64);
    }
    Ok((t.data.slice(ndarray::s![.., ..cols - 1]).to_owned(), labels))
}

pub fn qda(a: &QdaArgs) -> Result<(), CliError> {
    let mut cfg: QdaConfig = match &a.common.config {
        Some(p) => manifest::load(p, "qda")?,
        None => QdaConfig::default(),
    };
    if a.data.is_some() {
        cfg.data = a.data.clone();
    }
    if a.predict.is_some() {
        cfg.predict = a.predict.clone();
    }
    if let Some(e) = &a.estimator {
        cfg.splits.estimator = parse_estimator(e)?;
    }
    if let Some(v) = a.splits {
        cfg.splits.splits = v;
    }
    if let Some(v) = a.train_frac {
        cfg.splits.train_frac = v;
    }
    if let Some(v) = a.seed {
        cfg.splits.seed = v;
    }
    if a.common.sequential {
        cfg.splits.execution = Execution::Sequential;
    }
    let path = cfg.data.clone().ok_or_else(|| CliError::usage("--data is required"))?;
    let (x, labels) = labeled(&path)?;
    let report = qda_splits(&x, &labels, &cfg.splits)?;

    let dir = &a.common.out;
    out_dir(dir)?;
    manifest::write(dir, "qda", &cfg)?;
    write_rows(
        &dir.join("splits.csv"),
        &["split", "misclassification"],
        report.rates.iter().enumerate().map(|(k, r)| vec![k.to_string(), num(*r)]),
    )?;
    #[derive(Serialize)]
    struct Report<'a> {
        schema_version: u32,
        estimator: &'a str,
        labels: &'a [i64],
        splits: usize,
        train_frac: f64,
        mean_misclassification: f64,
        sd_misclassification: f64,
    }
    write_json(
        &dir.join("report.json"),
        &Report {
            schema_version: SCHEMA_VERSION,
            estimator: cfg.splits.estimator.name(),
            labels: &report.labels,
            splits: cfg.splits.splits,
            train_frac: cfg.splits.train_frac,
            mean_misclassification: report.mean,
            sd_misclassification: report.sd,
        },
    )?;
    if let Some(pred) = &cfg.predict {
        let rows = read_table(pred)?.data;
        if rows.ncols() != x.ncols() {
            return Err(CliError::usage(format!("{}: expected {} columns, got {}", pred.display(), x.ncols(), rows.ncols())));
        }
        let (distinct, groups) = group_by_label(&labels);
        let classes: Vec<Array2<f64>> = groups.iter().map(|g| x.select(Axis(0), g)).collect();
        let model = qda_fit(&classes, &cfg.splits.estimator, cfg.splits.seed)?;
        let out = rows
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, r)| Ok(vec![i.to_string(), distinct[qda_classify(&model, &r.to_vec())?].to_string()]))
            .collect::<Result<Vec<_>, CliError>>()?;
        write_rows(&dir.join("predictions.csv"), &["row", "label"], out)?;
    }
    println!("mean misclassification {:.4} (sd {:.4}) over {} splits", report.mean, report.sd, report.rates.len());
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterEstimator {
    Sample,
    #[default]
    Splcm,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub data: Option<PathBuf>,
    pub corr: Option<PathBuf>,
    pub linkage: Linkage,
    pub estimator: ClusterEstimator,
    /// Fixed penalty; with `rho` unset too, both are chosen by BIC.
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub admm: SplcmConfig,
}

pub fn cluster(a: &ClusterArgs) -> Result<(), CliError> {
    let mut cfg: ClusterConfig = match &a.common.config {
        Some(p) => manifest::load(p, "cluster")?,
        None => ClusterConfig::default(),
    };
    if a.data.is_some() {
        cfg.data = a.data.clone();
        cfg.corr = None;
    }
    if a.corr.is_some() {
        cfg.corr = a.corr.clone();
        cfg.data = None;
    }
    if let Some(l) = &a.linkage {
        cfg.linkage = l.parse()?;
    }
    if let Some(e) = &a.estimator {
        cfg.estimator = match e.as_str() {
            "sample" => ClusterEstimator::Sample,
            "splcm" => ClusterEstimator::Splcm,
            _ => return Err(CliError::usage(format!("unknown estimator '{e}'"))),
        };
    }
    if a.lambda.is_some() {
        cfg.lambda = a.lambda;
    }
    if a.rho.is_some() {
        cfg.rho = a.rho;
    }
    cfg.admm.validate()?;
    let exec = if a.common.sequential { Execution::Sequential } else { Execution::Parallel };

    let mut chosen: (Option<f64>, Option<f64>) = (None, None);
    let (r, labels) = match (&cfg.data, &cfg.corr) {
        (None, Some(path)) => (read_sym(path)?, read_table(path)?.header),
        (Some(path), None) => {
            let t = read_table(path)?;
            let n = t.data.nrows();
            if n < 2 {
                return Err(CliError::usage("clustering needs at least 2 observations"));
            }
            // scale each column to mean 0, variance 1
            let mean = t.data.mean_axis(Axis(0)).expect("rows");
            let mut z = &t.data - &mean;
            for (j, mut col) in z.columns_mut().into_iter().enumerate() {
                let sd = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
                if !(sd > 0.0) {
                    return Err(CliError::usage(format!("column {j} is constant")));
                }
                col /= sd;
            }
            let s = sample_cov(&z);
            let sigma = match cfg.estimator {
                ClusterEstimator::Sample => s,
                ClusterEstimator::Splcm => match (cfg.lambda, cfg.rho) {
                    (None, None) => {
                        let grid = feasible_default_grid(&s, n)?;
                        let tcfg = TuneConfig { splcm: cfg.admm.clone(), execution: exec, ..TuneConfig::default() };
                        let best = grid_search(&s, n, &grid, &tcfg)?;
                        chosen = (Some(best.best_lambda), best.best_rho);
                        best.best_fit.sigma_hat
                    }
                    (Some(l), Some(rho)) => {
                        let ep = clime_precision(&s, n, rho, None, Default::default())?;
                        let fit = Splcm::new(&s, &ep, &cfg.admm)?.fit(l)?;
                        chosen = (Some(l), Some(rho));
                        if !fit.converged {
                            return Err(CliError::Numeric("ADMM did not converge".into()));
                        }
                        fit.sigma_hat
                    }
                    _ => return Err(CliError::usage("give both --lambda and --rho, or neither")),
                },
            };
            (corr_from_cov(&sigma)?, t.header)
        }
        _ => return Err(CliError::usage("exactly one of --data or --corr is required")),
    };
    let dendro = hier_cluster(&r, cfg.linkage)?;

    let dir = &a.common.out;
    out_dir(dir)?;
    manifest::write(dir, "cluster", &cfg)?;
    #[derive(Serialize)]
    struct Report {
        schema_version: u32,
        linkage: Linkage,
        leaves: usize,
        lambda: Option<f64>,
        rho: Option<f64>,
    }
    let rep = Report { schema_version: SCHEMA_VERSION, linkage: cfg.linkage, leaves: dendro.leaves, lambda: chosen.0, rho: chosen.1 };
    write_json(&dir.join("report.json"), &rep)?;
    write_matrix(&dir.join("correlation.csv"), labels.as_deref(), r.as_array())?;
    write_rows(
        &dir.join("dendrogram.csv"),
        &["step", "a", "b", "height"],
        dendro.merges.iter().enumerate().map(|(i, m)| vec![i.to_string(), m.a.to_string(), m.b.to_string(), num(m.height)]),
    )?;
    if let Some(l) = &labels {
        write_rows(&dir.join("leaves.csv"), &["id", "label"], l.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.clone()]))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub data: Option<PathBuf>,
    pub resamples: usize,
    pub seed: u64,
    pub center: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { data: None, resamples: 1000, seed: 1, center: false }
    }
}

pub fn bootstrap(a: &BootstrapArgs) -> Result<(), CliError> {
    let mut cfg: BootstrapConfig = match &a.common.config {
        Some(p) => manifest::load(p, "bootstrap-v")?,
        None => BootstrapConfig::default(),
    };
    if a.data.is_some() {
        cfg.data = a.data.clone();
    }
    if let Some(v) = a.resamples {
        cfg.resamples = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.center |= a.center;
    let path = cfg.data.clone().ok_or_else(|| CliError::usage("--data is required"))?;
    let mut y = read_table(&path)?.data;
    if cfg.center {
        let mean = y.mean_axis(Axis(0)).expect("rows");
        y -= &mean;
    }
    let exec = if a.common.sequential { Execution::Sequential } else { Execution::Parallel };
    let v = bootstrap_error_cov(&y, cfg.resamples, cfg.seed, exec)?;
    let dir = &a.common.out;
    out_dir(dir)?;
    manifest::write(dir, "bootstrap-v", &cfg)?;
    write_matrix(&dir.join("v_boot.csv"), None, &v)
}
