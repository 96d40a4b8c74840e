use serde::Serialize;
use splcm_core::par::Execution;
use splcm_core::simbench::{run_experiment, ExperimentConfig, Method, MethodSummary, ModelKind};

use crate::args::SimulateArgs;
use crate::error::CliError;
use crate::io::{num, opt, write_json, write_rows};
use crate::manifest::{self, SCHEMA_VERSION};

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    model: ModelKind,
    p: usize,
    n: usize,
    replicates: usize,
    model_seed_used: u64,
    methods: &'a [MethodSummary],
    /// Mean Frobenius error of each method over that of `splcm-oracle`.
    #[serde(skip_serializing_if = "Option::is_none")]
    frobenius_ratio_to_oracle: Option<Vec<(Method, f64)>>,
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg: ExperimentConfig = match &a.common.config {
        Some(p) => manifest::load(p, "simulate")?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = &a.model {
        cfg.model = m.parse()?;
    }
    if let Some(v) = a.p {
        cfg.p = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.reps {
        cfg.replicates = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if a.model_seed.is_some() {
        cfg.model_seed = a.model_seed;
    }
    if let Some(m) = &a.methods {
        cfg.methods = m.split(',').map(|x| x.trim().parse()).collect::<Result<Vec<Method>, _>>()?;
    }
    if a.roc {
        cfg.roc = true;
    }
    if let Some(v) = a.roc_points {
        cfg.roc_points = v;
    }
    if a.common.sequential {
        cfg.execution = Execution::Sequential;
        cfg.tune.execution = Execution::Sequential;
    }
    cfg.tune.splcm.validate()?;

    let out = run_experiment(&cfg)?;
    let dir = &a.common.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    manifest::write(dir, "simulate", &cfg)?;

    let header = [
        "replicate", "seed", "method", "frobenius", "offdiag_l2", "opnorm", "tpr", "fpr", "est_support", "true_support",
        "lambda", "rho", "converged",
    ];
    let rows = out.replicates.iter().flat_map(|r| {
        r.runs.iter().map(move |m| {
            let x = &m.metrics;
            vec![
                r.replicate.to_string(),
                r.seed.to_string(),
                m.method.name().to_string(),
                num(x.frobenius),
                num(x.offdiag_l2),
                num(x.opnorm),
                num(x.tpr),
                num(x.fpr),
                x.est_support.to_string(),
                x.true_support.to_string(),
                opt(m.lambda),
                opt(m.rho),
                m.converged.to_string(),
            ]
        })
    });
    write_rows(&dir.join("metrics.csv"), &header, rows)?;

    let oracle = out.summary.iter().find(|s| s.method == Method::SplcmOracle).map(|s| s.frobenius.mean);
    let ratios = oracle.map(|o| out.summary.iter().map(|s| (s.method, s.frobenius.mean / o)).collect::<Vec<_>>());
    let mut header = vec![
        "method", "frobenius_mean", "frobenius_sd", "offdiag_l2_mean", "opnorm_mean", "tpr_mean", "fpr_mean", "converged",
        "replicates",
    ];
    if ratios.is_some() {
        header.push("frobenius_ratio_to_oracle");
    }
    let rows = out.summary.iter().enumerate().map(|(i, s)| {
        let mut r = vec![
            s.method.name().to_string(),
            num(s.frobenius.mean),
            num(s.frobenius.sd),
            num(s.offdiag_l2.mean),
            num(s.opnorm.mean),
            num(s.tpr.mean),
            num(s.fpr.mean),
            s.converged.to_string(),
            s.replicates.to_string(),
        ];
        if let Some(rs) = &ratios {
            r.push(num(rs[i].1));
        }
        r
    });
    write_rows(&dir.join("summary.csv"), &header, rows)?;
    write_json(
        &dir.join("summary.json"),
        &Summary {
            schema_version: SCHEMA_VERSION,
            model: cfg.model,
            p: cfg.p,
            n: cfg.n,
            replicates: cfg.replicates,
            model_seed_used: out.model_seed_used,
            methods: &out.summary,
            frobenius_ratio_to_oracle: ratios,
        },
    )?;

    if cfg.roc {
        let roc_dir = dir.join("roc");
        std::fs::create_dir_all(&roc_dir).map_err(|e| CliError::io(&roc_dir, e))?;
        for r in &out.replicates {
            for m in &r.runs {
                if let Some(pts) = &m.roc {
                    let path = roc_dir.join(format!("r{:03}_{}.csv", r.replicate, m.method.name()));
                    write_rows(&path, &["lambda", "fpr", "tpr"], pts.iter().map(|p| vec![num(p.lambda), num(p.fpr), num(p.tpr)]))?;
                }
            }
        }
    }
    for s in &out.summary {
        println!("{:<14} frobenius {:.4} (sd {:.4})  tpr {:.3}  fpr {:.3}", s.method.name(), s.frobenius.mean, s.frobenius.sd, s.tpr.mean, s.fpr.mean);
    }
    Ok(())
}
