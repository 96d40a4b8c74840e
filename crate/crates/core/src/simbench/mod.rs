//! Synthetic covariance models, Gaussian sampling, metrics and the
//! replicate runner used for the benchmark tables.

mod experiment;
mod metrics;

pub use experiment::{
    run_experiment, soft_cv, ExperimentConfig, ExperimentOutcome, MethodRun, MethodSummary, Method, ReplicateResult,
    SoftCvConfig, SoftCvResult,
};
pub use metrics::{evaluate, monotone_envelope, roc_curve, MetricReport, RocPoint};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::densela::{sym_eigen, Cholesky};
use crate::error::{Error, Result};
use crate::symvec::SymMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ma1,
    Random,
    Hub,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ma1" | "ma(1)" => Ok(ModelKind::Ma1),
            "random" => Ok(ModelKind::Random),
            "hub" => Ok(ModelKind::Hub),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovModelSpec {
    pub kind: ModelKind,
    pub p: usize,
    /// Off-diagonal magnitude (0.4 for MA(1), 1 otherwise).
    pub value: f64,
    /// Pair inclusion probability for the random model.
    pub prob: f64,
    pub seed: u64,
}

impl CovModelSpec {
    pub fn new(kind: ModelKind, p: usize, seed: u64) -> Self {
        let value = if kind == ModelKind::Ma1 { 0.4 } else { 1.0 };
        Self { kind, p, value, prob: 0.02, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!("p must be >= 2, got {}", self.p)));
        }
        if self.kind == ModelKind::Hub && self.p % 5 != 0 {
            return Err(Error::HubDivisibility(self.p));
        }
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(Error::InvalidParameter(format!("prob must be in [0, 1], got {}", self.prob)));
        }
        Ok(())
    }
}

/// A generated truth together with the seed that produced it.
#[derive(Clone, Debug)]
pub struct GeneratedCov {
    pub sigma: SymMatrix,
    pub seed_used: u64,
    pub redraws: u32,
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Off-diagonal pattern of the model, zero diagonal.
pub fn offdiag_pattern(spec: &CovModelSpec, seed: u64) -> Result<SymMatrix> {
    spec.validate()?;
    let p = spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SymMatrix::zeros(p);
    match spec.kind {
        ModelKind::Ma1 => {
            for j in 1..p {
                b.set(j, j - 1, spec.value);
            }
        }
        ModelKind::Random => {
            for j in 1..p {
                for k in 0..j {
                    if rng.random_bool(spec.prob) {
                        let v = spec.value * sign(&mut rng);
                        b.set(j, k, v);
                    }
                }
            }
        }
        ModelKind::Hub => {
            let block = p / 5;
            // 1-based hubs j = 1, 1 + p/5, ...; partners j+1 .. j+p/5-1
            for hub in (0..p).step_by(block) {
                for partner in hub + 1..hub + block {
                    let v = spec.value * sign(&mut rng);
                    b.set(partner, hub, v);
                }
            }
        }
    }
    Ok(b)
}

const BISECT_ITERS: usize = 200;

/// Constant `c` with `(c + mu_max) / (c + mu_min) = ratio`, by bisection.
fn condition_constant(mu_max: f64, mu_min: f64, ratio: f64) -> Result<f64> {
    if !(mu_max > mu_min) || !(ratio > 1.0) {
        return Err(Error::ConditioningFailure { target: ratio });
    }
    let f = |c: f64| (c + mu_max) / (c + mu_min) - ratio;
    let spread = mu_max - mu_min;
    // f decreases from +inf just above -mu_min to 1 - ratio < 0
    let mut lo = -mu_min;
    let mut hi = -mu_min + spread;
    while f(hi) > 0.0 {
        hi = -mu_min + 2.0 * (hi + mu_min);
        if !hi.is_finite() {
            return Err(Error::ConditioningFailure { target: ratio });
        }
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Generate `Sigma*` with condition ratio `p`, redrawing empty random patterns.
pub fn gen_cov_full(spec: &CovModelSpec) -> Result<GeneratedCov> {
    spec.validate()?;
    let mut seed = spec.seed;
    let mut redraws = 0;
    let b = loop {
        let b = offdiag_pattern(spec, seed)?;
        if b.max_abs() > 0.0 {
            break b;
        }
        if spec.kind != ModelKind::Random || redraws >= 1000 || spec.prob == 0.0 {
            return Err(Error::ConditioningFailure { target: spec.p as f64 });
        }
        seed = seed.wrapping_add(1);
        redraws += 1;
    };
    let eig = sym_eigen(&b)?;
    let c = condition_constant(eig.max(), eig.min(), spec.p as f64)?;
    Ok(GeneratedCov { sigma: b.shifted(c), seed_used: seed, redraws })
}

pub fn gen_cov(spec: &CovModelSpec) -> Result<SymMatrix> {
    Ok(gen_cov_full(spec)?.sigma)
}

/// `n` rows i.i.d. `N(0, sigma)` and the uncentered `S = Y^T Y / n`.
pub fn sample_gaussian(sigma: &SymMatrix, n: usize, seed: u64) -> Result<(Array2<f64>, SymMatrix)> {
    let p = sigma.dim();
    let ch = Cholesky::factor_sym(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Array2::zeros((n, p));
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut rng);
        }
        let row = ch.lower_mul(&z);
        for (j, v) in row.into_iter().enumerate() {
            y[[i, j]] = v;
        }
    }
    let s = sample_cov(&y);
    Ok((y, s))
}

/// `Y^T Y / n` without centering.
pub fn sample_cov(y: &Array2<f64>) -> SymMatrix {
    let n = y.nrows().max(1) as f64;
    let g = y.t().dot(y) / n;
    let p = g.nrows();
    SymMatrix::from_fn(p, |j, k| g[[j, k]])
}

/// Column-centered `Y^T Y / n`.
pub fn sample_cov_centered(y: &Array2<f64>) -> SymMatrix {
    let mut c = y.clone();
    if let Some(mean) = y.mean_axis(ndarray::Axis(0)) {
        c -= &mean;
    }
    sample_cov(&c)
}
