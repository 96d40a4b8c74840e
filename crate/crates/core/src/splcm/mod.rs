//! Positive-definite sparse linear covariance model, fitted by ADMM.
//!
//! Minimizes `(1/2)(s - sigma)^T A (s - sigma) + lambda ||sigma_o||_1` over
//! `{sigma : unvech(sigma) >= delta I}` with the diagonal block pinned to the
//! sample variances, where `A = (1/n) V^-1` is an [`ErrorPrecision`].
//!
//! Each iteration:
//!
//! 1. `sigma = P_delta((A + I/gamma)^-1 (A s + (theta - eta)/gamma))`
//! 2. `theta_d = s_d`, `theta_o = S_{lambda gamma}(sigma_o + eta_o)`
//! 3. `eta += sigma - theta`

use serde::{Deserialize, Serialize};

use crate::densela::{conjugate_gradient, sym_eigen, Cholesky, FnOperator};
use crate::error::{Error, Result};
use crate::symvec::{half_len, unvech, vech, HalfVec, IndexPartition, SymMatrix};
use crate::wishart_error::ErrorPrecision;

mod spectral;
use spectral::Spectral;

/// Relative residual for the inner conjugate-gradient solve.
pub const CG_TOL: f64 = 1e-8;
const CG_MAX_ITER: usize = 5000;
/// Absolute slack used when certifying `lambda_min >= delta`.
const FLOOR_SLACK: f64 = 5e-9;
const POLISH_STEPS: usize = 60;
/// Residual balancing: check every `ADAPT_EVERY` iterations up to
/// `ADAPT_UNTIL`, rescaling `gamma` by `ADAPT_FACTOR` when one residual
/// exceeds the other by `ADAPT_RATIO`.
const ADAPT_EVERY: usize = 10;
const ADAPT_UNTIL: usize = 200;
const ADAPT_RATIO: f64 = 10.0;
const ADAPT_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Currently the spectral solver.
    #[default]
    Auto,
    /// Cholesky of the explicit `L x L` system; fixed step.
    Dense,
    /// Matrix-free conjugate gradient.
    Cg,
    /// Exact solve in the eigenbasis of the plug-in precision.
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplcmConfig {
    pub lambda: f64,
    /// ADMM step; `None` picks `1 / (w_max * w_min)` from the plug-in
    /// precision's spectrum, which is 1 for the identity.
    pub gamma: Option<f64>,
    /// PD floor; `None` means `1e-4 * mean(diag S)`.
    pub delta: Option<f64>,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub solver: SolverKind,
    /// Rebalance `gamma` from the residuals during the first iterations.
    /// Only the spectral solver adapts; its solves are exact for any step.
    pub adaptive: bool,
}

impl Default for SplcmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            gamma: None,
            delta: None,
            eps_abs: 1e-6,
            eps_rel: 1e-5,
            max_iter: 1000,
            solver: SolverKind::Auto,
            adaptive: true,
        }
    }
}

impl SplcmConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("gamma must be > 0, got {g}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta must be > 0, got {d}"));
            }
        }
        if !(self.eps_abs >= 0.0 && self.eps_rel >= 0.0) {
            return bad("tolerances must be >= 0".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        Ok(())
    }

    /// The floor actually used for sample covariance `s`.
    pub fn resolved_delta(&self, s: &SymMatrix) -> f64 {
        self.delta.unwrap_or_else(|| default_delta(s))
    }
}

/// `1e-4 * mean(diag S)`, or `1e-12` when that is not positive.
pub fn default_delta(s: &SymMatrix) -> f64 {
    let p = s.dim().max(1);
    let mean = s.diag().iter().sum::<f64>() / p as f64;
    let d = 1e-4 * mean;
    if d > 0.0 && d.is_finite() {
        d
    } else {
        1e-12
    }
}

/// ADMM iterates; `eta` is the scaled dual `gamma * nu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub sigma: HalfVec,
    pub theta: HalfVec,
    pub eta: HalfVec,
}

#[derive(Clone, Debug)]
pub struct SplcmFit {
    pub sigma_hat: SymMatrix,
    pub lambda: f64,
    pub delta: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Off-diagonal support `(j, k)`, `j > k`, read from `theta`.
    pub active_set: Vec<(usize, usize)>,
    pub converged: bool,
    pub min_eigenvalue: f64,
    /// Factor applied to the off-diagonals to restore the PD floor, if any.
    pub shrink: Option<f64>,
    pub warnings: Vec<String>,
    pub state: AdmmState,
}

impl SplcmFit {
    pub fn support_size(&self) -> usize {
        self.active_set.len()
    }
}

/// `sign(a) max(|a| - t, 0)`.
#[inline]
pub fn soft(a: f64, t: f64) -> f64 {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        0.0
    }
}

/// Clamp eigenvalues below `delta` up to `delta`. Matrices already above the
/// floor are returned unchanged.
pub fn pd_project(a: &SymMatrix, delta: f64) -> Result<SymMatrix> {
    if Cholesky::factor_sym(&a.shifted(-delta)).is_ok() {
        return Ok(a.clone());
    }
    let eig = sym_eigen(a)?;
    Ok(eig.reconstruct_with(|l| l.max(delta)))
}

/// Algorithm step 2.
pub fn theta_update(state: &AdmmState, s_d: &[f64], lambda: f64, gamma: f64) -> HalfVec {
    let p = state.sigma.dim();
    let part = IndexPartition::new(p);
    let t = lambda * gamma;
    let mut th: Vec<f64> = state
        .sigma
        .as_slice()
        .iter()
        .zip(state.eta.as_slice())
        .map(|(s, e)| soft(s + e, t))
        .collect();
    for (&i, &d) in part.diag.iter().zip(s_d) {
        th[i] = d;
    }
    HalfVec::new(p, th).expect("same length")
}

/// Algorithm step 3.
pub fn eta_update(state: &AdmmState) -> HalfVec {
    let v = state
        .eta
        .as_slice()
        .iter()
        .zip(state.sigma.as_slice())
        .zip(state.theta.as_slice())
        .map(|((e, s), t)| e + (s - t))
        .collect();
    HalfVec::new(state.eta.dim(), v).expect("same length")
}

/// Per-entry or common thresholds for [`soft_threshold_estimate`].
#[derive(Clone, Debug)]
pub enum Thresholds {
    Scalar(f64),
    PerEntry(HalfVec),
}

/// Keep the diagonal, soft-threshold each off-diagonal entry. No PD projection.
pub fn soft_threshold_estimate(s: &SymMatrix, thresholds: &Thresholds) -> Result<SymMatrix> {
    let p = s.dim();
    if let Thresholds::PerEntry(t) = thresholds {
        if t.dim() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: t.dim() });
        }
    }
    let level = |j: usize, k: usize| match thresholds {
        Thresholds::Scalar(t) => *t,
        Thresholds::PerEntry(t) => t.get(j, k),
    };
    Ok(SymMatrix::from_fn(p, |j, k| if j == k { s.get(j, j) } else { soft(s.get(j, k), level(j, k)) }))
}

enum Inner {
    Dense(Cholesky),
    Cg,
    Spectral(Spectral),
}

/// Solver for step 1. The dense variant factors `(A + I/gamma)` once for a
/// fixed step; the spectral and CG variants accept any step.
pub struct SigmaSolver<'a> {
    ep: &'a ErrorPrecision,
    gamma: f64,
    delta: f64,
    a_s: Vec<f64>,
    inner: Inner,
}

impl<'a> SigmaSolver<'a> {
    pub fn new(ep: &'a ErrorPrecision, s: &HalfVec, gamma: f64, delta: f64, kind: SolverKind) -> Result<Self> {
        if s.dim() != ep.dim() {
            return Err(Error::DimensionMismatch { expected: ep.dim(), actual: s.dim() });
        }
        let inner = match kind {
            SolverKind::Dense => {
                let owned;
                let m = match ep.explicit_matrix() {
                    Some(m) => m,
                    None => {
                        owned = ep.to_explicit();
                        &owned
                    }
                };
                let ig = 1.0 / gamma;
                let ch = Cholesky::factor_with(m.nrows(), |i, j| if i == j { m[[i, j]] + ig } else { m[[i, j]] })
                    .map_err(|e| Error::SigmaUpdateFailure(e.to_string()))?;
                Inner::Dense(ch)
            }
            SolverKind::Cg => Inner::Cg,
            SolverKind::Auto | SolverKind::Spectral => Inner::Spectral(Spectral::new(ep.omega())?),
        };
        let mut a_s = vec![0.0; s.len()];
        ep.apply_into(s.as_slice(), &mut a_s);
        Ok(Self { ep, gamma, delta, a_s, inner })
    }

    /// The step the solver was built with.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Whether [`solve_with`](Self::solve_with) accepts steps other than [`gamma`](Self::gamma).
    pub fn adjustable(&self) -> bool {
        !matches!(self.inner, Inner::Dense(_))
    }

    /// Largest step the solver can handle.
    pub fn gamma_limit(&self) -> f64 {
        match &self.inner {
            Inner::Spectral(sp) => sp.gamma_max(),
            _ => f64::INFINITY,
        }
    }

    /// Unprojected `sigma-check`.
    pub fn solve(&self, theta: &HalfVec, eta: &HalfVec, warm: Option<&[f64]>) -> Result<Vec<f64>> {
        self.solve_with(theta, eta, self.gamma, warm)
    }

    /// Unprojected `sigma-check` at step `gamma`.
    pub fn solve_with(&self, theta: &HalfVec, eta: &HalfVec, gamma: f64, warm: Option<&[f64]>) -> Result<Vec<f64>> {
        if matches!(self.inner, Inner::Dense(_)) && gamma != self.gamma {
            return Err(Error::InvalidParameter(format!("dense solver was factored for gamma {}, got {gamma}", self.gamma)));
        }
        let ig = 1.0 / gamma;
        let rhs: Vec<f64> = self
            .a_s
            .iter()
            .zip(theta.as_slice().iter().zip(eta.as_slice()))
            .map(|(a, (t, e))| a + (t - e) * ig)
            .collect();
        match &self.inner {
            Inner::Dense(ch) => Ok(ch.solve(&rhs)),
            Inner::Spectral(sp) => sp.solve(&rhs, gamma),
            Inner::Cg => {
                let op = FnOperator {
                    dim: rhs.len(),
                    f: |x: &[f64], y: &mut [f64]| {
                        self.ep.apply_into(x, y);
                        for (yi, xi) in y.iter_mut().zip(x) {
                            *yi += ig * xi;
                        }
                    },
                };
                conjugate_gradient(&op, &rhs, warm, CG_TOL, CG_MAX_ITER)
                    .map(|s| s.x)
                    .map_err(|e| Error::SigmaUpdateFailure(e.to_string()))
            }
        }
    }

    /// Step 1: solve, then project onto `{ >= delta I }`.
    pub fn step(&self, state: &AdmmState, warm: Option<&[f64]>) -> Result<(HalfVec, Vec<f64>)> {
        self.step_with(state, self.gamma, warm)
    }

    pub fn step_with(&self, state: &AdmmState, gamma: f64, warm: Option<&[f64]>) -> Result<(HalfVec, Vec<f64>)> {
        let raw = self.solve_with(&state.theta, &state.eta, gamma, warm)?;
        let p = state.theta.dim();
        let m = unvech(&HalfVec::new(p, raw.clone())?);
        let proj = pd_project(&m, self.delta).map_err(|e| Error::SigmaUpdateFailure(e.to_string()))?;
        Ok((vech(&proj), raw))
    }
}

/// One step-1 update from scratch (factors the system each call).
pub fn sigma_update(state: &AdmmState, ep: &ErrorPrecision, s: &HalfVec, cfg: &SplcmConfig) -> Result<HalfVec> {
    cfg.validate()?;
    let delta = cfg.resolved_delta(&unvech(s));
    let solver = SigmaSolver::new(ep, s, resolve_gamma(cfg, ep)?, delta, cfg.solver)?;
    Ok(solver.step(state, None)?.0)
}

/// Largest-to-smallest magnitude ratio allowed when sizing the automatic step.
const AUTO_GAMMA_SPREAD: f64 = 1e-3;

/// `1 / (w_max * w_min)` over the eigenvalue magnitudes of the plug-in
/// precision, with `w_min` floored at `1e-3 w_max`. The normalized error
/// precision acts like `w_j w_k`, so this centers its spectrum around `1/gamma`.
pub fn auto_gamma(ep: &ErrorPrecision) -> Result<f64> {
    let omega = ep.omega();
    if omega.dim() == 0 {
        return Ok(1.0);
    }
    let eig = sym_eigen(omega)?;
    let wmax = eig.max().abs().max(eig.min().abs());
    if !(wmax > 0.0) {
        return Ok(1.0);
    }
    let wmin = eig.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min).max(AUTO_GAMMA_SPREAD * wmax);
    Ok(1.0 / (wmax * wmin))
}

fn resolve_gamma(cfg: &SplcmConfig, ep: &ErrorPrecision) -> Result<f64> {
    match cfg.gamma {
        Some(g) => Ok(g),
        None => auto_gamma(ep),
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A prepared problem: sample covariance, error precision, step size, floor.
pub struct Splcm<'a> {
    s: SymMatrix,
    s_vech: HalfVec,
    pin: Vec<f64>,
    delta: f64,
    cfg: SplcmConfig,
    solver: SigmaSolver<'a>,
    warnings: Vec<String>,
}

impl<'a> Splcm<'a> {
    pub fn new(s: &SymMatrix, ep: &'a ErrorPrecision, cfg: &SplcmConfig) -> Result<Self> {
        cfg.validate()?;
        if s.dim() != ep.dim() {
            return Err(Error::DimensionMismatch { expected: ep.dim(), actual: s.dim() });
        }
        let delta = cfg.resolved_delta(s);
        let mut warnings = Vec::new();
        let pin: Vec<f64> = s
            .diag()
            .into_iter()
            .enumerate()
            .map(|(j, d)| {
                if d < delta {
                    warnings.push(format!("variance {d} of coordinate {j} is below the PD floor {delta}; pinned to the floor"));
                    delta
                } else {
                    d
                }
            })
            .collect();
        let s_vech = vech(s);
        let mut gamma = resolve_gamma(cfg, ep)?;
        let mut solver = SigmaSolver::new(ep, &s_vech, gamma, delta, cfg.solver)?;
        if cfg.gamma.is_none() && gamma > solver.gamma_limit() {
            gamma = solver.gamma_limit();
            solver.gamma = gamma;
        }
        Ok(Self { s: s.clone(), s_vech, pin, delta, cfg: cfg.clone(), solver, warnings })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The ADMM step actually used.
    pub fn gamma(&self) -> f64 {
        self.solver.gamma()
    }

    /// Smallest lambda giving an empty off-diagonal support.
    pub fn lambda_max(&self) -> f64 {
        self.solver.ep.lambda_max(&self.s_vech).expect("dimension checked")
    }

    /// `sigma = theta = vech(P_delta(S))`, `eta = 0`.
    pub fn initial_state(&self) -> Result<AdmmState> {
        let start = vech(&pd_project(&self.s, self.delta)?);
        let p = self.s.dim();
        Ok(AdmmState { sigma: start.clone(), theta: start, eta: HalfVec::zeros(p) })
    }

    pub fn fit(&self, lambda: f64) -> Result<SplcmFit> {
        self.fit_from(lambda, self.initial_state()?)
    }

    /// Run ADMM at `lambda` starting from `state`, whose `eta` is scaled
    /// for the initial step [`gamma`](Self::gamma).
    pub fn fit_from(&self, lambda: f64, state: AdmmState) -> Result<SplcmFit> {
        self.run(lambda, state, self.solver.gamma())
    }

    /// Warm start from a previous fit of the same problem, keeping its step.
    pub fn refit(&self, lambda: f64, prev: &SplcmFit) -> Result<SplcmFit> {
        let gamma = if self.solver.adjustable() && prev.gamma <= self.solver.gamma_limit() {
            prev.gamma
        } else {
            self.solver.gamma()
        };
        let mut state = prev.state.clone();
        if gamma != prev.gamma {
            state.eta = state.eta.scaled(gamma / prev.gamma);
        }
        self.run(lambda, state, gamma)
    }

    fn run(&self, lambda: f64, mut state: AdmmState, mut gamma: f64) -> Result<SplcmFit> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        let cfg = &self.cfg;
        let adapt = cfg.adaptive && matches!(self.solver.inner, Inner::Spectral(_));
        let gamma_limit = self.solver.gamma_limit();
        let l = self.s_vech.len();
        let sqrt_l = (l as f64).sqrt();
        let mut warm: Option<Vec<f64>> = None;
        let (mut r_norm, mut d_norm) = (f64::INFINITY, f64::INFINITY);
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=cfg.max_iter {
            iterations = it;
            let (sigma, raw) = self.solver.step_with(&state, gamma, warm.as_deref())?;
            warm = Some(raw);
            state.sigma = sigma;
            let theta = theta_update(&state, &self.pin, lambda, gamma);
            let dtheta: Vec<f64> = theta.as_slice().iter().zip(state.theta.as_slice()).map(|(a, b)| a - b).collect();
            state.theta = theta;
            state.eta = eta_update(&state);
            let diff: Vec<f64> =
                state.sigma.as_slice().iter().zip(state.theta.as_slice()).map(|(a, b)| a - b).collect();
            r_norm = norm2(&diff);
            d_norm = norm2(&dtheta) / gamma;
            let eps = cfg.eps_abs * sqrt_l
                + cfg.eps_rel * norm2(state.sigma.as_slice()).max(norm2(state.theta.as_slice()));
            if r_norm <= eps && d_norm <= eps {
                converged = true;
                break;
            }
            if adapt && it % ADAPT_EVERY == 0 && it <= ADAPT_UNTIL {
                let next = if r_norm > ADAPT_RATIO * d_norm {
                    gamma / ADAPT_FACTOR
                } else if d_norm > ADAPT_RATIO * r_norm {
                    (gamma * ADAPT_FACTOR).min(gamma_limit)
                } else {
                    gamma
                };
                if next != gamma {
                    state.eta = state.eta.scaled(next / gamma);
                    gamma = next;
                }
            }
        }
        self.finish(lambda, state, gamma, iterations, r_norm, d_norm, converged)
    }

    fn finish(
        &self,
        lambda: f64,
        state: AdmmState,
        gamma: f64,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        converged: bool,
    ) -> Result<SplcmFit> {
        let p = self.s.dim();
        let theta = unvech(&state.theta);
        let (sigma_hat, shrink) = polish(&theta, self.delta)?;
        let min_eigenvalue = if p == 0 { f64::INFINITY } else { sym_eigen(&sigma_hat)?.min() };
        let mut active_set = Vec::new();
        for j in 0..p {
            for k in 0..j {
                if sigma_hat.get(j, k) != 0.0 {
                    active_set.push((j, k));
                }
            }
        }
        let mut warnings = self.warnings.clone();
        if !converged {
            warnings.push(format!("ADMM stopped at max_iter={} before converging", self.cfg.max_iter));
        }
        if let Some(t) = shrink {
            warnings.push(format!("off-diagonals scaled by {t:.6} to keep the PD floor"));
        }
        Ok(SplcmFit {
            sigma_hat,
            lambda,
            delta: self.delta,
            gamma,
            iterations,
            primal_residual,
            dual_residual,
            active_set,
            converged,
            min_eigenvalue,
            shrink,
            warnings,
            state,
        })
    }

    /// Fit a path of penalties, warm-starting from large to small.
    /// Results are returned in the order of `lambdas`.
    pub fn fit_path(&self, lambdas: &[f64]) -> Result<Vec<SplcmFit>> {
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
        let mut out: Vec<Option<SplcmFit>> = vec![None; lambdas.len()];
        let mut prev: Option<SplcmFit> = None;
        for i in order {
            let fit = match &prev {
                Some(f) => self.refit(lambdas[i], f)?,
                None => self.fit(lambdas[i])?,
            };
            out[i] = Some(fit.clone());
            prev = Some(fit);
        }
        Ok(out.into_iter().map(|f| f.expect("every index visited")).collect())
    }
}

/// If `theta` is below the floor, scale its off-diagonal part by the largest
/// `t` in `[0, 1]` that restores `lambda_min >= delta`. Diagonal and support
/// are unchanged.
fn polish(theta: &SymMatrix, delta: f64) -> Result<(SymMatrix, Option<f64>)> {
    let floor = delta - FLOOR_SLACK.min(0.5 * delta);
    let ok = |m: &SymMatrix| Cholesky::factor_sym(&m.shifted(-floor)).is_ok();
    if ok(theta) {
        return Ok((theta.clone(), None));
    }
    let p = theta.dim();
    let at = |t: f64| SymMatrix::from_fn(p, |j, k| if j == k { theta.get(j, j) } else { t * theta.get(j, k) });
    if !ok(&at(0.0)) {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: theta.diag().iter().cloned().fold(f64::INFINITY, f64::min) });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..POLISH_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((at(lo), Some(lo)))
}

/// Fit at `cfg.lambda`.
pub fn fit(s: &SymMatrix, ep: &ErrorPrecision, cfg: &SplcmConfig) -> Result<SplcmFit> {
    Splcm::new(s, ep, cfg)?.fit(cfg.lambda)
}

/// Fit every penalty in `lambdas` with warm starts.
pub fn fit_path(s: &SymMatrix, ep: &ErrorPrecision, cfg: &SplcmConfig, lambdas: &[f64]) -> Result<Vec<SplcmFit>> {
    Splcm::new(s, ep, cfg)?.fit_path(lambdas)
}

/// `(||sigma - theta||_inf, off-diagonal subgradient residual)` for a fit.
pub fn kkt_residual(fit: &SplcmFit, s: &SymMatrix, ep: &ErrorPrecision) -> Result<(f64, f64)> {
    let st = &fit.state;
    let primal = st.sigma.as_slice().iter().zip(st.theta.as_slice()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let sv = vech(s);
    let d: Vec<f64> = st.theta.as_slice().iter().zip(sv.as_slice()).map(|(t, s)| t - s).collect();
    let mut g = vec![0.0; d.len()];
    ep.apply_into(&d, &mut g);
    let part = IndexPartition::new(s.dim());
    let lam = fit.lambda;
    let sub = part.off.iter().fold(0.0_f64, |m, &i| {
        let t = st.theta.as_slice()[i];
        let r = if t != 0.0 { (g[i] + lam * t.signum()).abs() } else { (g[i].abs() - lam).max(0.0) };
        m.max(r)
    });
    Ok((primal, sub))
}

/// Log-spaced grid of `n` values from `hi` down to `hi * ratio`.
pub fn log_grid(hi: f64, ratio: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![hi],
        _ => (0..n).map(|i| hi * ratio.powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

#[doc(hidden)]
pub fn half_len_of(s: &SymMatrix) -> usize {
    half_len(s.dim())
}
