//! BIC selection of `(lambda, rho)`.

use serde::{Deserialize, Serialize};

use crate::clime::{clime_columns, clime_threshold, symmetrize_min};
use crate::densela::Cholesky;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::splcm::{log_grid, Splcm, SplcmConfig, SplcmFit};
use crate::symvec::SymMatrix;
use crate::wishart_error::{ErrorPrecision, PrecisionMode};

/// `n log det Sigma + n tr(S Sigma^-1) + log(n) * support`.
pub fn bic_score(s: &SymMatrix, fit: &SplcmFit, n: usize) -> Result<f64> {
    bic_value(s, &fit.sigma_hat, fit.active_set.len(), n)
}

/// BIC for an arbitrary PD estimate with `support` off-diagonal pairs.
pub fn bic_value(s: &SymMatrix, sigma_hat: &SymMatrix, support: usize, n: usize) -> Result<f64> {
    if s.dim() != sigma_hat.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), actual: sigma_hat.dim() });
    }
    let ch = Cholesky::factor_sym(sigma_hat)?;
    let inv = ch.inverse();
    let tr: f64 = s.as_array().iter().zip(inv.as_array().iter()).map(|(a, b)| a * b).sum();
    let nf = n as f64;
    Ok(nf * ch.log_det() + nf * tr + nf.ln() * support as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaGrid {
    /// Explicit values shared by every rho row.
    Fixed(Vec<f64>),
    /// `points` log-spaced values from each row's `lambda_max` down to `lambda_max * ratio`.
    Auto { points: usize, ratio: f64 },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { points: 20, ratio: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid {
    pub lambdas: LambdaGrid,
    pub rhos: Vec<f64>,
}

/// Multipliers of `sqrt(log p / n)` for the default rho grid.
pub const DEFAULT_RHO_FACTORS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

/// Default rho grid for dimension `p` and sample size `n`.
pub fn default_rhos(p: usize, n: usize) -> Vec<f64> {
    let scale = ((p.max(2) as f64).ln() / n.max(1) as f64).sqrt();
    DEFAULT_RHO_FACTORS.iter().map(|f| f * scale).collect()
}

impl TuneGrid {
    pub fn default_for(p: usize, n: usize) -> Self {
        Self { lambdas: LambdaGrid::default(), rhos: default_rhos(p, n) }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64], what: &str| {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                Err(Error::InvalidParameter(format!("{what} grid must be nonempty and strictly positive")))
            } else {
                Ok(())
            }
        };
        positive(&self.rhos, "rho")?;
        match &self.lambdas {
            LambdaGrid::Fixed(l) => positive(l, "lambda"),
            LambdaGrid::Auto { points, ratio } => {
                if *points == 0 || !(*ratio > 0.0 && *ratio <= 1.0) {
                    Err(Error::InvalidParameter("auto lambda grid needs points >= 1 and 0 < ratio <= 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Rho values in descending order.
    pub fn sorted_rhos(&self) -> Vec<f64> {
        let mut r = self.rhos.clone();
        r.sort_by(|a, b| b.total_cmp(a));
        r.dedup();
        r
    }

    /// Lambda values for one row, descending.
    pub fn row_lambdas(&self, lambda_max: f64) -> Vec<f64> {
        let mut l = match &self.lambdas {
            LambdaGrid::Fixed(l) => l.clone(),
            LambdaGrid::Auto { points, ratio } => log_grid(lambda_max, *ratio, *points),
        };
        l.sort_by(|a, b| b.total_cmp(a));
        l.dedup();
        l
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub splcm: SplcmConfig,
    /// Hard threshold for the CLIME estimate; `None` ties it to rho.
    pub tau: Option<f64>,
    pub precision_mode: PrecisionMode,
    pub execution: Execution,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            splcm: SplcmConfig::default(),
            tau: None,
            precision_mode: PrecisionMode::Auto,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneCell {
    pub lambda: f64,
    /// `None` for a fixed (oracle or identity) precision.
    pub rho: Option<f64>,
    /// `NaN` when the cell did not converge.
    pub bic: f64,
    pub support: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub best_lambda: f64,
    pub best_rho: Option<f64>,
    pub best_bic: f64,
    pub best_fit: SplcmFit,
    pub table: Vec<TuneCell>,
    /// Rows whose CLIME or ADMM setup failed, with the reason.
    pub failed_rows: Vec<(f64, String)>,
}

struct RowOutcome {
    cells: Vec<TuneCell>,
    best: Option<(TuneCell, SplcmFit)>,
}

/// `a` beats `b`: lower BIC, then larger lambda, then larger rho.
fn better(a: &TuneCell, b: &TuneCell) -> bool {
    if a.bic != b.bic {
        return a.bic < b.bic;
    }
    if a.lambda != b.lambda {
        return a.lambda > b.lambda;
    }
    a.rho.unwrap_or(0.0) > b.rho.unwrap_or(0.0)
}

fn run_row(
    s: &SymMatrix,
    n: usize,
    ep: &ErrorPrecision,
    rho: Option<f64>,
    grid: &TuneGrid,
    cfg: &SplcmConfig,
) -> Result<RowOutcome> {
    let solver = Splcm::new(s, ep, cfg)?;
    let lambdas = grid.row_lambdas(solver.lambda_max());
    let mut prev: Option<SplcmFit> = None;
    let mut cells = Vec::with_capacity(lambdas.len());
    let mut best: Option<(TuneCell, SplcmFit)> = None;
    for &lambda in &lambdas {
        let fit = match &prev {
            Some(f) => solver.refit(lambda, f)?,
            None => solver.fit(lambda)?,
        };
        let bic = if fit.converged { bic_score(s, &fit, n)? } else { f64::NAN };
        let cell = TuneCell { lambda, rho, bic, support: fit.active_set.len(), converged: fit.converged };
        if cell.converged && best.as_ref().is_none_or(|(b, _)| better(&cell, b)) {
            best = Some((cell.clone(), fit.clone()));
        }
        cells.push(cell);
        prev = Some(fit);
    }
    Ok(RowOutcome { cells, best })
}

fn combine(rows: Vec<(Option<f64>, Result<RowOutcome>)>) -> Result<TuneResult> {
    let mut table = Vec::new();
    let mut failed_rows = Vec::new();
    let mut best: Option<(TuneCell, SplcmFit)> = None;
    for (rho, row) in rows {
        match row {
            Ok(r) => {
                table.extend(r.cells);
                if let Some((c, f)) = r.best {
                    if best.as_ref().is_none_or(|(b, _)| better(&c, b)) {
                        best = Some((c, f));
                    }
                }
            }
            Err(e) => failed_rows.push((rho.unwrap_or(f64::NAN), e.to_string())),
        }
    }
    let (cell, fit) = best.ok_or(Error::AllCellsFailed)?;
    Ok(TuneResult { best_lambda: cell.lambda, best_rho: cell.rho, best_bic: cell.bic, best_fit: fit, table, failed_rows })
}

/// Plug-in precision for one rho: CLIME, min-magnitude symmetrization, threshold.
pub fn clime_precision(s: &SymMatrix, n: usize, rho: f64, tau: Option<f64>, mode: PrecisionMode) -> Result<ErrorPrecision> {
    // columns run sequentially here; rows are the parallel unit
    let cols = clime_columns(s, rho, Execution::Sequential)?;
    let omega = clime_threshold(&symmetrize_min(&cols.beta), tau.unwrap_or(rho));
    ErrorPrecision::new(omega, n, mode)
}

/// Joint search over `(lambda, rho)`; rho rows run in parallel, each sweeping
/// lambda downward with warm starts.
pub fn grid_search(s: &SymMatrix, n: usize, grid: &TuneGrid, cfg: &TuneConfig) -> Result<TuneResult> {
    grid.validate()?;
    cfg.splcm.validate()?;
    let rhos = grid.sorted_rhos();
    let rows = map_indexed(cfg.execution, rhos.len(), |i| {
        let rho = rhos[i];
        let row = clime_precision(s, n, rho, cfg.tau, cfg.precision_mode)
            .and_then(|ep| run_row(s, n, &ep, Some(rho), grid, &cfg.splcm));
        (Some(rho), row)
    });
    combine(rows)
}

/// The default grid for `s`, extended upward when CLIME is infeasible on all
/// of it: the largest rho is doubled (capped at 1, which is always feasible)
/// and appended until a feasible value is reached. Rank-deficient `S` needs this.
pub fn feasible_default_grid(s: &SymMatrix, n: usize) -> Result<TuneGrid> {
    let mut grid = TuneGrid::default_for(s.dim(), n);
    let mut rho = grid.rhos.iter().cloned().fold(0.0, f64::max);
    loop {
        match clime_columns(s, rho, Execution::Sequential) {
            Ok(_) => return Ok(grid),
            Err(Error::Infeasible) if rho < 1.0 => {
                rho = (2.0 * rho).min(1.0);
                grid.rhos.push(rho);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Lambda-only search with a fixed error precision (oracle or identity).
pub fn tune_lambda(s: &SymMatrix, n: usize, ep: &ErrorPrecision, lambdas: &LambdaGrid, cfg: &SplcmConfig) -> Result<TuneResult> {
    let grid = TuneGrid { lambdas: lambdas.clone(), rhos: vec![1.0] };
    grid.validate()?;
    cfg.validate()?;
    combine(vec![(None, run_row(s, n, ep, None, &grid, cfg))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splcm::fit;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_cov(p: usize, n: usize, seed: u64, scale: &[f64]) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = Array2::from_shape_fn((n, p), |(_, j)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale[j]
        });
        SymMatrix::from_average(y.t().dot(&y) / n as f64).unwrap()
    }

    #[test]
    fn bic_identity() {
        let p = 4;
        let f = fit(&SymMatrix::identity(p), &ErrorPrecision::identity(p, 10, PrecisionMode::Auto).unwrap(), &SplcmConfig::with_lambda(1.0))
            .unwrap();
        assert_eq!(f.sigma_hat, SymMatrix::identity(p));
        assert!((bic_score(&SymMatrix::identity(p), &f, 10).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn bic_diagonal_fit() {
        let s = gaussian_cov(5, 30, 2, &[1.0, 2.0, 0.5, 1.5, 1.0]);
        let n = 30;
        let d = SymMatrix::from_diag(&s.diag());
        let want: f64 = n as f64 * s.diag().iter().map(|v| v.ln()).sum::<f64>() + (n * 5) as f64;
        assert!((bic_value(&s, &d, 0, n).unwrap() - want).abs() < 1e-9 * want.abs());
        let extra = bic_value(&s, &d, 7, n).unwrap() - bic_value(&s, &d, 3, n).unwrap();
        assert!((extra - 4.0 * (n as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn bic_rejects_indefinite() {
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(bic_value(&SymMatrix::identity(2), &bad, 1, 10), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn singleton_grid_equals_direct_fit() {
        let p = 8;
        let n = 60;
        let s = gaussian_cov(p, n, 3, &[1.0; 8]);
        let rho = 0.2;
        let lam = 0.05;
        let grid = TuneGrid { lambdas: LambdaGrid::Fixed(vec![lam]), rhos: vec![rho] };
        let cfg = TuneConfig::default();
        let r = grid_search(&s, n, &grid, &cfg).unwrap();
        let ep = clime_precision(&s, n, rho, None, PrecisionMode::Auto).unwrap();
        let direct = fit(&s, &ep, &SplcmConfig::with_lambda(lam)).unwrap();
        assert_eq!(r.best_lambda, lam);
        assert_eq!(r.best_rho, Some(rho));
        assert_eq!(r.best_fit.sigma_hat, direct.sigma_hat);
        assert_eq!(r.best_bic, bic_score(&s, &direct, n).unwrap());
        assert_eq!(r.table.len(), 1);
    }

    #[test]
    fn diagonal_truth_selects_empty_support() {
        let p = 10;
        let n = 100;
        let mut hits = 0;
        for seed in 0..20 {
            let s = gaussian_cov(p, n, 1000 + seed, &[1.0; 10]);
            let grid = TuneGrid::default_for(p, n);
            let r = grid_search(&s, n, &grid, &TuneConfig::default()).unwrap();
            if r.best_fit.active_set.is_empty() {
                hits += 1;
            }
        }
        assert!(hits >= 18, "only {hits}/20 empty");
    }

    #[test]
    fn support_monotone_along_path() {
        let p = 10;
        let n = 50;
        let s = gaussian_cov(p, n, 77, &[1.0; 10]);
        let r = grid_search(&s, n, &TuneGrid::default_for(p, n), &TuneConfig::default()).unwrap();
        for rho in TuneGrid::default_for(p, n).sorted_rhos() {
            let mut row: Vec<&TuneCell> = r.table.iter().filter(|c| c.rho == Some(rho)).collect();
            row.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
            for w in row.windows(2) {
                assert!(w[1].support <= w[0].support, "support grew with lambda at rho {rho}");
            }
        }
    }

    #[test]
    fn grid_order_and_execution_do_not_matter() {
        let p = 8;
        let n = 40;
        let s = gaussian_cov(p, n, 5, &[1.0, 1.2, 0.8, 1.0, 1.1, 0.9, 1.0, 1.3]);
        let g1 = TuneGrid { lambdas: LambdaGrid::Fixed(vec![0.2, 0.05, 0.1, 0.01]), rhos: vec![0.1, 0.3, 0.2] };
        let g2 = TuneGrid { lambdas: LambdaGrid::Fixed(vec![0.01, 0.1, 0.2, 0.05]), rhos: vec![0.3, 0.2, 0.1] };
        let a = grid_search(&s, n, &g1, &TuneConfig::default()).unwrap();
        let seq = TuneConfig { execution: Execution::Sequential, ..TuneConfig::default() };
        let b = grid_search(&s, n, &g2, &seq).unwrap();
        assert_eq!((a.best_lambda, a.best_rho), (b.best_lambda, b.best_rho));
        assert_eq!(a.best_fit.sigma_hat, b.best_fit.sigma_hat);
        assert_eq!(a.table, b.table);
    }

    #[test]
    fn ties_prefer_sparser() {
        let base = TuneCell { lambda: 0.1, rho: Some(0.1), bic: 5.0, support: 0, converged: true };
        let big_lambda = TuneCell { lambda: 0.2, ..base.clone() };
        let big_rho = TuneCell { rho: Some(0.2), ..base.clone() };
        assert!(better(&big_lambda, &base));
        assert!(better(&big_rho, &base));
        assert!(!better(&base, &big_rho));
        let lower = TuneCell { bic: 4.0, lambda: 0.01, ..base.clone() };
        assert!(better(&lower, &big_lambda));
    }

    #[test]
    fn all_failed() {
        // singular S with a tiny rho: CLIME is infeasible in every row
        let s = SymMatrix::from_diag(&[1.0, 0.0, 1.0]);
        let grid = TuneGrid { lambdas: LambdaGrid::Fixed(vec![0.1]), rhos: vec![0.01, 0.02] };
        assert_eq!(grid_search(&s, 10, &grid, &TuneConfig::default()).unwrap_err(), Error::AllCellsFailed);
    }

    #[test]
    fn grid_validation() {
        assert!(TuneGrid { lambdas: LambdaGrid::Fixed(vec![]), rhos: vec![0.1] }.validate().is_err());
        assert!(TuneGrid { lambdas: LambdaGrid::Fixed(vec![0.1, -1.0]), rhos: vec![0.1] }.validate().is_err());
        assert!(TuneGrid { lambdas: LambdaGrid::default(), rhos: vec![] }.validate().is_err());
        assert!(TuneGrid::default_for(50, 100).validate().is_ok());
        let r = default_rhos(50, 100);
        assert!((r[3] - 0.4 * (50f64.ln() / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn oracle_lambda_tuning() {
        let p = 6;
        let n = 80;
        let s = gaussian_cov(p, n, 9, &[1.0; 6]);
        let ep = ErrorPrecision::identity(p, n, PrecisionMode::Auto).unwrap();
        let r = tune_lambda(&s, n, &ep, &LambdaGrid::default(), &SplcmConfig::default()).unwrap();
        assert_eq!(r.best_rho, None);
        assert_eq!(r.table.len(), 20);
        assert!(r.best_bic.is_finite());
    }

    #[test]
    fn default_grid_extends_to_feasible_rho() {
        // rank one: CLIME needs rho near 1
        let s = SymMatrix::from_fn(4, |_, _| 1.0);
        let grid = feasible_default_grid(&s, 50).unwrap();
        let top = grid.rhos.iter().cloned().fold(0.0, f64::max);
        assert!(grid.rhos.len() > DEFAULT_RHO_FACTORS.len());
        assert!(clime_columns(&s, top, Execution::Sequential).is_ok());
        let full = gaussian_cov(4, 200, 1, &[1.0; 4]);
        assert_eq!(feasible_default_grid(&full, 200).unwrap(), TuneGrid::default_for(4, 200));
    }
}
