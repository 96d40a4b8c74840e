//! CLIME inverse covariance: column-wise `min ||b||_1 s.t. ||S b - e_k||_inf <= rho`,
//! symmetrization, and hard thresholding.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::densela::simplex_lp;
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};
use crate::symvec::SymMatrix;

/// Slack allowed on the constraint after the LP solve.
pub const FEASIBILITY_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClimeConfig {
    pub rho: f64,
    /// Hard threshold; `None` means `tau = rho`.
    pub tau: Option<f64>,
    pub symmetrize: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl ClimeConfig {
    pub fn new(rho: f64) -> Self {
        Self { rho, tau: None, symmetrize: true, execution: Execution::default() }
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(self.rho)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be >= 0, got {}", self.rho)));
        }
        if !(self.tau() >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau())));
        }
        Ok(())
    }
}

/// Column solutions before symmetrization, with the achieved constraint level.
#[derive(Clone, Debug)]
pub struct ClimeColumns {
    /// Column `k` holds `b_k`.
    pub beta: Array2<f64>,
    /// `||S B - I||_max`.
    pub max_violation: f64,
}

/// One LP: variables `(b+, b-)`, rows `S(b+ - b-) <= rho + e_k` and `-S(b+ - b-) <= rho - e_k`.
fn solve_column(s: &SymMatrix, rho: f64, k: usize) -> Result<Vec<f64>> {
    let p = s.dim();
    let sa = s.as_array();
    let c = vec![1.0; 2 * p];
    let mut a = Vec::with_capacity(2 * p);
    let mut b = Vec::with_capacity(2 * p);
    for i in 0..p {
        let row: Vec<f64> = (0..p).map(|j| sa[[i, j]]).chain((0..p).map(|j| -sa[[i, j]])).collect();
        let e = if i == k { 1.0 } else { 0.0 };
        a.push(row.clone());
        b.push(rho + e);
        a.push(row.into_iter().map(|v| -v).collect());
        b.push(rho - e);
    }
    let sol = simplex_lp(&c, &a, &b)?;
    Ok((0..p).map(|j| sol.x[j] - sol.x[p + j]).collect())
}

/// Solve all `p` column LPs and check the constraint.
pub fn clime_columns(s: &SymMatrix, rho: f64, exec: Execution) -> Result<ClimeColumns> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
    }
    let p = s.dim();
    let cols = try_map_indexed(exec, p, |k| solve_column(s, rho, k))?;
    let beta = Array2::from_shape_fn((p, p), |(j, k)| cols[k][j]);
    let r = s.as_array().dot(&beta);
    let max_violation = r
        .indexed_iter()
        .fold(0.0_f64, |m, ((i, j), v)| m.max((v - if i == j { 1.0 } else { 0.0 }).abs()));
    if max_violation > rho + FEASIBILITY_SLACK {
        return Err(Error::Infeasible);
    }
    Ok(ClimeColumns { beta, max_violation })
}

/// Keep the smaller-magnitude entry of each `(j,k)`, `(k,j)` pair.
pub fn symmetrize_min(beta: &Array2<f64>) -> SymMatrix {
    SymMatrix::from_fn(beta.nrows(), |j, k| {
        let (a, b) = (beta[[j, k]], beta[[k, j]]);
        if a.abs() <= b.abs() {
            a
        } else {
            b
        }
    })
}

/// CLIME estimate `Omega~` (symmetrized, not thresholded).
pub fn clime_solve(s: &SymMatrix, rho: f64) -> Result<SymMatrix> {
    clime_solve_with(s, rho, Execution::default())
}

pub fn clime_solve_with(s: &SymMatrix, rho: f64, exec: Execution) -> Result<SymMatrix> {
    Ok(symmetrize_min(&clime_columns(s, rho, exec)?.beta))
}

/// Zero every entry with `|w| < tau`.
pub fn clime_threshold(omega: &SymMatrix, tau: f64) -> SymMatrix {
    let p = omega.dim();
    SymMatrix::from_fn(p, |j, k| {
        let v = omega.get(j, k);
        if v.abs() < tau {
            0.0
        } else {
            v
        }
    })
}

/// Full pipeline under a config: solve, optionally symmetrize, threshold.
pub fn clime(s: &SymMatrix, cfg: &ClimeConfig) -> Result<SymMatrix> {
    cfg.validate()?;
    let cols = clime_columns(s, cfg.rho, cfg.execution)?;
    let tilde = if cfg.symmetrize {
        symmetrize_min(&cols.beta)
    } else {
        SymMatrix::from_average(cols.beta)?
    };
    Ok(clime_threshold(&tilde, cfg.tau()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cov(p: usize, n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        SymMatrix::from_average(y.t().dot(&y) / n as f64).unwrap()
    }

    fn l1(m: &SymMatrix) -> f64 {
        m.as_array().iter().map(|v| v.abs()).sum()
    }

    #[test]
    fn identity_shrinks() {
        for p in [1, 2, 5] {
            let o = clime_solve(&SymMatrix::identity(p), 0.3).unwrap();
            for j in 0..p {
                for k in 0..p {
                    let want = if j == k { 0.7 } else { 0.0 };
                    assert!((o.get(j, k) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rho_zero_inverts() {
        let s = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let o = clime_solve(&s, 0.0).unwrap();
        let want = [[4.0 / 3.0, -2.0 / 3.0], [-2.0 / 3.0, 4.0 / 3.0]];
        for j in 0..2 {
            for k in 0..2 {
                assert!((o.get(j, k) - want[j][k]).abs() < 1e-10);
            }
        }
        let s = random_cov(6, 40, 4);
        let o = clime_solve(&s, 0.0).unwrap();
        let prod = s.matmul(&o);
        for j in 0..6 {
            for k in 0..6 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((prod[[j, k]] - want).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn large_rho_gives_zero() {
        let s = random_cov(5, 20, 1);
        for rho in [1.0, 1.5] {
            assert_eq!(clime_solve(&s, rho).unwrap(), SymMatrix::zeros(5));
        }
    }

    #[test]
    fn singular_s_infeasible() {
        let s = SymMatrix::zeros(3);
        assert_eq!(clime_solve(&s, 0.5).unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn feasible_and_monotone() {
        for seed in 0..4 {
            let s = random_cov(8, 30, seed);
            let mut prev = f64::INFINITY;
            for rho in [0.02, 0.05, 0.1, 0.2, 0.4, 0.8] {
                let cols = clime_columns(&s, rho, Execution::Sequential).unwrap();
                assert!(cols.max_violation <= rho + FEASIBILITY_SLACK);
                let norm: f64 = cols.beta.iter().map(|v| v.abs()).sum();
                assert!(norm <= prev + 1e-9, "l1 grew at rho={rho}");
                prev = norm;
                let o = symmetrize_min(&cols.beta);
                assert!(l1(&o) <= norm + 1e-12);
                assert_eq!(o.as_array(), &o.as_array().t());
            }
        }
    }

    #[test]
    fn threshold_rules() {
        let s = SymMatrix::from_rows(&[vec![1.0, 0.05, -0.3], vec![0.05, 1.0, 0.0], vec![-0.3, 0.0, 1.0]]).unwrap();
        assert_eq!(clime_threshold(&s, 0.0), s);
        let t = clime_threshold(&s, 0.1);
        assert_eq!(t.get(1, 0), 0.0);
        assert_eq!(t.get(2, 0), -0.3);
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(clime_threshold(&SymMatrix::identity(3).scaled(0.7), 0.8), SymMatrix::zeros(3));
    }

    #[test]
    fn parallel_matches_sequential() {
        let s = random_cov(10, 25, 9);
        let a = clime_columns(&s, 0.1, Execution::Parallel).unwrap();
        let b = clime_columns(&s, 0.1, Execution::Sequential).unwrap();
        assert_eq!(a.beta, b.beta);
    }

    #[test]
    fn config_pipeline() {
        let mut cfg = ClimeConfig::new(0.3);
        assert_eq!(cfg.tau(), 0.3);
        let o = clime(&SymMatrix::identity(3), &cfg).unwrap();
        assert_eq!(o, SymMatrix::identity(3).scaled(0.7));
        cfg.tau = Some(0.9);
        assert_eq!(clime(&SymMatrix::identity(3), &cfg).unwrap(), SymMatrix::zeros(3));
        cfg.rho = -1.0;
        assert!(clime(&SymMatrix::identity(3), &cfg).is_err());
    }
}
