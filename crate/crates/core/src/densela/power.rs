use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const MAX_ITER: usize = 200_000;

/// Spectral norm `sqrt(lambda_max(X^T X))` by power iteration on `X^T X`.
///
/// Iteration stops when either the eigen-residual or an extrapolated bound on
/// the remaining Rayleigh-quotient gap drops below `tol` relative.
pub fn operator_norm(x: &Array2<f64>, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = x.ncols();
    if n == 0 || x.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.7548776662).fract());
    v /= v.dot(&v).sqrt();
    let mut mu_prev = f64::NAN;
    let mut step_prev = f64::NAN;
    for _ in 0..MAX_ITER {
        let xv = x.dot(&v);
        let w = x.t().dot(&xv);
        let mu = xv.dot(&xv);
        if mu == 0.0 {
            // start vector in the null space; perturb deterministically
            v = Array1::from_shape_fn(n, |i| ((i * 7 + 3) % 11) as f64 + 1.0);
            v /= v.dot(&v).sqrt();
            continue;
        }
        let resid = (&w - &(&v * mu)).dot(&(&w - &(&v * mu))).sqrt();
        if resid <= tol * mu {
            return Ok(mu.sqrt());
        }
        let step = mu - mu_prev;
        if step.is_finite() && step_prev.is_finite() && step >= 0.0 && step_prev > 0.0 {
            let q = step / step_prev;
            if q < 1.0 && step * q / (1.0 - q) <= 0.5 * tol * mu {
                return Ok(mu.sqrt());
            }
        }
        step_prev = step;
        mu_prev = mu;
        let wn = w.dot(&w).sqrt();
        v = w / wn;
    }
    Err(Error::NoConvergence { method: "power iteration", iterations: MAX_ITER })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::sym_eigen;
    use crate::symvec::SymMatrix;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        assert!((operator_norm(&array![[3.0, 0.0], [0.0, -4.0]], 1e-10).unwrap() - 4.0).abs() < 1e-8);
        assert!((operator_norm(&Array2::eye(6), 1e-10).unwrap() - 1.0).abs() < 1e-12);
        assert!((operator_norm(&array![[0.0, 1.0], [0.0, 0.0]], 1e-10).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(operator_norm(&Array2::zeros((3, 3)), 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn bounds_random_probes_and_matches_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [3usize, 10, 25] {
            let a = SymMatrix::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
            let norm = operator_norm(a.as_array(), 1e-10).unwrap();
            let e = sym_eigen(&a).unwrap();
            let exact = e.max().abs().max(e.min().abs());
            assert!((norm - exact).abs() <= 1e-6 * exact, "p={p} {norm} vs {exact}");
            for _ in 0..20 {
                let v = Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0));
                let ratio = a.as_array().dot(&v).dot(&a.as_array().dot(&v)).sqrt() / v.dot(&v).sqrt();
                assert!(ratio <= norm * (1.0 + 1e-9));
            }
        }
    }
}
