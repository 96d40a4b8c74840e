use ndarray::Array2;

use crate::error::{Error, Result};

/// A linear map on `R^dim`, applied without materializing a matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y <- A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Explicit square matrix as an operator.
pub struct DenseOperator<'a>(pub &'a Array2<f64>);

impl LinearOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, r) in y.iter_mut().zip(self.0.rows()) {
            *yi = r.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Closure-backed operator.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unpreconditioned conjugate gradient for SPD `op`, stopping at
/// `||op(x) - b|| <= tol ||b||`.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("cg tolerance must be positive, got {tol}")));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return Err(Error::DimensionMismatch { expected: n, actual: x0.len() }),
        None => vec![0.0; n],
    };
    let mut ap = vec![0.0; n];
    op.apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut rr = dot(&r, &r);
    let target = tol * bnorm;
    if rr.sqrt() <= target {
        return Ok(CgSolution { x, iterations: 0, relative_residual: rr.sqrt() / bnorm });
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::InvalidParameter("operator is not positive definite".into()));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(CgSolution { x, iterations: it, relative_residual: rr_new.sqrt() / bnorm });
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::MaxIterations { iterations: max_iter, residual: rr.sqrt() / bnorm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::cholesky_solve;
    use crate::symvec::SymMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_in_one_iteration() {
        let op = FnOperator { dim: 4, f: |x: &[f64], y: &mut [f64]| y.copy_from_slice(x) };
        let b = [1.0, -2.0, 0.5, 3.0];
        let sol = conjugate_gradient(&op, &b, None, 1e-12, 10).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.x, b.to_vec());
    }

    #[test]
    fn implicit_diagonal() {
        let op = FnOperator {
            dim: 5,
            f: |x: &[f64], y: &mut [f64]| {
                for i in 0..5 {
                    y[i] = (i + 1) as f64 * x[i];
                }
            },
        };
        let sol = conjugate_gradient(&op, &[1.0; 5], None, 1e-12, 50).unwrap();
        for i in 0..5 {
            assert!((sol.x[i] - 1.0 / (i + 1) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn agrees_with_cholesky() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = Array2::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
        let a = SymMatrix::from_lower(g.t().dot(&g) + Array2::<f64>::eye(6) * 0.5).unwrap();
        let b: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let direct = cholesky_solve(&a, &b).unwrap();
        let sol = conjugate_gradient(&DenseOperator(a.as_array()), &b, None, 1e-12, 100).unwrap();
        let diff: f64 = direct.iter().zip(&sol.x).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = direct.iter().map(|u| u * u).sum::<f64>().sqrt();
        assert!(diff <= 1e-7 * norm);
    }

    #[test]
    fn iteration_cap_reported() {
        let op = FnOperator {
            dim: 50,
            f: |x: &[f64], y: &mut [f64]| {
                for i in 0..50 {
                    y[i] = (1.0 + i as f64 * i as f64) * x[i];
                }
            },
        };
        let r = conjugate_gradient(&op, &[1.0; 50], None, 1e-14, 3);
        assert!(matches!(r, Err(Error::MaxIterations { iterations: 3, .. })));
    }
}
