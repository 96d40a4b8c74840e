use ndarray::Array2;

use crate::error::{Error, Result};
use crate::symvec::SymMatrix;

/// Lower Cholesky factor `A = L L^T`, stored as packed rows of the lower triangle.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

#[inline]
fn row(i: usize) -> usize {
    i * (i + 1) / 2
}

impl Cholesky {
    /// Factor a square array; only the lower triangle is read.
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        let (n, c) = a.dim();
        if n != c {
            return Err(Error::DimensionMismatch { expected: n, actual: c });
        }
        Self::factor_with(n, |i, j| a[[i, j]])
    }

    pub fn factor_sym(a: &SymMatrix) -> Result<Self> {
        Self::factor(a.as_array())
    }

    /// Factor the matrix whose lower-triangle entries are given by `entry(i, j)`, `j <= i`.
    pub fn factor_with(n: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut l = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            let ri = row(i);
            for j in 0..=i {
                let rj = row(j);
                let dot: f64 = l[ri..ri + j].iter().zip(&l[rj..rj + j]).map(|(a, b)| a * b).sum();
                let sum = entry(i, j) - dot;
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: sum });
                    }
                    l[ri + i] = sum.sqrt();
                } else {
                    l[ri + j] = sum / l[rj + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // L y = b
        for i in 0..n {
            let ri = row(i);
            let dot: f64 = self.l[ri..ri + i].iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - dot) / self.l[ri + i];
        }
        // L^T x = y, consuming rows of L from the bottom
        for i in (0..n).rev() {
            let ri = row(i);
            b[i] /= self.l[ri + i];
            let xi = b[i];
            for (bj, lij) in b[..i].iter_mut().zip(&self.l[ri..ri + i]) {
                *bj -= lij * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `log det A = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| self.l[row(i) + i].ln()).sum::<f64>() * 2.0
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        let mut inv = Array2::zeros((n, n));
        let mut e = vec![0.0; n];
        for k in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[k] = 1.0;
            self.solve_in_place(&mut e);
            for j in 0..n {
                inv[[j, k]] = e[j];
            }
        }
        SymMatrix::from_average(inv).expect("square")
    }

    /// `y = L x`.
    pub fn lower_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let ri = row(i);
                self.l[ri..=ri + i].iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Solve `A x = b` for symmetric positive-definite `A`.
pub fn cholesky_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.len() });
    }
    Ok(Cholesky::factor_sym(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = [1.5, -2.0, 3.25];
        assert_eq!(cholesky_solve(&SymMatrix::identity(3), &b).unwrap(), b.to_vec());
    }

    #[test]
    fn diagonal_system() {
        let x = cholesky_solve(&SymMatrix::from_diag(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_hand_solve() {
        let a = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = cholesky_solve(&a, &[8.0, 7.0]).unwrap();
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(cholesky_solve(&a, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn log_det_and_inverse() {
        let a = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let c = Cholesky::factor_sym(&a).unwrap();
        assert!((c.log_det() - 8.0_f64.ln()).abs() < 1e-14);
        let inv = c.inverse();
        let prod = a.matmul(&inv);
        for j in 0..2 {
            for k in 0..2 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((prod[[j, k]] - want).abs() < 1e-14);
            }
        }
    }
}
