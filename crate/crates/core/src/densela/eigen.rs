use ndarray::Array2;

use crate::error::{Error, Result};
use crate::symvec::SymMatrix;

/// Stop once the off-diagonal Frobenius norm falls below this fraction of `||A||_F`.
pub const JACOBI_OFF_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 30;

/// Symmetric eigendecomposition `A = Q diag(values) Q^T`, values descending.
#[derive(Clone, Debug)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Array2<f64>,
}

impl EigenDecomp {
    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// `sum_j f(values[j]) q_j q_j^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let p = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let w = f(v);
            scaled.column_mut(j).mapv_inplace(|x| x * w);
        }
        let full = scaled.dot(&self.vectors.t());
        // exact symmetry from the lower triangle
        SymMatrix::from_fn(p, |j, k| full[[j, k]])
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|v| v)
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomp> {
    let n = a.dim();
    let mut m: Vec<f64> = a.as_array().iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_OFF_TOL * total;

    let mut converged = false;
    for sweep in 0..=JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= target || off == 0.0 {
            converged = true;
            break;
        }
        if sweep == JACOBI_MAX_SWEEPS {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    m[r * n + p] = np;
                    m[p * n + r] = np;
                    m[r * n + q] = nq;
                    m[q * n + r] = nq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { method: "jacobi", iterations: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, col]] = v[r * n + i];
        }
    }
    Ok(EigenDecomp { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(p: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_fn(p, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn diagonal_input() {
        let e = sym_eigen(&SymMatrix::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors[[1, 0]].abs(), 1.0);
        assert_eq!(e.vectors[[0, 1]].abs(), 1.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = sym_eigen(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[[0, 0]].abs() - h).abs() < 1e-14);
        assert!((e.vectors[[0, 0]] - e.vectors[[1, 0]]).abs() < 1e-14);
        assert!((e.vectors[[0, 1]] + e.vectors[[1, 1]]).abs() < 1e-14);
    }

    #[test]
    fn identity_values() {
        let e = sym_eigen(&SymMatrix::identity(5)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let p = 2 + trial % 49;
            let a = random_sym(p, &mut rng);
            let e = sym_eigen(&a).unwrap();
            let qtq = e.vectors.t().dot(&e.vectors);
            for j in 0..p {
                for k in 0..p {
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((qtq[[j, k]] - want).abs() <= 1e-10);
                }
            }
            let r = e.reconstruct();
            let err = r.sub(&a).unwrap().max_abs();
            assert!(err <= 1e-8 * a.max_abs().max(1.0), "p={p} err={err}");
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn larger_matrix_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sym(200, &mut rng);
        let e = sym_eigen(&a).unwrap();
        let err = e.reconstruct().sub(&a).unwrap().max_abs();
        assert!(err < 1e-8);
    }
}
