//! Exact step-1 solve in the eigenbasis of the plug-in precision.
//!
//! With `X = unvech(x)` the system `(A + I/gamma) x = r` reads
//!
//! ```text
//! Omega X Omega + X/gamma + Diag(X)/gamma = R'
//! ```
//!
//! where `R'` is `unvech(r)` with its diagonal doubled. `T(X) = Omega X Omega + X/gamma`
//! is diagonal in the eigenbasis `Omega = Q W Q^T`; the remaining `Diag(X)/gamma`
//! term is a p-dimensional correction handled through
//! `K = [x_d -> diag T^-1(Diag(x_d))]`.

use std::sync::{Arc, Mutex};

use ndarray::Array2;

use crate::densela::{sym_eigen, Cholesky};
use crate::error::{Error, Result};
use crate::symvec::{vech_index, SymMatrix};

/// Per-`gamma` data: reciprocal denominators and the factored `I + K/gamma`.
struct System {
    gamma: f64,
    inv_den: Array2<f64>,
    m: Cholesky,
}

pub(crate) struct Spectral {
    p: usize,
    q: Array2<f64>,
    w: Vec<f64>,
    /// Largest admissible gamma (infinite unless `Omega` is indefinite).
    gamma_max: f64,
    cache: Mutex<Vec<Arc<System>>>,
}

impl Spectral {
    pub(crate) fn new(omega: &SymMatrix) -> Result<Self> {
        let eig = sym_eigen(omega)?;
        let w = eig.values;
        let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // most negative product w_a w_b; `T` needs 1/gamma above its magnitude
        let min_prod = (lo * hi).min(lo * lo).min(hi * hi);
        let gamma_max = if min_prod < 0.0 { 0.5 / -min_prod } else { f64::INFINITY };
        Ok(Self { p: omega.dim(), q: eig.vectors, w, gamma_max, cache: Mutex::new(Vec::new()) })
    }

    pub(crate) fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    fn system(&self, gamma: f64) -> Result<Arc<System>> {
        if let Some(s) = self.cache.lock().expect("cache lock").iter().find(|s| s.gamma == gamma) {
            return Ok(s.clone());
        }
        if !(gamma > 0.0 && gamma <= self.gamma_max) {
            return Err(Error::SigmaUpdateFailure(format!(
                "gamma {gamma} exceeds {} allowed by the indefinite plug-in precision",
                self.gamma_max
            )));
        }
        let p = self.p;
        let ig = 1.0 / gamma;
        let inv_den = Array2::from_shape_fn((p, p), |(a, b)| 1.0 / (self.w[a] * self.w[b] + ig));
        // K_jl = sum_ab Q_ja Q_jb Q_la Q_lb / den_ab
        let mut k = Array2::<f64>::zeros((p, p));
        let mut u = vec![0.0; p];
        for a in 0..p {
            for b in 0..=a {
                let c = if a == b { inv_den[[a, b]] } else { 2.0 * inv_den[[a, b]] };
                for j in 0..p {
                    u[j] = self.q[[j, a]] * self.q[[j, b]];
                }
                for j in 0..p {
                    let uj = c * u[j];
                    if uj == 0.0 {
                        continue;
                    }
                    let row = k.row_mut(j).into_slice().expect("contiguous");
                    for (kl, ul) in row[..=j].iter_mut().zip(&u[..=j]) {
                        *kl += uj * ul;
                    }
                }
            }
        }
        let m = Cholesky::factor_with(p, |i, j| if i == j { 1.0 + k[[i, i]] * ig } else { k[[i, j]] * ig })
            .map_err(|e| Error::SigmaUpdateFailure(format!("diagonal correction: {e}")))?;
        let sys = Arc::new(System { gamma, inv_den, m });
        self.cache.lock().expect("cache lock").push(sys.clone());
        Ok(sys)
    }

    /// Solve `(A + I/gamma) x = r` for `x` in vech order.
    pub(crate) fn solve(&self, r: &[f64], gamma: f64) -> Result<Vec<f64>> {
        let sys = self.system(gamma)?;
        let p = self.p;
        let q = &self.q;
        let mut rp = Array2::<f64>::zeros((p, p));
        for j in 0..p {
            for k in 0..j {
                let v = r[vech_index(j, k)];
                rp[[j, k]] = v;
                rp[[k, j]] = v;
            }
            rp[[j, j]] = 2.0 * r[vech_index(j, j)];
        }
        // tilde space: Q^T R' Q
        let rt = q.t().dot(&rp).dot(q);
        let z = &rt * &sys.inv_den;
        // y_d = diag(Q Z Q^T)
        let zq = z.dot(&q.t());
        let mut yd: Vec<f64> = (0..p).map(|j| (0..p).map(|a| q[[j, a]] * zq[[a, j]]).sum()).collect();
        sys.m.solve_in_place(&mut yd);
        let xd = yd;
        // X~ = (Q^T R' Q - Q^T Diag(x_d) Q / gamma) / den
        let mut qd = q.clone();
        for (j, mut row) in qd.rows_mut().into_iter().enumerate() {
            row *= xd[j] / gamma;
        }
        let corr = q.t().dot(&qd);
        let xt = (rt - corr) * &sys.inv_den;
        let x = q.dot(&xt).dot(&q.t());
        let mut out = vec![0.0; r.len()];
        for j in 0..p {
            for k in 0..=j {
                out[vech_index(j, k)] = if j == k { x[[j, j]] } else { 0.5 * (x[[j, k]] + x[[k, j]]) };
            }
        }
        Ok(out)
    }
}
