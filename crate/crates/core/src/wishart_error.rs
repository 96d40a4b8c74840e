//! Gaussian error model for the half-vectorized sample covariance.
//!
//! For `n` Gaussian samples, `Cov(vech S) = (2/n) D+ (Sigma (x) Sigma) D+^T`,
//! whose entry for pairs `(j,k)`, `(l,m)` is `(s_jl s_km + s_jm s_kl) / n`.
//! Its inverse with a plug-in precision `Omega` is
//! `V^-1 = (n/2) D^T (Omega (x) Omega) D`. The estimator only ever uses the
//! normalized operator `(1/n) V^-1`, which acts on `x = vech(X)` as
//!
//! ```text
//! B = Omega X Omega,   result_jj = B_jj / 2,   result_jk = B_jk  (j > k)
//! ```
//!
//! No Kronecker product is ever formed.

use ndarray::Array2;

use crate::densela::LinearOperator;
use crate::error::{Error, Result};
use crate::symvec::{half_len, unvech, vech_index, HalfVec, IndexPartition, SymMatrix};

/// Largest `p` for which L x L matrices are materialized by default.
pub const EXPLICIT_CAP: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    /// Explicit when `p <= EXPLICIT_CAP`, implicit otherwise.
    #[default]
    Auto,
    Explicit,
    Implicit,
}

/// Pairs `(j,k)`, `j >= k`, in vech order.
fn vech_pairs(p: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(half_len(p));
    for j in 0..p {
        for k in 0..=j {
            out.push((j, k));
        }
    }
    out
}

/// Explicit `Cov(vech S)` for Gaussian data with covariance `sigma`.
pub fn build_error_cov(sigma: &SymMatrix, n: usize) -> Result<Array2<f64>> {
    build_error_cov_capped(sigma, n, EXPLICIT_CAP)
}

pub fn build_error_cov_capped(sigma: &SymMatrix, n: usize, cap: usize) -> Result<Array2<f64>> {
    let p = sigma.dim();
    if p > cap {
        return Err(Error::DimensionTooLarge { p, cap });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let pairs = vech_pairs(p);
    let l = pairs.len();
    let s = sigma.as_array();
    let inv_n = 1.0 / n as f64;
    let mut v = Array2::zeros((l, l));
    for (a, &(j, k)) in pairs.iter().enumerate() {
        for (b, &(lq, m)) in pairs.iter().enumerate().take(a + 1) {
            let e = (s[[j, lq]] * s[[k, m]] + s[[j, m]] * s[[k, lq]]) * inv_n;
            v[[a, b]] = e;
            v[[b, a]] = e;
        }
    }
    Ok(v)
}

/// Explicit `(1/n) V^-1 = (1/2) D^T (Omega (x) Omega) D`.
pub fn normalized_precision_matrix(omega: &SymMatrix) -> Array2<f64> {
    let p = omega.dim();
    let pairs = vech_pairs(p);
    let l = pairs.len();
    let w = omega.as_array();
    let mut out = Array2::zeros((l, l));
    for (a, &(j, k)) in pairs.iter().enumerate() {
        let wa = if j == k { 1.0 } else { 2.0 };
        for (b, &(lq, m)) in pairs.iter().enumerate().take(a + 1) {
            let wb = if lq == m { 1.0 } else { 2.0 };
            let e = 0.25 * wa * wb * (w[[j, lq]] * w[[k, m]] + w[[j, m]] * w[[k, lq]]);
            out[[a, b]] = e;
            out[[b, a]] = e;
        }
    }
    out
}

/// The normalized error precision `(1/n) V^-1` built from a plug-in `Omega`.
#[derive(Clone, Debug)]
pub struct ErrorPrecision {
    p: usize,
    n: usize,
    omega: SymMatrix,
    explicit: Option<Array2<f64>>,
}

/// Build the operator `(1/n) V^-1` for plug-in precision `omega`.
pub fn build_error_precision(omega: &SymMatrix, n: usize, mode: PrecisionMode) -> Result<ErrorPrecision> {
    ErrorPrecision::new(omega.clone(), n, mode)
}

impl ErrorPrecision {
    pub fn new(omega: SymMatrix, n: usize, mode: PrecisionMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be >= 1".into()));
        }
        let p = omega.dim();
        let explicit = match mode {
            PrecisionMode::Implicit => false,
            PrecisionMode::Explicit => true,
            PrecisionMode::Auto => p <= EXPLICIT_CAP,
        };
        let explicit = explicit.then(|| normalized_precision_matrix(&omega));
        Ok(Self { p, n, omega, explicit })
    }

    /// Identity plug-in; the operator becomes `diag(1/2 on [d], 1 on [o])`,
    /// i.e. plain soft thresholding of the off-diagonal entries.
    pub fn identity(p: usize, n: usize, mode: PrecisionMode) -> Result<Self> {
        Self::new(SymMatrix::identity(p), n, mode)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn half_len(&self) -> usize {
        half_len(self.p)
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> &SymMatrix {
        &self.omega
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit.is_some()
    }

    pub fn explicit_matrix(&self) -> Option<&Array2<f64>> {
        self.explicit.as_ref()
    }

    /// The L x L matrix, cached or freshly built.
    pub fn to_explicit(&self) -> Array2<f64> {
        match &self.explicit {
            Some(m) => m.clone(),
            None => normalized_precision_matrix(&self.omega),
        }
    }

    /// Matrix-free action: two p x p products.
    pub fn implicit_apply(&self, x: &[f64], out: &mut [f64]) {
        let p = self.p;
        let xm = unvech(&HalfVec::new(p, x.to_vec()).expect("length checked by caller"));
        let w = self.omega.as_array();
        let b = w.dot(&xm.as_array().dot(w));
        for j in 0..p {
            for k in 0..=j {
                let v = if j == k { 0.5 * b[[j, j]] } else { 0.5 * (b[[j, k]] + b[[k, j]]) };
                out[vech_index(j, k)] = v;
            }
        }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.explicit {
            Some(m) => {
                for (o, r) in out.iter_mut().zip(m.rows()) {
                    *o = r.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            None => self.implicit_apply(x, out),
        }
    }

    pub fn apply_precision(&self, x: &HalfVec) -> Result<HalfVec> {
        if x.dim() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, actual: x.dim() });
        }
        let mut out = vec![0.0; x.len()];
        self.apply_into(x.as_slice(), &mut out);
        HalfVec::new(self.p, out)
    }

    /// Smallest penalty at which the pinned-diagonal fit has empty off-diagonal
    /// support: `|| [A (0, s_o)]_o ||_inf`.
    pub fn lambda_max(&self, s: &HalfVec) -> Result<f64> {
        if s.dim() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, actual: s.dim() });
        }
        let part = IndexPartition::new(self.p);
        let mut x = s.as_slice().to_vec();
        for &i in &part.diag {
            x[i] = 0.0;
        }
        let mut out = vec![0.0; x.len()];
        self.apply_into(&x, &mut out);
        Ok(part.off.iter().fold(0.0_f64, |m, &i| m.max(out[i].abs())))
    }
}

impl LinearOperator for ErrorPrecision {
    fn dim(&self) -> usize {
        self.half_len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y)
    }
}
