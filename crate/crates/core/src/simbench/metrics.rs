use serde::{Deserialize, Serialize};

use crate::densela::sym_eigen;
use crate::error::{Error, Result};
use crate::splcm::SplcmFit;
use crate::symvec::SymMatrix;

const ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `||vech(hat - star)_o||_2`.
    pub offdiag_l2: f64,
    pub frobenius: f64,
    /// Largest absolute eigenvalue of `hat - star`.
    pub opnorm: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// Off-diagonal pairs `j > k` estimated nonzero.
    pub est_support: usize,
    /// Off-diagonal pairs `j > k` truly nonzero.
    pub true_support: usize,
}

/// Distances and support recovery of `sigma_hat` against the truth.
///
/// `support`, when given, lists the estimated nonzero pairs `(j, k)` with
/// `j > k`; otherwise entries with `|x| < 1e-12` count as zero. Rates over
/// ordered pairs equal rates over unordered pairs by symmetry. With no true
/// nonzeros TPR is 1; with no true zeros FPR is 0.
pub fn evaluate(sigma_hat: &SymMatrix, sigma_star: &SymMatrix, support: Option<&[(usize, usize)]>) -> Result<MetricReport> {
    let p = sigma_star.dim();
    if sigma_hat.dim() != p {
        return Err(Error::DimensionMismatch { expected: p, actual: sigma_hat.dim() });
    }
    let diff = sigma_hat.sub(sigma_star)?;
    let mut off_sq = 0.0;
    let mut diag_sq = 0.0;
    for j in 0..p {
        diag_sq += diff.get(j, j).powi(2);
        for k in 0..j {
            off_sq += diff.get(j, k).powi(2);
        }
    }
    let opnorm = if p == 0 {
        0.0
    } else {
        let e = sym_eigen(&diff)?;
        e.max().abs().max(e.min().abs())
    };

    let mut est = vec![false; p * p];
    match support {
        Some(s) => {
            for &(j, k) in s {
                if j >= p || k >= p || j == k {
                    return Err(Error::InvalidParameter(format!("support pair ({j},{k}) out of range")));
                }
                est[j * p + k] = true;
                est[k * p + j] = true;
            }
        }
        None => {
            for j in 0..p {
                for k in 0..j {
                    let nz = sigma_hat.get(j, k).abs() >= ZERO_TOL;
                    est[j * p + k] = nz;
                    est[k * p + j] = nz;
                }
            }
        }
    }
    let (mut tp, mut pos, mut fp, mut neg, mut est_support) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for j in 0..p {
        for k in 0..j {
            let e = est[j * p + k];
            est_support += e as usize;
            if sigma_star.get(j, k) != 0.0 {
                pos += 1;
                tp += e as usize;
            } else {
                neg += 1;
                fp += e as usize;
            }
        }
    }
    Ok(MetricReport {
        offdiag_l2: off_sq.sqrt(),
        frobenius: (2.0 * off_sq + diag_sq).sqrt(),
        opnorm,
        tpr: if pos == 0 { 1.0 } else { tp as f64 / pos as f64 },
        fpr: if neg == 0 { 0.0 } else { fp as f64 / neg as f64 },
        est_support,
        true_support: pos,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// One point per fit, in descending-lambda order.
pub fn roc_curve(path: &[SplcmFit], sigma_star: &SymMatrix) -> Result<Vec<RocPoint>> {
    let mut pts = path
        .iter()
        .map(|f| {
            let m = evaluate(&f.sigma_hat, sigma_star, Some(&f.active_set))?;
            Ok(RocPoint { lambda: f.lambda, fpr: m.fpr, tpr: m.tpr })
        })
        .collect::<Result<Vec<_>>>()?;
    pts.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    Ok(pts)
}

/// Sort by FPR and replace each TPR with the running maximum, so TPR is
/// non-decreasing in FPR. Starts at `(0, 0)`.
pub fn monotone_envelope(points: &[RocPoint]) -> Vec<RocPoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
    let mut out = Vec::with_capacity(pts.len() + 1);
    if pts.first().is_none_or(|p| p.fpr > 0.0 || p.tpr > 0.0) {
        out.push(RocPoint { lambda: f64::INFINITY, fpr: 0.0, tpr: 0.0 });
    }
    let mut best = 0.0_f64;
    for p in pts {
        best = best.max(p.tpr);
        out.push(RocPoint { tpr: best, ..p });
    }
    out
}
