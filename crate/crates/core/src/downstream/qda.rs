use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densela::Cholesky;
use crate::error::{Error, Result};
use crate::par::{try_map_indexed, Execution};
use crate::simbench::{sample_cov, soft_cv, SoftCvConfig};
use crate::splcm::{default_delta, pd_project};
use crate::symvec::SymMatrix;
use crate::tuning::{feasible_default_grid, grid_search, TuneConfig, TuneGrid};

const PRIOR_TOL: f64 = 1e-12;

/// Covariance estimator used for each class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovEstimator {
    /// Sample covariance projected onto the default PD floor.
    Sample,
    /// Cross-validated soft thresholding.
    Soft { cv: SoftCvConfig },
    /// BIC-tuned SpLCM; `grid: None` uses the default grid for each class,
    /// extended to a feasible rho if needed.
    Splcm { grid: Option<TuneGrid>, tune: TuneConfig },
}

impl Default for CovEstimator {
    fn default() -> Self {
        CovEstimator::Splcm { grid: None, tune: TuneConfig::default() }
    }
}

impl CovEstimator {
    pub fn name(&self) -> &'static str {
        match self {
            CovEstimator::Sample => "sample",
            CovEstimator::Soft { .. } => "soft",
            CovEstimator::Splcm { .. } => "splcm",
        }
    }

    /// Estimate from mean-centered rows.
    pub fn estimate(&self, centered: &Array2<f64>, seed: u64) -> Result<SymMatrix> {
        let s = sample_cov(centered);
        match self {
            CovEstimator::Sample => pd_project(&s, default_delta(&s)),
            CovEstimator::Soft { cv } => Ok(soft_cv(centered, cv, seed)?.estimate),
            CovEstimator::Splcm { grid, tune } => {
                let n = centered.nrows();
                let grid = match grid {
                    Some(g) => g.clone(),
                    None => feasible_default_grid(&s, n)?,
                };
                Ok(grid_search(&s, n, &grid, tune)?.best_fit.sigma_hat)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct QdaClass {
    pub mean: Array1<f64>,
    pub sigma: SymMatrix,
    pub prior: f64,
    chol: Cholesky,
}

#[derive(Clone, Debug)]
pub struct QdaModel {
    classes: Vec<QdaClass>,
}

impl QdaModel {
    /// Assemble a model from `(mean, sigma, prior)` triples.
    pub fn new(parts: Vec<(Array1<f64>, SymMatrix, f64)>) -> Result<Self> {
        let Some(p) = parts.first().map(|c| c.0.len()) else {
            return Err(Error::InvalidParameter("QDA needs at least one class".into()));
        };
        let total: f64 = parts.iter().map(|c| c.2).sum();
        if parts.iter().any(|c| !(c.2 > 0.0)) || (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidParameter(format!("priors must be positive and sum to 1, got sum {total}")));
        }
        let classes = parts
            .into_iter()
            .map(|(mean, sigma, prior)| {
                if mean.len() != p || sigma.dim() != p {
                    return Err(Error::DimensionMismatch { expected: p, actual: mean.len().max(sigma.dim()) });
                }
                let chol = Cholesky::factor_sym(&sigma)?;
                Ok(QdaClass { mean, sigma, prior, chol })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { classes })
    }

    pub fn classes(&self) -> &[QdaClass] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.classes[0].mean.len()
    }

    /// `log|Sigma_g^-1| - (y - mu_g)^T Sigma_g^-1 (y - mu_g) + 2 log pi_g` per class.
    pub fn discriminants(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: y.len() });
        }
        Ok(self
            .classes
            .iter()
            .map(|c| {
                let d: Vec<f64> = y.iter().zip(c.mean.iter()).map(|(a, b)| a - b).collect();
                let x = c.chol.solve(&d);
                let quad: f64 = d.iter().zip(&x).map(|(a, b)| a * b).sum();
                -c.chol.log_det() - quad + 2.0 * c.prior.ln()
            })
            .collect())
    }
}

/// Fit one class per dataset; rows are observations.
pub fn qda_fit(classes: &[Array2<f64>], estimator: &CovEstimator, seed: u64) -> Result<QdaModel> {
    let total: usize = classes.iter().map(|c| c.nrows()).sum();
    let mut parts = Vec::with_capacity(classes.len());
    for (g, y) in classes.iter().enumerate() {
        if y.nrows() < 2 {
            return Err(Error::ClassTooSmall { class: g, size: y.nrows() });
        }
        let mean = y.mean_axis(Axis(0)).expect("non-empty");
        let centered = y - &mean;
        let sigma = estimator.estimate(&centered, seed.wrapping_add(g as u64))?;
        parts.push((mean, sigma, y.nrows() as f64 / total as f64));
    }
    // fractions of an integer total may miss 1 by an ulp or two
    let sum: f64 = parts.iter().map(|c| c.2).sum();
    for c in &mut parts {
        c.2 /= sum;
    }
    QdaModel::new(parts)
}

/// Index of the largest discriminant; ties go to the lowest index.
pub fn qda_classify(model: &QdaModel, y: &[f64]) -> Result<usize> {
    let d = model.discriminants(y)?;
    let mut best = 0;
    for (g, v) in d.iter().enumerate().skip(1) {
        if *v > d[best] {
            best = g;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub splits: usize,
    /// Per-class training fraction.
    pub train_frac: f64,
    pub seed: u64,
    pub estimator: CovEstimator,
    pub execution: Execution,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { splits: 100, train_frac: 0.5, seed: 1, estimator: CovEstimator::default(), execution: Execution::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// Distinct labels in ascending order; class `g` of each model is `labels[g]`.
    pub labels: Vec<i64>,
    pub rates: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Indices of each label, labels ascending.
pub fn group_by_label(labels: &[i64]) -> (Vec<i64>, Vec<Vec<usize>>) {
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut groups = vec![Vec::new(); distinct.len()];
    for (i, l) in labels.iter().enumerate() {
        groups[distinct.binary_search(l).expect("present")].push(i);
    }
    (distinct, groups)
}

/// Repeated stratified train/test partitions. Partition `k` shuffles each
/// class with ChaCha stream `k` of `seed`, trains on the first
/// `round(train_frac * n_g)` rows (at least 2, leaving at least 1) and
/// reports the test misclassification rate.
pub fn qda_splits(x: &Array2<f64>, labels: &[i64], cfg: &SplitConfig) -> Result<SplitReport> {
    if labels.len() != x.nrows() {
        return Err(Error::LengthMismatch { expected: x.nrows(), actual: labels.len() });
    }
    if cfg.splits == 0 || !(cfg.train_frac > 0.0 && cfg.train_frac < 1.0) {
        return Err(Error::InvalidParameter("need splits >= 1 and 0 < train_frac < 1".into()));
    }
    let (distinct, groups) = group_by_label(labels);
    for (g, idx) in groups.iter().enumerate() {
        if idx.len() < 3 {
            return Err(Error::ClassTooSmall { class: g, size: idx.len() });
        }
    }
    let rates = try_map_indexed(cfg.execution, cfg.splits, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let mut train = Vec::with_capacity(groups.len());
        let mut test = Vec::new();
        for (g, idx) in groups.iter().enumerate() {
            let mut idx = idx.clone();
            idx.shuffle(&mut rng);
            let m = ((cfg.train_frac * idx.len() as f64).round() as usize).clamp(2, idx.len() - 1);
            train.push(x.select(Axis(0), &idx[..m]));
            test.extend(idx[m..].iter().map(|&i| (i, g)));
        }
        let model = qda_fit(&train, &cfg.estimator, cfg.seed.wrapping_add(1000 * k as u64))?;
        let mut wrong = 0usize;
        for &(i, g) in &test {
            let row = x.row(i).to_vec();
            wrong += (qda_classify(&model, &row)? != g) as usize;
        }
        Ok(wrong as f64 / test.len() as f64)
    })?;
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let sd = if rates.len() > 1 { (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Ok(SplitReport { labels: distinct, rates, mean, sd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_identity(priors: (f64, f64)) -> QdaModel {
        QdaModel::new(vec![
            (array![0.0, 0.0], SymMatrix::identity(2), priors.0),
            (array![2.0, 0.0], SymMatrix::identity(2), priors.1),
        ])
        .unwrap()
    }

    #[test]
    fn nearer_mean_wins() {
        let m = two_identity((0.5, 0.5));
        assert_eq!(qda_classify(&m, &[0.9, 0.0]).unwrap(), 0);
        assert_eq!(qda_classify(&m, &[1.1, 0.0]).unwrap(), 1);
        let d = m.discriminants(&[0.9, 0.0]).unwrap();
        // identity covariances: negative squared distance plus a shared constant
        assert!((d[0] - d[1] - (1.1f64.powi(2) - 0.81)).abs() < 1e-12);
    }

    #[test]
    fn midpoint_ties_and_priors() {
        assert_eq!(qda_classify(&two_identity((0.5, 0.5)), &[1.0, 0.0]).unwrap(), 0);
        let m = two_identity((0.1, 0.9));
        let d = m.discriminants(&[1.0, 0.0]).unwrap();
        assert!((d[1] - d[0] - 2.0 * (0.9f64.ln() - 0.1f64.ln())).abs() < 1e-12);
        assert_eq!(qda_classify(&m, &[1.0, 0.0]).unwrap(), 1);
        assert_eq!(qda_classify(&two_identity((0.9, 0.1)), &[1.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn fit_priors_and_floor() {
        let a = array![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let b = array![[0.0, 1.0], [0.0, 3.0], [1.0, 2.0]];
        let m = qda_fit(&[a.clone(), b], &CovEstimator::Sample, 0).unwrap();
        assert_eq!(m.classes()[0].prior, 0.5);
        assert_eq!(m.classes()[0].mean.to_vec(), vec![2.0, 0.0]);
        // zero variance in the second coordinate of class 0
        let s = &m.classes()[0].sigma;
        let floor = 1e-4 * (2.0 / 3.0) / 2.0;
        assert!(crate::densela::sym_eigen(s).unwrap().min() >= floor - 1e-12);
        let one = qda_fit(&[a], &CovEstimator::Sample, 0).unwrap();
        assert_eq!(qda_classify(&one, &[100.0, -5.0]).unwrap(), 0);
    }

    #[test]
    fn errors() {
        let a = array![[1.0, 0.0]];
        assert!(matches!(qda_fit(&[a], &CovEstimator::Sample, 0), Err(Error::ClassTooSmall { class: 0, size: 1 })));
        let m = two_identity((0.5, 0.5));
        assert!(matches!(qda_classify(&m, &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(QdaModel::new(vec![(array![0.0], SymMatrix::identity(1), 0.7)]).is_err());
    }

    #[test]
    fn relabeling_permutes_decision() {
        let c0 = (array![0.0, 1.0], SymMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap(), 0.3);
        let c1 = (array![1.0, -1.0], SymMatrix::identity(2), 0.7);
        let m = QdaModel::new(vec![c0.clone(), c1.clone()]).unwrap();
        let r = QdaModel::new(vec![c1, c0]).unwrap();
        for y in [[0.0, 0.0], [3.0, 2.0], [-1.0, 0.5], [0.7, -0.2]] {
            assert_eq!(qda_classify(&m, &y).unwrap(), 1 - qda_classify(&r, &y).unwrap());
        }
    }

    #[test]
    fn separable_data_is_perfect() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.1;
            rows.extend([t, (t * 7.0).sin()]);
            labels.push(3);
            rows.extend([t + 50.0, (t * 5.0).cos()]);
            labels.push(-1);
        }
        let x = Array2::from_shape_vec((40, 2), rows).unwrap();
        let cfg = SplitConfig { splits: 5, estimator: CovEstimator::Sample, ..SplitConfig::default() };
        let r = qda_splits(&x, &labels, &cfg).unwrap();
        assert_eq!(r.labels, vec![-1, 3]);
        assert_eq!(r.mean, 0.0);
        let seq = qda_splits(&x, &labels, &SplitConfig { execution: Execution::Sequential, ..cfg }).unwrap();
        assert_eq!(r, seq);
    }
}
