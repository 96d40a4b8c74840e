//! Applications built on the estimator: QDA, correlation clustering and a
//! bootstrap estimate of the error covariance.

mod bootstrap;
mod cluster;
mod qda;

pub use bootstrap::bootstrap_error_cov;
pub use cluster::{corr_from_cov, hier_cluster, Dendrogram, Linkage, Merge};
pub use qda::{group_by_label, qda_classify, qda_fit, qda_splits, CovEstimator, QdaClass, QdaModel, SplitConfig, SplitReport};
