use ndarray::Array2;
use proptest::prelude::*;
use splcm_core::densela::sym_eigen;
use splcm_core::downstream::{bootstrap_error_cov, corr_from_cov, hier_cluster, Linkage};
use splcm_core::simbench::{gen_cov, run_experiment, sample_gaussian, CovModelSpec, ExperimentConfig, Method, ModelKind};
use splcm_core::splcm::{fit, Splcm, SplcmConfig};
use splcm_core::symvec::{dup_apply, dup_pinv_apply, dup_transpose_apply, half_len, unvech, vech, HalfVec};
use splcm_core::tuning::{clime_precision, default_rhos, grid_search, TuneConfig, TuneGrid};
use splcm_core::wishart_error::{ErrorPrecision, PrecisionMode};
use splcm_core::{Error, Execution, SymMatrix};

fn ma1_sample(p: usize, n: usize, seed: u64) -> (Array2<f64>, SymMatrix) {
    let sigma = gen_cov(&CovModelSpec::new(ModelKind::Ma1, p, 1)).unwrap();
    sample_gaussian(&sigma, n, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_vectorization_round_trips(p in 1usize..9, seed in any::<u64>()) {
        let v: Vec<f64> = (0..half_len(p)).map(|i| ((seed.wrapping_mul(31).wrapping_add(i as u64 * 7919)) % 1000) as f64 / 100.0 - 5.0).collect();
        let x = HalfVec::new(p, v).unwrap();
        prop_assert_eq!(vech(&unvech(&x)), x.clone());
        let y = dup_apply(&x);
        prop_assert_eq!(dup_pinv_apply(&y, p).unwrap(), x.clone());
        let t = dup_transpose_apply(&y, p).unwrap();
        for j in 0..p {
            for k in 0..=j {
                let f = if j == k { 1.0 } else { 2.0 };
                prop_assert_eq!(t.get(j, k), f * x.get(j, k));
            }
        }
    }

    #[test]
    fn fits_pin_diagonal_and_respect_floor(seed in 0u64..1000, lam in 0.0f64..0.6) {
        let (p, n) = (8, 40);
        let (_, s) = ma1_sample(p, n, seed);
        let ep = clime_precision(&s, n, default_rhos(p, n)[3], None, PrecisionMode::Auto).unwrap();
        let f = fit(&s, &ep, &SplcmConfig::with_lambda(lam)).unwrap();
        for j in 0..p {
            prop_assert_eq!(f.sigma_hat.get(j, j), s.get(j, j));
        }
        prop_assert!(sym_eigen(&f.sigma_hat).unwrap().min() >= f.delta - 1e-8);
    }
}

#[test]
fn lambda_max_gives_a_diagonal_fit() {
    let (p, n) = (10, 60);
    let (_, s) = ma1_sample(p, n, 3);
    let ep = ErrorPrecision::identity(p, n, PrecisionMode::Auto).unwrap();
    let model = Splcm::new(&s, &ep, &SplcmConfig::default()).unwrap();
    let f = model.fit(model.lambda_max()).unwrap();
    assert_eq!(f.support_size(), 0);
    let below = model.fit(0.5 * model.lambda_max()).unwrap();
    assert!(below.support_size() > 0);
}

#[test]
fn grid_search_is_schedule_independent() {
    let (p, n) = (12, 80);
    let (_, s) = ma1_sample(p, n, 21);
    let grid = TuneGrid::default_for(p, n);
    let par = grid_search(&s, n, &grid, &TuneConfig { execution: Execution::Parallel, ..TuneConfig::default() }).unwrap();
    let seq = grid_search(&s, n, &grid, &TuneConfig { execution: Execution::Sequential, ..TuneConfig::default() }).unwrap();
    assert_eq!(par.best_lambda, seq.best_lambda);
    assert_eq!(par.best_rho, seq.best_rho);
    assert_eq!(par.best_fit.sigma_hat, seq.best_fit.sigma_hat);
    assert_eq!(par.table.len(), seq.table.len());
}

#[test]
fn experiments_are_reproducible_and_ordered() {
    let cfg = ExperimentConfig { p: 10, n: 80, replicates: 3, methods: vec![Method::Sample, Method::Splcm, Method::SplcmOracle], ..Default::default() };
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&ExperimentConfig { execution: Execution::Sequential, ..cfg.clone() }).unwrap();
    for (x, y) in a.replicates.iter().zip(&b.replicates) {
        for (m, n) in x.runs.iter().zip(&y.runs) {
            assert_eq!(m.metrics.frobenius, n.metrics.frobenius);
            assert_eq!(m.lambda, n.lambda);
        }
    }
    let mean = |m: Method| a.summary.iter().find(|s| s.method == m).unwrap().frobenius.mean;
    assert!(mean(Method::SplcmOracle) < mean(Method::Sample));
    assert!(mean(Method::Splcm) < mean(Method::Sample));
}

#[test]
fn invalid_models_are_rejected() {
    let hub = CovModelSpec::new(ModelKind::Hub, 7, 1);
    assert!(matches!(gen_cov(&hub), Err(Error::HubDivisibility(7))));
    let cfg = ExperimentConfig { model: ModelKind::Hub, p: 7, replicates: 1, ..Default::default() };
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn block_data_clusters_into_blocks() {
    let sigma = SymMatrix::from_fn(6, |j, k| if j == k { 1.0 } else if j / 3 == k / 3 { 0.8 } else { 0.0 });
    let (y, s) = sample_gaussian(&sigma, 400, 8).unwrap();
    let r = corr_from_cov(&s).unwrap();
    let d = hier_cluster(&r, Linkage::Average).unwrap();
    let last = d.merges.last().unwrap();
    assert!(last.height > 0.8);
    assert!(d.merges[..4].iter().all(|m| m.height < 0.4));
    let v = bootstrap_error_cov(&y, 40, 1, Execution::Parallel).unwrap();
    assert_eq!(v.dim(), (half_len(6), half_len(6)));
}
