use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::simbench::sample_cov;
use crate::symvec::vech;
use crate::wishart_error::EXPLICIT_CAP;

/// Bootstrap estimate of `Cov{vech(S)}`.
///
/// Resample `b` draws `n` rows with replacement from ChaCha stream `b` of
/// `seed` and forms the uncentered `S_b`; the result is the sample covariance
/// of the `vech(S_b)` with `1/(N-1)`.
pub fn bootstrap_error_cov(y: &Array2<f64>, resamples: usize, seed: u64, exec: Execution) -> Result<Array2<f64>> {
    let (n, p) = y.dim();
    if p > EXPLICIT_CAP {
        return Err(Error::DimensionTooLarge { p, cap: EXPLICIT_CAP });
    }
    if resamples < 2 || n == 0 {
        return Err(Error::InvalidParameter("bootstrap needs N >= 2 resamples and n >= 1 rows".into()));
    }
    let draws = map_indexed(exec, resamples, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        vech(&sample_cov(&y.select(Axis(0), &idx))).into_vec()
    });
    let l = draws[0].len();
    let mut m = Array2::from_shape_vec((resamples, l), draws.into_iter().flatten().collect()).expect("shape");
    let mean = m.mean_axis(Axis(0)).expect("non-empty");
    m -= &mean;
    let mut v = m.t().dot(&m) / (resamples - 1) as f64;
    // exact symmetry
    for i in 0..l {
        for j in 0..i {
            let a = 0.5 * (v[[i, j]] + v[[j, i]]);
            v[[i, j]] = a;
            v[[j, i]] = a;
        }
    }
    Ok(v)
}
