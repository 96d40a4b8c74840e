use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symvec::SymMatrix;

const CORR_TOL: f64 = 1e-8;

/// `R_jk = sigma_jk / sqrt(sigma_jj sigma_kk)` with an exact unit diagonal.
pub fn corr_from_cov(sigma: &SymMatrix) -> Result<SymMatrix> {
    let d = sigma.diag();
    if let Some((index, &value)) = d.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositiveVariance { index, value });
    }
    let sd: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    Ok(SymMatrix::from_fn(sigma.dim(), |j, k| if j == k { 1.0 } else { sigma.get(j, k) / (sd[j] * sd[k]) }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            _ => Err(Error::InvalidParameter(format!("unknown linkage {s:?}"))),
        }
    }
}

/// One agglomeration. Leaves are `0..p`; the cluster formed at step `i`
/// gets id `p + i`, and `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub labels: Option<Vec<String>>,
    pub merges: Vec<Merge>,
}

struct Cluster {
    id: usize,
    min_leaf: usize,
    size: usize,
}

/// Agglomerative clustering on `d = 1 - r`.
///
/// Among pairs at the minimal distance the one whose smallest leaves
/// `(min, max)` are lexicographically smallest merges first.
pub fn hier_cluster(r: &SymMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let p = r.dim();
    for j in 0..p {
        if (r.get(j, j) - 1.0).abs() > CORR_TOL {
            return Err(Error::InvalidCorrelation(format!("diagonal entry {j} is {}", r.get(j, j))));
        }
        for k in 0..j {
            let v = r.get(j, k);
            if !(v.abs() <= 1.0 + CORR_TOL) {
                return Err(Error::InvalidCorrelation(format!("entry ({j},{k}) is {v}")));
            }
        }
    }
    let mut dist: Vec<Vec<f64>> = (0..p).map(|j| (0..p).map(|k| 1.0 - r.get(j, k)).collect()).collect();
    let mut active: Vec<Option<Cluster>> = (0..p).map(|j| Some(Cluster { id: j, min_leaf: j, size: 1 })).collect();
    let mut merges = Vec::with_capacity(p.saturating_sub(1));
    for step in 0..p.saturating_sub(1) {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..p {
            let Some(ci) = &active[i] else { continue };
            for j in (i + 1)..p {
                let Some(cj) = &active[j] else { continue };
                let d = dist[i][j];
                let key = (ci.min_leaf.min(cj.min_leaf), ci.min_leaf.max(cj.min_leaf));
                let take = match best {
                    None => true,
                    Some((bd, bk, _, _)) => d < bd || (d == bd && key < bk),
                };
                if take {
                    best = Some((d, key, i, j));
                }
            }
        }
        let (height, _, i, j) = best.expect("at least two active clusters");
        let ci = active[i].take().expect("active");
        let cj = active[j].take().expect("active");
        for k in 0..p {
            if k == i || active[k].is_none() {
                continue;
            }
            let v = match linkage {
                Linkage::Complete => dist[i][k].max(dist[j][k]),
                Linkage::Average => (ci.size as f64 * dist[i][k] + cj.size as f64 * dist[j][k]) / (ci.size + cj.size) as f64,
            };
            dist[i][k] = v;
            dist[k][i] = v;
        }
        let size = ci.size + cj.size;
        merges.push(Merge { a: ci.id.min(cj.id), b: ci.id.max(cj.id), height, size });
        active[i] = Some(Cluster { id: p + step, min_leaf: ci.min_leaf.min(cj.min_leaf), size });
    }
    Ok(Dendrogram { leaves: p, labels: None, merges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_examples() {
        let r = corr_from_cov(&SymMatrix::from_diag(&[4.0, 9.0, 0.5])).unwrap();
        assert_eq!(r, SymMatrix::identity(3));
        let r = corr_from_cov(&SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 1.0]]).unwrap()).unwrap();
        assert_eq!(r.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let bad = SymMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(corr_from_cov(&bad), Err(Error::NonPositiveVariance { index: 1, .. })));
    }

    #[test]
    fn two_leaves() {
        let r = SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let d = hier_cluster(&r, Linkage::Average).unwrap();
        assert_eq!(d.merges, vec![Merge { a: 0, b: 1, height: 0.7, size: 2 }]);
    }

    #[test]
    fn perfect_blocks() {
        // blocks {0, 2, 4} and {1, 3}
        let block = [0, 1, 0, 1, 0];
        let r = SymMatrix::from_fn(5, |j, k| if block[j] == block[k] { 1.0 } else { 0.0 });
        for linkage in [Linkage::Average, Linkage::Complete] {
            let d = hier_cluster(&r, linkage).unwrap();
            let h: Vec<f64> = d.merges.iter().map(|m| m.height).collect();
            assert_eq!(h, vec![0.0, 0.0, 0.0, 1.0]);
            assert_eq!((d.merges[0].a, d.merges[0].b), (0, 2));
            assert_eq!((d.merges[1].a, d.merges[1].b), (4, 5));
            assert_eq!((d.merges[2].a, d.merges[2].b), (1, 3));
            assert_eq!((d.merges[3].a, d.merges[3].b, d.merges[3].size), (6, 7, 5));
        }
    }

    #[test]
    fn identity_merges_at_one() {
        let d = hier_cluster(&SymMatrix::identity(4), Linkage::Average).unwrap();
        let pairs: Vec<(usize, usize)> = d.merges.iter().map(|m| (m.a, m.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 4), (3, 5)]);
        assert!(d.merges.iter().all(|m| m.height == 1.0));
    }

    #[test]
    fn heights_monotone_and_leaves_once() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let p = 12;
        let g = ndarray::Array2::from_shape_fn((p, 30), |_| rng.random_range(-1.0..1.0));
        let c = g.dot(&g.t());
        let r = corr_from_cov(&SymMatrix::from_fn(p, |j, k| c[[j, k]])).unwrap();
        for linkage in [Linkage::Average, Linkage::Complete] {
            let d = hier_cluster(&r, linkage).unwrap();
            assert_eq!(d.merges.len(), p - 1);
            assert!(d.merges.windows(2).all(|w| w[0].height <= w[1].height + 1e-12));
            let mut seen = vec![0; 2 * p - 1];
            for m in &d.merges {
                seen[m.a] += 1;
                seen[m.b] += 1;
            }
            assert!(seen[..2 * p - 2].iter().all(|&c| c == 1));
            assert_eq!(d.merges.last().unwrap().size, p);
        }
    }

    #[test]
    fn rejects_non_correlation() {
        let r = SymMatrix::from_rows(&[vec![1.0, 1.5], vec![1.5, 1.0]]).unwrap();
        assert!(matches!(hier_cluster(&r, Linkage::Average), Err(Error::InvalidCorrelation(_))));
        assert!(hier_cluster(&SymMatrix::from_diag(&[1.0, 2.0]), Linkage::Average).is_err());
    }
}
