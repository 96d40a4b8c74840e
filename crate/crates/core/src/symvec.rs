//! Symmetric matrices, half-vectorization and duplication-matrix actions.
//!
//! `vech` stacks the lower triangle row by row,
//! `(A11, A21, A22, A31, A32, A33, ..., Ap1, ..., App)`, so the diagonal
//! entry `A_kk` sits at 1-based position `k(k+1)/2`. Internally every position
//! is 0-based: entry `(j, k)` with `j >= k` lives at `j(j+1)/2 + k`.
//!
//! The duplication matrix `D_p` (with `D_p vech(A) = vec(A)`) and its
//! Moore-Penrose inverse are only ever applied as index maps; the explicit
//! matrix is available for small `p` to cross-check them.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of free entries of a symmetric `p x p` matrix.
#[inline]
pub fn half_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// 0-based vech position of entry `(j, k)`; the pair is reordered so `j >= k`.
#[inline]
pub fn vech_index(j: usize, k: usize) -> usize {
    let (r, c) = if j >= k { (j, k) } else { (k, j) };
    r * (r + 1) / 2 + c
}

/// Recover `p` from a half-vector length.
pub fn dim_from_half_len(len: usize) -> Result<usize> {
    // p = (sqrt(8L + 1) - 1) / 2, checked exactly in integers.
    let p = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if half_len(p) == len && p >= 1 {
        Ok(p)
    } else {
        Err(Error::NonTriangularLength(len))
    }
}

/// Dense symmetric `p x p` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Build from a square array, copying the lower triangle onto the upper one.
    pub fn from_lower(mut data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, actual: c });
        }
        if r == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be >= 1".into()));
        }
        for j in 0..r {
            for k in 0..j {
                data[[k, j]] = data[[j, k]];
            }
        }
        Ok(Self { data })
    }

    /// Build from a square array, averaging `(j,k)` and `(k,j)`.
    pub fn from_average(mut data: Array2<f64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, actual: c });
        }
        for j in 0..r {
            for k in 0..j {
                let m = 0.5 * (data[[j, k]] + data[[k, j]]);
                data[[j, k]] = m;
                data[[k, j]] = m;
            }
        }
        Self::from_lower(data)
    }

    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(p >= 1, "matrix dimension must be >= 1");
        let mut data = Array2::zeros((p, p));
        for j in 0..p {
            for k in 0..=j {
                let v = f(j, k);
                data[[j, k]] = v;
                data[[k, j]] = v;
            }
        }
        Self { data }
    }

    pub fn zeros(p: usize) -> Self {
        Self::from_fn(p, |_, _| 0.0)
    }

    pub fn identity(p: usize) -> Self {
        Self::from_fn(p, |j, k| if j == k { 1.0 } else { 0.0 })
    }

    pub fn from_diag(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |j, k| if j == k { d[j] } else { 0.0 })
    }

    /// Build from nested rows; only the lower triangle is read.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let mut data = Array2::zeros((p, p));
        for (j, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch { expected: p, actual: row.len() });
            }
            for (k, v) in row.iter().enumerate() {
                data[[j, k]] = *v;
            }
        }
        Self::from_lower(data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[[j, k]]
    }

    /// Set `(j,k)` and `(k,j)` together.
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.data[[j, k]] = v;
        self.data[[k, j]] = v;
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.data[[j, j]]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(SymMatrix { data: &self.data - &other.data })
    }

    pub fn scaled(&self, a: f64) -> SymMatrix {
        SymMatrix { data: &self.data * a }
    }

    /// Copy with the diagonal shifted by `a`.
    pub fn shifted(&self, a: f64) -> SymMatrix {
        let mut data = self.data.clone();
        for j in 0..self.dim() {
            data[[j, j]] += a;
        }
        SymMatrix { data }
    }

    pub fn matmul(&self, other: &SymMatrix) -> Array2<f64> {
        self.data.dot(&other.data)
    }

    /// Rows as nested vectors (row-major), for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

/// Half-vectorization of a symmetric `p x p` matrix, length `p(p+1)/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfVec {
    p: usize,
    v: Vec<f64>,
}

impl HalfVec {
    pub fn new(p: usize, v: Vec<f64>) -> Result<Self> {
        let expected = half_len(p);
        if v.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: v.len() });
        }
        Ok(Self { p, v })
    }

    /// Infer `p` from the length.
    pub fn from_vec(v: Vec<f64>) -> Result<Self> {
        let p = dim_from_half_len(v.len())?;
        Ok(Self { p, v })
    }

    pub fn zeros(p: usize) -> Self {
        Self { p, v: vec![0.0; half_len(p)] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.v.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v
    }

    pub fn scaled(&self, a: f64) -> HalfVec {
        HalfVec { p: self.p, v: self.v.iter().map(|x| a * x).collect() }
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.v
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.v
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.v[vech_index(j, k)]
    }
}

/// Diagonal (`[d]`) and off-diagonal (`[o]`) positions within a half-vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexPartition {
    pub p: usize,
    /// 0-based, ascending.
    pub diag: Vec<usize>,
    /// 0-based, ascending.
    pub off: Vec<usize>,
}

impl IndexPartition {
    pub fn new(p: usize) -> Self {
        let mut diag = Vec::with_capacity(p);
        let mut off = Vec::with_capacity(p * p.saturating_sub(1) / 2);
        for j in 0..p {
            for k in 0..=j {
                if j == k {
                    diag.push(vech_index(j, k));
                } else {
                    off.push(vech_index(j, k));
                }
            }
        }
        Self { p, diag, off }
    }

    /// Diagonal positions in the 1-based convention, `{k(k+1)/2 : k = 1..p}`.
    pub fn diag_one_based(&self) -> Vec<usize> {
        self.diag.iter().map(|i| i + 1).collect()
    }

    pub fn off_one_based(&self) -> Vec<usize> {
        self.off.iter().map(|i| i + 1).collect()
    }

    /// `true` at diagonal positions, `false` at off-diagonal ones.
    pub fn diag_mask(&self) -> Vec<bool> {
        let mut m = vec![false; half_len(self.p)];
        for &i in &self.diag {
            m[i] = true;
        }
        m
    }
}

pub fn vech(m: &SymMatrix) -> HalfVec {
    let p = m.dim();
    let mut v = Vec::with_capacity(half_len(p));
    for j in 0..p {
        for k in 0..=j {
            v.push(m.get(j, k));
        }
    }
    HalfVec { p, v }
}

pub fn unvech(x: &HalfVec) -> SymMatrix {
    let p = x.p;
    let mut data = Array2::zeros((p, p));
    let mut idx = 0;
    for j in 0..p {
        for k in 0..=j {
            data[[j, k]] = x.v[idx];
            data[[k, j]] = x.v[idx];
            idx += 1;
        }
    }
    SymMatrix { data }
}

/// `D_p x = vec(unvech(x))`, columns concatenated.
pub fn dup_apply(x: &HalfVec) -> Vec<f64> {
    let p = x.p;
    let mut out = vec![0.0; p * p];
    for col in 0..p {
        for row in 0..p {
            out[col * p + row] = x.v[vech_index(row, col)];
        }
    }
    out
}

/// `D_p^T y`: diagonal `(j,j)` picks `y[vec(j,j)]`, off-diagonal `(j,k)` sums
/// `y[vec(j,k)] + y[vec(k,j)]`.
pub fn dup_transpose_apply(y: &[f64], p: usize) -> Result<HalfVec> {
    if y.len() != p * p {
        return Err(Error::LengthMismatch { expected: p * p, actual: y.len() });
    }
    let mut v = vec![0.0; half_len(p)];
    for j in 0..p {
        for k in 0..=j {
            v[vech_index(j, k)] = if j == k {
                y[j * p + j]
            } else {
                // vec position of (row j, col k) is k*p + j
                y[k * p + j] + y[j * p + k]
            };
        }
    }
    Ok(HalfVec { p, v })
}

/// `D_p^+ y = (D^T D)^{-1} D^T y`: diagonals unchanged, off-diagonal pairs averaged.
pub fn dup_pinv_apply(y: &[f64], p: usize) -> Result<HalfVec> {
    let mut h = dup_transpose_apply(y, p)?;
    let part = IndexPartition::new(p);
    for &i in &part.off {
        h.v[i] *= 0.5;
    }
    Ok(h)
}

/// Largest `p` for which [`duplication_matrix`] will materialize `D_p`.
pub const EXPLICIT_DUP_CAP: usize = 8;

/// Explicit `p^2 x p(p+1)/2` duplication matrix, for cross-checking the index maps.
pub fn duplication_matrix(p: usize) -> Result<Array2<f64>> {
    if p > EXPLICIT_DUP_CAP {
        return Err(Error::DimensionTooLarge { p, cap: EXPLICIT_DUP_CAP });
    }
    let mut d = Array2::zeros((p * p, half_len(p)));
    for col in 0..p {
        for row in 0..p {
            d[[col * p + row, vech_index(row, col)]] = 1.0;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2() -> SymMatrix {
        SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap()
    }

    #[test]
    fn vech_examples() {
        assert_eq!(vech(&m2()).as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(vech(&SymMatrix::identity(3)).as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(IndexPartition::new(3).diag_one_based(), vec![1, 3, 6]);
    }

    #[test]
    fn unvech_examples() {
        assert_eq!(unvech(&HalfVec::from_vec(vec![1.0, 2.0, 3.0]).unwrap()), m2());
        let one = unvech(&HalfVec::from_vec(vec![5.0]).unwrap());
        assert_eq!(one.dim(), 1);
        assert_eq!(one.get(0, 0), 5.0);
        assert_eq!(HalfVec::from_vec(vec![0.0; 4]), Err(Error::NonTriangularLength(4)));
        assert!(HalfVec::from_vec(vec![]).is_err());
    }

    #[test]
    fn from_lower_symmetrizes() {
        let a = ndarray::array![[1.0, 9.0], [2.0, 3.0]];
        let s = SymMatrix::from_lower(a).unwrap();
        assert_eq!(s.get(0, 1), 2.0);
    }

    #[test]
    fn dup_apply_examples() {
        let x = HalfVec::from_vec(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(dup_apply(&x), vec![1.0, 2.0, 2.0, 3.0]);
        assert_eq!(dup_apply(&HalfVec::from_vec(vec![7.0]).unwrap()), vec![7.0]);
        let i3 = vech(&SymMatrix::identity(3));
        assert_eq!(dup_apply(&i3), vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn dup_transpose_examples() {
        assert_eq!(dup_transpose_apply(&[1.0, 2.0, 2.0, 3.0], 2).unwrap().as_slice(), &[1.0, 4.0, 3.0]);
        assert_eq!(dup_transpose_apply(&[1.0, 0.0, 0.0, 1.0], 2).unwrap().as_slice(), &[1.0, 0.0, 1.0]);
        assert!(matches!(dup_transpose_apply(&[1.0; 5], 2), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn dtd_is_weight_diagonal() {
        for p in 1..=6 {
            let l = half_len(p);
            let part = IndexPartition::new(p);
            let mask = part.diag_mask();
            for b in 0..l {
                let mut e = vec![0.0; l];
                e[b] = 1.0;
                let out = dup_transpose_apply(&dup_apply(&HalfVec::new(p, e).unwrap()), p).unwrap();
                for (i, v) in out.as_slice().iter().enumerate() {
                    let want = if i != b { 0.0 } else if mask[b] { 1.0 } else { 2.0 };
                    assert_eq!(*v, want);
                }
            }
        }
    }

    #[test]
    fn dup_pinv_examples() {
        assert_eq!(dup_pinv_apply(&[1.0, 2.0, 2.0, 3.0], 2).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        // vec([[0,4],[0,0]]) in column order is (0, 0, 4, 0)
        assert_eq!(dup_pinv_apply(&[0.0, 0.0, 4.0, 0.0], 2).unwrap().as_slice(), &[0.0, 2.0, 0.0]);
        let i3 = dup_apply(&vech(&SymMatrix::identity(3)));
        assert_eq!(dup_pinv_apply(&i3, 3).unwrap(), vech(&SymMatrix::identity(3)));
    }

    #[test]
    fn index_maps_match_explicit_matrix() {
        for p in 1..=EXPLICIT_DUP_CAP {
            let d = duplication_matrix(p).unwrap();
            let l = half_len(p);
            let x: Vec<f64> = (0..l).map(|i| (i as f64 * 0.37).sin()).collect();
            let hx = HalfVec::new(p, x.clone()).unwrap();
            let dx = d.dot(&ndarray::Array1::from(x));
            assert_eq!(dx.to_vec(), dup_apply(&hx));

            let y: Vec<f64> = (0..p * p).map(|i| (i as f64 * 1.3).cos()).collect();
            let dty = d.t().dot(&ndarray::Array1::from(y.clone()));
            let ours = dup_transpose_apply(&y, p).unwrap();
            for (a, b) in dty.iter().zip(ours.as_slice()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        assert!(duplication_matrix(EXPLICIT_DUP_CAP + 1).is_err());
    }

    #[test]
    fn partition_cardinalities() {
        for p in 1..=50 {
            let part = IndexPartition::new(p);
            assert_eq!(part.diag.len(), p);
            assert_eq!(part.off.len(), p * (p - 1) / 2);
            let mut all: Vec<usize> = part.diag.iter().chain(part.off.iter()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..half_len(p)).collect::<Vec<_>>());
            let d1 = part.diag_one_based();
            for (k, pos) in d1.iter().enumerate() {
                assert_eq!(*pos, (k + 1) * (k + 2) / 2);
            }
        }
    }

    proptest! {
        #[test]
        fn roundtrips_exact(p in 1usize..12, seed in any::<u64>()) {
            let mut s = seed;
            let a = SymMatrix::from_fn(p, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            });
            let x = vech(&a);
            prop_assert_eq!(&unvech(&x), &a);
            prop_assert_eq!(vech(&unvech(&x)), x.clone());
            prop_assert_eq!(dup_pinv_apply(&dup_apply(&x), p).unwrap(), x.clone());
        }

        #[test]
        fn dtd_doubles_off_diagonal(p in 1usize..=10, seed in any::<u64>()) {
            let mut s = seed;
            let v: Vec<f64> = (0..half_len(p)).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            }).collect();
            let x = HalfVec::new(p, v.clone()).unwrap();
            let out = dup_transpose_apply(&dup_apply(&x), p).unwrap();
            let mask = IndexPartition::new(p).diag_mask();
            for i in 0..v.len() {
                let want = if mask[i] { v[i] } else { 2.0 * v[i] };
                prop_assert_eq!(out.as_slice()[i], want);
            }
        }
    }
}
