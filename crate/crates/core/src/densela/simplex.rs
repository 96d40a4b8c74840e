use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Dense simplex tableau. Row `m` is the objective (reduced costs); the last
/// column is the right-hand side.
struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let pv = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= pv;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[c];
            if f != 0.0 {
                for (o, p) in other.iter_mut().zip(prow.iter()) {
                    *o -= f * p;
                }
                other[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving column, ties in the ratio test
    /// broken by lowest basic index. Columns with `allowed[j] == false` never enter.
    fn optimize(&mut self, allowed: &[bool]) -> Result<()> {
        let m = self.rows;
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.at(m, j) < -COST_EPS);
            let Some(c) = entering else { return Ok(()) };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..m {
                let a = self.at(i, c);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => {
                            ratio < br - 1e-12 * br.abs().max(1.0)
                                || (ratio <= br + 1e-12 * br.abs().max(1.0) && self.basis[i] < bb)
                        }
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = best else { return Err(Error::Unbounded) };
            self.pivot(r, c);
        }
    }
}

/// Minimize `c^T x` subject to `A x <= b`, `x >= 0` by the two-phase simplex method.
///
/// `a` holds `m` rows of length `c.len()`.
pub fn simplex_lp(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: b.len() });
    }
    if let Some(r) = a.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: r.len() });
    }
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative.len();
    // columns: x (n) | slack (m) | artificial (n_art)
    let cols = n + m + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; (m + 1) * w];
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * w + j] = sign * a[i][j];
        }
        t[i * w + n + i] = sign;
        t[i * w + cols] = sign * b[i];
        if b[i] < 0.0 {
            t[i * w + n + m + art] = 1.0;
            basis[i] = n + m + art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut tab = Tableau { rows: m, cols, t, basis, pivots: 0 };

    if n_art > 0 {
        // phase I objective: sum of artificials, expressed in reduced form
        for &i in &negative {
            for j in 0..w {
                let v = tab.t[i * w + j];
                tab.t[m * w + j] -= v;
            }
        }
        for k in 0..n_art {
            tab.t[m * w + n + m + k] = 0.0;
        }
        let allowed = vec![true; cols];
        tab.optimize(&allowed)?;
        if -tab.rhs(m) > FEAS_EPS * (1.0 + b.iter().fold(0.0_f64, |s, v| s.max(v.abs()))) {
            return Err(Error::Infeasible);
        }
        // drive basic artificials out of the basis
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] >= n + m {
                let col = (0..n + m).find(|&j| tab.at(r, j).abs() > 1e-9);
                match col {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        // redundant row: remove it
                        let start = r * w;
                        tab.t.drain(start..start + w);
                        tab.basis.remove(r);
                        tab.rows -= 1;
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // phase II objective row
    let m2 = tab.rows;
    for j in 0..w {
        tab.t[m2 * w + j] = 0.0;
    }
    for j in 0..n {
        tab.t[m2 * w + j] = c[j];
    }
    for i in 0..m2 {
        let bj = tab.basis[i];
        let cb = if bj < n { c[bj] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                let v = tab.t[i * w + j];
                tab.t[m2 * w + j] -= cb * v;
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < n + m).collect();
    tab.optimize(&allowed)?;

    let mut x = vec![0.0; n];
    for i in 0..tab.rows {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, pivots: tab.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_via_negated_row() {
        // min x1 s.t. -x1 <= -2
        let s = simplex_lp(&[1.0], &[vec![-1.0]], &[-2.0]).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn covering_constraint() {
        let s = simplex_lp(&[1.0, 1.0], &[vec![-1.0, -1.0]], &[-1.0]).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let s = simplex_lp(
            &[-3.0, -5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.objective + 36.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x <= 1 and x >= 2
        assert_eq!(
            simplex_lp(&[1.0], &[vec![1.0], vec![-1.0]], &[1.0, -2.0]).unwrap_err(),
            Error::Infeasible
        );
        // min -x, x >= 1
        assert_eq!(simplex_lp(&[-1.0], &[vec![-1.0]], &[-1.0]).unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn equality_pair_is_handled() {
        // x + y = 1 written as two inequalities; min x + 2y
        let s = simplex_lp(&[1.0, 2.0], &[vec![1.0, 1.0], vec![-1.0, -1.0]], &[1.0, -1.0]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
    }

    #[test]
    fn row_permutation_invariance() {
        let a = vec![vec![1.0, 2.0, 1.0], vec![-1.0, -1.0, -3.0], vec![2.0, 0.5, 1.0], vec![-1.0, 0.0, 0.0]];
        let b = vec![10.0, -3.0, 8.0, -0.5];
        let c = vec![2.0, 1.0, 3.0];
        let base = simplex_lp(&c, &a, &b).unwrap().objective;
        let perms = [[3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]];
        for perm in perms {
            let ap: Vec<Vec<f64>> = perm.iter().map(|&i| a[i].clone()).collect();
            let bp: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
            let obj = simplex_lp(&c, &ap, &bp).unwrap().objective;
            assert!((obj - base).abs() < 1e-10);
        }
    }
}
