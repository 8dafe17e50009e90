//! Left-looking sparse LU (Gilbert–Peierls) with threshold partial pivoting.

use alloc::vec;
use alloc::vec::Vec;

use super::ordering::{nested_dissection, Ordering};
use super::CsrMatrix;
use crate::math::{abs, max_abs};
use crate::{Error, Result};

/// A diagonal candidate is kept when it is at least this fraction of the
/// largest candidate in its column.
pub const DEFAULT_PIVOT_THRESHOLD: f64 = 0.1;
const REFINEMENT_STEPS: usize = 4;
const RESIDUAL_FACTOR: f64 = 1e-10;
const UNPIVOTED: usize = usize::MAX;

/// `P A Q = L U` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    /// Original row → pivot position.
    pinv: Vec<usize>,
    /// Pivot position → original column.
    q: Vec<usize>,
}

impl LuFactors {
    /// Factorizes `a` with the columns taken in the order of `ordering`.
    pub fn factorize(a: &CsrMatrix, ordering: &Ordering) -> Result<Self> {
        Self::factorize_with(a, ordering, DEFAULT_PIVOT_THRESHOLD)
    }

    /// As [`LuFactors::factorize`] with a given pivot threshold in `(0, 1]`;
    /// smaller values favour the diagonal, and thus the ordering, over
    /// stability.
    pub fn factorize_with(a: &CsrMatrix, ordering: &Ordering, threshold: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || ordering.len() != n {
            return Err(Error::DimensionMismatch {
                what: "lu operand",
                expected: n,
                found: a.ncols(),
            });
        }
        let at = a.transpose(); // row j of `at` is column j of `a`
        let q = ordering.perm().to_vec();
        let mut pinv = vec![UNPIVOTED; n];
        let mut lp = Vec::with_capacity(n + 1);
        let mut up = Vec::with_capacity(n + 1);
        let mut li = Vec::with_capacity(4 * a.nnz());
        let mut lx = Vec::with_capacity(4 * a.nnz());
        let mut ui = Vec::with_capacity(4 * a.nnz());
        let mut ux = Vec::with_capacity(4 * a.nnz());
        let mut x = vec![0.0; n];
        let mut mark = vec![UNPIVOTED; n];
        let mut post: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for (k, &col) in q.iter().enumerate() {
            lp.push(li.len());
            up.push(ui.len());
            let (rows, vals) = at.row(col);

            // Symbolic: nodes reachable from the pattern of A(:, col) through L.
            post.clear();
            for &start in rows {
                if mark[start] == k {
                    continue;
                }
                mark[start] = k;
                stack.push((start, 0));
                while let Some(top) = stack.last_mut() {
                    let (node, pos) = *top;
                    let j = pinv[node];
                    let child = if j == UNPIVOTED { None } else { li[lp[j]..lp[j + 1]].get(pos).copied() };
                    match child {
                        Some(child) => {
                            top.1 += 1;
                            if mark[child] != k {
                                mark[child] = k;
                                stack.push((child, 0));
                            }
                        }
                        None => {
                            post.push(node);
                            stack.pop();
                        }
                    }
                }
            }

            // Numeric: sparse triangular solve in topological order.
            for (&i, &v) in rows.iter().zip(vals) {
                x[i] = v;
            }
            for &node in post.iter().rev() {
                let j = pinv[node];
                if j == UNPIVOTED {
                    continue;
                }
                let xj = x[node];
                for p in lp[j]..lp[j + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            // Pivot choice among rows not yet pivoted.
            let mut best = UNPIVOTED;
            let mut best_abs = -1.0;
            for &node in post.iter().rev() {
                if pinv[node] == UNPIVOTED {
                    let v = abs(x[node]);
                    if !v.is_finite() {
                        return Err(Error::Singular { pivot: k });
                    }
                    if v > best_abs {
                        best_abs = v;
                        best = node;
                    }
                }
            }
            if best == UNPIVOTED || best_abs <= 0.0 {
                return Err(Error::Singular { pivot: k });
            }
            if pinv[col] == UNPIVOTED && mark[col] == k && abs(x[col]) >= threshold * best_abs {
                best = col;
            }
            let pivot = x[best];

            for &node in post.iter().rev() {
                let j = pinv[node];
                if j != UNPIVOTED {
                    ui.push(j);
                    ux.push(x[node]);
                } else if node != best {
                    li.push(node);
                    lx.push(x[node] / pivot);
                }
                x[node] = 0.0;
            }
            ui.push(k);
            ux.push(pivot);
            pinv[best] = k;
        }
        lp.push(li.len());
        up.push(ui.len());
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self { n, lp, li, lx, up, ui, ux, pinv, q })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U`.
    pub fn fill(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs length");
        let mut y = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..self.n).rev() {
            let end = self.up[j + 1] - 1; // diagonal stored last
            y[j] /= self.ux[end];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.up[j]..end {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.q.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }
}

/// Sparse direct solver that caches the fill-reducing ordering of the last
/// sparsity pattern it saw.
///
/// With reuse enabled, the factors of an earlier matrix with the same pattern
/// precondition GMRES on the new matrix; the matrix is refactorized only when
/// that fails to converge quickly.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    cached: Option<(Vec<usize>, Vec<usize>, Ordering)>,
    threshold: f64,
    reuse: bool,
    factors: Option<LuFactors>,
    /// Set when the last reused solve was slow enough that refactorizing is
    /// cheaper than iterating again.
    stale: bool,
    stats: SolverStats,
}

/// Work counters of a [`DirectSolver`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub factorizations: usize,
    pub solves: usize,
    /// Solves served by stale factors.
    pub reused: usize,
    /// Krylov iterations spent in those solves.
    pub krylov_iterations: usize,
}

impl Default for DirectSolver {
    fn default() -> Self {
        Self::with_pivot_threshold(DEFAULT_PIVOT_THRESHOLD)
    }
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_pivot_threshold(threshold: f64) -> Self {
        Self {
            cached: None,
            threshold,
            reuse: false,
            factors: None,
            stale: false,
            stats: SolverStats::default(),
        }
    }

    /// Keeps the last factors and tries them first on the next solve.
    pub fn reusing(mut self) -> Self {
        self.reuse = true;
        self
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    fn pattern_matches(&self, a: &CsrMatrix) -> bool {
        matches!(&self.cached, Some((p, i, _)) if p == a.indptr() && i == a.indices())
    }

    pub fn factorize(&mut self, a: &CsrMatrix) -> Result<LuFactors> {
        if !self.pattern_matches(a) {
            let ord = nested_dissection(a);
            self.cached = Some((a.indptr().to_vec(), a.indices().to_vec(), ord));
        }
        let ord = &self.cached.as_ref().unwrap().2;
        self.stats.factorizations += 1;
        LuFactors::factorize_with(a, ord, self.threshold)
    }

    /// Solves `A x = b` with iterative refinement until
    /// `‖Ax − b‖∞ ≤ 1e-10 (‖A‖∞ ‖x‖∞ + ‖b‖∞)`; reused factors must reach
    /// 1e-14 instead.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        self.stats.solves += 1;
        if self.reuse && !self.stale && self.pattern_matches(a) {
            if let Some(lu) = &self.factors {
                if let Some((x, iterations)) = refine_stale(a, lu, b) {
                    self.stats.reused += 1;
                    self.stats.krylov_iterations += iterations;
                    self.stale = iterations > STALE_REFRESH;
                    return Ok(x);
                }
            }
        }
        self.stale = false;
        let lu = self.factorize(a)?;
        let x = solve_refined(a, &lu, b);
        if self.reuse {
            self.factors = Some(lu);
        }
        x
    }
}

const STALE_RESTART: usize = 30;
const STALE_ITERS: usize = 60;
const STALE_FACTOR: f64 = 1e-14;
/// Iteration count of a reused solve above which the next solve refactorizes.
const STALE_REFRESH: usize = 20;

/// GMRES preconditioned with factors of a nearby matrix.
fn refine_stale(a: &CsrMatrix, lu: &LuFactors, b: &[f64]) -> Option<(Vec<f64>, usize)> {
    if b.len() != a.nrows() || lu.dim() != a.nrows() {
        return None;
    }
    let norm_a = a.norm_inf();
    let norm_b = max_abs(b);
    let tol = |x: &[f64]| STALE_FACTOR * (norm_a * max_abs(x) + norm_b);
    super::gmres::gmres(a, b, lu.solve(b), |v| lu.solve(v), tol, STALE_RESTART, STALE_ITERS).map(|(x, st)| (x, st.iterations))
}

/// Direct solve of a general square system.
pub fn solve_general(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new().solve(a, b)
}

pub(crate) fn solve_refined(a: &CsrMatrix, lu: &LuFactors, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "rhs",
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let mut x = lu.solve(b);
    let norm_a = a.norm_inf();
    let norm_b = max_abs(b);
    let mut res = f64::INFINITY;
    for _ in 0..=REFINEMENT_STEPS {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        res = max_abs(&r);
        if !res.is_finite() {
            break;
        }
        if res <= RESIDUAL_FACTOR * (norm_a * max_abs(&x) + norm_b) {
            return Ok(x);
        }
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Err(Error::NotConverged {
        iterations: REFINEMENT_STEPS,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_matrix() {
        let a = CsrMatrix::from_dense(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let x = solve_general(&a, &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_needs_pivoting() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(solve_general(&a, &[5.0, 7.0]).unwrap(), vec![7.0, 5.0]);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(solve_general(&a, &[1.0, 1.0]), Err(Error::Singular { pivot: 1 })));
        let z = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(solve_general(&z, &[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn ordering_cache_is_reused() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let mut s = DirectSolver::new();
        let x1 = s.solve(&a, &[1.0, 2.0]).unwrap();
        let x2 = s.solve(&a.clone().scaled(2.0), &[2.0, 4.0]).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    fn tridiagonal(n: usize, diag: f64, off: f64) -> CsrMatrix {
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match i.abs_diff(j) {
                        0 => diag + 0.01 * i as f64,
                        1 => off,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        CsrMatrix::from_dense(&dense)
    }

    #[test]
    fn reused_factors_solve_nearby_matrices_exactly() {
        let n = 40;
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut s = DirectSolver::with_pivot_threshold(1e-6).reusing();
        let a0 = tridiagonal(n, 4.0, -1.0);
        s.solve(&a0, &b).unwrap();
        let a1 = tridiagonal(n, 4.2, -1.1);
        let x = s.solve(&a1, &b).unwrap();
        let fresh = solve_general(&a1, &b).unwrap();
        for (a, b) in x.iter().zip(&fresh) {
            assert!((a - b).abs() < 1e-13);
        }
        let st = s.stats();
        assert_eq!((st.factorizations, st.solves, st.reused), (1, 2, 1));
        assert!(st.krylov_iterations > 0);
    }

    #[test]
    fn distant_matrix_is_refactorized() {
        let n = 40;
        let b = vec![1.0; n];
        let mut s = DirectSolver::new().reusing();
        s.solve(&tridiagonal(n, 4.0, -1.0), &b).unwrap();
        let far = tridiagonal(n, 0.5, 3.0);
        let x = s.solve(&far, &b).unwrap();
        let r = far.mul_vec(&x);
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn small_threshold_keeps_diagonal_pivots() {
        // The diagonal entry of column 0 is much smaller than the entry below it.
        let a = CsrMatrix::from_dense(&[vec![1e-3, 1.0], vec![1.0, 1.0]]);
        let ord = Ordering::natural(2);
        let tight = LuFactors::factorize_with(&a, &ord, 1e-6).unwrap();
        assert_eq!(tight.pinv, vec![0, 1]);
        let usual = LuFactors::factorize(&a, &ord).unwrap();
        assert_eq!(usual.pinv, vec![1, 0]);
        for lu in [tight, usual] {
            let x = lu.solve(&[1.0, 2.0]);
            assert!((1e-3 * x[0] + x[1] - 1.0).abs() < 1e-12 && (x[0] + x[1] - 2.0).abs() < 1e-12);
        }
    }
}
