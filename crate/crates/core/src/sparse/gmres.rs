//! Restarted GMRES with right preconditioning.

use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::math::{max_abs, norm2, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    /// Final ‖b − Ax‖∞.
    pub residual: f64,
}

/// Solves `A x = b` by GMRES(`restart`) with right preconditioner `precond`
/// (an approximation of `A⁻¹`), starting from `x`. Stops once
/// `‖b − Ax‖∞ ≤ tol(x)`, with the tolerance recomputed from the iterate at
/// every restart. Returns `None` after `max_iters` iterations.
pub fn gmres<P, T>(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    precond: P,
    tol: T,
    restart: usize,
    max_iters: usize,
) -> Option<(Vec<f64>, GmresStats)>
where
    P: Fn(&[f64]) -> Vec<f64>,
    T: Fn(&[f64]) -> f64,
{
    let n = b.len();
    let m = restart.max(1);
    let mut total = 0;
    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        let res = max_abs(&r);
        let target = tol(&x);
        if !res.is_finite() {
            return None;
        }
        if res <= target {
            return Some((x, GmresStats { iterations: total, residual: res }));
        }
        if total >= max_iters {
            return None;
        }
        let beta = norm2(&r);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < max_iters {
            let z = precond(&v[k]);
            let mut w = a.mul_vec(&z);
            let w_norm = norm2(&w);
            for (i, vi) in v.iter().enumerate() {
                let hik: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = sqrt(h[k][k] * h[k][k] + hn * hn);
            if d == 0.0 {
                return None;
            }
            cs[k] = h[k][k] / d;
            sn[k] = hn / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            // The Euclidean estimate bounds the max norm; the reduction by two
            // decades leaves room for the drift between estimate and truth.
            if crate::math::abs(g[k]) <= 1e-2 * target || hn <= 1e-14 * w_norm {
                break;
            }
            v.push(w.iter().map(|wj| wj / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            update.iter_mut().zip(vi).for_each(|(u, vj)| *u += yi * vj);
        }
        let dz = precond(&update);
        x.iter_mut().zip(dz).for_each(|(xi, d)| *xi += d);
    }
}
