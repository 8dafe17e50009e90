use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::math::{dot, norm2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients with `‖Ax − b‖ ≤ tol ‖b‖`.
///
/// Also accepts singular semidefinite operators as long as `b` lies in the
/// range (Neumann problems); the kernel component of the result is then
/// arbitrary.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let cap = 10 * a.nrows() + 100;
    solve_spd_with(a, b, None, tol, cap).map(|(x, _)| x)
}

pub fn solve_spd_with(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgStats)> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "spd system",
            expected: n,
            found: b.len(),
        });
    }
    let bnorm = norm2(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], CgStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm2(&r);
    for it in 0..max_iter {
        if res <= tol * bnorm {
            return Ok((x, CgStats { iterations: it, relative_residual: res / bnorm }));
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // Recompute the true residual now and then to stop drift.
        if it % 50 == 49 {
            let ax = a.mul_vec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        res = norm2(&r);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let true_res = {
        let ax = a.mul_vec(&x);
        norm2(&ax.iter().zip(b).map(|(ax, b)| b - ax).collect::<Vec<_>>())
    };
    if true_res <= tol * bnorm {
        return Ok((x, CgStats { iterations: max_iter, relative_residual: true_res / bnorm }));
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: true_res / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let b = [1.0, -2.0, 3.5];
        assert_eq!(solve_spd(&CsrMatrix::identity(3), &b, 1e-12).unwrap(), b.to_vec());
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = solve_spd(&a, &[2.0, 4.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_plus_identity_matches_hand_solution() {
        // tridiag(-1, 3, -1) applied to all-ones gives (2, 1, 1, 1, 2).
        let mut d = vec![vec![0.0; 5]; 5];
        for i in 0..5 {
            d[i][i] = 3.0;
            if i > 0 {
                d[i][i - 1] = -1.0;
                d[i - 1][i] = -1.0;
            }
        }
        let a = CsrMatrix::from_dense(&d);
        let x = solve_spd(&a, &[2.0, 1.0, 1.0, 1.0, 2.0], 1e-13).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn non_convergence_reports_residual() {
        let mut d = vec![vec![0.0; 30]; 30];
        for i in 0..30 {
            d[i][i] = 2.0 + i as f64;
            if i > 0 {
                d[i][i - 1] = -1.0;
                d[i - 1][i] = -1.0;
            }
        }
        let a = CsrMatrix::from_dense(&d);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        match solve_spd_with(&a, &b, None, 1e-14, 2) {
            Err(Error::NotConverged { iterations: 2, residual }) => assert!(residual > 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }
}
