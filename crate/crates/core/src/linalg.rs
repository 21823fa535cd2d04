//! Small dense and iterative linear-algebra helpers on complex vectors.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;

use crate::error::{Error, Result};

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ conj(a_i) b_i`
pub fn cdot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Restarted GMRES for `A x = b` from a zero initial guess. `residual` in the
/// report is the true relative residual `‖b − A x‖ / ‖b‖`.
pub fn gmres<F>(apply: F, b: &[C], tol: f64, restart: usize, max_iter: usize) -> Result<(Vec<C>, KrylovReport)>
where
    F: Fn(&[C]) -> Vec<C>,
{
    let n = b.len();
    let zero = C::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, KrylovReport { iterations: 0, residual: 0.0 }));
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut r: Vec<C> = b.to_vec();
    loop {
        let beta = norm(&r);
        if beta <= tol * bnorm {
            return Ok((x, KrylovReport { iterations: total, residual: beta / bnorm }));
        }
        if total >= max_iter {
            return Err(Error::NonConvergence {
                iterations: total,
                residual: beta / bnorm,
            });
        }
        let mut basis: Vec<Vec<C>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = C::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            if total >= max_iter {
                break;
            }
            total += 1;
            let mut w = apply(&basis[k]);
            // modified Gram–Schmidt, twice for stability
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let h = cdot(v, &w);
                    hess[j][k] += h;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= h * vi);
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = C::new(hn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * hess[j][k] + sn[j].conj() * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = a / den;
            sn[k] = bb / den;
            hess[k][k] = C::new(den, 0.0);
            hess[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            if g[k + 1].norm() <= 0.5 * tol * bnorm || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution on the triangular factor
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(xi, vi)| *xi += yj * vi);
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        if k_used == 0 {
            let res = norm(&r) / bnorm;
            if res <= tol {
                return Ok((x, KrylovReport { iterations: total, residual: res }));
            }
            return Err(Error::NonConvergence { iterations: total, residual: res });
        }
    }
}

/// Dense LU solve with a relative residual report.
pub fn dense_solve(a: DMatrix<C>, b: &[C]) -> Result<(Vec<C>, KrylovReport)> {
    let n = b.len();
    let bv = nalgebra::DVector::from_column_slice(b);
    let a_copy = a.clone();
    let x = a
        .lu()
        .solve(&bv)
        .ok_or(Error::NonConvergence { iterations: 0, residual: f64::INFINITY })?;
    let bn = bv.norm();
    let res = if bn == 0.0 { 0.0 } else { (&a_copy * &x - &bv).norm() / bn };
    debug_assert_eq!(x.len(), n);
    Ok((x.iter().cloned().collect(), KrylovReport { iterations: 1, residual: res }))
}
