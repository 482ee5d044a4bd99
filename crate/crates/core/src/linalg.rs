//! Small dense and banded linear algebra kernels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Smallest eigenvalue of a dense symmetric matrix (row-major, `n × n`).
///
/// The matrix is reduced to tridiagonal form by Householder reflections and
/// the lowest eigenvalue is bracketed by Sturm-sequence bisection. The input
/// buffer is overwritten.
pub fn min_eigenvalue_symmetric(a: &mut [f64], n: usize) -> Result<f64> {
    if a.len() != n * n {
        return Err(Error::SizeMismatch { expected: n * n, got: a.len() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Err(Error::NumericalFailure("empty matrix".into()));
    }
    let (d, e) = tridiagonalize(a, n);
    smallest_tridiagonal_eigenvalue(&d, &e)
}

/// Householder reduction; returns (diagonal, off-diagonal).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let norm = libm::sqrt((k + 1..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>());
        if norm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for (j, i) in (k + 1..n).enumerate() {
            v[j] = a[i * n + k];
        }
        v[0] -= alpha;
        let vnorm = libm::sqrt(v[..m].iter().map(|x| x * x).sum::<f64>());
        off[k] = alpha;
        if vnorm == 0.0 {
            continue;
        }
        for x in v[..m].iter_mut() {
            *x /= vnorm;
        }
        // p = A_sub v
        for r in 0..m {
            let row = &a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            p[r] = row.iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
        }
        let kappa: f64 = p[..m].iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
        for r in 0..m {
            p[r] -= kappa * v[r];
        }
        for r in 0..m {
            let vr = v[r];
            let pr = p[r];
            let row = &mut a[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            for (c, x) in row.iter_mut().enumerate() {
                *x -= 2.0 * (vr * p[c] + pr * v[c]);
            }
        }
    }
    if n >= 2 {
        off[n - 2] = a[(n - 1) * n + n - 2];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, off)
}

/// Number of eigenvalues strictly below `x` (Sturm count).
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 { f64::EPSILON * (1.0 + e[i - 1].abs()) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn smallest_tridiagonal_eigenvalue(d: &[f64], e: &[f64]) -> Result<f64> {
    let n = d.len();
    if d.iter().chain(e).all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale || mid == lo || mid == hi {
            return Ok(mid);
        }
        if sturm_count(d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NumericalFailure("Sturm bisection did not converge".into()))
}

/// Thomas algorithm for a tridiagonal system with constant bands.
pub fn solve_tridiagonal_constant(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut beta = diag;
    if beta == 0.0 {
        return Err(Error::NumericalFailure("zero pivot".into()));
    }
    x[0] = rhs[0] / beta;
    for i in 1..n {
        c[i] = upper / beta;
        beta = diag - lower * c[i];
        if beta == 0.0 {
            return Err(Error::NumericalFailure("zero pivot".into()));
        }
        x[i] = (rhs[i] - lower * x[i - 1]) / beta;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
    Ok(x)
}

/// Conjugate gradients for an SPD operator given as a closure.
pub fn conjugate_gradient<A>(apply: A, rhs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = libm::sqrt(dot(rhs, rhs));
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if libm::sqrt(rr) <= tol * b_norm {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    if libm::sqrt(rr) <= tol * b_norm * 10.0 {
        Ok(x)
    } else {
        Err(Error::NumericalFailure("conjugate gradients did not converge".into()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
