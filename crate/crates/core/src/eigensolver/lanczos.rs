//! Lanczos iteration with full reorthogonalization and explicit restarts.
//!
//! Only the lowest eigenpair of the operator restricted to the orthogonal
//! complement of `locked` is computed per call; successive calls with the
//! previously found vectors locked give the next eigenpairs.

use rand::Rng;

use super::SolverOptions;
use crate::error::{Error, Result};
use crate::operator::{dot, norm, Csr, Scalar};

pub(crate) struct Eigenpair<T> {
    pub value: f64,
    pub vector: Vec<T>,
    pub matvecs: usize,
    pub residual: f64,
}

fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= a * *xi;
    }
}

/// Classical Gram-Schmidt against `basis`, repeated once if the vector lost
/// most of its norm.
fn orthogonalize<T: Scalar>(w: &mut [T], basis: &[&[T]]) {
    let before = norm(w);
    for q in basis {
        let c = dot(q, w);
        axpy(w, c, q);
    }
    if norm(w) < 0.7 * before {
        for q in basis {
            let c = dot(q, w);
            axpy(w, c, q);
        }
    }
}

pub(crate) fn lowest<T: Scalar, R: Rng>(
    a: &Csr<T>,
    locked: &[Vec<T>],
    warm: Option<&[T]>,
    rng: &mut R,
    opts: &SolverOptions,
) -> Result<Eigenpair<T>> {
    let n = a.dim();
    let available = n.saturating_sub(locked.len());
    if available == 0 {
        return Err(Error::InvalidArgument(
            "no eigenpairs left after deflation".into(),
        ));
    }
    let locked_refs: Vec<&[T]> = locked.iter().map(|v| v.as_slice()).collect();

    let mut start: Vec<T> = (0..n).map(|_| T::random(rng)).collect();
    if let Some(w) = warm.filter(|w| w.len() == n) {
        // a little noise keeps every eigenvector reachable from a warm start
        let noise = 1e-3 / norm(&start);
        for (x, wi) in start.iter_mut().zip(w) {
            *x = *wi + x.scale(noise);
        }
    }
    orthogonalize(&mut start, &locked_refs);
    let nrm = norm(&start);
    for x in start.iter_mut() {
        *x = x.scale(1.0 / nrm);
    }

    let mut matvecs = 0;
    let mut last_residual = f64::INFINITY;
    let mut w = vec![T::zero(); n];
    for _restart in 0..=opts.max_restarts {
        let max_krylov = opts.max_krylov.min(available).max(1);
        let mut q: Vec<Vec<T>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (0.0, vec![1.0]);
        for j in 0..max_krylov {
            a.matvec(&q[j], &mut w);
            matvecs += 1;
            let aj = dot(&q[j], &w).re();
            alpha.push(aj);
            axpy(&mut w, T::from_real(aj), &q[j]);
            if j > 0 {
                axpy(&mut w, T::from_real(beta[j - 1]), &q[j - 1]);
            }
            {
                let mut refs: Vec<&[T]> = locked_refs.clone();
                refs.extend(q.iter().map(|v| v.as_slice()));
                orthogonalize(&mut w, &refs);
            }
            let bj = norm(&w);
            ritz = tridiagonal_lowest(&alpha, &beta);
            let estimate = bj * ritz.1.last().unwrap().abs();
            let scale = ritz.0.abs().max(1.0);
            if estimate <= 0.05 * opts.tol || bj <= 1e-13 * scale || j + 1 == max_krylov {
                break;
            }
            beta.push(bj);
            q.push(w.iter().map(|x| x.scale(1.0 / bj)).collect());
        }

        let mut x = vec![T::zero(); n];
        for (coef, qk) in ritz.1.iter().zip(&q) {
            for (xi, qi) in x.iter_mut().zip(qk) {
                *xi += qi.scale(*coef);
            }
        }
        // keep the Ritz vector clean of the locked directions
        orthogonalize(&mut x, &locked_refs);
        let nrm = norm(&x);
        for xi in x.iter_mut() {
            *xi = xi.scale(1.0 / nrm);
        }
        a.matvec(&x, &mut w);
        matvecs += 1;
        let value = dot(&x, &w).re();
        axpy(&mut w, T::from_real(value), &x);
        let residual = norm(&w);
        if residual < opts.tol {
            return Ok(Eigenpair {
                value,
                vector: x,
                matvecs,
                residual,
            });
        }
        last_residual = residual;
        start = x;
    }
    Err(Error::NoConvergence {
        restarts: opts.max_restarts,
        residual: last_residual,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal `(a, b)` below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        d = a[i] - x - if i == 0 { 0.0 } else { off / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest eigenpair of a symmetric tridiagonal matrix with diagonal `a` and
/// off-diagonal `b` (`b.len() == a.len() - 1`): Sturm bisection for the
/// value, shifted inverse iteration for the unit-norm vector.
pub(crate) fn tridiagonal_lowest(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let m = a.len();
    if m == 1 {
        return (a[0], vec![1.0]);
    }
    let radius = |i: usize| {
        let left = if i > 0 { b[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < m { b[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..m).map(|i| a[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..m).map(|i| a[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }
    let value = 0.5 * (lo + hi);

    // T - sigma I is positive definite for sigma below the lowest eigenvalue,
    // so the unpivoted LDL^T solve is stable.
    let sigma = lo - 1e-10 * value.abs().max(1.0);
    let mut y = vec![1.0 / (m as f64).sqrt(); m];
    let mut diag = vec![0.0; m];
    let mut lower = vec![0.0; m];
    diag[0] = a[0] - sigma;
    for i in 1..m {
        lower[i] = b[i - 1] / diag[i - 1];
        diag[i] = a[i] - sigma - lower[i] * b[i - 1];
    }
    for _ in 0..4 {
        for i in 1..m {
            y[i] -= lower[i] * y[i - 1];
        }
        for i in 0..m {
            y[i] /= diag[i];
        }
        for i in (0..m - 1).rev() {
            y[i] -= lower[i + 1] * y[i + 1];
        }
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in y.iter_mut() {
            *v /= nrm;
        }
    }
    (value, y)
}
