//! Dense symmetric eigendecomposition and deterministic summation.
//!
//! The eigensolver is a cyclic Jacobi iteration. It is exact enough for the
//! covariance matrices (D up to a few hundred) and Gram matrices (N up to
//! 2000) this crate produces, and it is fully deterministic: fixed rotation
//! order, no pivot heuristics.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix.
///
/// `values` are sorted in descending order; column `j` of `vectors` is the
/// unit eigenvector belonging to `values[j]`.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Decompose a symmetric matrix with cyclic Jacobi rotations.
///
/// The input must be square, finite, and symmetric within `1e-8` relative
/// tolerance; it is symmetrized exactly before iterating.
pub fn symmetric_eigen(a: &ArrayView2<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Shape(format!(
            "symmetric_eigen needs a square non-empty matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut m: Vec<f64> = Vec::with_capacity(n * n);
    for row in a.rows() {
        m.extend(row.iter());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "symmetric_eigen: matrix contains non-finite entries".into(),
        ));
    }
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = m[i * n + j];
            let y = m[j * n + i];
            if (x - y).abs() > 1e-8 * scale {
                return Err(Error::Shape(format!(
                    "symmetric_eigen: entry ({i},{j}) deviates from symmetry by {}",
                    (x - y).abs()
                )));
            }
            let avg = 0.5 * (x + y);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }

    // V is stored transposed: row i holds the i-th accumulated eigenvector,
    // so both the A-rotation and the V-rotation touch contiguous rows.
    let mut vt = vec![0.0_f64; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let frob: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-12 * frob.max(f64::MIN_POSITIVE);
    let mut converged = frob == 0.0;
    const MAX_SWEEPS: usize = 60;
    for _ in 0..MAX_SWEEPS {
        if offdiag_norm(&m, n) <= tol {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() <= 0.5 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate_rows(&mut m, n, p, q, c, s);
                rotate_cols(&mut m, n, p, q, c, s);
                rotate_rows(&mut vt, n, p, q, c, s);
            }
        }
    }
    if !converged && offdiag_norm(&m, n) > tol {
        return Err(Error::Numeric(
            "symmetric_eigen: Jacobi iteration did not converge".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .expect("eigenvalues are finite")
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = vt[src * n + r];
        }
    }
    Ok(SymEigen { values, vectors })
}

fn offdiag_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            let v = m[p * n + q];
            acc += 2.0 * v * v;
        }
    }
    acc.sqrt()
}

/// Left-multiply by the transposed plane rotation: rows `p`, `q` are mixed.
fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = m.split_at_mut(q * n);
    let rp = &mut head[p * n..p * n + n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let xv = *x;
        let yv = *y;
        *x = c * xv - s * yv;
        *y = s * xv + c * yv;
    }
}

/// Right-multiply by the plane rotation: columns `p`, `q` are mixed.
fn rotate_cols(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for row in m.chunks_exact_mut(n) {
        let x = row[p];
        let y = row[q];
        row[p] = c * x - s * y;
        row[q] = s * x + c * y;
    }
}

/// Deterministic pairwise summation.
///
/// Used wherever partial results from parallel workers are reduced, so the
/// reduction order (and hence the rounding) is independent of scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
