//! NNDSVD initialization and coordinate-descent NMF.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::error::Result;
use crate::linalg::{truncated_svd_best_effort, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::matrix::{CsrMatrix, DenseMatrix, MatrixRef};

pub const DEFAULT_MAX_SWEEPS: usize = 200;
pub const DEFAULT_NMF_TOL: f64 = 1e-4;

/// Coordinate-descent passes over one factor within a single sweep. A few
/// inner passes solve each nonnegative least-squares subproblem much more
/// tightly than a single pass, which speeds up the outer alternation without
/// changing the fixed, deterministic update order.
const INNER_PASSES: usize = 8;

/// Result of an NMF fit: `X ~ W * H` with both factors entrywise nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactorization {
    /// n x p document-by-component loadings.
    pub w: DenseMatrix,
    /// p x t component-by-term loadings.
    pub h: DenseMatrix,
    /// Frobenius objective `||X - WH||_F` per sweep; index 0 is the value
    /// at the initial factors.
    pub objective_trace: Vec<f64>,
    /// Sweeps actually performed.
    pub sweeps: usize,
}

/// Zero-preserving NNDSVD initial factors from the rank-`p` truncated SVD.
///
/// The leading triplet is taken entrywise-absolute and scaled by sqrt(sigma_1).
/// Every later triplet is sign-split; the positive/negative part pair with the
/// larger product of norms wins and is scaled by sqrt(sigma_j * m_j) where
/// m_j is that norm product. No averaging fill: zeros stay zero.
pub fn nndsvd_init<M: MatrixRef>(x: &M, p: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let svd = truncated_svd_best_effort(x, p, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let (n, t) = (x.nrows(), x.ncols());
    let mut w = DenseMatrix::zeros(n, p);
    let mut h = DenseMatrix::zeros(p, t);

    let s0 = sqrt(svd.sigma[0]);
    for i in 0..n {
        w.set(i, 0, s0 * svd.u.get(i, 0).abs());
    }
    for j in 0..t {
        h.set(0, j, s0 * svd.vt.get(0, j).abs());
    }

    for c in 1..p {
        let mut up_sq = 0.0;
        let mut un_sq = 0.0;
        for i in 0..n {
            let v = svd.u.get(i, c);
            if v > 0.0 {
                up_sq += v * v;
            } else {
                un_sq += v * v;
            }
        }
        let mut vp_sq = 0.0;
        let mut vn_sq = 0.0;
        for j in 0..t {
            let v = svd.vt.get(c, j);
            if v > 0.0 {
                vp_sq += v * v;
            } else {
                vn_sq += v * v;
            }
        }
        let (up, un, vp, vn) = (sqrt(up_sq), sqrt(un_sq), sqrt(vp_sq), sqrt(vn_sq));
        let m_pos = up * vp;
        let m_neg = un * vn;
        let (u_norm, v_norm, m, keep_positive) = if m_pos >= m_neg {
            (up, vp, m_pos, true)
        } else {
            (un, vn, m_neg, false)
        };
        if m <= 0.0 {
            continue; // one-signed singular vector pair; leave the component zero
        }
        let scale = sqrt(svd.sigma[c] * m);
        for i in 0..n {
            let v = svd.u.get(i, c);
            let part = if keep_positive { v.max(0.0) } else { (-v).max(0.0) };
            w.set(i, c, scale * part / u_norm);
        }
        for j in 0..t {
            let v = svd.vt.get(c, j);
            let part = if keep_positive { v.max(0.0) } else { (-v).max(0.0) };
            h.set(c, j, scale * part / v_norm);
        }
    }
    Ok((w, h))
}

/// `||X - WH||_F`, streamed row by row so no n x t buffer is allocated.
pub fn frobenius_objective(x: &CsrMatrix, w: &DenseMatrix, h: &DenseMatrix) -> f64 {
    let (n, t) = (x.nrows(), x.ncols());
    let p = w.ncols();
    let mut total = 0.0;
    let mut row_buf = vec![0.0_f64; t];
    for i in 0..n {
        for v in row_buf.iter_mut() {
            *v = 0.0;
        }
        let wi = w.row(i);
        for c in 0..p {
            let a = wi[c];
            if a == 0.0 {
                continue;
            }
            let hr = h.row(c);
            for j in 0..t {
                row_buf[j] += a * hr[j];
            }
        }
        for (j, v) in x.row(i) {
            row_buf[j] -= v;
        }
        for v in &row_buf {
            total += v * v;
        }
    }
    sqrt(total)
}

/// Cyclic exact coordinate descent on the squared Frobenius objective with
/// projection to zero. Update order is fixed (W rows ascending then H columns
/// ascending) so results are bitwise reproducible.
pub fn nmf_fit(
    x: &CsrMatrix,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    max_sweeps: usize,
    tol: f64,
) -> NmfFactorization {
    let n = x.nrows();
    let t = x.ncols();
    let p = w0.ncols();
    assert_eq!(w0.nrows(), n);
    assert_eq!(h0.nrows(), p);
    assert_eq!(h0.ncols(), t);

    let mut w = w0.clone();
    let mut h = h0.clone();
    let mut trace = vec![frobenius_objective(x, &w, &h)];
    let mut sweeps = 0;

    for _sweep in 0..max_sweeps {
        // W update with H fixed.
        let hht = h.matmul(&h.transpose()); // p x p
        let xht = x.mul_block(&h.transpose()); // n x p
        for i in 0..n {
            // g = W_i * HH^T, maintained incrementally per coordinate update.
            let mut g = vec![0.0_f64; p];
            let wi = w.row(i);
            for c in 0..p {
                let a = wi[c];
                if a == 0.0 {
                    continue;
                }
                for s in 0..p {
                    g[s] += a * hht.get(c, s);
                }
            }
            for _pass in 0..INNER_PASSES {
                let mut changed = false;
                for c in 0..p {
                    let denom = hht.get(c, c);
                    if denom <= 0.0 {
                        continue;
                    }
                    let old = w.get(i, c);
                    let new = (old + (xht.get(i, c) - g[c]) / denom).max(0.0);
                    let delta = new - old;
                    if delta != 0.0 {
                        changed = true;
                        w.set(i, c, new);
                        for s in 0..p {
                            g[s] += delta * hht.get(c, s);
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }

        // H update with W fixed.
        let wtw = w.tr_matmul(&w); // p x p
        let wtx = x.tr_mul_block(&w).transpose(); // p x t
        for j in 0..t {
            let mut g = vec![0.0_f64; p];
            for c in 0..p {
                let a = h.get(c, j);
                if a == 0.0 {
                    continue;
                }
                for s in 0..p {
                    g[s] += a * wtw.get(c, s);
                }
            }
            for _pass in 0..INNER_PASSES {
                let mut changed = false;
                for c in 0..p {
                    let denom = wtw.get(c, c);
                    if denom <= 0.0 {
                        continue;
                    }
                    let old = h.get(c, j);
                    let new = (old + (wtx.get(c, j) - g[c]) / denom).max(0.0);
                    let delta = new - old;
                    if delta != 0.0 {
                        changed = true;
                        h.set(c, j, new);
                        for s in 0..p {
                            g[s] += delta * wtw.get(c, s);
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }

        sweeps += 1;
        let obj = frobenius_objective(x, &w, &h);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if prev > 0.0 && (prev - obj) / prev < tol {
            break;
        }
        if prev == 0.0 {
            break;
        }
    }

    NmfFactorization {
        w,
        h,
        objective_trace: trace,
        sweeps,
    }
}
