//! Deterministic truncated SVD via block subspace iteration.
//!
//! The start block is fixed (identity columns picked by largest column norm),
//! so repeated calls on the same input are bitwise identical. No randomness,
//! no seed.

use alloc::vec::Vec;

use libm::sqrt;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixRef};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-7;

/// Rank-k factorization `U * diag(sigma) * Vt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// n x k left singular vectors.
    pub u: DenseMatrix,
    /// Nonincreasing singular values.
    pub sigma: Vec<f64>,
    /// k x t right singular vectors.
    pub vt: DenseMatrix,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Dense reconstruction `U * diag(sigma) * Vt`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.u.nrows();
        let t = self.vt.ncols();
        let k = self.rank();
        let mut out = DenseMatrix::zeros(n, t);
        for i in 0..n {
            for c in 0..k {
                let a = self.u.get(i, c) * self.sigma[c];
                if a == 0.0 {
                    continue;
                }
                for j in 0..t {
                    let v = out.get(i, j) + a * self.vt.get(c, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
/// A column that becomes numerically dependent on earlier ones (relative to
/// the largest incoming column norm) is replaced by the next canonical basis
/// vector that survives projection, so the block always stays full rank and
/// the iteration can keep exploring new directions.
fn orthonormalize_columns(m: &mut DenseMatrix) {
    let (n, k) = (m.nrows(), m.ncols());
    let mut max_norm_sq = 0.0_f64;
    for c in 0..k {
        let mut sq = 0.0;
        for i in 0..n {
            sq += m.get(i, c) * m.get(i, c);
        }
        max_norm_sq = max_norm_sq.max(sq);
    }
    let zero_threshold = 1e-12 * sqrt(max_norm_sq).max(1e-300);
    let mut fallback = 0usize;
    for _pass in 0..2 {
        for c in 0..k {
            let mut norm = project_and_norm(m, c);
            if norm <= zero_threshold {
                // Deterministic replacement: cycle canonical basis vectors
                // until one has a usable component outside the current span.
                for _attempt in 0..n {
                    for i in 0..n {
                        m.set(i, c, if i == fallback { 1.0 } else { 0.0 });
                    }
                    fallback = (fallback + 1) % n;
                    norm = project_and_norm(m, c);
                    if norm > 1e-6 {
                        break;
                    }
                }
            }
            if norm > 0.0 {
                for i in 0..n {
                    let v = m.get(i, c) / norm;
                    m.set(i, c, v);
                }
            }
        }
    }
}

/// Projects column `c` of `m` against columns `0..c` and returns its
/// remaining Euclidean norm.
fn project_and_norm(m: &mut DenseMatrix, c: usize) -> f64 {
    let n = m.nrows();
    for prev in 0..c {
        let mut dot = 0.0;
        for i in 0..n {
            dot += m.get(i, c) * m.get(i, prev);
        }
        if dot != 0.0 {
            for i in 0..n {
                let v = m.get(i, c) - dot * m.get(i, prev);
                m.set(i, c, v);
            }
        }
    }
    let mut norm_sq = 0.0;
    for i in 0..n {
        norm_sq += m.get(i, c) * m.get(i, c);
    }
    sqrt(norm_sq)
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns,
/// sorted by descending eigenvalue (ties by original rotation order).
fn jacobi_symmetric_eigen(s: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let k = s.nrows();
    let mut a = s.clone();
    let mut q = DenseMatrix::zeros(k, k);
    for i in 0..k {
        q.set(i, i, 1.0);
    }
    let scale = a.max_abs_entry().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..k {
            for r in (p + 1)..k {
                off = off.max(a.get(p, r).abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..k {
            for r in (p + 1)..k {
                let apr = a.get(p, r);
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let arr = a.get(r, r);
                let theta = (arr - app) / (2.0 * apr);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let sn = t * c;
                for i in 0..k {
                    let aip = a.get(i, p);
                    let air = a.get(i, r);
                    a.set(i, p, c * aip - sn * air);
                    a.set(i, r, sn * aip + c * air);
                }
                for j in 0..k {
                    let apj = a.get(p, j);
                    let arj = a.get(r, j);
                    a.set(p, j, c * apj - sn * arj);
                    a.set(r, j, sn * apj + c * arj);
                }
                for i in 0..k {
                    let qip = q.get(i, p);
                    let qir = q.get(i, r);
                    q.set(i, p, c * qip - sn * qir);
                    q.set(i, r, sn * qip + c * qir);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .partial_cmp(&a.get(i, i))
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i).max(0.0)).collect();
    let mut vectors = DenseMatrix::zeros(k, k);
    for (c, &src) in order.iter().enumerate() {
        for i in 0..k {
            vectors.set(i, c, q.get(i, src));
        }
    }
    (eigenvalues, vectors)
}

/// Deterministic start block: identity columns chosen by greedy residual
/// pivoting. The first pick is the largest-norm column of `x`; each later
/// pick is the column with the largest norm after projecting out the
/// directions already chosen (ties by smaller column index). Unlike picking
/// the `k` largest raw norms, this cannot select mutually parallel columns,
/// so the block always has a component on `k` independent directions when
/// the matrix has rank `k`.
fn start_block<M: MatrixRef>(x: &M, k: usize) -> DenseMatrix {
    let (n, t) = (x.nrows(), x.ncols());
    let mut residual = x.column_sq_norms();
    let mut v = DenseMatrix::zeros(t, k);
    let mut dirs: Vec<Vec<f64>> = Vec::new(); // orthonormal directions in R^n
    for c in 0..k {
        let mut best = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (j, &r) in residual.iter().enumerate() {
            if r > best_val {
                best_val = r;
                best = j;
            }
        }
        v.set(best, c, 1.0);
        residual[best] = f64::NEG_INFINITY;

        // Orthonormal direction of the chosen column; used to deflate the
        // remaining residual norms.
        let mut e = DenseMatrix::zeros(t, 1);
        e.set(best, 0, 1.0);
        let col = x.mul_block(&e); // n x 1
        let mut d: Vec<f64> = (0..n).map(|i| col.get(i, 0)).collect();
        for prev in &dirs {
            let dot: f64 = d.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            for (a, b) in d.iter_mut().zip(prev.iter()) {
                *a -= dot * b;
            }
        }
        let norm = sqrt(d.iter().map(|a| a * a).sum::<f64>());
        if norm > 0.0 {
            for a in d.iter_mut() {
                *a /= norm;
            }
            let mut u = DenseMatrix::zeros(n, 1);
            for (i, &a) in d.iter().enumerate() {
                u.set(i, 0, a);
            }
            let proj = x.tr_mul_block(&u); // t x 1 = X^T u
            for (j, r) in residual.iter_mut().enumerate() {
                if r.is_finite() {
                    *r = (*r - proj.get(j, 0) * proj.get(j, 0)).max(0.0);
                }
            }
            dirs.push(d);
        }
    }
    v
}

/// Truncated SVD of rank `k` via block subspace iteration on `X^T X`.
/// Errors with [`Error::ConvergenceFailure`] when the sweep budget runs out
/// before the captured energy settles below `tol`.
pub fn truncated_svd<M: MatrixRef>(
    x: &M,
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<TruncatedSvd> {
    let (svd, residual, converged) = subspace_svd(x, k, max_iter, tol)?;
    if !converged {
        return Err(Error::ConvergenceFailure { max_iter, residual });
    }
    Ok(svd)
}

/// Like [`truncated_svd`], but returns the budget-exhausted factorization
/// instead of failing. Callers that use the SVD as an initializer or a
/// projection (NNDSVD, LSA) prefer an approximate subspace over an error.
pub fn truncated_svd_best_effort<M: MatrixRef>(
    x: &M,
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<TruncatedSvd> {
    let (svd, _, _) = subspace_svd(x, k, max_iter, tol)?;
    Ok(svd)
}

fn subspace_svd<M: MatrixRef>(
    x: &M,
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<(TruncatedSvd, f64, bool)> {
    let (n, t) = (x.nrows(), x.ncols());
    let max_rank = n.min(t);
    if k == 0 || k > max_rank {
        return Err(Error::RankTooLarge {
            requested: k,
            max: max_rank,
        });
    }
    let fro = x.frobenius_norm();
    if fro == 0.0 {
        return Err(Error::ZeroMatrix);
    }

    let mut v = start_block(x, k);
    // Convergence is measured on the captured energy ||X V||_F^2, which is
    // invariant to rotations within span(V). Per-vector estimates would
    // never settle when singular values cluster, because the block keeps
    // rotating inside the near-degenerate subspace; the final Rayleigh-Ritz
    // solve below recovers the individual triplets from the converged span.
    let mut energy = 0.0_f64;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _sweep in 0..max_iter {
        let y = x.mul_block(&v); // n x k
        let mut e_new = 0.0;
        for c in 0..k {
            for i in 0..n {
                e_new += y.get(i, c) * y.get(i, c);
            }
        }
        residual = (e_new - energy).abs() / e_new.max(1e-300);
        energy = e_new;
        if residual < tol {
            converged = true;
            break;
        }
        // Two power steps per sweep: clustered spectra contract slowly per
        // step, and squaring the per-sweep contraction keeps the default
        // sweep budget sufficient.
        let mut z = x.tr_mul_block(&y); // t x k
        orthonormalize_columns(&mut z);
        let y2 = x.mul_block(&z);
        let mut z2 = x.tr_mul_block(&y2);
        orthonormalize_columns(&mut z2);
        v = z2;
    }

    // Dense eigen-solve of the projected Gram matrix refines the basis.
    let y = x.mul_block(&v); // n x k
    let s = y.tr_matmul(&y); // k x k, = V^T X^T X V
    let (eigenvalues, q) = jacobi_symmetric_eigen(&s);
    let sigma: Vec<f64> = eigenvalues.iter().map(|&l| sqrt(l)).collect();

    let v_rot = v.matmul(&q); // t x k
    let y_rot = y.matmul(&q); // n x k, columns = sigma_c * u_c
    let mut u = DenseMatrix::zeros(n, k);
    let mut vt = DenseMatrix::zeros(k, t);
    for c in 0..k {
        if sigma[c] > 1e-300 {
            for i in 0..n {
                u.set(i, c, y_rot.get(i, c) / sigma[c]);
            }
        }
        for j in 0..t {
            vt.set(c, j, v_rot.get(j, c));
        }
    }

    // Canonical sign: largest-magnitude entry of each U column nonnegative.
    for c in 0..k {
        let mut best = 0usize;
        let mut best_abs = 0.0_f64;
        for i in 0..n {
            let a = u.get(i, c).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if u.get(best, c) < 0.0 {
            for i in 0..n {
                let val = -u.get(i, c);
                u.set(i, c, val);
            }
            for j in 0..t {
                let val = -vt.get(c, j);
                vt.set(c, j, val);
            }
        }
    }

    Ok((TruncatedSvd { u, sigma, vt }, residual, converged))
}
