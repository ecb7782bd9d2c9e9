//! Term grouping over H, L2 feature agglomeration, and the optional LSA
//! reduction of the agglomerated space.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::error::Result;
use crate::linalg::{truncated_svd_best_effort, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::matrix::DenseMatrix;
use crate::weighting::TermDocumentMatrix;

/// Assignment of every term to one of `p` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGrouping {
    /// Group id (0-based) per term column.
    pub assignment: Vec<usize>,
    /// Terms per group; empty groups are permitted.
    pub group_sizes: Vec<usize>,
    /// Per group: `(term column, H value)` sorted by descending H value,
    /// ties by ascending term column.
    pub top_terms: Vec<Vec<(usize, f64)>>,
}

impl TermGrouping {
    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn empty_groups(&self) -> Vec<usize> {
        self.group_sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0)
            .map(|(g, _)| g)
            .collect()
    }
}

/// Stage marker for [`FeatureSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureStage {
    Agglomerated,
    LsaReduced,
}

/// Dense documents-by-features matrix produced by agglomeration and,
/// optionally, LSA.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub matrix: DenseMatrix,
    pub stage: FeatureStage,
}

impl FeatureSpace {
    pub fn n_documents(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Assigns each term (column of H) to the component with the largest H value.
/// Ties break toward the smallest component index, so an all-zero column goes
/// to group 0.
pub fn group_terms(h: &DenseMatrix) -> TermGrouping {
    let p = h.nrows();
    let t = h.ncols();
    let mut assignment = vec![0usize; t];
    let mut group_sizes = vec![0usize; p];
    for j in 0..t {
        let mut best = 0usize;
        let mut best_val = h.get(0, j);
        for c in 1..p {
            let v = h.get(c, j);
            if v > best_val {
                best_val = v;
                best = c;
            }
        }
        assignment[j] = best;
        group_sizes[best] += 1;
    }
    let mut top_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for j in 0..t {
        let g = assignment[j];
        top_terms[g].push((j, h.get(g, j)));
    }
    for terms in &mut top_terms {
        terms.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
    }
    TermGrouping {
        assignment,
        group_sizes,
        top_terms,
    }
}

/// Replaces each term group by one feature column: the per-document L2 norm
/// of the document row restricted to the group's terms. Empty groups yield a
/// retained all-zero column.
pub fn agglomerate(x: &TermDocumentMatrix, grouping: &TermGrouping) -> FeatureSpace {
    assert_eq!(grouping.assignment.len(), x.n_terms());
    let n = x.n_documents();
    let p = grouping.n_groups();
    let mut out = DenseMatrix::zeros(n, p);
    for i in 0..n {
        let mut acc = vec![0.0_f64; p];
        for (j, v) in x.matrix().row(i) {
            acc[grouping.assignment[j]] += v * v;
        }
        let row = out.row_mut(i);
        for g in 0..p {
            row[g] = sqrt(acc[g]);
        }
    }
    FeatureSpace {
        matrix: out,
        stage: FeatureStage::Agglomerated,
    }
}

/// LSA projection `U_q * Sigma_q` of the agglomerated space. `q = 1` means
/// "no reduction" and returns the input unchanged.
pub fn lsa_reduce(xp: FeatureSpace, q: usize) -> Result<FeatureSpace> {
    if q == 1 {
        return Ok(xp);
    }
    let svd = truncated_svd_best_effort(&xp.matrix, q, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let n = xp.matrix.nrows();
    let mut out = DenseMatrix::zeros(n, q);
    for i in 0..n {
        for c in 0..q {
            out.set(i, c, svd.u.get(i, c) * svd.sigma[c]);
        }
    }
    Ok(FeatureSpace {
        matrix: out,
        stage: FeatureStage::LsaReduced,
    })
}
