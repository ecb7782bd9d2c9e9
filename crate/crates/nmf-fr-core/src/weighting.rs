//! TF-IDF weighting of a count matrix.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::log;

use crate::corpus::{CountMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;

/// The weighted documents-by-terms matrix `X` the rest of the pipeline
/// operates on.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocumentMatrix {
    matrix: CsrMatrix,
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
}

impl TermDocumentMatrix {
    pub fn new(matrix: CsrMatrix, vocabulary: Vocabulary, doc_ids: Vec<String>) -> Self {
        assert_eq!(matrix.ncols(), vocabulary.len());
        assert_eq!(matrix.nrows(), doc_ids.len());
        Self {
            matrix,
            vocabulary,
            doc_ids,
        }
    }

    pub fn n_documents(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }
}

/// Sublinear term frequency `ln(1 + r)`.
pub fn tf(r: u64) -> f64 {
    log(1.0 + r as f64)
}

/// Inverse document frequency `ln(n / n_term)`.
pub fn idf(n: usize, n_term: usize) -> Result<f64> {
    if n_term == 0 {
        return Err(Error::ZeroDocumentFrequency);
    }
    Ok(log(n as f64 / n_term as f64))
}

/// Applies TF-IDF entrywise: `x_ij = tf(r_ij) * idf(n, df_j)`.
///
/// Columns whose term appears in every document get IDF 0 and become
/// all-zero; their stored entries are dropped.
pub fn tfidf(counts: &CountMatrix, vocabulary: &Vocabulary, doc_ids: Vec<String>) -> TermDocumentMatrix {
    let n = counts.n_documents();
    let t = counts.n_terms();
    let mut df = vec![0usize; t];
    for i in 0..n {
        for (j, _) in counts.row(i) {
            df[j] += 1;
        }
    }
    // df > 0 for every column by the corpus invariant, so idf cannot fail.
    let idfs: Vec<f64> = df
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { log(n as f64 / d as f64) })
        .collect();

    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            counts
                .row(i)
                .map(|(j, r)| (j, tf(r) * idfs[j]))
                .filter(|&(_, v)| v != 0.0)
                .collect()
        })
        .collect();
    TermDocumentMatrix::new(CsrMatrix::from_rows(t, &rows), vocabulary.clone(), doc_ids)
}
