//! Document ingestion: tokenization, stop-word filtering and assembly of the
//! count-based term-document matrix.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::CsrMatrix;

/// English stop-word list shipped with the crate, one term per line.
pub const STOP_WORDS: &str = include_str!("../data/stopwords.txt");

/// A raw labeled document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

/// The fixed term set of a corpus, in canonical (lexicographic) column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    fn from_sorted_terms(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, j: usize) -> &str {
        &self.terms[j]
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Sparse documents-by-terms occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    counts: CsrMatrix,
}

impl CountMatrix {
    pub fn n_documents(&self) -> usize {
        self.counts.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.counts.ncols()
    }

    /// `(term column, count)` pairs of document `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.row(i).map(|(j, v)| (j, v as u64))
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts.get(i, j) as u64
    }

    /// Number of documents containing term `j`.
    pub fn document_frequency(&self, j: usize) -> usize {
        (0..self.n_documents())
            .filter(|&i| self.get(i, j) > 0)
            .count()
    }

    pub fn as_csr(&self) -> &CsrMatrix {
        &self.counts
    }
}

fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.lines().any(|w| w == token)
}

/// Lowercases, splits on non-alphanumeric boundaries, drops length-1 tokens
/// and stop words. Token order is preserved; pure-digit tokens are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered: String = text.chars().flat_map(|c| c.to_lowercase()).collect();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|tok| tok.chars().count() >= 2 && !is_stop_word(tok))
        .map(|tok| tok.to_string())
        .collect()
}

/// Builds the count matrix over all tokens appearing in at least `min_df`
/// documents. Columns follow lexicographic term order.
pub fn build_count_matrix(docs: &[Document], min_df: usize) -> Result<(CountMatrix, Vocabulary)> {
    let min_df = min_df.max(1);
    let per_doc: Vec<BTreeMap<String, u64>> = docs
        .iter()
        .map(|d| {
            let mut counts = BTreeMap::new();
            for tok in tokenize(&d.text) {
                *counts.entry(tok).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in &per_doc {
        for term in counts.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }

    let terms: Vec<String> = df
        .iter()
        .filter(|(_, &n)| n >= min_df)
        .map(|(t, _)| t.to_string())
        .collect();
    if terms.is_empty() {
        return Err(Error::AllTermsFiltered);
    }
    let vocab = Vocabulary::from_sorted_terms(terms);

    let rows: Vec<Vec<(usize, f64)>> = per_doc
        .iter()
        .map(|counts| {
            counts
                .iter()
                .filter_map(|(term, &c)| vocab.position(term).map(|j| (j, c as f64)))
                .collect()
        })
        .collect();
    let counts = CsrMatrix::from_rows(vocab.len(), &rows);
    Ok((CountMatrix { counts }, vocab))
}
