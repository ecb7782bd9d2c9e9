//! Deterministic synthetic corpora and RNG helpers shared by the
//! integration tests.

#![allow(dead_code)]

use nmf_fr_core::corpus::Document;

/// Small splitmix-style generator; good enough for test data and fully
/// reproducible from its seed.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Shape of one synthetic topical corpus.
pub struct CorpusSpec {
    pub topics: usize,
    pub docs_per_topic: usize,
    /// Per-topic vocabulary size.
    pub terms_per_topic: usize,
    /// Inclusive range of words per document; wide ranges make document
    /// length dominate unnormalized distances.
    pub doc_len: (usize, usize),
    /// Probability that a word is drawn from a different topic's vocabulary.
    pub contamination: f64,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn clean(topics: usize, docs_per_topic: usize, seed: u64) -> Self {
        Self {
            topics,
            docs_per_topic,
            terms_per_topic: 24,
            doc_len: (12, 30),
            contamination: 0.0,
            seed,
        }
    }
}

/// Generates a labeled corpus of topical documents. Topic vocabularies are
/// disjoint by construction (`t{topic}w{idx}` term names); contamination
/// mixes in words from other topics at the given rate.
pub fn synth_corpus(spec: &CorpusSpec) -> Vec<Document> {
    let mut rng = Lcg(spec.seed);
    let mut docs = Vec::new();
    for topic in 0..spec.topics {
        for d in 0..spec.docs_per_topic {
            let len = spec.doc_len.0 + rng.below(spec.doc_len.1 - spec.doc_len.0 + 1);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                let source = if spec.topics > 1 && rng.next_f64() < spec.contamination {
                    let mut other = rng.below(spec.topics - 1);
                    if other >= topic {
                        other += 1;
                    }
                    other
                } else {
                    topic
                };
                // Mildly skewed term choice so frequencies differ.
                let a = rng.below(spec.terms_per_topic);
                let b = rng.below(spec.terms_per_topic);
                words.push(format!("t{source}w{}", a.min(b)));
            }
            docs.push(Document::new(
                format!("topic{topic}_doc{d}"),
                words.join(" "),
                Some(format!("topic{topic}")),
            ));
        }
    }
    docs
}

/// Class ids aligned with [`synth_corpus`] document order.
pub fn synth_labels(spec: &CorpusSpec) -> Vec<usize> {
    (0..spec.topics)
        .flat_map(|t| std::iter::repeat(t).take(spec.docs_per_topic))
        .collect()
}
