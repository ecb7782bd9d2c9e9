//! End-to-end composition: corpus -> TF-IDF -> NNDSVD-initialized NMF ->
//! term grouping -> feature agglomeration -> optional LSA -> graph-seeded
//! spherical K-Means.

use alloc::string::String;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::agglomeration::{agglomerate, group_terms, lsa_reduce, FeatureSpace, TermGrouping};
use crate::clustering::{
    knn_graph, seed_centroids, spherical_kmeans, ClusteringResult, DEFAULT_KMEANS_MAX_ITER,
    DEFAULT_NEIGHBORS,
};
use crate::corpus::{build_count_matrix, Document};
use crate::error::StageError;
use crate::factorization::{nmf_fit, nndsvd_init, DEFAULT_MAX_SWEEPS, DEFAULT_NMF_TOL};
use crate::weighting::{tfidf, TermDocumentMatrix};

/// All tunables of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// NMF components / term groups.
    pub p: usize,
    /// LSA components; 1 skips the LSA step.
    pub q: usize,
    /// Neighbors for the seeding graph.
    pub r: usize,
    /// Clusters.
    pub k: usize,
    pub min_df: usize,
    pub nmf_max_sweeps: usize,
    pub nmf_tol: f64,
    pub kmeans_max_iter: usize,
}

impl PipelineConfig {
    /// Defaults for `K` clusters: `p = 3K`, no LSA, 5 neighbors.
    pub fn for_clusters(k: usize) -> Self {
        Self {
            p: 3 * k,
            q: 1,
            r: DEFAULT_NEIGHBORS,
            k,
            min_df: 2,
            nmf_max_sweeps: DEFAULT_MAX_SWEEPS,
            nmf_tol: DEFAULT_NMF_TOL,
            kmeans_max_iter: DEFAULT_KMEANS_MAX_ITER,
        }
    }

    /// Non-fatal configuration advisories.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.p < self.k {
            out.push(alloc::format!(
                "p = {} is smaller than K = {}; some clusters may lack a dedicated term group",
                self.p,
                self.k
            ));
        }
        out
    }
}

/// Wall-clock source for stage timings. The core crate has no clock of its
/// own; callers that want timings pass one in.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Clock that always reads zero; stage timings come out as zero.
pub struct NullClock;

impl Clock for NullClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineDiagnostics {
    pub objective_trace: Vec<f64>,
    pub nmf_sweeps: usize,
    pub group_sizes: Vec<usize>,
    pub seed_indices: Vec<usize>,
    /// `(stage name, elapsed ms)` in execution order.
    pub stage_timings: Vec<(&'static str, f64)>,
    pub warnings: Vec<String>,
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub clustering: ClusteringResult,
    pub grouping: TermGrouping,
    pub features: FeatureSpace,
    pub term_document: TermDocumentMatrix,
    pub diagnostics: PipelineDiagnostics,
}

/// Runs the full pipeline. Errors are wrapped with the failing stage's name.
pub fn run_nmf_fr(
    docs: &[Document],
    cfg: &PipelineConfig,
    clock: &dyn Clock,
) -> Result<PipelineOutput, StageError> {
    let mut timings: Vec<(&'static str, f64)> = Vec::new();
    let mut last = clock.now_ms();
    let mark = |stage: &'static str, timings: &mut Vec<(&'static str, f64)>, last: &mut f64| {
        let now = clock.now_ms();
        timings.push((stage, now - *last));
        *last = now;
    };
    let mut warnings = cfg.warnings();

    let (counts, vocab) = build_count_matrix(docs, cfg.min_df)
        .map_err(|e| StageError::new("build_count_matrix", e))?;
    mark("build_count_matrix", &mut timings, &mut last);

    let doc_ids: Vec<String> = docs.iter().map(|d| d.id.to_string()).collect();
    let x = tfidf(&counts, &vocab, doc_ids);
    mark("tfidf", &mut timings, &mut last);

    let (w0, h0) =
        nndsvd_init(x.matrix(), cfg.p).map_err(|e| StageError::new("nndsvd_init", e))?;
    mark("nndsvd_init", &mut timings, &mut last);

    let nmf = nmf_fit(x.matrix(), &w0, &h0, cfg.nmf_max_sweeps, cfg.nmf_tol);
    mark("nmf_fit", &mut timings, &mut last);

    let grouping = group_terms(&nmf.h);
    for g in grouping.empty_groups() {
        warnings.push(alloc::format!("term group {g} is empty; keeping a zero feature column"));
    }
    mark("group_terms", &mut timings, &mut last);

    let agglomerated = agglomerate(&x, &grouping);
    mark("agglomerate", &mut timings, &mut last);

    let features =
        lsa_reduce(agglomerated, cfg.q).map_err(|e| StageError::new("lsa_reduce", e))?;
    mark("lsa_reduce", &mut timings, &mut last);

    let graph = knn_graph(&features, cfg.r).map_err(|e| StageError::new("knn_graph", e))?;
    mark("knn_graph", &mut timings, &mut last);

    let seeds = seed_centroids(&graph, &features, cfg.k)
        .map_err(|e| StageError::new("seed_centroids", e))?;
    mark("seed_centroids", &mut timings, &mut last);

    let clustering = spherical_kmeans(&features, &seeds, cfg.kmeans_max_iter);
    mark("spherical_kmeans", &mut timings, &mut last);

    let diagnostics = PipelineDiagnostics {
        objective_trace: nmf.objective_trace,
        nmf_sweeps: nmf.sweeps,
        group_sizes: grouping.group_sizes.clone(),
        seed_indices: seeds,
        stage_timings: timings,
        warnings,
    };
    Ok(PipelineOutput {
        clustering,
        grouping,
        features,
        term_document: x,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::evaluation::purity;

    /// Three topics over disjoint vocabularies, `docs_per_topic` documents
    /// each, with deterministic term choices per document.
    pub fn planted_corpus(docs_per_topic: usize) -> (Vec<Document>, Vec<usize>) {
        let topics: [&[&str]; 3] = [
            &["goal", "match", "striker", "league", "keeper", "penalty"],
            &["tensor", "gradient", "layer", "training", "dataset", "model"],
            &["senate", "ballot", "policy", "minister", "election", "campaign"],
        ];
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for (t, vocab) in topics.iter().enumerate() {
            for d in 0..docs_per_topic {
                let mut words = Vec::new();
                for w in 0..8 {
                    words.push(vocab[(d * 3 + w * 5 + t) % vocab.len()]);
                }
                docs.push(Document::new(
                    alloc::format!("t{t}d{d}"),
                    words.join(" "),
                    Some(alloc::format!("topic{t}")),
                ));
                labels.push(t);
            }
        }
        (docs, labels)
    }

    #[test]
    fn planted_topics_perfect_purity() {
        let (docs, labels) = planted_corpus(20);
        let cfg = PipelineConfig {
            p: 3,
            q: 1,
            r: 5,
            k: 3,
            min_df: 2,
            nmf_max_sweeps: 200,
            nmf_tol: 1e-4,
            kmeans_max_iter: 300,
        };
        let out = run_nmf_fr(&docs, &cfg, &NullClock).unwrap();
        assert_eq!(purity(&out.clustering.assignments, &labels).unwrap(), 1.0);
    }

    #[test]
    fn rerun_is_bitwise_identical() {
        let (docs, _) = planted_corpus(10);
        let cfg = PipelineConfig::for_clusters(3);
        let a = run_nmf_fr(&docs, &cfg, &NullClock).unwrap();
        let b = run_nmf_fr(&docs, &cfg, &NullClock).unwrap();
        assert_eq!(a.clustering.assignments, b.clustering.assignments);
        assert_eq!(a.features, b.features);
        for (x, y) in a
            .features
            .matrix
            .data()
            .iter()
            .zip(b.features.matrix.data().iter())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn k_larger_than_n_fails_in_seeding() {
        let (docs, _) = planted_corpus(2);
        let mut cfg = PipelineConfig::for_clusters(docs.len() + 5);
        cfg.p = 3;
        cfg.r = 1;
        let err = run_nmf_fr(&docs, &cfg, &NullClock).unwrap_err();
        assert_eq!(err.stage, "seed_centroids");
        assert!(matches!(err.source, Error::NotEnoughDistinctSeeds { .. }));
    }

    #[test]
    fn stage_composition_matches_manual() {
        use crate::agglomeration::{agglomerate, group_terms, lsa_reduce};
        use crate::clustering::{knn_graph, seed_centroids, spherical_kmeans};
        use crate::corpus::build_count_matrix;
        use crate::factorization::{nmf_fit, nndsvd_init};
        use crate::weighting::tfidf;
        use alloc::string::ToString;

        let (docs, _) = planted_corpus(8);
        let cfg = PipelineConfig::for_clusters(3);
        let out = run_nmf_fr(&docs, &cfg, &NullClock).unwrap();

        let (counts, vocab) = build_count_matrix(&docs, cfg.min_df).unwrap();
        let ids = docs.iter().map(|d| d.id.to_string()).collect();
        let x = tfidf(&counts, &vocab, ids);
        let (w0, h0) = nndsvd_init(x.matrix(), cfg.p).unwrap();
        let nmf = nmf_fit(x.matrix(), &w0, &h0, cfg.nmf_max_sweeps, cfg.nmf_tol);
        let grouping = group_terms(&nmf.h);
        let features = lsa_reduce(agglomerate(&x, &grouping), cfg.q).unwrap();
        let graph = knn_graph(&features, cfg.r).unwrap();
        let seeds = seed_centroids(&graph, &features, cfg.k).unwrap();
        let manual = spherical_kmeans(&features, &seeds, cfg.kmeans_max_iter);

        assert_eq!(out.clustering, manual);
        assert_eq!(out.grouping, grouping);
        assert_eq!(out.features, features);
    }

    #[test]
    fn warns_when_p_below_k() {
        let mut cfg = PipelineConfig::for_clusters(4);
        cfg.p = 2;
        assert_eq!(cfg.warnings().len(), 1);
    }
}
