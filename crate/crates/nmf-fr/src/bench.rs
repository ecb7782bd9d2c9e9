//! Benchmark harness: NMF-FR vs seeded baselines over one or more labeled
//! corpora, with per-trial rows, mean/std aggregates, and Wilcoxon tests.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nmf_fr_core::clustering::ClusteringResult;
use nmf_fr_core::corpus::{build_count_matrix, Document};
use nmf_fr_core::evaluation::{
    ari, nmi, purity, run_baseline, stability_report, wilcoxon_signed_rank, BaselineMethod,
};
use nmf_fr_core::pipeline::{run_nmf_fr, Clock, PipelineConfig};
use nmf_fr_core::weighting::tfidf;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::io::class_ids;
use crate::report::{format_f64, write_json};

/// A clustering method the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Km,
    Skm,
    Lsakm,
    NmfFr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Km, Method::Skm, Method::Lsakm, Method::NmfFr];

    pub fn is_stochastic(self) -> bool {
        self != Method::NmfFr
    }

    fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::Km => Some(BaselineMethod::Km),
            Method::Skm => Some(BaselineMethod::Skm),
            Method::Lsakm => Some(BaselineMethod::Lsakm),
            Method::NmfFr => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Km => "KM",
            Method::Skm => "SKM",
            Method::Lsakm => "LSAKM",
            Method::NmfFr => "NMF-FR",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "KM" => Ok(Method::Km),
            "SKM" => Ok(Method::Skm),
            "LSAKM" => Ok(Method::Lsakm),
            "NMF-FR" | "NMFFR" | "NMF_FR" => Ok(Method::NmfFr),
            other => Err(format!(
                "unknown method {other:?} (expected KM, SKM, LSAKM, or NMF-FR)"
            )),
        }
    }
}

/// Everything one benchmark invocation needs.
pub struct BenchmarkSpec {
    /// `(name, documents)`; every document must be labeled.
    pub corpora: Vec<(String, Vec<Document>)>,
    pub methods: Vec<Method>,
    /// Trials per stochastic method; NMF-FR always runs once.
    pub trials: usize,
    pub base_seed: u64,
    pub config: PipelineConfig,
    /// Concurrent trial workers.
    pub jobs: usize,
    /// Extra NMF-FR reruns that must match run 0 exactly (0 = skip).
    pub verify_determinism: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TrialRow {
    pub corpus: String,
    pub method: String,
    pub trial: usize,
    /// Seed used for stochastic methods; absent for NMF-FR.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub purity: f64,
    pub nmi: f64,
    pub ari: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AggregateRow {
    pub corpus: String,
    pub method: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

/// Baseline-vs-NMF-FR signed-rank comparison across corpora.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct WilcoxonRow {
    pub baseline: String,
    pub metric: String,
    pub statistic: f64,
    pub z: f64,
    pub p_value: f64,
    pub n_used: usize,
    pub small_sample: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
    pub wilcoxon: Vec<WilcoxonRow>,
    pub notes: Vec<String>,
}

const METRICS: [&str; 3] = ["purity", "nmi", "ari"];

fn metric_values(result: &ClusteringResult, truth: &[usize]) -> AppResult<(f64, f64, f64)> {
    Ok((
        purity(&result.assignments, truth)?,
        nmi(&result.assignments, truth)?,
        ari(&result.assignments, truth)?,
    ))
}

/// Runs the whole benchmark. Rows come out ordered by
/// (corpus, method, trial) regardless of worker completion order.
pub fn run_bench(spec: &BenchmarkSpec, clock: &dyn Clock) -> AppResult<BenchReport> {
    if spec.trials == 0 {
        return Err(AppError::Invalid("trials must be at least 1".into()));
    }
    if spec.methods.is_empty() {
        return Err(AppError::Invalid("at least one method is required".into()));
    }
    let jobs = spec.jobs.max(1);

    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    let mut notes = Vec::new();
    // Per-corpus metric means, for the cross-corpus Wilcoxon pairing:
    // per method, per metric index, one value per corpus.
    let mut corpus_means: Vec<(Method, [Vec<f64>; 3])> = spec
        .methods
        .iter()
        .map(|&m| (m, [Vec::new(), Vec::new(), Vec::new()]))
        .collect();

    for (corpus_name, docs) in &spec.corpora {
        let truth = class_ids(docs).ok_or_else(|| {
            AppError::Invalid(format!(
                "corpus {corpus_name:?}: benchmarking needs a label on every document"
            ))
        })?;

        // The baselines share one TF-IDF matrix per corpus.
        let (counts, vocab) = build_count_matrix(docs, spec.config.min_df)?;
        let doc_ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
        let x = tfidf(&counts, &vocab, doc_ids);

        for &method in &spec.methods {
            let mut trial_metrics: Vec<(f64, f64, f64)> = Vec::new();
            match method.baseline() {
                None => {
                    let out = run_nmf_fr(docs, &spec.config, clock)?;
                    for rerun in 1..=spec.verify_determinism {
                        let again = run_nmf_fr(docs, &spec.config, clock)?;
                        if again.clustering.assignments != out.clustering.assignments
                            || again.features != out.features
                        {
                            return Err(AppError::DeterminismViolation { run: rerun });
                        }
                    }
                    let m = metric_values(&out.clustering, &truth)?;
                    trial_metrics.push(m);
                    rows.push(TrialRow {
                        corpus: corpus_name.clone(),
                        method: method.to_string(),
                        trial: 0,
                        seed: None,
                        purity: m.0,
                        nmi: m.1,
                        ari: m.2,
                    });
                }
                Some(baseline) => {
                    // LSAKM needs at least two latent dimensions even when the
                    // main pipeline runs with q = 1.
                    let q = if baseline == BaselineMethod::Lsakm {
                        spec.config.q.max(2)
                    } else {
                        spec.config.q
                    };
                    let results =
                        run_trials(baseline, &x, spec.config.k, q, spec.base_seed, spec.trials, jobs)?;
                    for (trial, result) in results.into_iter().enumerate() {
                        let m = metric_values(&result, &truth)?;
                        trial_metrics.push(m);
                        rows.push(TrialRow {
                            corpus: corpus_name.clone(),
                            method: method.to_string(),
                            trial,
                            seed: Some(spec.base_seed + trial as u64),
                            purity: m.0,
                            nmi: m.1,
                            ari: m.2,
                        });
                    }
                }
            }

            for (mi, metric) in METRICS.iter().enumerate() {
                let values: Vec<f64> = trial_metrics
                    .iter()
                    .map(|m| [m.0, m.1, m.2][mi])
                    .collect();
                let (mean, std) = if values.len() == 1 {
                    (values[0], 0.0)
                } else {
                    stability_report(&values)?
                };
                aggregates.push(AggregateRow {
                    corpus: corpus_name.clone(),
                    method: method.to_string(),
                    metric: metric.to_string(),
                    mean,
                    std,
                });
                let slot = corpus_means
                    .iter_mut()
                    .find(|(m, _)| *m == method)
                    .expect("method registered above");
                slot.1[mi].push(mean);
            }
        }
    }

    let mut wilcoxon = Vec::new();
    if spec.corpora.len() >= 2 && spec.methods.contains(&Method::NmfFr) {
        let reference = corpus_means
            .iter()
            .find(|(m, _)| *m == Method::NmfFr)
            .map(|(_, v)| v.clone())
            .expect("NMF-FR registered above");
        for (method, per_metric) in &corpus_means {
            if *method == Method::NmfFr {
                continue;
            }
            for (mi, metric) in METRICS.iter().enumerate() {
                match wilcoxon_signed_rank(&per_metric[mi], &reference[mi]) {
                    Ok(outcome) => wilcoxon.push(WilcoxonRow {
                        baseline: method.to_string(),
                        metric: metric.to_string(),
                        statistic: outcome.statistic,
                        z: outcome.z,
                        p_value: outcome.p_value,
                        n_used: outcome.n_used,
                        small_sample: outcome.small_sample,
                    }),
                    Err(e) => notes.push(format!(
                        "wilcoxon {method} vs NMF-FR on {metric}: {e}"
                    )),
                }
            }
        }
    }

    Ok(BenchReport {
        rows,
        aggregates,
        wilcoxon,
        notes,
    })
}

/// Runs `trials` seeded baseline repetitions with up to `jobs` workers.
/// Trial `i` always uses seed `base_seed + i`, so the output is independent
/// of scheduling.
fn run_trials(
    method: BaselineMethod,
    x: &nmf_fr_core::weighting::TermDocumentMatrix,
    k: usize,
    q: usize,
    base_seed: u64,
    trials: usize,
    jobs: usize,
) -> AppResult<Vec<ClusteringResult>> {
    let mut slots: Vec<Option<nmf_fr_core::Result<ClusteringResult>>> =
        (0..trials).map(|_| None).collect();
    let workers = jobs.min(trials);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut trial = w;
                while trial < trials {
                    out.push((
                        trial,
                        run_baseline(method, x, k, q, base_seed + trial as u64),
                    ));
                    trial += workers;
                }
                out
            }));
        }
        for handle in handles {
            for (trial, result) in handle.join().expect("benchmark worker panicked") {
                slots[trial] = Some(result);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every trial filled").map_err(AppError::from))
        .collect()
}

/// Writes `<prefix>.json`, `<prefix>.trials.csv`, `<prefix>.aggregate.csv`,
/// and (when present) `<prefix>.wilcoxon.csv`.
pub fn write_bench_report(prefix: &Path, report: &BenchReport) -> AppResult<()> {
    write_json(&with_suffix(prefix, ".json"), report)?;

    let trials_path = with_suffix(prefix, ".trials.csv");
    let mut w = csv::Writer::from_path(&trials_path).map_err(|e| AppError::Write {
        path: trials_path.clone(),
        source: std::io::Error::other(e),
    })?;
    let io_err = |path: &Path, e: csv::Error| AppError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    w.write_record(["corpus", "method", "trial", "seed", "purity", "nmi", "ari"])
        .map_err(|e| io_err(&trials_path, e))?;
    for row in &report.rows {
        w.write_record([
            row.corpus.clone(),
            row.method.clone(),
            row.trial.to_string(),
            row.seed.map(|s| s.to_string()).unwrap_or_default(),
            format_f64(row.purity),
            format_f64(row.nmi),
            format_f64(row.ari),
        ])
        .map_err(|e| io_err(&trials_path, e))?;
    }
    w.flush().map_err(|e| AppError::Write {
        path: trials_path.clone(),
        source: e,
    })?;

    let agg_path = with_suffix(prefix, ".aggregate.csv");
    let mut w = csv::Writer::from_path(&agg_path).map_err(|e| AppError::Write {
        path: agg_path.clone(),
        source: std::io::Error::other(e),
    })?;
    w.write_record(["corpus", "method", "metric", "mean", "std"])
        .map_err(|e| io_err(&agg_path, e))?;
    for row in &report.aggregates {
        w.write_record([
            row.corpus.clone(),
            row.method.clone(),
            row.metric.clone(),
            format_f64(row.mean),
            format_f64(row.std),
        ])
        .map_err(|e| io_err(&agg_path, e))?;
    }
    w.flush().map_err(|e| AppError::Write {
        path: agg_path.clone(),
        source: e,
    })?;

    if !report.wilcoxon.is_empty() {
        let wil_path = with_suffix(prefix, ".wilcoxon.csv");
        let mut w = csv::Writer::from_path(&wil_path).map_err(|e| AppError::Write {
            path: wil_path.clone(),
            source: std::io::Error::other(e),
        })?;
        w.write_record([
            "baseline",
            "metric",
            "statistic",
            "z",
            "p_value",
            "n_used",
            "small_sample",
        ])
        .map_err(|e| io_err(&wil_path, e))?;
        for row in &report.wilcoxon {
            w.write_record([
                row.baseline.clone(),
                row.metric.clone(),
                format_f64(row.statistic),
                format_f64(row.z),
                format_f64(row.p_value),
                row.n_used.to_string(),
                row.small_sample.to_string(),
            ])
            .map_err(|e| io_err(&wil_path, e))?;
        }
        w.flush().map_err(|e| AppError::Write {
            path: wil_path.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    std::path::PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nmf_fr_core::pipeline::NullClock;

    fn labeled_corpus(docs_per_topic: usize) -> Vec<Document> {
        let topics: [&[&str]; 3] = [
            &["goal", "match", "striker", "league", "keeper", "penalty"],
            &["tensor", "gradient", "layer", "training", "dataset", "model"],
            &["senate", "ballot", "policy", "minister", "election", "campaign"],
        ];
        let mut docs = Vec::new();
        for (t, vocab) in topics.iter().enumerate() {
            for d in 0..docs_per_topic {
                let words: Vec<&str> = (0..8).map(|w| vocab[(d * 3 + w * 5 + t) % vocab.len()]).collect();
                docs.push(Document::new(
                    format!("t{t}d{d}"),
                    words.join(" "),
                    Some(format!("topic{t}")),
                ));
            }
        }
        docs
    }

    fn spec_for(corpora: Vec<(String, Vec<Document>)>, trials: usize, jobs: usize) -> BenchmarkSpec {
        let mut config = PipelineConfig::for_clusters(3);
        config.p = 3;
        BenchmarkSpec {
            corpora,
            methods: vec![Method::Km, Method::NmfFr],
            trials,
            base_seed: 7,
            config,
            jobs,
            verify_determinism: 2,
        }
    }

    #[test]
    fn row_counts_and_order() {
        let spec = spec_for(vec![("c0".into(), labeled_corpus(10))], 4, 2);
        let report = run_bench(&spec, &NullClock).unwrap();
        assert_eq!(report.rows.len(), 4 + 1);
        let kinds: Vec<(&str, usize)> = report
            .rows
            .iter()
            .map(|r| (r.method.as_str(), r.trial))
            .collect();
        assert_eq!(
            kinds,
            vec![("KM", 0), ("KM", 1), ("KM", 2), ("KM", 3), ("NMF-FR", 0)]
        );
        assert_eq!(report.aggregates.len(), 2 * 3);
        assert!(report.wilcoxon.is_empty(), "single corpus has no test");
    }

    #[test]
    fn jobs_do_not_change_results() {
        let serial = run_bench(&spec_for(vec![("c0".into(), labeled_corpus(8))], 6, 1), &NullClock).unwrap();
        let parallel = run_bench(&spec_for(vec![("c0".into(), labeled_corpus(8))], 6, 4), &NullClock).unwrap();
        assert_eq!(serial.rows, parallel.rows);
        assert_eq!(serial.aggregates, parallel.aggregates);
    }

    #[test]
    fn wilcoxon_block_present_with_two_corpora() {
        let spec = spec_for(
            vec![
                ("c0".into(), labeled_corpus(8)),
                ("c1".into(), labeled_corpus(12)),
            ],
            3,
            2,
        );
        let report = run_bench(&spec, &NullClock).unwrap();
        // Some metric pairs may be all-zero-difference (both methods perfect);
        // each such pair lands in `notes` instead of a row.
        assert_eq!(report.wilcoxon.len() + report.notes.len(), 3);
        for row in &report.wilcoxon {
            assert!(row.small_sample, "n=2 pairs must warn");
        }
    }

    #[test]
    fn unlabeled_corpus_rejected() {
        let mut docs = labeled_corpus(4);
        docs[0].label = None;
        let spec = spec_for(vec![("c0".into(), docs)], 2, 1);
        assert!(matches!(run_bench(&spec, &NullClock), Err(AppError::Invalid(_))));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("km".parse::<Method>().unwrap(), Method::Km);
        assert_eq!("NMF-FR".parse::<Method>().unwrap(), Method::NmfFr);
        assert!("pca".parse::<Method>().is_err());
    }

    #[test]
    fn report_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("bench");
        let spec = spec_for(vec![("c0".into(), labeled_corpus(6))], 2, 1);
        let report = run_bench(&spec, &NullClock).unwrap();
        write_bench_report(&prefix, &report).unwrap();
        assert!(dir.path().join("bench.json").exists());
        assert!(dir.path().join("bench.trials.csv").exists());
        assert!(dir.path().join("bench.aggregate.csv").exists());
    }
}
