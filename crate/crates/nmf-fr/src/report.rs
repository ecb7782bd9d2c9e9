//! Result files: the JSON run result, feature-space CSV dumps, the triplet
//! export of the term-document matrix, and factor/objective dumps.
//!
//! File contents carry no timestamps or timings, so rerunning with the same
//! flags on the same corpus produces byte-identical files.

use std::fs;
use std::path::Path;

use nmf_fr_core::agglomeration::{FeatureSpace, FeatureStage};
use nmf_fr_core::corpus::Document;
use nmf_fr_core::evaluation::{ari, nmi, purity};
use nmf_fr_core::matrix::DenseMatrix;
use nmf_fr_core::pipeline::{PipelineConfig, PipelineOutput};
use nmf_fr_core::weighting::TermDocumentMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::io::class_ids;

/// Terms reported per group in the top-terms section.
pub const TOP_TERMS_LIMIT: usize = 100;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub components: usize,
    pub lsa: usize,
    pub neighbors: usize,
    pub clusters: usize,
    pub min_df: usize,
    pub nmf_max_sweeps: usize,
    pub nmf_tol: f64,
    pub kmeans_max_iter: usize,
}

impl From<&PipelineConfig> for ConfigEcho {
    fn from(cfg: &PipelineConfig) -> Self {
        Self {
            components: cfg.p,
            lsa: cfg.q,
            neighbors: cfg.r,
            clusters: cfg.k,
            min_df: cfg.min_df,
            nmf_max_sweeps: cfg.nmf_max_sweeps,
            nmf_tol: cfg.nmf_tol,
            kmeans_max_iter: cfg.kmeans_max_iter,
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DocAssignment {
    pub id: String,
    pub cluster: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct GroupReport {
    pub group: usize,
    pub size: usize,
    pub top_terms: Vec<TermWeight>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Metrics {
    pub purity: f64,
    pub nmi: f64,
    pub ari: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RunDiagnostics {
    pub nmf_sweeps: usize,
    pub objective_trace: Vec<f64>,
    pub group_sizes: Vec<usize>,
    pub kmeans_iterations: usize,
    pub inertia: f64,
    pub zero_rows: Vec<usize>,
    pub warnings: Vec<String>,
}

/// The JSON result of one `cluster` run; schema documented in the README.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RunResult {
    pub config: ConfigEcho,
    pub n_documents: usize,
    pub n_terms: usize,
    pub assignments: Vec<DocAssignment>,
    pub seed_indices: Vec<usize>,
    pub groups: Vec<GroupReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    pub diagnostics: RunDiagnostics,
}

/// Assembles the serializable run result from a pipeline output. Metrics are
/// present only when every document carries a label.
pub fn build_run_result(
    docs: &[Document],
    cfg: &PipelineConfig,
    out: &PipelineOutput,
) -> AppResult<RunResult> {
    let assignments: Vec<DocAssignment> = docs
        .iter()
        .zip(&out.clustering.assignments)
        .map(|(d, &c)| DocAssignment {
            id: d.id.clone(),
            cluster: c,
            label: d.label.clone(),
        })
        .collect();

    let vocab = out.term_document.vocabulary();
    let groups: Vec<GroupReport> = out
        .grouping
        .top_terms
        .iter()
        .enumerate()
        .map(|(g, terms)| GroupReport {
            group: g,
            size: out.grouping.group_sizes[g],
            top_terms: terms
                .iter()
                .take(TOP_TERMS_LIMIT)
                .map(|&(j, w)| TermWeight {
                    term: vocab.term(j).to_string(),
                    weight: w,
                })
                .collect(),
        })
        .collect();

    let metrics = match class_ids(docs) {
        Some(truth) => Some(Metrics {
            purity: purity(&out.clustering.assignments, &truth)?,
            nmi: nmi(&out.clustering.assignments, &truth)?,
            ari: ari(&out.clustering.assignments, &truth)?,
        }),
        None => None,
    };

    Ok(RunResult {
        config: cfg.into(),
        n_documents: out.term_document.n_documents(),
        n_terms: out.term_document.n_terms(),
        assignments,
        seed_indices: out.diagnostics.seed_indices.clone(),
        groups,
        metrics,
        diagnostics: RunDiagnostics {
            nmf_sweeps: out.diagnostics.nmf_sweeps,
            objective_trace: out.diagnostics.objective_trace.clone(),
            group_sizes: out.diagnostics.group_sizes.clone(),
            kmeans_iterations: out.clustering.iterations,
            inertia: out.clustering.inertia,
            zero_rows: out.clustering.zero_rows.clone(),
            warnings: out.diagnostics.warnings.clone(),
        },
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Invalid(format!("serializing {}: {e}", path.display())))?;
    body.push('\n');
    fs::write(path, body).map_err(|e| AppError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_run_result(path: &Path) -> AppResult<RunResult> {
    let content = fs::read_to_string(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&content).map_err(|e| AppError::BadFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Writes the document-by-feature matrix as CSV: `doc_id,f0,...,f{d-1}`.
pub fn write_features_csv(
    path: &Path,
    doc_ids: &[String],
    features: &FeatureSpace,
) -> AppResult<()> {
    let m = &features.matrix;
    let mut w = csv_writer(path)?;
    let mut header = vec!["doc_id".to_string()];
    header.extend((0..m.ncols()).map(|j| format!("f{j}")));
    write_record(&mut w, path, &header)?;
    for (i, id) in doc_ids.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(m.row(i).iter().map(|v| format_f64(*v)));
        write_record(&mut w, path, &record)?;
    }
    finish(w, path)
}

/// Reads a feature-space CSV produced by [`write_features_csv`].
pub fn read_features_csv(path: &Path) -> AppResult<(Vec<String>, DenseMatrix)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AppError::BadFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let ncols = reader
        .headers()
        .map_err(|e| AppError::BadFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .len()
        .saturating_sub(1);
    let mut ids = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AppError::BadFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if record.len() != ncols + 1 {
            return Err(AppError::BadFile {
                path: path.to_path_buf(),
                reason: format!("row {} has {} fields, expected {}", ids.len() + 2, record.len(), ncols + 1),
            });
        }
        ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            values.push(field.parse().map_err(|_| AppError::BadFile {
                path: path.to_path_buf(),
                reason: format!("bad numeric field {field:?}"),
            })?);
        }
    }
    if ids.is_empty() {
        return Err(AppError::BadFile {
            path: path.to_path_buf(),
            reason: "no data rows".into(),
        });
    }
    let n = ids.len();
    Ok((ids, DenseMatrix::from_rows(n, ncols, values)))
}

/// Round-trips a feature space through a CSV written by [`write_features_csv`].
/// The stage marker is not stored in the file; the caller supplies it.
pub fn feature_space_from_csv(path: &Path, stage: FeatureStage) -> AppResult<(Vec<String>, FeatureSpace)> {
    let (ids, matrix) = read_features_csv(path)?;
    Ok((ids, FeatureSpace { matrix, stage }))
}

/// Debug export of the weighted term-document matrix as `row,col,value`
/// triplets (nonzero entries only, row-major order).
pub fn write_triplet_csv(path: &Path, x: &TermDocumentMatrix) -> AppResult<()> {
    let mut w = csv_writer(path)?;
    write_record(&mut w, path, &["row", "col", "value"])?;
    for i in 0..x.n_documents() {
        for (j, v) in x.matrix().row(i) {
            write_record(&mut w, path, &[i.to_string(), j.to_string(), format_f64(v)])?;
        }
    }
    finish(w, path)
}

/// Dumps a dense factor as plain CSV (no header, one row per matrix row).
pub fn write_dense_csv(path: &Path, m: &DenseMatrix) -> AppResult<()> {
    let mut w = csv_writer(path)?;
    for i in 0..m.nrows() {
        let record: Vec<String> = m.row(i).iter().map(|v| format_f64(*v)).collect();
        write_record(&mut w, path, &record)?;
    }
    finish(w, path)
}

/// Dumps the per-sweep objective values, one per line with its sweep index.
pub fn write_objective_csv(path: &Path, trace: &[f64]) -> AppResult<()> {
    let mut w = csv_writer(path)?;
    write_record(&mut w, path, &["sweep", "objective"])?;
    for (i, v) in trace.iter().enumerate() {
        write_record(&mut w, path, &[i.to_string(), format_f64(*v)])?;
    }
    finish(w, path)
}

/// Plain-text top-terms report: one group per block, `term weight` lines.
pub fn write_top_terms_text(path: &Path, groups: &[GroupReport]) -> AppResult<()> {
    let mut out = String::new();
    for g in groups {
        out.push_str(&format!("group {} ({} terms)\n", g.group, g.size));
        for t in &g.top_terms {
            out.push_str(&format!("  {} {}\n", t.term, format_f64(t.weight)));
        }
    }
    fs::write(path, out).map_err(|e| AppError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Shortest representation that parses back to the identical f64.
pub fn format_f64(v: f64) -> String {
    let mut buf = ryu_format(v);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // `{}` on f64 already produces the shortest round-trippable decimal.
    format!("{v}")
}

fn csv_writer(path: &Path) -> AppResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| AppError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })
}

fn write_record<W, I, F>(w: &mut csv::Writer<W>, path: &Path, record: I) -> AppResult<()>
where
    W: std::io::Write,
    I: IntoIterator<Item = F>,
    F: AsRef<[u8]>,
{
    w.write_record(record).map_err(|e| AppError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })
}

fn finish(w: csv::Writer<fs::File>, path: &Path) -> AppResult<()> {
    w.into_inner()
        .map_err(|e| AppError::Write {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?
        .sync_all()
        .ok();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let matrix = DenseMatrix::from_rows(2, 3, vec![0.25, -1.5, 3.0, 0.1, 0.0, 7.125]);
        let fs_in = FeatureSpace {
            matrix: matrix.clone(),
            stage: FeatureStage::Agglomerated,
        };
        let ids = vec!["d0".to_string(), "d1".to_string()];
        write_features_csv(&path, &ids, &fs_in).unwrap();
        let (ids_back, m_back) = read_features_csv(&path).unwrap();
        assert_eq!(ids_back, ids);
        for (a, b) in matrix.data().iter().zip(m_back.data().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn format_round_trips_awkward_values() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn objective_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("objective.csv");
        let trace = [2.5, 1.25, 1.0 / 3.0];
        write_objective_csv(&path, &trace).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let values: Vec<f64> = reader
            .records()
            .map(|r| r.unwrap()[1].parse().unwrap())
            .collect();
        assert_eq!(values, trace);
    }
}
