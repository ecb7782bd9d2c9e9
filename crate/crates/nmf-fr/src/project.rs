//! 2-D PCA projection of a saved feature space, for external plotting.

use std::path::Path;

use nmf_fr_core::linalg::truncated_svd_best_effort;
use nmf_fr_core::matrix::DenseMatrix;
use nmf_fr_core::Error;

use crate::error::{AppError, AppResult};
use crate::report::{format_f64, read_features_csv, read_run_result};

/// One output row: document, its two principal coordinates, cluster, label.
#[derive(Debug, PartialEq)]
pub struct ProjectedRow {
    pub doc_id: String,
    pub pc1: f64,
    pub pc2: f64,
    pub cluster: usize,
    pub label: Option<String>,
}

/// Mean-centers the rows of `m` and projects them onto the top two principal
/// components. Degenerate inputs (constant rows, rank < 2) yield zero
/// coordinates on the missing components.
pub fn pca_2d(m: &DenseMatrix) -> AppResult<Vec<(f64, f64)>> {
    let (n, d) = (m.nrows(), m.ncols());
    let mut centered = DenseMatrix::zeros(n, d);
    for j in 0..d {
        let mean: f64 = (0..n).map(|i| m.get(i, j)).sum::<f64>() / n as f64;
        for i in 0..n {
            centered.set(i, j, m.get(i, j) - mean);
        }
    }
    let k = 2.min(n).min(d);
    if k == 0 {
        return Err(AppError::Invalid("empty feature space".into()));
    }
    let svd = match truncated_svd_best_effort(&centered, k, 300, 1e-10) {
        Ok(svd) => svd,
        // A constant feature space centers to zero: all coordinates are 0.
        Err(Error::ZeroMatrix) => return Ok(vec![(0.0, 0.0); n]),
        Err(e) => return Err(AppError::Core(e)),
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let pc1 = svd.u.get(i, 0) * svd.sigma[0];
        let pc2 = if k > 1 { svd.u.get(i, 1) * svd.sigma[1] } else { 0.0 };
        out.push((pc1, pc2));
    }
    Ok(out)
}

/// Joins a run result with its feature-space dump and produces one projected
/// row per document, in the run's document order.
pub fn project_run(run_path: &Path, features_path: &Path) -> AppResult<Vec<ProjectedRow>> {
    let run = read_run_result(run_path)?;
    let (ids, features) = read_features_csv(features_path)?;
    if ids.len() != run.assignments.len() {
        return Err(AppError::BadFile {
            path: features_path.to_path_buf(),
            reason: format!(
                "feature dump has {} rows but the run result has {} documents",
                ids.len(),
                run.assignments.len()
            ),
        });
    }
    for (id, a) in ids.iter().zip(&run.assignments) {
        if *id != a.id {
            return Err(AppError::BadFile {
                path: features_path.to_path_buf(),
                reason: format!(
                    "document order mismatch: feature dump has {id:?} where the run result has {:?}",
                    a.id
                ),
            });
        }
    }
    let coords = pca_2d(&features)?;
    Ok(run
        .assignments
        .into_iter()
        .zip(coords)
        .map(|(a, (pc1, pc2))| ProjectedRow {
            doc_id: a.id,
            pc1,
            pc2,
            cluster: a.cluster,
            label: a.label,
        })
        .collect())
}

/// Writes projection rows as CSV: `doc_id,pc1,pc2,cluster,label`.
pub fn write_projection_csv(path: &Path, rows: &[ProjectedRow]) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    let wrap = |e: csv::Error| AppError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    w.write_record(["doc_id", "pc1", "pc2", "cluster", "label"])
        .map_err(wrap)?;
    for row in rows {
        w.write_record([
            row.doc_id.clone(),
            format_f64(row.pc1),
            format_f64(row.pc2),
            row.cluster.to_string(),
            row.label.clone().unwrap_or_default(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| AppError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}
