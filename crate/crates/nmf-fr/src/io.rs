//! Corpus loading: JSONL files and directory-per-label trees.

use std::fs;
use std::path::{Path, PathBuf};

use nmf_fr_core::corpus::Document;
use serde::Deserialize;

use crate::error::{AppError, AppResult};

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

/// Loads a corpus from either a JSONL file (`{"id","text","label"}` per
/// line, `label` optional) or a directory whose subdirectories are labels
/// with one file per document. Document order is deterministic: line order
/// for JSONL, lexicographic path order for directories.
pub fn load_corpus(path: &Path) -> AppResult<Vec<Document>> {
    let meta = fs::metadata(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if meta.is_dir() {
        load_directory(path)
    } else {
        load_jsonl(path)
    }
}

fn load_jsonl(path: &Path) -> AppResult<Vec<Document>> {
    let content = fs::read_to_string(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut docs = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord =
            serde_json::from_str(line).map_err(|e| AppError::MalformedRecord {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
        docs.push(Document::new(record.id, record.text, record.label));
    }
    if docs.is_empty() {
        return Err(AppError::BadFile {
            path: path.to_path_buf(),
            reason: "corpus is empty".into(),
        });
    }
    check_unique_ids(path, &docs)?;
    Ok(docs)
}

fn load_directory(path: &Path) -> AppResult<Vec<Document>> {
    let mut label_dirs: Vec<PathBuf> = read_dir_sorted(path)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    label_dirs.sort();
    let mut docs = Vec::new();
    for dir in &label_dirs {
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<PathBuf> = read_dir_sorted(dir)?
            .into_iter()
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in &files {
            let text = fs::read_to_string(file).map_err(|e| AppError::Io {
                path: file.clone(),
                source: e,
            })?;
            let stem = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            docs.push(Document::new(
                format!("{label}/{stem}"),
                text,
                Some(label.clone()),
            ));
        }
    }
    if docs.is_empty() {
        return Err(AppError::BadFile {
            path: path.to_path_buf(),
            reason: "no documents found under label directories".into(),
        });
    }
    check_unique_ids(path, &docs)?;
    Ok(docs)
}

fn read_dir_sorted(path: &Path) -> AppResult<Vec<PathBuf>> {
    let mut entries = Vec::new();
    let iter = fs::read_dir(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    for entry in iter {
        let entry = entry.map_err(|e| AppError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        entries.push(entry.path());
    }
    entries.sort();
    Ok(entries)
}

fn check_unique_ids(path: &Path, docs: &[Document]) -> AppResult<()> {
    let mut seen = std::collections::HashSet::new();
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(AppError::BadFile {
                path: path.to_path_buf(),
                reason: format!("duplicate document id {:?}", d.id),
            });
        }
    }
    Ok(())
}

/// Maps label strings to dense 0-based class ids (lexicographic order).
/// Returns `None` unless every document is labeled.
pub fn class_ids(docs: &[Document]) -> Option<Vec<usize>> {
    let mut labels = Vec::with_capacity(docs.len());
    for d in docs {
        labels.push(d.label.as_deref()?);
    }
    let mut unique: Vec<&str> = labels.clone();
    unique.sort_unstable();
    unique.dedup();
    Some(
        labels
            .iter()
            .map(|l| unique.binary_search(l).unwrap())
            .collect(),
    )
}
