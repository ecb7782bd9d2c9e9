//! Flat key=value configuration files. Precedence: CLI flag > file > default.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{AppError, AppResult};

/// Parsed key=value pairs. Blank lines and `#` comments are ignored.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "clusters",
    "components",
    "lsa",
    "neighbors",
    "min_df",
    "trials",
    "seed",
    "jobs",
    "nmf_max_sweeps",
    "nmf_tol",
    "kmeans_max_iter",
    "methods",
];

impl Settings {
    pub fn load(path: &Path) -> AppResult<Self> {
        let content = fs::read_to_string(path).map_err(|e| AppError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut values = BTreeMap::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(AppError::BadFile {
                    path: path.to_path_buf(),
                    reason: format!("line {}: expected key=value, got {line:?}", idx + 1),
                });
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(AppError::BadFile {
                    path: path.to_path_buf(),
                    reason: format!("line {}: unknown key {key:?}", idx + 1),
                });
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> AppResult<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| AppError::Invalid(format!("config key {key}: bad value {raw:?}"))),
            None => Ok(default),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }
}
