use std::path::{Path, PathBuf};

use cyclevc::features::{read_feature_file, FeatureSet, SpeakerStats};

use crate::error::{CliError, CliResult};

pub const FEATURE_EXT: &str = "feat";
pub const STATS_FILE: &str = "stats.json";

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::path(dir, e.to_string()))?;
    let mut out = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| CliError::path(dir, e.to_string()))?.path();
        let matches = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(ext));
        if p.is_file() && matches {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `path` itself if it is a directory, otherwise `cache_root/path`.
pub fn resolve_speaker_dir(path: &Path, cache_root: &Path) -> CliResult<PathBuf> {
    if path.is_dir() {
        return Ok(path.to_path_buf());
    }
    let under = cache_root.join(path);
    if path.is_relative() && under.is_dir() {
        return Ok(under);
    }
    Err(CliError::path(path, "no such feature directory"))
}

/// All feature files of a speaker directory as `(name, features)`.
pub fn load_features(dir: &Path) -> CliResult<Vec<(String, FeatureSet)>> {
    let files = list_files(dir, FEATURE_EXT)?;
    if files.is_empty() {
        return Err(CliError::path(dir, "contains no .feat files"));
    }
    files
        .iter()
        .map(|p| Ok((stem(p), read_feature_file(p)?)))
        .collect()
}

pub fn load_stats(dir: &Path) -> CliResult<SpeakerStats> {
    let path = dir.join(STATS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::path(&path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::path(&path, e.to_string()))
}

pub fn write_stats(dir: &Path, stats: &SpeakerStats) -> CliResult<()> {
    let path = dir.join(STATS_FILE);
    let text = serde_json::to_string_pretty(stats).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| CliError::path(&path, e.to_string()))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::path(dir, e.to_string()))
}
