//! Stage manifests and atomic artifact writing.
//!
//! Every stage records what it read and what it wrote, each with a sha256
//! checksum, plus the seed and a hash of the effective configuration. The
//! manifest deliberately contains no timestamps and refers to files by base
//! name only, so two runs with the same inputs and seed produce byte-identical
//! manifests regardless of where or when they ran.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use callforge_core::hashing::sha256_hex;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageManifest {
    pub stage: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub counts: BTreeMap<String, u64>,
}

fn base_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Checksums an existing file. `records` is the caller's row count where one
/// makes sense (JSONL artifacts), None for opaque files.
pub fn file_entry(path: &Path, records: Option<u64>) -> Result<FileEntry> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(FileEntry { name: base_name(path), sha256: sha256_hex(&bytes), records })
}

/// Checksums content that is about to be written, avoiding a read-back.
pub fn entry_for_content(path: &Path, content: &str, records: Option<u64>) -> FileEntry {
    FileEntry {
        name: base_name(path),
        sha256: sha256_hex(content.as_bytes()),
        records,
    }
}

/// Writes via a temporary file in the same directory followed by a rename, so
/// a crash never leaves a half-written artifact behind.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| ".".into());
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::internal(format!("creating {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| CliError::internal(format!("temp file in {}: {e}", dir.display())))?;
    tmp.write_all(content.as_bytes())
        .map_err(|e| CliError::internal(format!("writing {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::internal(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

/// Writes `<stage>.manifest.json` next to the stage's other artifacts.
pub fn write_manifest(output_dir: &Path, manifest: &StageManifest) -> Result<()> {
    let mut body = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::internal(format!("serializing manifest: {e}")))?;
    body.push('\n');
    let path = output_dir.join(format!("{}.manifest.json", manifest.stage));
    write_atomic(&path, &body)
}
