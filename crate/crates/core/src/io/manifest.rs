use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::write_atomic;
use crate::error::Result;

/// Name of the manifest file kept in every output directory.
pub const MANIFEST_FILE: &str = "manifest.tsv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One artifact: where it is, what it hashes to, and how it was made.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub command: String,
    pub master_seed: u64,
}

impl ManifestEntry {
    fn line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.path, self.sha256, self.command, self.master_seed
        )
    }

    fn parse(line: &str) -> Option<Self> {
        let mut it = line.split('\t');
        let path = it.next()?.to_string();
        let sha256 = it.next()?.to_string();
        let command = it.next()?.to_string();
        let master_seed = it.next()?.parse().ok()?;
        Some(ManifestEntry {
            path,
            sha256,
            command,
            master_seed,
        })
    }
}

/// Artifact writer that records a manifest line for every file it writes.
///
/// Paths in the manifest are relative to the output directory. Entries are
/// keyed by path; rewriting a file replaces its line, so reruns with the
/// same inputs leave the manifest unchanged.
#[derive(Debug)]
pub struct Manifest {
    root: PathBuf,
    command: String,
    master_seed: u64,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Opens (or starts) the manifest of `root`.
    pub fn open(root: &Path, command: impl Into<String>, master_seed: u64) -> Result<Self> {
        let existing = root.join(MANIFEST_FILE);
        let entries = match fs::read_to_string(&existing) {
            Ok(text) => text
                .lines()
                .skip(1)
                .filter_map(ManifestEntry::parse)
                .collect(),
            Err(_) => Vec::new(),
        };
        Ok(Manifest {
            root: root.to_path_buf(),
            command: command.into(),
            master_seed,
            entries,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Writes `bytes` to `root/rel` atomically and records it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        write_atomic(&path, bytes)?;
        let entry = ManifestEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            command: self.command.clone(),
            master_seed: self.master_seed,
        };
        match self.entries.iter_mut().find(|e| e.path == entry.path) {
            Some(e) => *e = entry,
            None => self.entries.push(entry),
        }
        Ok(path)
    }

    /// Persists the manifest, sorted by path.
    pub fn flush(&mut self) -> Result<()> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = String::from("path\tsha256\tcommand\tmaster_seed\n");
        for e in &self.entries {
            text.push_str(&e.line());
            text.push('\n');
        }
        write_atomic(&self.root.join(MANIFEST_FILE), text.as_bytes())
    }
}
