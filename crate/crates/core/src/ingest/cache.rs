//! On-disk cache of EDGAR responses keyed by index period and accession id.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::universe::Cik;
use super::Filing;
use crate::error::{Error, Result};
use crate::fsutil::{self, sha256_hex, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub cik: Cik,
    pub accession_id: String,
    pub filing_date: NaiveDate,
    pub fiscal_year: i32,
    pub source_url: String,
    pub sha256: String,
    /// Relative to the cache root.
    pub path: String,
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_key(year: i32, quarter: u8) -> String {
        format!("index/{year}/QTR{quarter}/master.idx")
    }

    pub fn document_key(accession_id: &str) -> String {
        format!("documents/{accession_id}.txt")
    }

    pub fn get(&self, key: &str) -> Result<Option<Vec<u8>>> {
        let path = self.root.join(key);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn put(&self, key: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(key), bytes)
    }

    /// Records that the upstream resource does not exist.
    pub fn mark_absent(&self, key: &str) -> Result<()> {
        self.put(&format!("{key}.absent"), b"")
    }

    pub fn is_marked_absent(&self, key: &str) -> bool {
        self.root.join(format!("{key}.absent")).is_file()
    }

    pub fn read_manifest(&self) -> Result<Vec<ManifestEntry>> {
        let path = self.root.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        fsutil::read_json(&path)
    }

    /// Writes the manifest in canonical order so identical contents give
    /// identical bytes.
    pub fn write_manifest(&self, entries: &[ManifestEntry]) -> Result<()> {
        let mut sorted = entries.to_vec();
        sorted.sort_by(|a, b| (&a.cik, a.filing_date, &a.accession_id).cmp(&(&b.cik, b.filing_date, &b.accession_id)));
        sorted.dedup_by(|a, b| a.accession_id == b.accession_id);
        write_atomic(
            &self.root.join(MANIFEST_FILE),
            fsutil::to_json_pretty(&sorted)?.as_bytes(),
        )
    }

    /// Reads a cached document back, verifying its recorded hash.
    pub fn load_filing(&self, entry: &ManifestEntry) -> Result<Filing> {
        let path = self.root.join(&entry.path);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(Error::CorruptDocument {
                accession_id: entry.accession_id.clone(),
                message: "cached bytes do not match manifest sha256".into(),
            });
        }
        Ok(Filing {
            cik: entry.cik.clone(),
            accession_id: entry.accession_id.clone(),
            filing_date: entry.filing_date,
            fiscal_year: entry.fiscal_year,
            document: String::from_utf8_lossy(&bytes).into_owned(),
            source_url: entry.source_url.clone(),
        })
    }
}
