use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use chrono::{Datelike, NaiveDate};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{Cache, ManifestEntry};
use super::rate_limit::{Clock, RateLimiter};
use super::transport::Transport;
use super::universe::{Cik, CompanyRecord};
use super::Filing;
use crate::error::{Error, Result};
use crate::fsutil::sha256_hex;

/// SEC fair-access ceiling.
pub const MAX_SEC_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub max_requests_per_second: f64,
    pub user_agent: String,
    pub cache_dir: PathBuf,
    pub retry_limit: u32,
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_requests_per_second > 0.0 && self.max_requests_per_second <= MAX_SEC_RATE) {
            return Err(Error::Config(format!(
                "max_requests_per_second must be in (0, {MAX_SEC_RATE}], got {}",
                self.max_requests_per_second
            )));
        }
        if self.user_agent.trim().is_empty() {
            return Err(Error::Config("user_agent must not be empty".into()));
        }
        Ok(())
    }
}

/// Inclusive range of filing years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn contains(&self, date: NaiveDate) -> bool {
        (self.start..=self.end).contains(&date.year())
    }
}

/// One row of an EDGAR `master.idx` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRow {
    pub cik: Cik,
    pub company_name: String,
    pub form_type: String,
    pub date_filed: NaiveDate,
    pub filename: String,
}

/// Parses the pipe-delimited body of a `master.idx` file. Preamble lines up
/// to the dashed separator are skipped, as are rows that do not parse.
pub fn parse_master_index(text: &str) -> Vec<IndexRow> {
    let mut lines = text.lines();
    let has_separator = text.lines().any(|l| l.starts_with("-----"));
    if has_separator {
        for line in lines.by_ref() {
            if line.starts_with("-----") {
                break;
            }
        }
    }
    lines
        .filter_map(|line| {
            let mut parts = line.split('|');
            let cik = parts.next()?.parse().ok()?;
            let company_name = parts.next()?.trim().to_string();
            let form_type = parts.next()?.trim().to_string();
            let date_filed = NaiveDate::parse_from_str(parts.next()?.trim(), "%Y-%m-%d").ok()?;
            let filename = parts.next()?.trim().to_string();
            if parts.next().is_some() || filename.is_empty() {
                return None;
            }
            Some(IndexRow {
                cik,
                company_name,
                form_type,
                date_filed,
                filename,
            })
        })
        .collect()
}

/// Fiscal year covered by a 10-K, taken as the calendar year 120 days before
/// the filing date.
pub fn fiscal_year_for(filing_date: NaiveDate) -> i32 {
    (filing_date - chrono::Duration::days(120)).year()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingRef {
    pub cik: Cik,
    pub accession_id: String,
    pub form_type: String,
    pub filing_date: NaiveDate,
    pub fiscal_year: i32,
    pub source_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedCompany {
    pub cik: Cik,
    pub ticker: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub universe_size: usize,
    pub retained: usize,
    pub entries: Vec<ManifestEntry>,
    pub dropped: Vec<DroppedCompany>,
    /// (accession_id, reason) for individual documents that failed.
    pub failed_documents: Vec<(String, String)>,
}

/// Cached entries and (accession, reason) failures for one company.
type CompanyIngest = (Vec<ManifestEntry>, Vec<(String, String)>);

pub struct EdgarClient {
    base_url: String,
    policy: FetchPolicy,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
    cache: Cache,
    include_amendments: bool,
    parallelism: usize,
}

impl EdgarClient {
    /// `base_url` is the host root, e.g. `https://www.sec.gov`.
    pub fn new(
        base_url: impl Into<String>,
        policy: FetchPolicy,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self> {
        policy.validate()?;
        let limiter = RateLimiter::new(policy.max_requests_per_second, clock.clone());
        Ok(EdgarClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            cache: Cache::new(&policy.cache_dir),
            policy,
            transport,
            clock,
            limiter,
            include_amendments: false,
            parallelism: 1,
        })
    }

    pub fn include_amendments(mut self, include: bool) -> Self {
        self.include_amendments = include;
        self
    }

    pub fn parallelism(mut self, n: usize) -> Self {
        self.parallelism = n.max(1);
        self
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    fn index_url(&self, year: i32, quarter: u8) -> String {
        format!(
            "{}/Archives/edgar/full-index/{year}/QTR{quarter}/master.idx",
            self.base_url
        )
    }

    /// GET with retries. `Ok(None)` is a definitive 404.
    fn get_with_retries(&self, url: &str, cik: &Cik) -> Result<Option<Vec<u8>>> {
        let mut last_error = String::new();
        for attempt in 0..=self.policy.retry_limit {
            if attempt > 0 {
                self.clock.sleep(Duration::from_millis(500 << (attempt - 1).min(6)));
            }
            if self.transport.is_remote() {
                self.limiter.acquire();
            }
            match self.transport.get(url, &self.policy.user_agent) {
                Ok(resp) if resp.status == 200 => return Ok(Some(resp.body)),
                Ok(resp) if resp.status == 404 => return Ok(None),
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_error = format!("http status {}", resp.status);
                }
                Ok(resp) => {
                    return Err(Error::Transient {
                        cik: cik.to_string(),
                        url: url.to_string(),
                        message: format!("http status {}", resp.status),
                    })
                }
                Err(e) => last_error = e,
            }
            warn!("fetch {url} failed (attempt {}): {last_error}", attempt + 1);
        }
        Err(Error::Transient {
            cik: cik.to_string(),
            url: url.to_string(),
            message: last_error,
        })
    }

    fn quarter_index(&self, year: i32, quarter: u8, cik: &Cik) -> Result<Vec<IndexRow>> {
        let key = Cache::index_key(year, quarter);
        if let Some(bytes) = self.cache.get(&key)? {
            return Ok(parse_master_index(&String::from_utf8_lossy(&bytes)));
        }
        if self.cache.is_marked_absent(&key) {
            return Ok(Vec::new());
        }
        match self.get_with_retries(&self.index_url(year, quarter), cik)? {
            Some(bytes) => {
                self.cache.put(&key, &bytes)?;
                Ok(parse_master_index(&String::from_utf8_lossy(&bytes)))
            }
            None => {
                self.cache.mark_absent(&key)?;
                Ok(Vec::new())
            }
        }
    }

    /// Lists the company's 10-K filings whose filing date falls in `years`,
    /// one per fiscal year (earliest filing wins), sorted by filing date.
    pub fn fetch_filing_index(&self, company: &CompanyRecord, years: YearRange) -> Result<Vec<FilingRef>> {
        let mut by_year: BTreeMap<i32, FilingRef> = BTreeMap::new();
        for year in years.start..=years.end {
            for quarter in 1..=4u8 {
                for row in self.quarter_index(year, quarter, &company.cik)? {
                    if row.cik != company.cik || !years.contains(row.date_filed) {
                        continue;
                    }
                    let wanted = row.form_type == "10-K" || (self.include_amendments && row.form_type == "10-K/A");
                    if !wanted {
                        continue;
                    }
                    let reference = FilingRef {
                        cik: row.cik.clone(),
                        accession_id: accession_from_filename(&row.filename),
                        form_type: row.form_type.clone(),
                        filing_date: row.date_filed,
                        fiscal_year: fiscal_year_for(row.date_filed),
                        source_url: format!("{}/Archives/{}", self.base_url, row.filename),
                    };
                    by_year
                        .entry(reference.fiscal_year)
                        .and_modify(|existing| {
                            if (reference.filing_date, &reference.accession_id)
                                < (existing.filing_date, &existing.accession_id)
                            {
                                *existing = reference.clone();
                            }
                        })
                        .or_insert(reference);
                }
            }
        }
        let mut refs: Vec<FilingRef> = by_year.into_values().collect();
        refs.sort_by(|a, b| (a.filing_date, &a.accession_id).cmp(&(b.filing_date, &b.accession_id)));
        Ok(refs)
    }

    /// Returns the document for `reference`, from cache when present.
    pub fn fetch_document(&self, reference: &FilingRef) -> Result<Filing> {
        let key = Cache::document_key(&reference.accession_id);
        let bytes = match self.cache.get(&key)? {
            Some(bytes) => bytes,
            None => {
                let bytes = self
                    .get_with_retries(&reference.source_url, &reference.cik)?
                    .ok_or_else(|| Error::Transient {
                        cik: reference.cik.to_string(),
                        url: reference.source_url.clone(),
                        message: "document not found".into(),
                    })?;
                if bytes.iter().all(u8::is_ascii_whitespace) {
                    return Err(Error::CorruptDocument {
                        accession_id: reference.accession_id.clone(),
                        message: "empty body".into(),
                    });
                }
                self.cache.put(&key, &bytes)?;
                bytes
            }
        };
        Ok(Filing {
            cik: reference.cik.clone(),
            accession_id: reference.accession_id.clone(),
            filing_date: reference.filing_date,
            fiscal_year: reference.fiscal_year,
            document: String::from_utf8_lossy(&bytes).into_owned(),
            source_url: reference.source_url.clone(),
        })
    }

    fn ingest_company(&self, company: &CompanyRecord, years: YearRange) -> std::result::Result<CompanyIngest, String> {
        let refs = self.fetch_filing_index(company, years).map_err(|e| e.to_string())?;
        if refs.is_empty() {
            return Err("no 10-K filings in study window".into());
        }
        let mut entries = Vec::new();
        let mut failures = Vec::new();
        for reference in &refs {
            match self.fetch_document(reference) {
                Ok(filing) => entries.push(ManifestEntry {
                    cik: filing.cik,
                    sha256: sha256_hex(filing.document.as_bytes()),
                    accession_id: filing.accession_id.clone(),
                    filing_date: filing.filing_date,
                    fiscal_year: filing.fiscal_year,
                    source_url: filing.source_url,
                    path: Cache::document_key(&filing.accession_id),
                }),
                Err(e) => failures.push((reference.accession_id.clone(), e.to_string())),
            }
        }
        if entries.is_empty() {
            return Err(format!("all {} filings failed to download", refs.len()));
        }
        Ok((entries, failures))
    }

    /// Downloads every company's filings in `years` and rewrites the cache
    /// manifest. Companies with no usable filing are dropped and reported.
    pub fn ingest(&self, universe: &[CompanyRecord], years: YearRange) -> Result<IngestReport> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let outcomes: Vec<_> = pool.install(|| {
            universe
                .par_iter()
                .map(|company| (company, self.ingest_company(company, years)))
                .collect()
        });

        let mut report = IngestReport {
            universe_size: universe.len(),
            ..Default::default()
        };
        for (company, outcome) in outcomes {
            match outcome {
                Ok((entries, failures)) => {
                    report.retained += 1;
                    report.entries.extend(entries);
                    report.failed_documents.extend(failures);
                }
                Err(reason) => {
                    warn!("dropping {} ({}): {reason}", company.ticker, company.cik);
                    report.dropped.push(DroppedCompany {
                        cik: company.cik.clone(),
                        ticker: company.ticker.clone(),
                        reason,
                    });
                }
            }
        }

        let mut manifest = self.cache.read_manifest()?;
        manifest.retain(|e| !report.entries.iter().any(|n| n.accession_id == e.accession_id));
        manifest.extend(report.entries.iter().cloned());
        self.cache.write_manifest(&manifest)?;
        report
            .entries
            .sort_by(|a, b| (&a.cik, a.filing_date, &a.accession_id).cmp(&(&b.cik, b.filing_date, &b.accession_id)));
        info!(
            "ingest retained {} of {} companies ({} filings)",
            report.retained,
            report.universe_size,
            report.entries.len()
        );
        Ok(report)
    }
}

fn accession_from_filename(filename: &str) -> String {
    let stem = filename.rsplit('/').next().unwrap_or(filename);
    stem.trim_end_matches(".txt").to_string()
}
