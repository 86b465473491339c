//! Fetching and caching 10-K filings for a fixed company universe.

mod cache;
mod client;
mod rate_limit;
mod transport;
mod universe;

pub use cache::{Cache, ManifestEntry, MANIFEST_FILE};
pub use client::{
    fiscal_year_for, parse_master_index, DroppedCompany, EdgarClient, FetchPolicy, FilingRef, IndexRow, IngestReport,
    YearRange,
};
pub use rate_limit::{Clock, RateLimiter, SystemClock};
pub use transport::{FileTransport, HttpTransport, Response, Transport};
pub use universe::{load_universe, Cik, CompanyRecord};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// One company-year annual report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filing {
    pub cik: Cik,
    pub accession_id: String,
    pub filing_date: NaiveDate,
    pub fiscal_year: i32,
    pub document: String,
    pub source_url: String,
}
