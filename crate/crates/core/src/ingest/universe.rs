//! Company universe snapshot loading.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sector::Sector;

/// SEC Central Index Key, always stored zero-padded to 10 digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Cik(String);

impl Cik {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The CIK without leading zeros, as used in EDGAR archive paths.
    pub fn unpadded(&self) -> &str {
        let trimmed = self.0.trim_start_matches('0');
        if trimmed.is_empty() {
            "0"
        } else {
            trimmed
        }
    }
}

impl FromStr for Cik {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.len() > 10 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid cik {s:?}: expected 1 to 10 digits"));
        }
        Ok(Cik(format!("{s:0>10}")))
    }
}

impl TryFrom<String> for Cik {
    type Error = String;

    fn try_from(value: String) -> std::result::Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Cik> for String {
    fn from(cik: Cik) -> Self {
        cik.0
    }
}

impl fmt::Display for Cik {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub cik: Cik,
    pub ticker: String,
    pub sector: Sector,
    pub index_as_of: NaiveDate,
}

#[derive(Debug, Deserialize)]
struct UniverseRow {
    cik: String,
    ticker: String,
    sector: String,
}

/// Loads a `cik,ticker,sector` CSV snapshot of the index membership.
///
/// The whole file is rejected on the first malformed row, and on any
/// duplicated CIK (all duplicate pairs are reported together).
pub fn load_universe(path: &Path, index_as_of: NaiveDate) -> Result<Vec<CompanyRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_universe(file, path, index_as_of)
}

pub(crate) fn parse_universe<R: std::io::Read>(
    reader: R,
    path: &Path,
    index_as_of: NaiveDate,
) -> Result<Vec<CompanyRecord>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let malformed = |line: usize, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = csv.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["cik", "ticker", "sector"] {
        return Err(malformed(
            1,
            format!("expected header cik,ticker,sector, got {:?}", headers),
        ));
    }

    let mut records = Vec::new();
    let mut seen: HashMap<Cik, usize> = HashMap::new();
    let mut duplicates = Vec::new();
    for (i, row) in csv.deserialize::<UniverseRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| malformed(line, e.to_string()))?;
        let cik: Cik = row.cik.parse().map_err(|e| malformed(line, e))?;
        if row.ticker.is_empty() {
            return Err(malformed(line, "empty ticker".into()));
        }
        let sector: Sector = row.sector.parse().map_err(|e: Error| malformed(line, e.to_string()))?;
        if let Some(&first) = seen.get(&cik) {
            duplicates.push((cik.to_string(), first, line));
            continue;
        }
        seen.insert(cik.clone(), line);
        records.push(CompanyRecord {
            cik,
            ticker: row.ticker,
            sector,
            index_as_of,
        });
    }
    if !duplicates.is_empty() {
        return Err(Error::DuplicateCik { duplicates });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_of() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 4, 1).unwrap()
    }

    fn parse(text: &str) -> Result<Vec<CompanyRecord>> {
        parse_universe(text.as_bytes(), Path::new("universe.csv"), as_of())
    }

    #[test]
    fn single_row() {
        let recs = parse("cik,ticker,sector\n0000320193,AAPL,Information Technology\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].cik.as_str(), "0000320193");
        assert_eq!(recs[0].ticker, "AAPL");
        assert_eq!(recs[0].sector, Sector::InformationTechnology);
    }

    #[test]
    fn pads_short_ciks() {
        let recs = parse("cik,ticker,sector\n320193,AAPL,Information Technology\n").unwrap();
        assert_eq!(recs[0].cik.as_str(), "0000320193");
        assert_eq!(recs[0].cik.unpadded(), "320193");
    }

    #[test]
    fn duplicates_are_all_named() {
        let mut text = String::from("cik,ticker,sector\n");
        for i in 0..503 {
            let cik = match i {
                100 => 5,
                300 => 7,
                n => n,
            };
            text.push_str(&format!("{cik},T{i},Energy\n"));
        }
        match parse(&text) {
            Err(Error::DuplicateCik { duplicates }) => {
                assert_eq!(duplicates.len(), 2);
                assert_eq!(duplicates[0], ("0000000005".to_string(), 7, 102));
                assert_eq!(duplicates[1], ("0000000007".to_string(), 9, 302));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse("cik,ticker,sector\n1,A,Energy\nabc,B,Energy\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err}");
        let err = parse("cik,ticker,sector\n1,A,Energy\n2,B,Tech\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err}");
        let err = parse("cik,ticker,sector\n1,,Energy\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn wrong_header_rejected() {
        let err = parse("cik,symbol,sector\n1,A,Energy\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 1, .. }));
    }
}
