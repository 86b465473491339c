//! Extraction of the narrative Items 1A, 3, 7 and 7A from 10-K documents.

mod items;
mod markup;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use items::{find_item_spans, ItemSpan, TOC_MIN_BODY_CHARS};
pub use markup::{primary_document, strip_markup};

use crate::error::{Error, Result};
use crate::fsutil::sha256_hex;
use crate::ingest::{Cik, Filing};

pub const DEFAULT_MIN_ITEM_CHARS: usize = 200;

/// A span longer than this fraction of the whole document is suspect.
pub const MAX_ITEM_FRACTION: f64 = 0.40;

/// The four narrative items, in item-numeric order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ItemId {
    #[serde(rename = "1A")]
    Item1A,
    #[serde(rename = "3")]
    Item3,
    #[serde(rename = "7")]
    Item7,
    #[serde(rename = "7A")]
    Item7A,
}

impl ItemId {
    pub const ALL: [ItemId; 4] = [ItemId::Item1A, ItemId::Item3, ItemId::Item7, ItemId::Item7A];

    pub fn as_str(self) -> &'static str {
        match self {
            ItemId::Item1A => "1A",
            ItemId::Item3 => "3",
            ItemId::Item7 => "7",
            ItemId::Item7A => "7A",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ItemId::Item1A => "Risk Factors",
            ItemId::Item3 => "Legal Proceedings",
            ItemId::Item7 => "Management's Discussion and Analysis of Financial Condition and Results of Operations",
            ItemId::Item7A => "Quantitative and Qualitative Disclosures About Market Risk",
        }
    }

    fn from_heading_id(id: &str) -> Option<Self> {
        match id {
            "1A" => Some(ItemId::Item1A),
            "3" => Some(ItemId::Item3),
            "7" => Some(ItemId::Item7),
            "7A" => Some(ItemId::Item7A),
            _ => None,
        }
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Item {}", self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Found,
    Missing,
    Suspect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSet {
    pub cik: Cik,
    pub fiscal_year: i32,
    pub accession_id: String,
    pub item_1a: String,
    pub item_3: String,
    pub item_7: String,
    pub item_7a: String,
    pub extraction_flags: BTreeMap<ItemId, ItemStatus>,
}

impl ItemSet {
    pub fn text(&self, item: ItemId) -> &str {
        match item {
            ItemId::Item1A => &self.item_1a,
            ItemId::Item3 => &self.item_3,
            ItemId::Item7 => &self.item_7,
            ItemId::Item7A => &self.item_7a,
        }
    }

    fn text_mut(&mut self, item: ItemId) -> &mut String {
        match item {
            ItemId::Item1A => &mut self.item_1a,
            ItemId::Item3 => &mut self.item_3,
            ItemId::Item7 => &mut self.item_7,
            ItemId::Item7A => &mut self.item_7a,
        }
    }

    pub fn status(&self, item: ItemId) -> ItemStatus {
        self.extraction_flags.get(&item).copied().unwrap_or(ItemStatus::Missing)
    }

    /// Items with status `found`, in item-numeric order.
    pub fn found(&self) -> impl Iterator<Item = (ItemId, &str)> {
        ItemId::ALL
            .into_iter()
            .filter(|&id| self.status(id) == ItemStatus::Found)
            .map(|id| (id, self.text(id)))
    }
}

/// Spans of the target items in `plain`, in document order.
///
/// Fails with an unparseable-filing error when no target item is located.
pub fn locate_items(plain: &str) -> Result<Vec<ItemSpan>> {
    let spans = find_item_spans(plain);
    if spans.is_empty() {
        return Err(Error::UnparseableFiling {
            accession_id: String::new(),
            message: "no target item headings located".into(),
        });
    }
    Ok(spans)
}

pub fn extract_items(filing: &Filing, min_item_chars: usize) -> Result<ItemSet> {
    let unparseable = |message: &str| Error::UnparseableFiling {
        accession_id: filing.accession_id.clone(),
        message: message.to_string(),
    };
    if filing.document.trim().is_empty() {
        return Err(unparseable("empty document"));
    }
    let plain = strip_markup(primary_document(&filing.document));
    let spans = locate_items(&plain).map_err(|_| unparseable("no target item headings located"))?;
    let doc_chars = plain.chars().count();

    let mut set = ItemSet {
        cik: filing.cik.clone(),
        fiscal_year: filing.fiscal_year,
        accession_id: filing.accession_id.clone(),
        item_1a: String::new(),
        item_3: String::new(),
        item_7: String::new(),
        item_7a: String::new(),
        extraction_flags: ItemId::ALL.iter().map(|&id| (id, ItemStatus::Missing)).collect(),
    };
    for span in spans {
        let text = plain[span.start..span.end].trim();
        let chars = text.chars().count();
        let status = if chars < min_item_chars || chars as f64 > MAX_ITEM_FRACTION * doc_chars as f64 {
            ItemStatus::Suspect
        } else {
            ItemStatus::Found
        };
        *set.text_mut(span.item) = text.to_string();
        set.extraction_flags.insert(span.item, status);
    }
    if set.found().next().is_none() {
        return Err(unparseable("no item passed length checks"));
    }
    Ok(set)
}

/// Per-item regression record stored in the golden manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenItem {
    pub status: ItemStatus,
    pub sha256: String,
    pub char_count: usize,
}

pub type GoldenManifest = BTreeMap<String, BTreeMap<ItemId, GoldenItem>>;

pub fn golden_record(set: &ItemSet) -> BTreeMap<ItemId, GoldenItem> {
    ItemId::ALL
        .iter()
        .map(|&id| {
            let text = set.text(id);
            (
                id,
                GoldenItem {
                    status: set.status(id),
                    sha256: sha256_hex(text.as_bytes()),
                    char_count: text.chars().count(),
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    fn filing(document: &str) -> Filing {
        Filing {
            cik: "1".parse().unwrap(),
            accession_id: "0000000001-21-000001".into(),
            filing_date: NaiveDate::from_ymd_opt(2021, 2, 1).unwrap(),
            fiscal_year: 2020,
            document: document.into(),
            source_url: "file:///x".into(),
        }
    }

    fn para(word: &str, chars: usize) -> String {
        let sentence = format!("The {word} outlook changed during the year. ");
        sentence.repeat(chars / sentence.len() + 1)
    }

    #[test]
    fn empty_document_is_unparseable() {
        let err = extract_items(&filing("  "), 200).unwrap_err();
        assert!(
            matches!(err, Error::UnparseableFiling { ref accession_id, .. } if accession_id == "0000000001-21-000001")
        );
    }

    #[test]
    fn no_headings_is_unparseable() {
        let err = extract_items(&filing("<p>scanned image only</p>"), 200).unwrap_err();
        assert!(matches!(err, Error::UnparseableFiling { .. }));
        assert!(locate_items("no items").is_err());
    }

    #[test]
    fn flags_and_text() {
        let doc = format!(
            "<p>Item 1. Business</p><p>{}</p><p>Item 1A. Risk Factors</p><p>{}</p>\
             <p>Item 7. Management's Discussion</p><p>{}</p><p>Item 8. Financial Statements</p><p>{}</p>",
            para("business", 2000),
            para("risk", 600),
            para("sales", 900),
            para("assets", 2000),
        );
        let set = extract_items(&filing(&doc), 200).unwrap();
        assert_eq!(set.status(ItemId::Item1A), ItemStatus::Found);
        assert_eq!(set.status(ItemId::Item3), ItemStatus::Missing);
        assert_eq!(set.status(ItemId::Item7), ItemStatus::Found);
        assert_eq!(set.status(ItemId::Item7A), ItemStatus::Missing);
        assert!(set.item_1a.starts_with("The risk outlook"));
        assert!(!set.item_7.contains('<'));
        assert_eq!(set.found().count(), 2);
    }

    #[test]
    fn oversized_span_is_suspect() {
        let doc = format!(
            "<p>Item 1A. Risk Factors</p><p>{}</p><p>Item 7. MD&amp;A</p><p>{}</p><p>Item 8. Statements</p><p>{}</p>",
            para("risk", 3000),
            para("sales", 500),
            para("assets", 3000),
        );
        let set = extract_items(&filing(&doc), 200).unwrap();
        assert_eq!(set.status(ItemId::Item1A), ItemStatus::Suspect);
        assert_eq!(set.status(ItemId::Item7), ItemStatus::Found);
        // raising the minimum makes the shorter item suspect too
        let err = extract_items(&filing(&doc), 5000).unwrap_err();
        assert!(matches!(err, Error::UnparseableFiling { .. }));
    }

    #[test]
    fn extraction_is_deterministic() {
        let doc = format!(
            "<p>Item 3. Legal Proceedings</p><p>{}</p><p>Item 4.</p><p>{}</p>",
            para("court", 400),
            para("x", 900)
        );
        let a = extract_items(&filing(&doc), 200).unwrap();
        let b = extract_items(&filing(&doc), 200).unwrap();
        assert_eq!(a, b);
        assert_eq!(golden_record(&a), golden_record(&b));
    }
}
