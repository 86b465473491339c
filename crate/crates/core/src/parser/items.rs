//! Locating 10-K item headings in plain text.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;

use super::ItemId;

/// Minimum body length that distinguishes a real section from a
/// table-of-contents line.
pub const TOC_MIN_BODY_CHARS: usize = 200;

static ITEM_HEADING_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?im)^item\s*(\d{1,2}[a-d]?)\b").unwrap());

/// Canonical titles for item ids. Ids marked `true` may also be recognised
/// from a title-only heading line when no literal "Item N" heading for the
/// id survives the table-of-contents filter.
const TITLES: &[(&str, &str, bool)] = &[
    ("1", "business", false),
    ("1A", "risk factors", true),
    ("1B", "unresolved staff comments", true),
    ("1C", "cybersecurity", false),
    ("2", "properties", false),
    ("3", "legal proceedings", true),
    ("4", "mine safety disclosures", false),
    (
        "5",
        "market for registrant's common equity, related stockholder matters and issuer purchases of equity securities",
        false,
    ),
    ("6", "selected financial data", false),
    (
        "7",
        "management's discussion and analysis of financial condition and results of operations",
        true,
    ),
    ("7A", "quantitative and qualitative disclosures about market risk", true),
    ("8", "financial statements and supplementary data", true),
    (
        "9",
        "changes in and disagreements with accountants on accounting and financial disclosure",
        true,
    ),
    ("9A", "controls and procedures", true),
    ("9B", "other information", false),
];

fn title_pattern(title: &str) -> String {
    title
        .split_whitespace()
        .map(|word| {
            if word == "and" {
                "(?:and|&)".to_string()
            } else {
                regex::escape(word).replace('\'', "['\u{2019}]?").replace(',', ",?")
            }
        })
        .collect::<Vec<_>>()
        .join(r"\s+")
}

/// Title regex anchored at the start of the haystack, per item id.
static TITLE_PREFIX_RE: LazyLock<BTreeMap<&'static str, Regex>> = LazyLock::new(|| {
    TITLES
        .iter()
        .map(|(id, title, _)| {
            let re = Regex::new(&format!(r"(?i)^(?:the\s+)?{}\b", title_pattern(title))).unwrap();
            (*id, re)
        })
        .collect()
});

/// Title-only heading lines: the whole line is the title.
static TITLE_LINE_RE: LazyLock<Vec<(&'static str, Regex)>> = LazyLock::new(|| {
    TITLES
        .iter()
        .filter(|(_, _, fallback)| *fallback)
        .map(|(id, title, _)| {
            let re = Regex::new(&format!(r"(?im)^{}\s*[.:]?[ \t]*$", title_pattern(title))).unwrap();
            (*id, re)
        })
        .collect()
});

#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    id: String,
    /// Offset of the heading line start.
    start: usize,
    /// Offset just past the heading text.
    body_start: usize,
}

/// A half-open byte span `[start, end)` of item body text. Offsets are always
/// on character boundaries of the plain text they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemSpan {
    pub item: ItemId,
    pub start: usize,
    pub end: usize,
}

fn literal_candidates(plain: &str) -> Vec<Candidate> {
    let mut out = Vec::new();
    for caps in ITEM_HEADING_RE.captures_iter(plain) {
        let whole = caps.get(0).unwrap();
        let id = caps[1].to_ascii_uppercase();
        let after = &plain[whole.end()..];
        let line_rest = after.split('\n').next().unwrap_or("");
        let sep_len = line_rest.len()
            - line_rest
                .trim_start_matches(|c: char| c.is_whitespace() || ".:-\u{2013}\u{2014}".contains(c))
                .len();
        let separator = &line_rest[..sep_len];
        let remainder = &line_rest[sep_len..];
        let title = TITLE_PREFIX_RE.get(id.as_str()).and_then(|re| re.find(remainder));
        let has_punct = separator.chars().any(|c| !c.is_whitespace());
        // "Item 7 of this report ..." is a cross-reference, not a heading.
        if !has_punct && !remainder.is_empty() && title.is_none() {
            continue;
        }
        let mut body_start = whole.end() + sep_len;
        if let Some(t) = title {
            body_start += t.end();
            let tail = &plain[body_start..];
            let trailing = tail.len() - tail.trim_start_matches(['.', ':', ' ']).len();
            body_start += trailing;
        }
        out.push(Candidate {
            id,
            start: whole.start(),
            body_start,
        });
    }
    out
}

fn title_candidates(plain: &str, covered: &[&str]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (id, re) in TITLE_LINE_RE.iter() {
        if covered.contains(id) {
            continue;
        }
        for m in re.find_iter(plain) {
            out.push(Candidate {
                id: id.to_string(),
                start: m.start(),
                body_start: m.end(),
            });
        }
    }
    out
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn body_len(plain: &str, cand: &Candidate, next: Option<&Candidate>) -> usize {
    let end = next.map_or(plain.len(), |n| n.start);
    char_len(plain[cand.body_start.min(end)..end].trim())
}

/// Finds body spans for Items 1A, 3, 7 and 7A.
///
/// Every heading of any item is a boundary. A heading whose body (up to the
/// next heading) is shorter than [`TOC_MIN_BODY_CHARS`] is taken to be a
/// table-of-contents entry and cannot start a span. When an item survives
/// more than once, the occurrence with the longest body wins, ties going to
/// the earliest. Returns spans in document order; empty when nothing matched.
pub fn find_item_spans(plain: &str) -> Vec<ItemSpan> {
    let mut candidates = literal_candidates(plain);
    candidates.sort_by_key(|c| (c.start, c.body_start));
    // Title-only headings stand in for ids whose literal headings are all
    // table-of-contents entries (or absent).
    let surviving: Vec<&str> = candidates
        .iter()
        .enumerate()
        .filter(|(i, c)| body_len(plain, c, candidates.get(i + 1)) >= TOC_MIN_BODY_CHARS)
        .map(|(_, c)| c.id.as_str())
        .collect();
    let titled = title_candidates(plain, &surviving);
    candidates.extend(titled);
    candidates.sort_by_key(|c| (c.start, c.body_start));
    candidates.dedup_by_key(|c| c.start);

    let mut best: BTreeMap<ItemId, (usize, usize, usize)> = BTreeMap::new();
    for (i, cand) in candidates.iter().enumerate() {
        let end = candidates.get(i + 1).map_or(plain.len(), |next| next.start);
        let body_chars = body_len(plain, cand, candidates.get(i + 1));
        if body_chars < TOC_MIN_BODY_CHARS {
            continue;
        }
        let Some(item) = ItemId::from_heading_id(&cand.id) else {
            continue;
        };
        let better = match best.get(&item) {
            None => true,
            Some(&(_, _, len)) => body_chars > len,
        };
        if better {
            best.insert(item, (cand.body_start, end, body_chars));
        }
    }

    let mut spans: Vec<ItemSpan> = best
        .into_iter()
        .map(|(item, (start, end, _))| ItemSpan { item, start, end })
        .collect();
    spans.sort_by_key(|s| s.start);
    spans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filler(n: usize, word: &str) -> String {
        let mut s = String::new();
        while s.len() < n {
            s.push_str(word);
            s.push(' ');
        }
        s.trim_end().to_string()
    }

    fn body_of<'a>(plain: &'a str, spans: &[ItemSpan], item: ItemId) -> Option<&'a str> {
        spans
            .iter()
            .find(|s| s.item == item)
            .map(|s| plain[s.start..s.end].trim())
    }

    #[test]
    fn adjacent_heading_bounds_span() {
        let risk = filler(300, "risk");
        let plain = format!("Item 1A. Risk Factors\n{risk}\nItem 1B. Unresolved Staff Comments\nNone.");
        let spans = find_item_spans(&plain);
        assert_eq!(spans.len(), 1);
        assert_eq!(body_of(&plain, &spans, ItemId::Item1A), Some(risk.as_str()));
        let span = spans[0];
        assert_eq!(&plain[span.end..span.end + 8], "Item 1B.");
    }

    #[test]
    fn toc_occurrence_rejected() {
        let mda = filler(400, "revenue");
        let plain = format!(
            "Table of Contents\nItem 7. Management's Discussion and Analysis 25\n\
             Item 7A. Quantitative and Qualitative Disclosures About Market Risk 40\n\
             Item 8. Financial Statements 42\n\
             PART II\nItem 7. Management's Discussion and Analysis of Financial Condition and Results of Operations\n\
             {mda}\nItem 8. Financial Statements and Supplementary Data\n{}",
            filler(300, "balance")
        );
        let spans = find_item_spans(&plain);
        assert_eq!(spans.len(), 1);
        assert_eq!(body_of(&plain, &spans, ItemId::Item7), Some(mda.as_str()));
        assert!(spans[0].start > plain.find("PART II").unwrap());
    }

    #[test]
    fn missing_item_is_simply_absent() {
        let plain = format!(
            "Item 1A. Risk Factors\n{}\nItem 2. Properties\n{}\nItem 7. MD&A\n{}\nItem 7A. Market Risk\n{}\nItem 8. Statements\n{}",
            filler(250, "a"),
            filler(250, "b"),
            filler(250, "c"),
            filler(250, "d"),
            filler(250, "e")
        );
        let spans = find_item_spans(&plain);
        let ids: Vec<ItemId> = spans.iter().map(|s| s.item).collect();
        assert_eq!(ids, [ItemId::Item1A, ItemId::Item7, ItemId::Item7A]);
    }

    #[test]
    fn title_only_heading_fallback() {
        let market = filler(260, "hedging");
        let plain = format!(
            "Item 7. Management's Discussion and Analysis\n{}\n\
             Quantitative and Qualitative Disclosures About Market Risk\n{market}\n\
             Item 8. Financial Statements and Supplementary Data\n{}",
            filler(300, "sales"),
            filler(300, "assets")
        );
        let spans = find_item_spans(&plain);
        assert_eq!(body_of(&plain, &spans, ItemId::Item7A), Some(market.as_str()));
    }

    #[test]
    fn title_only_heading_behind_toc_entry() {
        let market = filler(260, "hedging");
        let plain = format!(
            "Item 7. Management's Discussion and Analysis 20\n\
             Item 7A. Quantitative and Qualitative Disclosures About Market Risk 31\n\
             Item 8. Financial Statements and Supplementary Data 33\n\
             Item 7. Management's Discussion and Analysis\n{}\n\
             Quantitative and Qualitative Disclosures About Market Risk\n{market}\n\
             Item 8. Financial Statements and Supplementary Data\n{}",
            filler(300, "sales"),
            filler(300, "assets")
        );
        let spans = find_item_spans(&plain);
        assert_eq!(body_of(&plain, &spans, ItemId::Item7A), Some(market.as_str()));
        assert!(body_of(&plain, &spans, ItemId::Item7).unwrap().ends_with("sales"));
    }

    #[test]
    fn cross_references_are_not_headings() {
        let plain = format!(
            "Item 7. MD&A\n{}\nItem 7 of this report also covers liquidity in depth and more.\n{}",
            filler(250, "x"),
            filler(250, "y")
        );
        let spans = find_item_spans(&plain);
        assert_eq!(spans.len(), 1);
        assert!(body_of(&plain, &spans, ItemId::Item7)
            .unwrap()
            .contains("of this report"));
    }

    #[test]
    fn longest_surviving_duplicate_wins() {
        let short = filler(220, "s");
        let long = filler(600, "l");
        let plain = format!(
            "Item 3. Legal Proceedings\n{short}\nItem 4. Mine Safety\n{}\nItem 3. Legal Proceedings\n{long}",
            filler(210, "m")
        );
        let spans = find_item_spans(&plain);
        assert_eq!(body_of(&plain, &spans, ItemId::Item3), Some(long.as_str()));
    }

    #[test]
    fn item_7a_not_confused_with_item_7() {
        let plain = format!(
            "ITEM 7A. QUANTITATIVE AND QUALITATIVE DISCLOSURES ABOUT MARKET RISK\n{}\nITEM 7. MANAGEMENT\u{2019}S DISCUSSION AND ANALYSIS OF FINANCIAL CONDITION AND RESULTS OF OPERATIONS\n{}",
            filler(250, "rates"),
            filler(250, "growth")
        );
        let spans = find_item_spans(&plain);
        assert!(body_of(&plain, &spans, ItemId::Item7A).unwrap().starts_with("rates"));
        assert!(body_of(&plain, &spans, ItemId::Item7).unwrap().starts_with("growth"));
    }

    #[test]
    fn nothing_found() {
        assert!(find_item_spans("just some words").is_empty());
        assert!(find_item_spans("").is_empty());
    }
}
