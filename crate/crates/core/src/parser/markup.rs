//! Markup to plain text.

use std::sync::LazyLock;

use regex::Regex;

/// Tags whose entire content is dropped.
const SKIP_CONTENT: &[&str] = &["script", "style", "noscript", "head", "ix:header", "xbrl"];

/// Tags that start a new paragraph.
const BLOCK_TAGS: &[&str] = &[
    "p",
    "div",
    "br",
    "tr",
    "li",
    "ul",
    "ol",
    "table",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "hr",
    "title",
    "center",
    "blockquote",
    "pre",
    "section",
    "article",
    "page",
    "body",
    "html",
    "document",
    "text",
    "tbody",
    "thead",
    "caption",
    "dl",
    "dt",
    "dd",
];

/// Table cells are flattened into the row with a single space. Inside a
/// table only the outermost table's rows start a paragraph; a nested table
/// stays in its enclosing cell.
const CELL_TAGS: &[&str] = &["td", "th"];

static HTML_BLOCK_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<(p|div|br|tr|table|font)\b").unwrap());
static DOCUMENT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<DOCUMENT>(.*?)(?:</DOCUMENT>|\z)").unwrap());
static TYPE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?im)^\s*<TYPE>\s*([^\s<]+)").unwrap());
static TEXT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<TEXT>(.*?)(?:</TEXT>|\z)").unwrap());

/// Selects the 10-K body from an EDGAR full-submission file. Inputs without
/// `<DOCUMENT>` wrappers are returned unchanged.
pub fn primary_document(raw: &str) -> &str {
    let mut first = None;
    for doc in DOCUMENT_RE.captures_iter(raw) {
        let body = doc.get(1).unwrap();
        let is_10k = TYPE_RE
            .captures(body.as_str())
            .is_some_and(|t| t[1].to_ascii_uppercase().starts_with("10-K"));
        let text = match TEXT_RE.captures(body.as_str()) {
            Some(t) => t.get(1).unwrap().as_str(),
            None => body.as_str(),
        };
        if is_10k {
            return text;
        }
        first.get_or_insert(text);
    }
    first.unwrap_or(raw)
}

#[derive(PartialEq)]
enum Pending {
    None,
    Space,
    Break,
}

struct Builder {
    out: String,
    pending: Pending,
}

impl Builder {
    fn push_char(&mut self, c: char) {
        if c == '\n' {
            self.brk();
        } else if c.is_whitespace() {
            self.space();
        } else {
            match self.pending {
                Pending::Break if !self.out.is_empty() => self.out.push('\n'),
                Pending::Space if !self.out.is_empty() => self.out.push(' '),
                _ => {}
            }
            self.pending = Pending::None;
            self.out.push(c);
        }
    }

    fn space(&mut self) {
        if self.pending == Pending::None {
            self.pending = Pending::Space;
        }
    }

    fn brk(&mut self) {
        self.pending = Pending::Break;
    }
}

/// Strips tags, drops script/style/head blocks and comments, decodes entity
/// references, and normalizes whitespace. Paragraphs are separated by a
/// single `\n`; within a paragraph runs of whitespace become one space.
pub fn strip_markup(document: &str) -> String {
    let html_mode = HTML_BLOCK_RE.is_match(document);
    let mut b = Builder {
        out: String::with_capacity(document.len() / 2),
        pending: Pending::None,
    };
    let mut in_pre = false;
    let mut table_depth = 0usize;
    let mut rest = document;

    while let Some(c) = rest.chars().next() {
        if c == '<' {
            if let Some(after) = rest.strip_prefix("<!--") {
                rest = after.find("-->").map_or("", |end| &after[end + 3..]);
                continue;
            }
            if let Some(tag) = parse_tag(rest) {
                let name = tag.name.as_str();
                rest = &rest[tag.len..];
                if !tag.closing && SKIP_CONTENT.contains(&name) && !tag.self_closing {
                    rest = skip_past_close(rest, name);
                    continue;
                }
                if name == "pre" {
                    in_pre = !tag.closing;
                }
                if name == "table" {
                    if tag.closing {
                        table_depth = table_depth.saturating_sub(1);
                    } else if !tag.self_closing {
                        table_depth += 1;
                    }
                }
                let row_break = match name {
                    "table" => table_depth == 0 || (!tag.closing && table_depth == 1),
                    "tr" => table_depth == 1,
                    _ => table_depth == 0,
                };
                if BLOCK_TAGS.contains(&name) && row_break {
                    b.brk();
                } else if BLOCK_TAGS.contains(&name) || CELL_TAGS.contains(&name) {
                    b.space();
                }
                continue;
            }
        }
        if c == '&' {
            if let Some((decoded, len)) = decode_entity(rest) {
                for d in decoded.chars() {
                    // nbsp and friends are plain spaces after decoding
                    if d.is_whitespace() {
                        b.space();
                    } else {
                        b.push_char(d);
                    }
                }
                rest = &rest[len..];
                continue;
            }
        }
        if c == '\n' && !(html_mode && !in_pre) {
            b.brk();
        } else if c.is_whitespace() {
            b.space();
        } else {
            b.push_char(c);
        }
        rest = &rest[c.len_utf8()..];
    }
    b.out
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    len: usize,
}

/// Parses a tag at the start of `s`. Returns `None` when the `<` does not
/// open something tag-shaped, in which case it is literal text.
fn parse_tag(s: &str) -> Option<Tag> {
    let bytes = s.as_bytes();
    let mut i = 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let first = *bytes.get(i)?;
    if !(first.is_ascii_alphabetic() || first == b'!' || first == b'?') {
        return None;
    }
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b':' | b'-' | b'_' | b'!' | b'?'))
    {
        i += 1;
    }
    let name = s[name_start..i].to_ascii_lowercase();
    // Scan to the closing '>' honoring quoted attribute values.
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        match (quote, bytes[i]) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, b'"') | (None, b'\'') => quote = Some(bytes[i]),
            (None, b'>') => {
                let self_closing = i > 0 && bytes[i - 1] == b'/';
                return Some(Tag {
                    name,
                    closing,
                    self_closing,
                    len: i + 1,
                });
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn skip_past_close<'a>(s: &'a str, name: &str) -> &'a str {
    let mut from = 0;
    while let Some(pos) = s[from..].find("</") {
        let start = from + pos + 2;
        if s.get(start..start + name.len())
            .is_some_and(|n| n.eq_ignore_ascii_case(name))
        {
            return match s[start..].find('>') {
                Some(end) => &s[start + end + 1..],
                None => "",
            };
        }
        from = start;
    }
    ""
}

fn decode_entity(s: &str) -> Option<(String, usize)> {
    let end = s[1..].find(';').map(|p| p + 1)?;
    if end > 12 {
        return None;
    }
    let body = &s[1..end];
    let decoded = if let Some(num) = body.strip_prefix('#') {
        let code = if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
            u32::from_str_radix(hex, 16).ok()?
        } else {
            num.parse::<u32>().ok()?
        };
        char::from_u32(code).map(String::from)?
    } else {
        named_entity(body)?.to_string()
    };
    Some((decoded, end + 1))
}

fn named_entity(name: &str) -> Option<&'static str> {
    Some(match name {
        "amp" | "AMP" => "&",
        "lt" | "LT" => "<",
        "gt" | "GT" => ">",
        "quot" | "QUOT" => "\"",
        "apos" => "'",
        "nbsp" | "NBSP" | "ensp" | "emsp" | "thinsp" => " ",
        "rsquo" => "\u{2019}",
        "lsquo" => "\u{2018}",
        "rdquo" => "\u{201D}",
        "ldquo" => "\u{201C}",
        "mdash" => "\u{2014}",
        "ndash" => "\u{2013}",
        "hellip" => "\u{2026}",
        "bull" => "\u{2022}",
        "middot" => "\u{00B7}",
        "copy" => "\u{00A9}",
        "reg" => "\u{00AE}",
        "trade" => "\u{2122}",
        "sect" => "\u{00A7}",
        "para" => "\u{00B6}",
        "cent" => "\u{00A2}",
        "pound" => "\u{00A3}",
        "euro" => "\u{20AC}",
        "yen" => "\u{00A5}",
        "deg" => "\u{00B0}",
        "frac12" => "\u{00BD}",
        "frac14" => "\u{00BC}",
        "frac34" => "\u{00BE}",
        _ => return None,
    })
}
