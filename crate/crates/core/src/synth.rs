//! Deterministic synthetic corpus: a small company universe, an EDGAR-style
//! mirror of full-submission 10-K files with quarterly indexes, daily price
//! files whose drift follows the tone of each filing, and a config that runs
//! the whole pipeline offline.
//!
//! The documents deliberately include table-of-contents traps, missing and
//! title-only headings, entities, scripts, images, nested tables, exhibits,
//! plain-text layouts, and two filings with no locatable items.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{to_json_pretty, write_atomic};
use crate::ingest::Cik;
use crate::labeler::PriceSeries;
use crate::sector::Sector;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const FIRST_FISCAL_YEAR: i32 = 2019;
pub const LAST_FISCAL_YEAR: i32 = 2021;
pub const CONFIG_FILE: &str = "config.json";

const COMPANIES: &[(&str, &str, Sector)] = &[
    ("Arbor Telecom", "ARBT", Sector::CommunicationServices),
    ("Beacon Motors", "BCNM", Sector::ConsumerDiscretionary),
    ("Cedar Foods", "CDRF", Sector::ConsumerStaples),
    ("Delta Drilling", "DLTD", Sector::Energy),
    ("Evergreen Bancorp", "EVGB", Sector::Financials),
    ("Fulcrum Health", "FLCH", Sector::HealthCare),
    ("Granite Industrial", "GRNI", Sector::Industrials),
    ("Helix Software", "HLXS", Sector::InformationTechnology),
    ("Ironwood Chemicals", "IRWC", Sector::Materials),
    ("Juniper Realty", "JUNR", Sector::RealEstate),
    ("Keystone Power", "KSPW", Sector::Utilities),
    ("Lumen Media", "LMNM", Sector::CommunicationServices),
    ("Meridian Apparel", "MRDA", Sector::ConsumerDiscretionary),
    ("Northstar Grocers", "NSGR", Sector::ConsumerStaples),
    ("Orion Petroleum", "ORNP", Sector::Energy),
    ("Pinnacle Insurance", "PNCI", Sector::Financials),
    ("Quarry Biotech", "QRYB", Sector::HealthCare),
    ("Ridge Logistics", "RDGL", Sector::Industrials),
    ("Summit Semiconductor", "SMTS", Sector::InformationTechnology),
    ("Tidewater Metals", "TDWM", Sector::Materials),
];

/// (company index, fiscal year) of the filings with no locatable items.
const UNPARSEABLE: &[(usize, i32)] = &[(7, 2021), (13, 2019)];

/// Company whose price history starts mid-sample, leaving its early filings
/// unlabelable.
const LATE_LISTING: (usize, &str) = (17, "2021-06-01");

const PRICE_START: &str = "2019-12-02";
const PRICE_END: &str = "2023-02-15";

fn product(sector: Sector) -> (&'static str, &'static str) {
    match sector {
        Sector::CommunicationServices => ("wireless and broadband", "Network Services"),
        Sector::ConsumerDiscretionary => ("consumer durable", "Retail"),
        Sector::Energy => ("crude oil and natural gas", "Upstream"),
        Sector::InformationTechnology => ("software and semiconductor", "Enterprise Solutions"),
        Sector::HealthCare => ("pharmaceutical and device", "Clinical Products"),
        Sector::Financials => ("lending and insurance", "Commercial Banking"),
        Sector::Utilities => ("regulated electric", "Transmission"),
        Sector::ConsumerStaples => ("packaged food", "Grocery"),
        Sector::Industrials => ("machinery and freight", "Engineered Systems"),
        Sector::RealEstate => ("office and residential leasing", "Property Operations"),
        Sector::Materials => ("specialty chemical and metals", "Performance Materials"),
    }
}

const POSITIVE: &[&str] = &[
    "Net sales grew {pct}% on record demand for our {product} products.",
    "Operating margin expanded as pricing gains and productivity offset cost inflation.",
    "Backlog reached a record level, supporting continued growth into fiscal {next}.",
    "We generated strong free cash flow and increased the quarterly dividend.",
    "Customer retention improved and new contract wins accelerated our momentum.",
    "Liquidity remains robust with ample availability under our revolving credit facility.",
    "Demand in the {segment} segment was strong and order intake exceeded plan.",
    "We completed the expansion of our largest facility ahead of schedule and under budget.",
];

const NEGATIVE: &[&str] = &[
    "Net sales declined {pct}% as demand for our {product} products weakened.",
    "We recorded goodwill impairment charges related to the {segment} segment.",
    "Restructuring costs and litigation expenses reduced operating income.",
    "Rising borrowing costs and covenant restrictions constrained our liquidity.",
    "Customer losses and pricing pressure caused a shortfall against our operating plan.",
    "Management observed a downturn in order intake late in the fiscal year.",
    "We suspended share repurchases to preserve cash amid deteriorating conditions.",
    "Inventory write-downs and plant closures weighed on gross margin.",
];

const NEUTRAL: &[&str] = &[
    "{name} operates through the {segment} segment and serves customers in North America and Europe.",
    "The following discussion should be read together with our consolidated financial statements.",
    "We evaluate performance using segment operating income and adjusted operating cash flow.",
    "Seasonal patterns typically produce higher revenue in the fourth calendar quarter.",
    "Our products are sold through direct sales personnel, distributors, and online channels.",
    "We had approximately {employees} full-time employees at the end of fiscal {year}.",
    "Capital expenditures are funded from operating cash flow and available credit lines.",
    "Critical accounting estimates include revenue recognition, income taxes, and goodwill.",
    "Our headquarters are located in a leased facility with a term expiring in {expiry}.",
    "Raw materials are purchased from multiple suppliers under annual agreements.",
];

const RISKS: &[&str] = &[
    "Changes in economic conditions could reduce demand for our {product} products.",
    "We depend on a limited number of suppliers for certain critical components.",
    "Cybersecurity incidents could disrupt operations and expose us to liability.",
    "Our indebtedness could limit our flexibility in operating the business.",
    "Fluctuations in foreign currency exchange rates may affect reported results.",
    "We are subject to extensive regulation, and changes in law could increase costs.",
    "The loss of key personnel could adversely affect our operations.",
];

const LEGAL: &[&str] = &[
    "From time to time we are party to legal proceedings arising in the ordinary course of business.",
    "We do not believe the outcome of any pending matter will have a material adverse effect on our financial position.",
    "Environmental claims relating to former operating sites are subject to ongoing review by state agencies.",
    "We maintain insurance coverage for certain product liability and employment claims.",
];

const LEGAL_NEGATIVE: &[&str] = &[
    "A putative class action alleging violations of securities laws was filed against the Company and certain officers.",
    "A regulator issued a subpoena requesting documents concerning our sales practices, and we are cooperating fully.",
];

const MARKET: &[&str] = &[
    "We are exposed to market risk from changes in interest rates on our variable-rate borrowings.",
    "A hypothetical 100 basis point increase in interest rates would change annual interest expense by approximately ${rate_impact} million.",
    "We use forward contracts to hedge a portion of forecasted foreign currency transactions.",
    "Commodity price exposure is managed through fixed-price supply agreements where practical.",
];

/// Layout features of one generated filing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub plain_text: bool,
    pub toc: bool,
    pub missing_item_3: bool,
    pub title_only_7a: bool,
    pub script_and_images: bool,
    pub nested_table: bool,
    pub cross_reference: bool,
    pub unparseable: bool,
}

impl Layout {
    fn for_index(k: usize, unparseable: bool) -> Self {
        Layout {
            plain_text: k % 5 == 4,
            toc: k.is_multiple_of(2),
            missing_item_3: k % 7 == 3,
            title_only_7a: k % 6 == 1,
            script_and_images: k.is_multiple_of(3),
            nested_table: k % 4 == 2,
            cross_reference: k % 3 == 1,
            unparseable,
        }
    }
}

/// Ground truth for one generated filing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFiling {
    pub cik: Cik,
    pub ticker: String,
    pub fiscal_year: i32,
    pub filing_date: NaiveDate,
    pub accession_id: String,
    /// +1 for an optimistic filing, -1 for a pessimistic one.
    pub tone: i8,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub companies: usize,
    pub filings: Vec<SynthFiling>,
}

struct Company {
    name: &'static str,
    ticker: &'static str,
    sector: Sector,
    cik: Cik,
}

fn companies() -> Vec<Company> {
    COMPANIES
        .iter()
        .enumerate()
        .map(|(i, &(name, ticker, sector))| Company {
            name,
            ticker,
            sector,
            cik: format!("{}", 1_000_003 + 37 * i).parse().expect("valid cik"),
        })
        .collect()
}

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("literal date")
}

fn fill(template: &str, vars: &BTreeMap<&str, String>) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

struct Writer<'a> {
    rng: &'a mut ChaCha8Rng,
    vars: BTreeMap<&'static str, String>,
    tone: i8,
}

impl Writer<'_> {
    fn pick(&mut self, pool: &[&str]) -> String {
        let t = *pool.choose(self.rng).expect("non-empty pool");
        self.vars.insert("pct", self.rng.random_range(3..19).to_string());
        fill(t, &self.vars)
    }

    /// A paragraph mixing neutral sentences with tone-bearing ones.
    fn paragraph(&mut self, base: &[&str], sentences: usize, tone_share: f64) -> String {
        let mut out = Vec::with_capacity(sentences);
        for _ in 0..sentences {
            let s = if self.rng.random_bool(tone_share) {
                let pool = if self.tone > 0 { POSITIVE } else { NEGATIVE };
                self.pick(pool)
            } else {
                self.pick(base)
            };
            out.push(s);
        }
        out.join(" ")
    }

    fn paragraphs(&mut self, base: &[&str], count: usize, tone_share: f64) -> Vec<String> {
        (0..count)
            .map(|_| {
                let n = self.rng.random_range(3..6);
                self.paragraph(base, n, tone_share)
            })
            .collect()
    }
}

struct Section {
    heading: Option<(String, String)>,
    paragraphs: Vec<String>,
    table: Option<Vec<Vec<String>>>,
}

fn section(id: &str, title: &str, paragraphs: Vec<String>) -> Section {
    Section {
        heading: Some((format!("Item {id}."), title.to_string())),
        paragraphs,
        table: None,
    }
}

fn financial_rows(rng: &mut ChaCha8Rng, fy: i32) -> Vec<Vec<String>> {
    let labels = [
        "Net sales",
        "Cost of sales",
        "Gross profit",
        "Selling, general and administrative",
        "Operating income",
        "Interest expense",
        "Income before taxes",
        "Net income",
        "Total assets",
        "Total liabilities",
        "Cash and equivalents",
        "Long-term debt",
    ];
    let mut rows = vec![vec![
        "(in millions)".to_string(),
        format!("Fiscal {fy}"),
        format!("Fiscal {}", fy - 1),
    ]];
    for l in labels {
        let a: u32 = rng.random_range(100..9000);
        let b: u32 = rng.random_range(100..9000);
        rows.push(vec![
            l.to_string(),
            format!("{a},{:03}", a % 1000),
            format!("{b},{:03}", b % 1000),
        ]);
    }
    rows
}

fn sections(c: &Company, f: &SynthFiling, rng: &mut ChaCha8Rng) -> Vec<Section> {
    let (product, segment) = product(c.sector);
    let mut vars = BTreeMap::new();
    vars.insert("name", c.name.to_string());
    vars.insert("product", product.to_string());
    vars.insert("segment", segment.to_string());
    vars.insert("year", f.fiscal_year.to_string());
    vars.insert("next", (f.fiscal_year + 1).to_string());
    vars.insert(
        "employees",
        format!("{},{:03}", rng.random_range(1..40), rng.random_range(0..1000)),
    );
    vars.insert("expiry", (f.fiscal_year + rng.random_range(3..12)).to_string());
    vars.insert("rate_impact", format!("{:.1}", rng.random_range(0.5..9.5)));
    let mut w = Writer {
        rng,
        vars,
        tone: f.tone,
    };
    let l = f.layout;

    let mut out = Vec::new();
    out.push(Section {
        heading: None,
        paragraphs: vec!["PART I".into()],
        table: None,
    });
    out.push(section("1", "Business", w.paragraphs(NEUTRAL, 4, 0.2)));
    let mut risks = w.paragraphs(RISKS, 4, 0.15);
    if l.cross_reference {
        risks.insert(
            2,
            "Item 7 of this report contains additional discussion of liquidity and capital resources.".into(),
        );
    }
    out.push(section("1A", "Risk Factors", risks));
    out.push(section("1B", "Unresolved Staff Comments", vec!["None.".into()]));
    out.push(section("2", "Properties", w.paragraphs(NEUTRAL, 1, 0.0)));
    if !l.missing_item_3 {
        let mut legal = w.paragraphs(LEGAL, 1, 0.0);
        if f.tone < 0 {
            legal.push(w.pick(LEGAL_NEGATIVE));
        }
        legal.push(w.paragraph(LEGAL, 2, 0.0));
        out.push(section("3", "Legal Proceedings", legal));
    }
    out.push(section("4", "Mine Safety Disclosures", vec!["Not applicable.".into()]));
    out.push(Section {
        heading: None,
        paragraphs: vec!["PART II".into()],
        table: None,
    });
    out.push(section(
        "5",
        "Market for Registrant\u{2019}s Common Equity, Related Stockholder Matters and Issuer Purchases of Equity Securities",
        w.paragraphs(NEUTRAL, 1, 0.0),
    ));
    let mut mda = section(
        "7",
        "Management\u{2019}s Discussion and Analysis of Financial Condition and Results of Operations",
        w.paragraphs(NEUTRAL, 6, 0.3),
    );
    if l.nested_table {
        mda.table = Some(vec![
            vec!["Segment".into(), "Net sales".into(), "Operating income".into()],
            vec![segment.into(), "1,204".into(), "187".into()],
            vec!["Corporate".into(), "\u{2014}".into(), "(42)".into()],
        ]);
    }
    out.push(mda);
    let market = w.paragraphs(MARKET, 2, 0.0);
    out.push(if l.title_only_7a {
        Section {
            heading: Some((
                String::new(),
                "Quantitative and Qualitative Disclosures About Market Risk".into(),
            )),
            paragraphs: market,
            table: None,
        }
    } else {
        section(
            "7A",
            "Quantitative and Qualitative Disclosures About Market Risk",
            market,
        )
    });
    let rows = financial_rows(w.rng, f.fiscal_year);
    let mut statements = section(
        "8",
        "Financial Statements and Supplementary Data",
        w.paragraphs(NEUTRAL, 3, 0.0),
    );
    statements.table = Some(rows);
    out.push(statements);
    out.push(section(
        "9",
        "Changes in and Disagreements with Accountants on Accounting and Financial Disclosure",
        vec!["None.".into()],
    ));
    out.push(section(
        "9A",
        "Controls and Procedures",
        vec![
            "Our principal executive and financial officers evaluated the effectiveness of our disclosure controls and procedures and concluded they were effective as of the end of the period covered by this report."
                .into(),
        ],
    ));
    out
}

fn toc_entries() -> Vec<(&'static str, &'static str, u32)> {
    vec![
        ("1", "Business", 3),
        ("1A", "Risk Factors", 9),
        ("1B", "Unresolved Staff Comments", 21),
        ("2", "Properties", 21),
        ("3", "Legal Proceedings", 22),
        ("4", "Mine Safety Disclosures", 22),
        ("5", "Market for Registrant's Common Equity", 23),
        ("7", "Management's Discussion and Analysis", 25),
        ("7A", "Quantitative and Qualitative Disclosures About Market Risk", 38),
        ("8", "Financial Statements and Supplementary Data", 39),
        ("9A", "Controls and Procedures", 71),
    ]
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('\u{2019}', "&#8217;")
        .replace('\u{2014}', "&mdash;")
}

fn render_html(c: &Company, f: &SynthFiling, secs: &[Section]) -> String {
    let l = f.layout;
    let mut h = String::new();
    writeln!(h, "<html><head><title>{} Form 10-K {}</title>", c.ticker, f.fiscal_year).unwrap();
    h.push_str("<style type=\"text/css\">p { margin: 0 } .toc td { padding: 2px }</style>\n");
    if l.script_and_images {
        h.push_str("<script type=\"text/javascript\">var nav = \"Item 7. Management's Discussion\"; if (a < b) { go(); }</script>\n");
    }
    h.push_str("</head><body>\n");
    if l.script_and_images {
        writeln!(
            h,
            "<div><img src=\"{}_logo.jpg\" alt=\"Item 1A Risk Factors\"></div>",
            c.ticker.to_lowercase()
        )
        .unwrap();
    }
    writeln!(
        h,
        "<div align=\"center\"><font size=\"4\"><b>UNITED STATES<br>SECURITIES AND EXCHANGE COMMISSION</b></font></div>\n\
         <div align=\"center\"><b>FORM 10-K</b></div>\n\
         <p>ANNUAL REPORT PURSUANT TO SECTION 13 OR 15(d) OF THE SECURITIES EXCHANGE ACT OF 1934 for the fiscal year ended December&nbsp;31,&nbsp;{}</p>\n\
         <p><b>{}</b> (Exact name of registrant as specified in its charter)</p>",
        f.fiscal_year,
        html_escape(c.name)
    )
    .unwrap();
    if l.toc {
        h.push_str("<p><b>TABLE OF CONTENTS</b></p>\n<table class=\"toc\">\n");
        for (id, title, page) in toc_entries() {
            writeln!(
                h,
                "<tr><td>Item&nbsp;{id}.</td><td><a href=\"#i{}\">{}</a></td><td align=\"right\">{page}</td></tr>",
                id.to_lowercase(),
                html_escape(title)
            )
            .unwrap();
        }
        h.push_str("</table>\n<hr>\n");
    }
    for s in secs {
        match &s.heading {
            Some((label, title)) if label.is_empty() => {
                writeln!(h, "<p style=\"font-weight:bold\">{}</p>", html_escape(title)).unwrap();
            }
            Some((label, title)) => {
                writeln!(
                    h,
                    "<p><a name=\"i{}\"></a><b>{}&nbsp;{}</b></p>",
                    label.trim_start_matches("Item ").trim_end_matches('.').to_lowercase(),
                    label,
                    html_escape(title)
                )
                .unwrap();
            }
            None => {}
        }
        for p in &s.paragraphs {
            writeln!(h, "<p>{}</p>", html_escape(p)).unwrap();
        }
        if let Some(rows) = &s.table {
            let nested = s.heading.as_ref().is_some_and(|(l, _)| l == "Item 7.");
            if nested {
                h.push_str("<table><tr><td>\n");
            }
            h.push_str("<table border=\"0\">\n");
            for row in rows {
                h.push_str("<tr>");
                for cell in row {
                    write!(h, "<td>{}</td>", html_escape(cell)).unwrap();
                }
                h.push_str("</tr>\n");
            }
            h.push_str("</table>\n");
            if nested {
                h.push_str("</td></tr></table>\n");
            }
        }
        if l.script_and_images && s.heading.as_ref().is_some_and(|(l, _)| l == "Item 8.") {
            h.push_str("<p><img src=\"chart1.jpg\"></p>\n");
        }
    }
    h.push_str("<!-- Item 3. Legal Proceedings: see note 12 -->\n</body></html>\n");
    h
}

fn render_plain(c: &Company, f: &SynthFiling, secs: &[Section]) -> String {
    let mut t = String::new();
    writeln!(
        t,
        "UNITED STATES\nSECURITIES AND EXCHANGE COMMISSION\nWashington, D.C. 20549\n\nFORM 10-K\n\n\
         ANNUAL REPORT PURSUANT TO SECTION 13 OR 15(d) OF THE SECURITIES EXCHANGE ACT OF 1934\n\
         For the fiscal year ended December 31, {}\n\n{}\n",
        f.fiscal_year,
        c.name.to_uppercase()
    )
    .unwrap();
    if f.layout.toc {
        t.push_str("TABLE OF CONTENTS\n\n");
        for (id, title, page) in toc_entries() {
            writeln!(t, "Item {id}.  {title:<62}{page:>4}").unwrap();
        }
        t.push('\n');
    }
    for s in secs {
        match &s.heading {
            Some((label, title)) if label.is_empty() => writeln!(t, "{}\n", title.to_uppercase()).unwrap(),
            Some((label, title)) => writeln!(t, "{}  {}\n", label.to_uppercase(), title.to_uppercase()).unwrap(),
            None => {}
        }
        for p in &s.paragraphs {
            writeln!(t, "{p}\n").unwrap();
        }
        if let Some(rows) = &s.table {
            for row in rows {
                writeln!(
                    t,
                    "    {:<40}{:>14}{:>14}",
                    row[0],
                    row[1],
                    row.get(2).map_or("", |s| s.as_str())
                )
                .unwrap();
            }
            t.push('\n');
        }
    }
    t
}

fn render_unparseable(c: &Company, f: &SynthFiling, variant: usize) -> String {
    if variant == 0 {
        format!(
            "<html><body>\n<div align=\"center\"><b>FORM 10-K</b></div>\n\
             <p>{} annual report for fiscal {}.</p>\n\
             <p>The information required by Parts I through IV of this form is incorporated by reference \
             to the Annual Report to Shareholders filed as Exhibit 13, which is not reproduced here.</p>\n\
             </body></html>\n",
            html_escape(c.name),
            f.fiscal_year
        )
    } else {
        let mut h = String::from("<html><body>\n<p>[Paper filing: scanned pages follow]</p>\n");
        for page in 1..=40 {
            writeln!(h, "<p><img src=\"page{page:03}.png\" alt=\"page {page}\"></p>").unwrap();
        }
        h.push_str("</body></html>\n");
        h
    }
}

fn submission(c: &Company, f: &SynthFiling, body: &str) -> String {
    let mut s = String::new();
    let filed = f.filing_date.format("%Y%m%d");
    writeln!(s, "<SEC-DOCUMENT>{}.txt : {filed}", f.accession_id).unwrap();
    writeln!(s, "<SEC-HEADER>{}.hdr.sgml : {filed}", f.accession_id).unwrap();
    writeln!(s, "ACCESSION NUMBER:\t\t{}", f.accession_id).unwrap();
    writeln!(s, "CONFORMED SUBMISSION TYPE:\t10-K").unwrap();
    writeln!(s, "PUBLIC DOCUMENT COUNT:\t\t3").unwrap();
    writeln!(s, "CONFORMED PERIOD OF REPORT:\t{}1231", f.fiscal_year).unwrap();
    writeln!(s, "FILED AS OF DATE:\t\t{filed}").unwrap();
    writeln!(
        s,
        "FILER:\n\tCOMPANY DATA:\n\t\tCOMPANY CONFORMED NAME:\t\t\t{}",
        c.name.to_uppercase()
    )
    .unwrap();
    writeln!(s, "\t\tCENTRAL INDEX KEY:\t\t\t{}", c.cik).unwrap();
    writeln!(s, "</SEC-HEADER>").unwrap();
    let ext = if f.layout.plain_text { "txt" } else { "htm" };
    writeln!(
        s,
        "<DOCUMENT>\n<TYPE>10-K\n<SEQUENCE>1\n<FILENAME>{}-10k_{}.{ext}\n<DESCRIPTION>ANNUAL REPORT\n<TEXT>\n{body}</TEXT>\n</DOCUMENT>",
        c.ticker.to_lowercase(),
        f.fiscal_year
    )
    .unwrap();
    writeln!(
        s,
        "<DOCUMENT>\n<TYPE>EX-21\n<SEQUENCE>2\n<FILENAME>ex21.htm\n<DESCRIPTION>SUBSIDIARIES\n<TEXT>\n\
         <html><body><p><b>Subsidiaries of {}</b></p><table>\
         <tr><td>{} Holdings LLC</td><td>Delaware</td></tr>\
         <tr><td>{} International B.V.</td><td>Netherlands</td></tr></table></body></html>\n</TEXT>\n</DOCUMENT>",
        html_escape(c.name),
        html_escape(c.name),
        html_escape(c.name)
    )
    .unwrap();
    writeln!(
        s,
        "<DOCUMENT>\n<TYPE>EX-31.1\n<SEQUENCE>3\n<FILENAME>ex31.htm\n<TEXT>\n\
         <html><body><p>Item 1A. Risk Factors</p><p>I have reviewed this annual report on Form 10-K. \
         Based on my knowledge, this report does not contain any untrue statement of a material fact.</p></body></html>\n\
         </TEXT>\n</DOCUMENT>"
    )
    .unwrap();
    s.push_str("</SEC-DOCUMENT>\n");
    s
}

fn filing_date(rng: &mut ChaCha8Rng, fiscal_year: i32, k: usize) -> NaiveDate {
    let base = NaiveDate::from_ymd_opt(fiscal_year + 1, 2, 10).expect("valid date");
    let mut d = base + Days::new(rng.random_range(0..45));
    if k % 8 == 5 {
        while d.weekday() != Weekday::Sat {
            d = d + Days::new(1);
        }
    }
    d
}

fn is_holiday(d: NaiveDate) -> bool {
    let (m, day) = (d.month(), d.day());
    let thanksgiving = m == 11 && d.weekday() == Weekday::Thu && (22..=28).contains(&day);
    let good_friday = ["2020-04-10", "2021-04-02", "2022-04-15"].iter().any(|s| date(s) == d);
    (m == 1 && day == 1) || (m == 7 && day == 4) || (m == 12 && day == 25) || thanksgiving || good_friday
}

/// Weekdays in `[start, end]` minus a fixed holiday calendar.
pub fn trading_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| d.weekday().number_from_monday() <= 5 && !is_holiday(*d))
        .collect()
}

/// Log-price random walk whose drift follows the tone of the most recent
/// filing on or before each day.
fn price_path(
    rng: &mut ChaCha8Rng,
    days: &[NaiveDate],
    filings: &[&SynthFiling],
    start_price: f64,
) -> Vec<(NaiveDate, f64)> {
    let mut log_p = start_price.ln();
    let annual_drift = 0.3;
    let mut out = Vec::with_capacity(days.len());
    for &d in days {
        let tone = filings
            .iter()
            .rfind(|f| f.filing_date <= d)
            .map_or(0.0, |f| f.tone as f64);
        log_p += tone * annual_drift / 252.0 + rng.random_range(-0.017..0.017);
        out.push((d, (log_p.exp() * 10_000.0).round() / 10_000.0));
    }
    out
}

fn master_index(year: i32, quarter: u32, rows: &[(Cik, String, &str, NaiveDate, String)]) -> String {
    let mut s = String::new();
    s.push_str("Description:           Master Index of EDGAR Dissemination Feed\n");
    writeln!(s, "Last Data Received:    Quarter {quarter}, {year}").unwrap();
    s.push_str("Comments:              webmaster@sec.gov\nAnonymous FTP:         ftp://ftp.sec.gov/edgar/\n\n\n\n");
    s.push_str("CIK|Company Name|Form Type|Date Filed|Filename\n");
    s.push_str(&"-".repeat(80));
    s.push('\n');
    let mut sorted: Vec<_> = rows.iter().collect();
    sorted.sort_by(|a, b| (a.0.unpadded(), a.3, &a.4).cmp(&(b.0.unpadded(), b.3, &b.4)));
    for (cik, name, form, d, file) in sorted {
        writeln!(s, "{}|{}|{}|{}|{}", cik.unpadded(), name.to_uppercase(), form, d, file).unwrap();
    }
    s
}

fn write(root: &Path, rel: &str, contents: &str) -> Result<()> {
    write_atomic(&root.join(rel), contents.as_bytes())
}

/// Writes the full corpus under `out` and returns its ground truth.
pub fn generate_corpus(out: &Path, seed: u64) -> Result<CorpusSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let companies = companies();
    let mut filings = Vec::new();
    let mut k = 0;
    for (i, c) in companies.iter().enumerate() {
        for fy in FIRST_FISCAL_YEAR..=LAST_FISCAL_YEAR {
            let unparseable = UNPARSEABLE.contains(&(i, fy));
            let filing_date = filing_date(&mut rng, fy, k);
            let seq = 100 + k * 7;
            filings.push(SynthFiling {
                cik: c.cik.clone(),
                ticker: c.ticker.to_string(),
                fiscal_year: fy,
                filing_date,
                accession_id: format!("{}-{:02}-{seq:06}", c.cik, (fy + 1) % 100),
                tone: if rng.random_bool(0.58) { 1 } else { -1 },
                layout: Layout::for_index(k, unparseable),
            });
            k += 1;
        }
    }

    let mut universe = String::from("cik,ticker,sector\n");
    for c in &companies {
        writeln!(universe, "{},{},{}", c.cik.unpadded(), c.ticker, c.sector).unwrap();
    }
    write(out, "universe.csv", &universe)?;

    // (year, quarter) -> (cik, company name, form, filing date, path)
    type IndexRow<'a> = (Cik, String, &'a str, NaiveDate, String);
    let mut index_rows: BTreeMap<(i32, u32), Vec<IndexRow>> = BTreeMap::new();
    for (n, f) in filings.iter().enumerate() {
        let ci = n / 3;
        let c = &companies[ci];
        let body = if f.layout.unparseable {
            render_unparseable(
                c,
                f,
                UNPARSEABLE.iter().position(|&u| u == (ci, f.fiscal_year)).unwrap_or(0),
            )
        } else {
            let secs = sections(c, f, &mut rng);
            if f.layout.plain_text {
                render_plain(c, f, &secs)
            } else {
                render_html(c, f, &secs)
            }
        };
        let file = format!("edgar/data/{}/{}.txt", c.cik.unpadded(), f.accession_id);
        write(out, &format!("edgar/Archives/{file}"), &submission(c, f, &body))?;
        let quarter = (f.filing_date.month() - 1) / 3 + 1;
        let key = (f.filing_date.year(), quarter);
        index_rows
            .entry(key)
            .or_default()
            .push((c.cik.clone(), c.name.to_string(), "10-K", f.filing_date, file));
        // Quarterly reports and current reports share the index.
        let q_date = f.filing_date + Days::new(75);
        index_rows
            .entry((q_date.year(), (q_date.month() - 1) / 3 + 1))
            .or_default()
            .push((
                c.cik.clone(),
                c.name.to_string(),
                "10-Q",
                q_date,
                format!("edgar/data/{}/{}-q1.txt", c.cik.unpadded(), f.accession_id),
            ));
    }
    // An amendment that must not displace the original filing.
    let amended = &filings[4];
    index_rows.entry((amended.filing_date.year(), 2)).or_default().push((
        amended.cik.clone(),
        companies[1].name.to_string(),
        "10-K/A",
        NaiveDate::from_ymd_opt(amended.filing_date.year(), 5, 14).expect("valid date"),
        format!("edgar/data/{}/{}-a.txt", amended.cik.unpadded(), amended.accession_id),
    ));
    // A filer outside the universe.
    for year in 2020..=2022 {
        index_rows.entry((year, 1)).or_default().push((
            "99999".parse().expect("valid cik"),
            "Outside Registrant Inc".into(),
            "10-K",
            NaiveDate::from_ymd_opt(year, 3, 1).expect("valid date"),
            format!("edgar/data/99999/0000099999-{:02}-000001.txt", year % 100),
        ));
    }
    for year in 2020..=2022 {
        // The last quarter of the final year is not published yet.
        let quarters = if year == 2022 { 1..=3 } else { 1..=4 };
        for q in quarters {
            let rows = index_rows.remove(&(year, q)).unwrap_or_default();
            write(
                out,
                &format!("edgar/Archives/edgar/full-index/{year}/QTR{q}/master.idx"),
                &master_index(year, q, &rows),
            )?;
        }
    }

    let days = trading_days(date(PRICE_START), date(PRICE_END));
    for (i, c) in companies.iter().enumerate() {
        let own: Vec<&SynthFiling> = filings.iter().filter(|f| f.cik == c.cik).collect();
        let start_price = 20.0 + 7.5 * i as f64;
        let mut path = price_path(&mut rng, &days, &own, start_price);
        if i == LATE_LISTING.0 {
            let listed = date(LATE_LISTING.1);
            path.retain(|(d, _)| *d >= listed);
        }
        let mut csv = String::from("date,adjusted_close\n");
        for (d, p) in path {
            writeln!(csv, "{d},{p:.4}").unwrap();
        }
        write(out, &format!("prices/{}.csv", c.ticker), &csv)?;
    }

    write(out, CONFIG_FILE, &fixture_config_json())?;
    let summary = CorpusSummary {
        companies: companies.len(),
        filings,
    };
    write(out, "truth.json", &to_json_pretty(&summary)?)?;
    Ok(summary)
}

/// Config for running the pipeline over a generated corpus, with paths
/// relative to the corpus root.
pub fn fixture_config_json() -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "universe_path": "universe.csv",
        "universe_as_of": "2023-01-03",
        "edgar_base_url": "file://edgar",
        "cache_dir": "cache",
        "price_dir": "prices",
        "output_dir": "out",
        "study_years": { "start": 2020, "end": 2022 },
        "horizons": [3, 6, 9, 12],
        "fold_count": 10,
        "trials": 10,
        "mc_trials": 2500,
        "seed": 7,
        "summarizer": { "budget_tokens": 512, "strategy": "extractive" },
        "fetch": { "user_agent": "tenk fixture research@example.com", "parallelism": 4 }
    }))
    .expect("static json")
        + "\n"
}

/// A labeling fixture: each company has a daily series and filing dates
/// chosen to hit month-end clamping, weekend and holiday roll-forward, and
/// horizons running past the end of the series.
pub struct LabelingCompany {
    pub series: PriceSeries,
    pub filing_dates: Vec<NaiveDate>,
}

pub fn labeling_fixture(seed: u64) -> Result<Vec<LabelingCompany>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = trading_days(date("2018-01-02"), date("2021-09-30"));
    let fixed: [&[&str]; 5] = [
        &["2018-11-30", "2019-11-29", "2020-11-30"],
        &["2018-08-31", "2019-05-31", "2020-12-31"],
        &["2018-03-31", "2019-03-30", "2020-02-29"],
        &["2018-12-31", "2019-04-02", "2020-08-29"],
        &["2018-06-30", "2019-10-31", "2020-12-24"],
    ];
    let mut out = Vec::new();
    for (i, dates) in fixed.iter().enumerate() {
        let mut log_p = (30.0 + 10.0 * i as f64).ln();
        let mut obs = Vec::with_capacity(days.len());
        for &d in &days {
            log_p += rng.random_range(-0.02..0.02);
            // Repeated closes make ties (labeled sell) reachable.
            let p = (log_p.exp() * 4.0).round() / 4.0;
            obs.push((d, p.max(0.25)));
        }
        // A trading halt: a two-week gap the slip rule cannot bridge. It
        // swallows one filing's base date and another's 3-month target.
        if i == 3 {
            obs.retain(|(d, _)| !(date("2019-04-01")..=date("2019-04-14")).contains(d));
        }
        let series = PriceSeries::new(format!("LAB{i}"), obs)?;
        let filing_dates = dates.iter().map(|s| date(s)).collect();
        out.push(LabelingCompany { series, filing_dates });
    }
    Ok(out)
}

/// Checks that a directory looks like a generated corpus.
pub fn validate_corpus(root: &Path) -> Result<()> {
    for rel in ["universe.csv", CONFIG_FILE, "prices", "edgar"] {
        if !root.join(rel).exists() {
            return Err(Error::Config(format!("{} is missing {rel}", root.display())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::fsutil::sha256_hex;

    fn tree_hashes(root: &Path) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let p = entry.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                    out.insert(rel, sha256_hex(&std::fs::read(&p).unwrap()));
                }
            }
        }
        out
    }

    #[test]
    fn generation_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_corpus(a.path(), 3).unwrap();
        generate_corpus(b.path(), 3).unwrap();
        assert_eq!(tree_hashes(a.path()), tree_hashes(b.path()));
        validate_corpus(a.path()).unwrap();
    }

    #[test]
    fn corpus_shape() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate_corpus(dir.path(), DEFAULT_SEED).unwrap();
        assert_eq!(s.companies, 20);
        assert_eq!(s.filings.len(), 60);
        let sectors: BTreeSet<_> = COMPANIES.iter().map(|c| c.2).collect();
        assert_eq!(sectors.len(), 11);
        assert_eq!(s.filings.iter().filter(|f| f.layout.unparseable).count(), 2);
        assert!(s.filings.iter().any(|f| f.filing_date.weekday() == Weekday::Sat));
        for layout_flag in [
            |l: &Layout| l.toc,
            |l: &Layout| l.missing_item_3,
            |l: &Layout| l.title_only_7a,
            |l: &Layout| l.plain_text,
            |l: &Layout| l.nested_table,
        ] {
            assert!(s.filings.iter().any(|f| layout_flag(&f.layout)));
        }
        for f in &s.filings {
            assert_eq!(crate::ingest::fiscal_year_for(f.filing_date), f.fiscal_year);
        }
    }

    #[test]
    fn trading_calendar_skips_weekends_and_holidays() {
        let days = trading_days(date("2020-12-24"), date("2021-01-04"));
        let shown: Vec<String> = days.iter().map(|d| d.to_string()).collect();
        assert_eq!(
            shown,
            [
                "2020-12-24",
                "2020-12-28",
                "2020-12-29",
                "2020-12-30",
                "2020-12-31",
                "2021-01-04"
            ]
        );
    }

    #[test]
    fn labeling_fixture_covers_edge_dates() {
        let fx = labeling_fixture(1).unwrap();
        assert_eq!(fx.len(), 5);
        assert!(fx.iter().all(|c| c.filing_dates.len() == 3));
        let all: Vec<NaiveDate> = fx.iter().flat_map(|c| c.filing_dates.clone()).collect();
        assert!(all.iter().any(|d| d.weekday() == Weekday::Sat));
        assert!(all.contains(&date("2020-02-29")));
    }
}
