//! Renders evaluation results as the aggregate, baseline, and sector tables
//! plus a short plain-text summary. Numbers carry three decimals.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::evaluator::{sector_average, HorizonEvaluation, SectorCell};
use crate::fsutil::write_atomic;
use crate::sector::Sector;

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const BASELINE_FILE: &str = "baseline.csv";
pub const SECTORS_FILE: &str = "sectors.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Per-class rows followed by a macro row (mean of the class values, total
/// support).
pub fn render_aggregate(evals: &[HorizonEvaluation]) -> String {
    let mut out = String::from("horizon,class,f1,precision,recall,support\n");
    for e in evals {
        let [sell, buy] = &e.aggregate.classes;
        for m in [sell, buy] {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                e.horizon,
                m.class_id.name(),
                fmt3(m.f1),
                fmt3(m.precision),
                fmt3(m.recall),
                m.support
            )
            .unwrap();
        }
        writeln!(
            out,
            "{},macro,{},{},{},{}",
            e.horizon,
            fmt3(e.aggregate.macro_f1),
            fmt3((sell.precision + buy.precision) / 2.0),
            fmt3((sell.recall + buy.recall) / 2.0),
            sell.support + buy.support
        )
        .unwrap();
    }
    out
}

pub fn render_baseline(evals: &[HorizonEvaluation]) -> String {
    let mut out = String::from("horizon,class,f1,f1_rand,delta\n");
    for e in evals {
        for c in &e.comparison {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.horizon,
                c.class_id.name(),
                fmt3(c.f1),
                fmt3(c.f1_rand),
                fmt3(c.delta)
            )
            .unwrap();
        }
    }
    out
}

fn cell(e: &HorizonEvaluation, sector: Sector) -> Option<&SectorCell> {
    e.sectors.iter().find(|c| c.sector == sector)
}

/// One row per sector, one F1 column per evaluated horizon, then the
/// unweighted AVG row. `low_support` lists the horizons whose cell is empty
/// or built from too few test examples.
pub fn render_sectors(evals: &[HorizonEvaluation]) -> String {
    let mut out = String::from("sector");
    for e in evals {
        write!(out, ",f1_{}", e.horizon).unwrap();
    }
    out.push_str(",low_support\n");
    for sector in Sector::ALL {
        out.push_str(sector.name());
        let mut flagged: Vec<String> = Vec::new();
        for e in evals {
            match cell(e, sector) {
                Some(c) => {
                    write!(out, ",{}", fmt3(c.f1_macro)).unwrap();
                    if c.low_support {
                        flagged.push(e.horizon.to_string());
                    }
                }
                None => {
                    out.push_str(",NA");
                    flagged.push(e.horizon.to_string());
                }
            }
        }
        writeln!(out, ",{}", flagged.join(";")).unwrap();
    }
    out.push_str("AVG");
    for e in evals {
        match sector_average(&e.sectors) {
            Some(avg) => write!(out, ",{}", fmt3(avg)).unwrap(),
            None => out.push_str(",NA"),
        }
    }
    out.push_str(",\n");
    out
}

pub fn render_summary(evals: &[HorizonEvaluation]) -> String {
    let mut out = String::new();
    writeln!(out, "Out-of-sample results").unwrap();
    for e in evals {
        let [sell, buy] = &e.comparison;
        writeln!(
            out,
            "{:>2} mo.  macro F1 {}  sell F1 {} (rand {}, delta {})  buy F1 {} (rand {}, delta {})",
            e.horizon.months(),
            fmt3(e.aggregate.macro_f1),
            fmt3(sell.f1),
            fmt3(sell.f1_rand),
            fmt3(sell.delta),
            fmt3(buy.f1),
            fmt3(buy.f1_rand),
            fmt3(buy.delta)
        )
        .unwrap();
    }
    let best = |key: fn(&HorizonEvaluation) -> f64| {
        evals
            .iter()
            .fold(None::<&HorizonEvaluation>, |best, e| match best {
                Some(b) if key(b) >= key(e) => Some(b),
                _ => Some(e),
            })
            .map(|e| (e.horizon, key(e)))
    };
    type Key = fn(&HorizonEvaluation) -> f64;
    let lines: [(&str, Key); 4] = [
        ("macro F1", |e| e.aggregate.macro_f1),
        ("sell F1", |e| e.aggregate.classes[0].f1),
        ("buy F1", |e| e.aggregate.classes[1].f1),
        ("buy delta", |e| e.comparison[1].delta),
    ];
    if !evals.is_empty() {
        writeln!(out, "\nBest horizon").unwrap();
    }
    for (name, key) in lines {
        if let Some((h, v)) = best(key) {
            writeln!(out, "  {name}: {} mo. ({})", h.months(), fmt3(v)).unwrap();
        }
    }
    if evals.iter().any(|e| !e.sectors.is_empty()) {
        writeln!(out, "\nBest sector per horizon").unwrap();
    }
    for e in evals {
        let top = e.sectors.iter().fold(None::<&SectorCell>, |best, c| match best {
            Some(b) if b.f1_macro >= c.f1_macro => Some(b),
            _ => Some(c),
        });
        if let Some(c) = top {
            let note = if c.low_support { ", low support" } else { "" };
            writeln!(
                out,
                "  {:>2} mo.: {} ({}{note})",
                e.horizon.months(),
                c.sector,
                fmt3(c.f1_macro)
            )
            .unwrap();
        }
    }
    out
}

/// Writes all four report files into `dir`.
pub fn write_reports(dir: &Path, evals: &[HorizonEvaluation]) -> Result<()> {
    write_atomic(&dir.join(AGGREGATE_FILE), render_aggregate(evals).as_bytes())?;
    write_atomic(&dir.join(BASELINE_FILE), render_baseline(evals).as_bytes())?;
    write_atomic(&dir.join(SECTORS_FILE), render_sectors(evals).as_bytes())?;
    write_atomic(&dir.join(SUMMARY_FILE), render_summary(evals).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{class_metrics, delta_report, ClassMetrics, Confusion, MetricsReport};
    use crate::labeler::{Direction, Horizon};

    fn eval(months: u32, sectors: Vec<SectorCell>) -> HorizonEvaluation {
        let horizon = Horizon::new(months).unwrap();
        let classes = class_metrics(&Confusion {
            tp: 2,
            fp: 1,
            fn_: 0,
            tn: 1,
        });
        let random = [
            ClassMetrics {
                f1: 0.459,
                ..classes[0]
            },
            ClassMetrics {
                f1: 0.535,
                ..classes[1]
            },
        ];
        HorizonEvaluation {
            horizon,
            aggregate: MetricsReport {
                horizon,
                classes,
                macro_f1: (classes[0].f1 + classes[1].f1) / 2.0,
                cells: 1,
            },
            random,
            comparison: delta_report(&classes, &random),
            sectors,
            trial_results: Vec::new(),
        }
    }

    fn sector_cell(sector: Sector, months: u32, f1: f64, support: usize) -> SectorCell {
        SectorCell {
            sector,
            horizon: Horizon::new(months).unwrap(),
            f1_macro: f1,
            support,
            low_support: support < 10,
        }
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(fmt3(-0.0001), "0.000");
        assert_eq!(fmt3(-0.034_000_000_000_000_03), "-0.034");
        assert_eq!(fmt3(0.0936), "0.094");
    }

    #[test]
    fn aggregate_shape() {
        let text = render_aggregate(&[eval(3, vec![])]);
        assert_eq!(
            text,
            "horizon,class,f1,precision,recall,support\n\
             3,sell,0.667,1.000,0.500,2\n\
             3,buy,0.800,0.667,1.000,2\n\
             3,macro,0.733,0.833,0.750,4\n"
        );
    }

    #[test]
    fn baseline_shape() {
        let text = render_baseline(&[eval(9, vec![])]);
        assert_eq!(
            text,
            "horizon,class,f1,f1_rand,delta\n9,sell,0.667,0.459,0.208\n9,buy,0.800,0.535,0.265\n"
        );
        assert_eq!(eval(9, vec![]).comparison[0].class_id, Direction::Sell);
    }

    #[test]
    fn single_horizon_has_one_column_and_na_cells() {
        let text = render_sectors(&[eval(
            6,
            vec![
                sector_cell(Sector::Energy, 6, 0.5, 12),
                sector_cell(Sector::Financials, 6, 0.7, 4),
            ],
        )]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sector,f1_6,low_support");
        assert_eq!(lines.len(), 1 + 11 + 1);
        assert!(lines.contains(&"Energy,0.500,"));
        assert!(lines.contains(&"Financials,0.700,6"));
        assert!(lines.contains(&"Utilities,NA,6"));
        assert_eq!(lines[12], "AVG,0.600,");
    }

    #[test]
    fn sector_columns_follow_horizons() {
        let evals = [
            eval(3, vec![sector_cell(Sector::Materials, 3, 0.4, 20)]),
            eval(12, vec![]),
        ];
        let text = render_sectors(&evals);
        assert!(text.starts_with("sector,f1_3,f1_12,low_support\n"));
        assert!(text.contains("\nMaterials,0.400,NA,12\n"));
        assert!(text.ends_with("AVG,0.400,NA,\n"));
    }

    #[test]
    fn summary_names_best_cells() {
        let mut a = eval(3, vec![sector_cell(Sector::Energy, 3, 0.55, 30)]);
        let b = eval(6, vec![sector_cell(Sector::Utilities, 6, 0.61, 5)]);
        a.aggregate.macro_f1 = 0.9;
        let text = render_summary(&[a, b]);
        assert!(text.contains("macro F1: 3 mo. (0.900)"), "{text}");
        assert!(text.contains(" 6 mo.: Utilities (0.610, low support)"), "{text}");
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        write_reports(dir.path(), &[eval(3, vec![])]).unwrap();
        for f in [AGGREGATE_FILE, BASELINE_FILE, SECTORS_FILE, SUMMARY_FILE] {
            assert!(dir.path().join(f).is_file());
        }
    }
}
