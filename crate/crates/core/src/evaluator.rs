//! Per-class metrics, fold × trial aggregation, the Monte-Carlo fair-coin
//! baseline, and sector cross-sections.
//!
//! Precision and recall with a zero denominator are defined as 0, and so is
//! F1 when precision and recall are both 0. Small sector cells hit this.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ExampleId, FoldPlan, LabeledExample};
use crate::error::{Error, Result};
use crate::labeler::{Direction, Horizon};
use crate::model::Prediction;
use crate::sector::Sector;

pub const DEFAULT_MC_TRIALS: usize = 2500;
pub const LOW_SUPPORT_THRESHOLD: usize = 10;

/// Confusion counts with buy as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn record(&mut self, decision: Direction, label: Direction) {
        match (decision, label) {
            (Direction::Buy, Direction::Buy) => self.tp += 1,
            (Direction::Buy, Direction::Sell) => self.fp += 1,
            (Direction::Sell, Direction::Buy) => self.fn_ += 1,
            (Direction::Sell, Direction::Sell) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Direction, Direction)>) -> Self {
        let mut c = Confusion::default();
        for (d, l) in pairs {
            c.record(d, l);
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Tallies predictions at `horizon` against example labels. Predictions for
/// other horizons are ignored.
pub fn confusion(predictions: &[Prediction], examples: &[LabeledExample], horizon: Horizon) -> Result<Confusion> {
    let labels: HashMap<&ExampleId, &LabeledExample> = examples.iter().map(|e| (&e.example_id, e)).collect();
    let mut c = Confusion::default();
    for p in predictions.iter().filter(|p| p.horizon == horizon) {
        let label = labels
            .get(&p.example_id)
            .and_then(|e| e.label(horizon))
            .ok_or_else(|| Error::MissingLabel {
                example_id: p.example_id.to_string(),
                horizon: horizon.months(),
            })?;
        c.record(p.decision, label);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: Direction,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn one_class(class_id: Direction, tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    ClassMetrics {
        class_id,
        f1: harmonic(precision, recall),
        precision,
        recall,
        support: tp + fn_,
    }
}

/// Metrics for `[sell, buy]`, each class scored as the positive one in turn.
pub fn class_metrics(c: &Confusion) -> [ClassMetrics; 2] {
    [
        one_class(Direction::Sell, c.tn, c.fn_, c.fp),
        one_class(Direction::Buy, c.tp, c.fp, c.fn_),
    ]
}

pub fn macro_f1(metrics: &[ClassMetrics; 2]) -> f64 {
    (metrics[0].f1 + metrics[1].f1) / 2.0
}

/// Metrics for one (fold, trial) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub fold: usize,
    pub trial: usize,
    pub horizon: Horizon,
    pub confusion: Confusion,
    pub metrics: [ClassMetrics; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub horizon: Horizon,
    pub classes: [ClassMetrics; 2],
    pub macro_f1: f64,
    pub cells: usize,
}

/// Unweighted mean over (fold, trial) cells; supports are summed once per
/// fold.
pub fn aggregate(results: &[TrialResult]) -> Result<MetricsReport> {
    let first = results.first().ok_or(Error::EmptyAggregate)?;
    let horizon = first.horizon;
    if let Some(r) = results.iter().find(|r| r.horizon != horizon) {
        return Err(Error::Config(format!(
            "cannot aggregate {}-month and {}-month results together",
            horizon, r.horizon
        )));
    }
    let n = results.len() as f64;
    let mut supports: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    for r in results {
        supports
            .entry(r.fold)
            .or_insert([r.metrics[0].support, r.metrics[1].support]);
    }
    let classes = [Direction::Sell, Direction::Buy].map(|d| {
        let k = d.index();
        let mean = |f: fn(&ClassMetrics) -> f64| results.iter().map(|r| f(&r.metrics[k])).sum::<f64>() / n;
        ClassMetrics {
            class_id: d,
            f1: mean(|m| m.f1),
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            support: supports.values().map(|s| s[k]).sum(),
        }
    });
    Ok(MetricsReport {
        horizon,
        macro_f1: macro_f1(&classes),
        classes,
        cells: results.len(),
    })
}

fn coin_trial(labels: &[Direction], seed: u64, trial: usize) -> Confusion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut c = Confusion::default();
    let mut bits = 0u64;
    let mut left = 0;
    for &label in labels {
        if left == 0 {
            bits = rng.next_u64();
            left = 64;
        }
        let decision = if bits & 1 == 1 { Direction::Buy } else { Direction::Sell };
        bits >>= 1;
        left -= 1;
        c.record(decision, label);
    }
    c
}

/// Mean per-class metrics of a fair-coin decision function over `trials`
/// independent draws. Trial `i` uses stream `i` of the seeded generator, so
/// the result does not depend on scheduling.
pub fn random_baseline(labels: &[Direction], trials: usize, seed: u64) -> Result<[ClassMetrics; 2]> {
    if labels.is_empty() || trials == 0 {
        return Err(Error::EmptyAggregate);
    }
    let per_trial: Vec<[ClassMetrics; 2]> = (0..trials)
        .into_par_iter()
        .map(|t| class_metrics(&coin_trial(labels, seed, t)))
        .collect();
    let n = trials as f64;
    let support = class_counts_of(labels);
    Ok([Direction::Sell, Direction::Buy].map(|d| {
        let k = d.index();
        let mut sum = [0.0; 3];
        for m in &per_trial {
            sum[0] += m[k].f1;
            sum[1] += m[k].precision;
            sum[2] += m[k].recall;
        }
        ClassMetrics {
            class_id: d,
            f1: sum[0] / n,
            precision: sum[1] / n,
            recall: sum[2] / n,
            support: support[k],
        }
    }))
}

/// Closed-form expected fair-coin F1 for a class of prevalence `p`.
pub fn expected_coin_f1(prevalence: f64) -> f64 {
    prevalence / (prevalence + 0.5)
}

fn class_counts_of(labels: &[Direction]) -> [usize; 2] {
    let mut counts = [0; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Label sequence with the given class supports, sells first.
pub fn labels_with_supports(sell: usize, buy: usize) -> Vec<Direction> {
    let mut v = vec![Direction::Sell; sell];
    v.resize(sell + buy, Direction::Buy);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub class_id: Direction,
    pub f1: f64,
    pub f1_rand: f64,
    pub delta: f64,
}

pub fn delta_report(metrics: &[ClassMetrics; 2], random: &[ClassMetrics; 2]) -> [BaselineComparison; 2] {
    [0, 1].map(|k| {
        debug_assert_eq!(metrics[k].class_id, random[k].class_id);
        BaselineComparison {
            class_id: metrics[k].class_id,
            f1: metrics[k].f1,
            f1_rand: random[k].f1,
            delta: metrics[k].f1 - random[k].f1,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorCell {
    pub sector: Sector,
    pub horizon: Horizon,
    pub f1_macro: f64,
    /// Labeled test examples in the sector.
    pub support: usize,
    pub low_support: bool,
}

/// Macro F1 per sector over one pooled prediction set. Only sectors with at
/// least one labeled prediction get a cell.
pub fn sector_crosssection(
    predictions: &[Prediction],
    examples: &[LabeledExample],
    horizon: Horizon,
) -> Result<Vec<SectorCell>> {
    let by_id: HashMap<&ExampleId, &LabeledExample> = examples.iter().map(|e| (&e.example_id, e)).collect();
    let mut groups: BTreeMap<Sector, Confusion> = BTreeMap::new();
    for p in predictions.iter().filter(|p| p.horizon == horizon) {
        let example = by_id.get(&p.example_id);
        let label = example
            .and_then(|e| e.label(horizon))
            .ok_or_else(|| Error::MissingLabel {
                example_id: p.example_id.to_string(),
                horizon: horizon.months(),
            })?;
        groups
            .entry(example.expect("checked").sector)
            .or_default()
            .record(p.decision, label);
    }
    Ok(groups
        .into_iter()
        .map(|(sector, c)| SectorCell {
            sector,
            horizon,
            f1_macro: macro_f1(&class_metrics(&c)),
            support: c.total(),
            low_support: c.total() < LOW_SUPPORT_THRESHOLD,
        })
        .collect())
}

/// Unweighted mean over sectors that have a cell.
pub fn sector_average(cells: &[SectorCell]) -> Option<f64> {
    if cells.is_empty() {
        None
    } else {
        Some(cells.iter().map(|c| c.f1_macro).sum::<f64>() / cells.len() as f64)
    }
}

/// Predictions produced by one (fold, trial) run at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub fold: usize,
    pub trial: usize,
    pub horizon: Horizon,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEvaluation {
    pub horizon: Horizon,
    pub aggregate: MetricsReport,
    pub random: [ClassMetrics; 2],
    pub comparison: [BaselineComparison; 2],
    pub sectors: Vec<SectorCell>,
    pub trial_results: Vec<TrialResult>,
}

/// Scores every prediction set against its test fold, aggregates, runs the
/// fair-coin baseline over the covered labels, and averages per-trial sector
/// cells pooled across folds.
pub fn evaluate_horizon(
    sets: &[PredictionSet],
    examples: &[LabeledExample],
    plan: &FoldPlan,
    horizon: Horizon,
    mc_trials: usize,
    seed: u64,
) -> Result<HorizonEvaluation> {
    let by_id: HashMap<&ExampleId, &LabeledExample> = examples.iter().map(|e| (&e.example_id, e)).collect();
    let mut trial_results = Vec::new();
    let mut pooled: BTreeMap<usize, Vec<Prediction>> = BTreeMap::new();
    let mut folds = BTreeSet::new();
    for set in sets {
        check_coverage(set, examples, plan, horizon)?;
        folds.insert(set.fold);
        let labeled: Vec<Prediction> = set
            .predictions
            .iter()
            .filter(|p| by_id.get(&p.example_id).is_some_and(|e| e.label(horizon).is_some()))
            .cloned()
            .collect();
        if labeled.is_empty() {
            warn!(
                "fold {} has no labeled test examples at the {}-month horizon; skipped",
                set.fold, horizon
            );
            continue;
        }
        let c = confusion(&labeled, examples, horizon)?;
        trial_results.push(TrialResult {
            fold: set.fold,
            trial: set.trial,
            horizon,
            confusion: c,
            metrics: class_metrics(&c),
        });
        pooled.entry(set.trial).or_default().extend(labeled);
    }
    trial_results.sort_by_key(|r| (r.fold, r.trial));
    let aggregate = aggregate(&trial_results)?;

    let covered: Vec<Direction> = examples
        .iter()
        .filter(|e| plan.fold_of(&e.cik).is_some_and(|f| folds.contains(&f)))
        .filter_map(|e| e.label(horizon))
        .collect();
    let random = random_baseline(&covered, mc_trials, seed)?;
    let comparison = delta_report(&aggregate.classes, &random);

    let mut sums: BTreeMap<Sector, (f64, usize, SectorCell)> = BTreeMap::new();
    for predictions in pooled.values() {
        for cell in sector_crosssection(predictions, examples, horizon)? {
            let entry = sums.entry(cell.sector).or_insert((0.0, 0, cell.clone()));
            entry.0 += cell.f1_macro;
            entry.1 += 1;
        }
    }
    let sectors = sums
        .into_values()
        .map(|(sum, n, cell)| SectorCell {
            f1_macro: sum / n as f64,
            ..cell
        })
        .collect();

    Ok(HorizonEvaluation {
        horizon,
        aggregate,
        random,
        comparison,
        sectors,
        trial_results,
    })
}

/// Predictions must cover exactly the test fold: every test example labeled
/// at the horizon is predicted, and nothing outside the fold is.
fn check_coverage(set: &PredictionSet, examples: &[LabeledExample], plan: &FoldPlan, horizon: Horizon) -> Result<()> {
    let fail = |message: String| Error::Coverage {
        fold: set.fold,
        trial: set.trial,
        horizon: horizon.months(),
        message,
    };
    if set.horizon != horizon {
        return Err(fail(format!("set is for the {}-month horizon", set.horizon)));
    }
    let test: HashMap<&ExampleId, &LabeledExample> = examples
        .iter()
        .filter(|e| plan.fold_of(&e.cik) == Some(set.fold))
        .map(|e| (&e.example_id, e))
        .collect();
    let mut seen = BTreeSet::new();
    for p in &set.predictions {
        if p.horizon != horizon {
            return Err(fail(format!(
                "prediction for {} has horizon {}",
                p.example_id, p.horizon
            )));
        }
        if !test.contains_key(&p.example_id) {
            return Err(fail(format!("example {} is not in the test fold", p.example_id)));
        }
        if !seen.insert(&p.example_id) {
            return Err(fail(format!("duplicate prediction for {}", p.example_id)));
        }
    }
    let mut missing: Vec<&str> = test
        .iter()
        .filter(|(id, e)| e.label(horizon).is_some() && !seen.contains(*id))
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(fail(format!("missing predictions for {}", missing.join(", "))));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::make_fold_plan;
    use crate::ingest::CompanyRecord;

    const B: Direction = Direction::Buy;
    const S: Direction = Direction::Sell;

    fn h(m: u32) -> Horizon {
        Horizon::new(m).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn confusion_counts() {
        let c = Confusion::from_pairs([(B, B), (B, B), (B, S), (S, S)]);
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (2, 1, 0, 1));
        let perfect = Confusion::from_pairs([(B, B), (S, S), (S, S)]);
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
        let wrong = Confusion::from_pairs([(S, B), (B, S)]);
        assert_eq!((wrong.tp, wrong.tn), (0, 0));
    }

    #[test]
    fn class_metrics_by_hand() {
        let [sell, buy] = class_metrics(&Confusion {
            tp: 2,
            fp: 1,
            fn_: 0,
            tn: 1,
        });
        assert!(close(buy.precision, 2.0 / 3.0) && close(buy.recall, 1.0) && close(buy.f1, 0.8));
        assert!(close(sell.precision, 1.0) && close(sell.recall, 0.5) && close(sell.f1, 2.0 / 3.0));
        assert_eq!((sell.support, buy.support), (2, 2));

        let perfect = class_metrics(&Confusion {
            tp: 3,
            fp: 0,
            fn_: 0,
            tn: 4,
        });
        assert!(perfect.iter().all(|m| m.f1 == 1.0));

        let [_, buy] = class_metrics(&Confusion {
            tp: 0,
            fp: 0,
            fn_: 5,
            tn: 2,
        });
        assert_eq!((buy.precision, buy.f1), (0.0, 0.0));
    }

    fn result(fold: usize, trial: usize, c: Confusion) -> TrialResult {
        TrialResult {
            fold,
            trial,
            horizon: h(3),
            confusion: c,
            metrics: class_metrics(&c),
        }
    }

    #[test]
    fn aggregate_means_and_supports() {
        let c = Confusion {
            tp: 2,
            fp: 1,
            fn_: 0,
            tn: 1,
        };
        let one = aggregate(&[result(0, 0, c)]).unwrap();
        let two = aggregate(&[result(0, 0, c), result(0, 1, c)]).unwrap();
        assert_eq!(one.classes, two.classes);
        assert!(matches!(aggregate(&[]), Err(Error::EmptyAggregate)));

        // buy F1 0.4 in one fold, 0.6 in the other
        let a = Confusion {
            tp: 1,
            fp: 2,
            fn_: 1,
            tn: 0,
        };
        let b = Confusion {
            tp: 3,
            fp: 2,
            fn_: 2,
            tn: 1,
        };
        assert!(close(class_metrics(&a)[1].f1, 0.4) && close(class_metrics(&b)[1].f1, 0.6));
        let report = aggregate(&[result(0, 0, a), result(1, 0, b), result(1, 1, b)]).unwrap();
        assert!(close(report.classes[1].f1, (0.4 + 0.6 + 0.6) / 3.0));
        assert_eq!(report.classes[1].support, 2 + 5);
        assert!(close(
            report.macro_f1,
            (report.classes[0].f1 + report.classes[1].f1) / 2.0
        ));
    }

    #[test]
    fn aggregate_rejects_mixed_horizons() {
        let c = Confusion {
            tp: 1,
            fp: 0,
            fn_: 0,
            tn: 1,
        };
        let mut other = result(0, 0, c);
        other.horizon = h(6);
        assert!(aggregate(&[result(0, 0, c), other]).is_err());
    }

    #[test]
    fn random_baseline_is_deterministic_and_near_closed_form() {
        let labels = labels_with_supports(300, 500);
        let a = random_baseline(&labels, 400, 9).unwrap();
        let b = random_baseline(&labels, 400, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!((a[0].support, a[1].support), (300, 500));
        assert!((a[0].f1 - expected_coin_f1(300.0 / 800.0)).abs() < 0.01);
        assert!((a[1].f1 - expected_coin_f1(500.0 / 800.0)).abs() < 0.01);
        assert_ne!(a, random_baseline(&labels, 400, 10).unwrap());
    }

    #[test]
    fn all_buy_labels_approach_two_thirds() {
        let labels = labels_with_supports(0, 400);
        let [sell, buy] = random_baseline(&labels, 500, 1).unwrap();
        assert!((buy.f1 - 2.0 / 3.0).abs() < 0.01, "{}", buy.f1);
        assert_eq!(buy.precision, 1.0);
        assert_eq!(sell.f1, 0.0);
    }

    #[test]
    fn delta_is_exact_difference() {
        let m = |f1| ClassMetrics {
            class_id: B,
            f1,
            precision: 0.0,
            recall: 0.0,
            support: 0,
        };
        let sell = |f1| ClassMetrics { class_id: S, ..m(f1) };
        let d = delta_report(&[sell(0.425), m(0.621)], &[sell(0.459), m(0.528)]);
        assert_eq!(format!("{:.3}", d[0].delta), "-0.034");
        assert_eq!(format!("{:.3}", d[1].delta), "0.093");
        let same = delta_report(&[sell(0.5), m(0.5)], &[sell(0.5), m(0.5)]);
        assert!(same.iter().all(|c| c.delta == 0.0));
    }

    fn company(i: usize, sector: Sector) -> CompanyRecord {
        CompanyRecord {
            cik: format!("{}", 1000 + i).parse().unwrap(),
            ticker: format!("T{i}"),
            sector,
            index_as_of: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        }
    }

    fn example(c: &CompanyRecord, year: i32, label: Direction) -> LabeledExample {
        LabeledExample {
            example_id: ExampleId::for_filing(&c.cik, year),
            cik: c.cik.clone(),
            ticker: c.ticker.clone(),
            sector: c.sector,
            filing_date: NaiveDate::from_ymd_opt(year + 1, 2, 20).unwrap(),
            text: String::new(),
            labels: [(h(3), label)].into_iter().collect(),
        }
    }

    #[test]
    fn sector_cells() {
        let a = company(0, Sector::Energy);
        let b = company(1, Sector::Utilities);
        let mut examples = Vec::new();
        let mut preds = Vec::new();
        // Energy: buy F1 2/3, sell F1 0 -> 1/3; Utilities: perfect -> 1.0
        for (i, (c, label, decision)) in [(&a, B, B), (&a, S, B), (&b, B, B), (&b, S, S)].into_iter().enumerate() {
            let e = example(c, 2015 + i as i32, label);
            preds.push(Prediction::from_score(
                e.example_id.clone(),
                h(3),
                if decision == B { 0.9 } else { 0.1 },
            ));
            examples.push(e);
        }
        let cells = sector_crosssection(&preds, &examples, h(3)).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(close(cells[0].f1_macro, 1.0 / 3.0) && cells[0].sector == Sector::Energy);
        assert!(close(cells[1].f1_macro, 1.0));
        assert!(cells.iter().all(|c| c.low_support && c.support == 2));
        assert!(close(sector_average(&cells).unwrap(), 2.0 / 3.0));

        let single = sector_crosssection(&preds[..2], &examples, h(3)).unwrap();
        let pooled = class_metrics(&confusion(&preds[..2], &examples, h(3)).unwrap());
        assert_eq!(single.len(), 1);
        assert!(close(single[0].f1_macro, macro_f1(&pooled)));
    }

    #[test]
    fn missing_label_is_named() {
        let p = Prediction::from_score(ExampleId::from("ghost"), h(3), 0.7);
        match confusion(&[p], &[], h(3)) {
            Err(Error::MissingLabel { example_id, horizon: 3 }) => assert_eq!(example_id, "ghost"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn fixture() -> (Vec<CompanyRecord>, Vec<LabeledExample>, FoldPlan) {
        let companies: Vec<_> = (0..20).map(|i| company(i, Sector::ALL[i % 11])).collect();
        let mut examples: Vec<_> = companies
            .iter()
            .flat_map(|c| (2019..2022).map(move |y| (c, y)))
            .map(|(c, y)| example(c, y, if y % 2 == 0 { B } else { S }))
            .collect();
        examples.sort_by(|a, b| a.example_id.cmp(&b.example_id));
        let plan = make_fold_plan(&companies, 3).unwrap();
        (companies, examples, plan)
    }

    fn all_buy_sets(examples: &[LabeledExample], plan: &FoldPlan, trials: usize) -> Vec<PredictionSet> {
        let mut sets = Vec::new();
        for fold in 0..plan.fold_count() {
            for trial in 0..trials {
                let predictions = examples
                    .iter()
                    .filter(|e| plan.fold_of(&e.cik) == Some(fold))
                    .map(|e| Prediction::from_score(e.example_id.clone(), h(3), 0.6))
                    .collect();
                sets.push(PredictionSet {
                    fold,
                    trial,
                    horizon: h(3),
                    predictions,
                });
            }
        }
        sets
    }

    #[test]
    fn evaluate_horizon_end_to_end() {
        let (_, examples, plan) = fixture();
        let sets = all_buy_sets(&examples, &plan, 2);
        let eval = evaluate_horizon(&sets, &examples, &plan, h(3), 200, 1).unwrap();
        assert_eq!(eval.trial_results.len(), 20);
        assert_eq!(
            eval.aggregate.classes[0].support + eval.aggregate.classes[1].support,
            60
        );
        assert_eq!(eval.aggregate.classes[0].f1, 0.0);
        assert_eq!(eval.sectors.len(), 11);
        assert!(close(
            eval.comparison[1].delta,
            eval.aggregate.classes[1].f1 - eval.random[1].f1
        ));
    }

    #[test]
    fn coverage_violations_rejected() {
        let (_, examples, plan) = fixture();
        let mut sets = all_buy_sets(&examples, &plan, 1);
        sets[0].predictions.pop();
        assert!(matches!(
            evaluate_horizon(&sets, &examples, &plan, h(3), 10, 1),
            Err(Error::Coverage { fold: 0, .. })
        ));
        let mut sets = all_buy_sets(&examples, &plan, 1);
        let stray = sets[1].predictions[0].clone();
        sets[0].predictions.push(stray);
        assert!(matches!(
            evaluate_horizon(&sets, &examples, &plan, h(3), 10, 1),
            Err(Error::Coverage { .. })
        ));
    }

    fn direction() -> impl Strategy<Value = Direction> {
        prop_oneof![Just(S), Just(B)]
    }

    #[test]
    fn reference_sector_grid_average_is_unweighted() {
        // sector rows in Sector::ALL order, then the printed AVG row
        let grid = [
            [0.519, 0.511, 0.523, 0.571],
            [0.480, 0.489, 0.505, 0.551],
            [0.521, 0.552, 0.511, 0.550],
            [0.509, 0.498, 0.526, 0.533],
            [0.473, 0.460, 0.477, 0.524],
            [0.504, 0.509, 0.518, 0.516],
            [0.467, 0.532, 0.531, 0.515],
            [0.521, 0.515, 0.440, 0.512],
            [0.513, 0.516, 0.518, 0.509],
            [0.541, 0.514, 0.516, 0.508],
            [0.539, 0.493, 0.565, 0.495],
        ];
        let printed = ["0.508", "0.508", "0.512", "0.526"];
        for (col, (&horizon, expected)) in Horizon::ALL.iter().zip(printed).enumerate() {
            let cells: Vec<SectorCell> = Sector::ALL
                .iter()
                .zip(&grid)
                .enumerate()
                .map(|(i, (&sector, row))| SectorCell {
                    sector,
                    horizon,
                    f1_macro: row[col],
                    support: 100 + 50 * i,
                    low_support: false,
                })
                .collect();
            assert_eq!(format!("{:.3}", sector_average(&cells).unwrap()), expected);
        }
    }

    proptest! {
        #[test]
        fn metrics_in_unit_interval(pairs in proptest::collection::vec((direction(), direction()), 1..40)) {
            let c = Confusion::from_pairs(pairs.iter().copied());
            for m in class_metrics(&c) {
                for v in [m.f1, m.precision, m.recall] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                if m.precision > 0.0 && m.recall > 0.0 {
                    prop_assert!(close(m.f1, 2.0 * m.precision * m.recall / (m.precision + m.recall)));
                }
            }
            let [sell, buy] = class_metrics(&c);
            prop_assert_eq!(sell.support + buy.support, pairs.len());
        }
    }
}
