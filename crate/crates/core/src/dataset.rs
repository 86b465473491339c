//! Labeled examples, company-level fold plans, and minority oversampling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::NaiveDate;
use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::sha256_hex;
use crate::ingest::{Cik, CompanyRecord};
use crate::labeler::{Direction, DirectionLabel, Horizon, OmittedLabel};
use crate::sector::Sector;
use crate::summarizer::Summary;

pub const FOLD_COUNT: usize = 10;

/// Content hash of `(cik, fiscal_year)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExampleId(String);

impl ExampleId {
    pub fn for_filing(cik: &Cik, fiscal_year: i32) -> Self {
        ExampleId(sha256_hex(format!("{cik}:{fiscal_year}").as_bytes())[..16].to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ExampleId {
    fn from(s: &str) -> Self {
        ExampleId(s.to_string())
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub example_id: ExampleId,
    pub cik: Cik,
    pub ticker: String,
    pub sector: Sector,
    pub filing_date: NaiveDate,
    pub text: String,
    pub labels: BTreeMap<Horizon, Direction>,
}

impl LabeledExample {
    pub fn label(&self, horizon: Horizon) -> Option<Direction> {
        self.labels.get(&horizon).copied()
    }
}

/// Output of the labeling stage for one filing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub cik: Cik,
    pub fiscal_year: i32,
    pub accession_id: String,
    pub filing_date: NaiveDate,
    pub labels: Vec<DirectionLabel>,
    #[serde(default)]
    pub omitted: Vec<OmittedLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Filing has a summary but no usable price labels.
    Unlabelable,
    /// Filing has labels but could not be parsed or summarized.
    Unparsed,
    /// CIK absent from the universe, so no sector is known.
    UnknownCompany,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOutcome {
    pub examples: Vec<LabeledExample>,
    pub dropped: BTreeMap<DropReason, usize>,
}

/// Inner-joins summaries and labels on `(cik, fiscal_year)` and attaches
/// ticker and sector from the universe. Output is sorted by cik then filing
/// date.
pub fn build_examples(summaries: &[Summary], label_sets: &[LabelRecord], universe: &[CompanyRecord]) -> BuildOutcome {
    let companies: HashMap<&Cik, &CompanyRecord> = universe.iter().map(|c| (&c.cik, c)).collect();
    let labels: HashMap<(&Cik, i32), &LabelRecord> = label_sets
        .iter()
        .filter(|l| !l.labels.is_empty())
        .map(|l| ((&l.cik, l.fiscal_year), l))
        .collect();
    let summarized: BTreeSet<(&Cik, i32)> = summaries.iter().map(|s| (&s.cik, s.fiscal_year)).collect();

    let mut out = BuildOutcome::default();
    let mut bump = |reason| *out.dropped.entry(reason).or_insert(0) += 1;
    let mut examples = Vec::new();
    for summary in summaries {
        let Some(record) = labels.get(&(&summary.cik, summary.fiscal_year)) else {
            bump(DropReason::Unlabelable);
            continue;
        };
        let Some(company) = companies.get(&summary.cik) else {
            warn!("no universe entry for cik {}", summary.cik);
            bump(DropReason::UnknownCompany);
            continue;
        };
        if summary.text.trim().is_empty() {
            bump(DropReason::Unparsed);
            continue;
        }
        examples.push(LabeledExample {
            example_id: ExampleId::for_filing(&summary.cik, summary.fiscal_year),
            cik: summary.cik.clone(),
            ticker: company.ticker.clone(),
            sector: company.sector,
            filing_date: record.filing_date,
            text: summary.text.clone(),
            labels: record.labels.iter().map(|l| (l.horizon, l.value)).collect(),
        });
    }
    for record in label_sets {
        if !summarized.contains(&(&record.cik, record.fiscal_year)) {
            bump(DropReason::Unparsed);
        }
    }
    examples.sort_by(|a, b| (&a.cik, a.filing_date, &a.example_id).cmp(&(&b.cik, b.filing_date, &b.example_id)));
    out.examples = examples;
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub assignment: BTreeMap<Cik, usize>,
}

impl FoldPlan {
    pub fn fold_count(&self) -> usize {
        self.assignment.values().max().map_or(0, |m| m + 1)
    }

    pub fn fold_of(&self, cik: &Cik) -> Option<usize> {
        self.assignment.get(cik).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count()];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn make_fold_plan(universe: &[CompanyRecord], seed: u64) -> Result<FoldPlan> {
    make_fold_plan_with(universe, seed, FOLD_COUNT)
}

/// Shuffles the sorted CIKs with `seed` and deals them round-robin into
/// `fold_count` folds.
pub fn make_fold_plan_with(universe: &[CompanyRecord], seed: u64, fold_count: usize) -> Result<FoldPlan> {
    let mut ciks: Vec<Cik> = universe.iter().map(|c| c.cik.clone()).collect();
    ciks.sort();
    ciks.dedup();
    if fold_count < 2 {
        return Err(Error::InfeasiblePlan(format!(
            "need at least 2 folds, got {fold_count}"
        )));
    }
    if ciks.len() < fold_count {
        return Err(Error::InfeasiblePlan(format!(
            "{} companies cannot fill {fold_count} folds",
            ciks.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ciks.shuffle(&mut rng);
    let assignment = ciks
        .into_iter()
        .enumerate()
        .map(|(i, cik)| (cik, i % fold_count))
        .collect();
    Ok(FoldPlan { seed, assignment })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitView {
    pub fold_under_test: usize,
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

/// Test is fold `fold`, validation is fold `fold + 1` (mod fold count), and
/// the remaining folds train.
pub fn split_for_fold(plan: &FoldPlan, fold: usize, examples: &[LabeledExample]) -> Result<SplitView> {
    let folds = plan.fold_count();
    if fold >= folds {
        return Err(Error::Config(format!("fold {fold} out of range 0..{folds}")));
    }
    let validation_fold = (fold + 1) % folds;
    let mut view = SplitView {
        fold_under_test: fold,
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for example in examples {
        let f = plan
            .fold_of(&example.cik)
            .ok_or_else(|| Error::InfeasiblePlan(format!("cik {} has no fold assignment", example.cik)))?;
        let bucket = if f == fold {
            &mut view.test
        } else if f == validation_fold {
            &mut view.validation
        } else {
            &mut view.train
        };
        bucket.push(example.clone());
    }
    Ok(view)
}

/// (sell, buy) counts among examples labeled at `horizon`.
pub fn class_counts(examples: &[LabeledExample], horizon: Horizon) -> [usize; 2] {
    let mut counts = [0; 2];
    for label in examples.iter().filter_map(|e| e.label(horizon)) {
        counts[label.index()] += 1;
    }
    counts
}

/// Duplicates minority-class examples, drawn uniformly with replacement,
/// until both classes are equally frequent, then shuffles with `seed`.
/// Examples without a label at `horizon` are left out.
pub fn oversample_minority(train: &[LabeledExample], horizon: Horizon, seed: u64) -> Result<Vec<LabeledExample>> {
    let labeled: Vec<&LabeledExample> = train.iter().filter(|e| e.label(horizon).is_some()).collect();
    let counts = class_counts(train, horizon);
    if counts.contains(&0) {
        return Err(Error::DegenerateTraining {
            horizon: horizon.months(),
            message: format!("class counts sell={} buy={}", counts[0], counts[1]),
        });
    }
    let minority = if counts[0] < counts[1] {
        Direction::Sell
    } else {
        Direction::Buy
    };
    let pool: Vec<&LabeledExample> = labeled
        .iter()
        .copied()
        .filter(|e| e.label(horizon) == Some(minority))
        .collect();
    let deficit = counts[0].abs_diff(counts[1]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledExample> = labeled.iter().map(|e| (*e).clone()).collect();
    out.reserve(deficit);
    for _ in 0..deficit {
        out.push(pool[rng.random_range(0..pool.len())].clone());
    }
    out.shuffle(&mut rng);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;
    use crate::summarizer::Strategy;

    pub(crate) fn company(i: usize, sector: Sector) -> CompanyRecord {
        CompanyRecord {
            cik: format!("{}", 1000 + i).parse().unwrap(),
            ticker: format!("T{i}"),
            sector,
            index_as_of: NaiveDate::from_ymd_opt(2024, 4, 1).unwrap(),
        }
    }

    fn universe(n: usize) -> Vec<CompanyRecord> {
        (0..n).map(|i| company(i, Sector::ALL[i % 11])).collect()
    }

    fn summary(cik: &Cik, year: i32) -> Summary {
        Summary {
            cik: cik.clone(),
            fiscal_year: year,
            accession_id: format!("{cik}-{year}"),
            text: format!("summary for {cik} in {year}"),
            strategy_used: Strategy::Extractive,
            source_char_counts: BTreeMap::new(),
            downgraded: false,
            model: None,
        }
    }

    fn label_record(cik: &Cik, year: i32, value: Direction) -> LabelRecord {
        let filing_date = NaiveDate::from_ymd_opt(year + 1, 2, 15).unwrap();
        LabelRecord {
            cik: cik.clone(),
            fiscal_year: year,
            accession_id: format!("{cik}-{year}"),
            filing_date,
            labels: Horizon::ALL
                .iter()
                .map(|&h| DirectionLabel {
                    horizon: h,
                    value,
                    base_price: 10.0,
                    base_date: filing_date,
                    target_price: 11.0,
                    target_date: filing_date,
                })
                .collect(),
            omitted: Vec::new(),
        }
    }

    fn example(i: usize, cik: &Cik, label: Direction) -> LabeledExample {
        LabeledExample {
            example_id: ExampleId::for_filing(cik, 2000 + i as i32),
            cik: cik.clone(),
            ticker: "T".into(),
            sector: Sector::Energy,
            filing_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            text: format!("text {i}"),
            labels: [(Horizon::ALL[0], label)].into_iter().collect(),
        }
    }

    #[test]
    fn join_cardinality_and_attrition() {
        let uni = universe(10);
        let mut summaries = Vec::new();
        let mut labels = Vec::new();
        for c in &uni {
            for year in 2014..2024 {
                summaries.push(summary(&c.cik, year));
                labels.push(label_record(&c.cik, year, Direction::Buy));
            }
        }
        let full = build_examples(&summaries, &labels, &uni);
        assert_eq!(full.examples.len(), 100);
        assert!(full.dropped.is_empty());

        labels.retain(|l| !(l.cik == uni[3].cik && l.fiscal_year == 2020));
        let out = build_examples(&summaries, &labels, &uni);
        assert_eq!(out.examples.len(), 99);
        assert_eq!(out.dropped.get(&DropReason::Unlabelable), Some(&1));

        let out = build_examples(&summaries, &labels, &uni[1..]);
        assert_eq!(out.dropped.get(&DropReason::UnknownCompany), Some(&10));
    }

    #[test]
    fn example_ids_are_content_hashes() {
        let cik: Cik = "320193".parse().unwrap();
        let a = ExampleId::for_filing(&cik, 2020);
        assert_eq!(a, ExampleId::for_filing(&cik, 2020));
        assert_ne!(a, ExampleId::for_filing(&cik, 2021));
        assert_eq!(a.as_str().len(), 16);
    }

    #[test]
    fn example_json_shape() {
        let cik: Cik = "1".parse().unwrap();
        let mut e = example(0, &cik, Direction::Buy);
        e.labels.insert(Horizon::new(12).unwrap(), Direction::Sell);
        let json = serde_json::to_value(&e).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 7);
        assert_eq!(json["labels"], serde_json::json!({"3": 1, "12": 0}));
        let back: LabeledExample = serde_json::from_value(json).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn balanced_folds() {
        let plan = make_fold_plan(&universe(20), 7).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 10]);
        assert_eq!(plan, make_fold_plan(&universe(20), 7).unwrap());
    }

    #[test]
    fn different_seeds_for_477_companies() {
        let uni = universe(477);
        let a = make_fold_plan(&uni, 1).unwrap();
        let b = make_fold_plan(&uni, 2).unwrap();
        assert_ne!(a.assignment, b.assignment);
        for plan in [&a, &b] {
            assert!(plan.fold_sizes().iter().all(|&s| s == 47 || s == 48));
            assert_eq!(plan.assignment.len(), 477);
        }
    }

    #[test]
    fn too_few_companies() {
        assert!(matches!(make_fold_plan(&universe(9), 1), Err(Error::InfeasiblePlan(_))));
    }

    #[test]
    fn split_rotation_and_sizes() {
        let uni = universe(20);
        let plan = make_fold_plan(&uni, 3).unwrap();
        let examples: Vec<LabeledExample> = uni
            .iter()
            .flat_map(|c| (0..5).map(move |i| example(i, &c.cik, Direction::Buy)))
            .collect();
        for fold in 0..10 {
            let view = split_for_fold(&plan, fold, &examples).unwrap();
            assert_eq!((view.train.len(), view.validation.len(), view.test.len()), (80, 10, 10));
            let cik_set = |xs: &[LabeledExample]| xs.iter().map(|e| e.cik.clone()).collect::<HashSet<_>>();
            let (tr, va, te) = (cik_set(&view.train), cik_set(&view.validation), cik_set(&view.test));
            assert!(tr.is_disjoint(&te) && tr.is_disjoint(&va) && va.is_disjoint(&te));
            let expected_val = (fold + 1) % 10;
            assert!(view
                .validation
                .iter()
                .all(|e| plan.fold_of(&e.cik) == Some(expected_val)));
        }
        assert!(split_for_fold(&plan, 10, &examples).is_err());
    }

    fn train_set(buy: usize, sell: usize) -> Vec<LabeledExample> {
        let cik: Cik = "5".parse().unwrap();
        (0..buy)
            .map(|i| example(i, &cik, Direction::Buy))
            .chain((0..sell).map(|i| example(buy + i, &cik, Direction::Sell)))
            .collect()
    }

    #[test]
    fn oversampling_reaches_parity() {
        let h = Horizon::ALL[0];
        let out = oversample_minority(&train_set(60, 40), h, 9).unwrap();
        assert_eq!(class_counts(&out, h), [60, 60]);
        assert_eq!(out.len(), 120);
    }

    #[test]
    fn oversampling_noop_at_parity() {
        let h = Horizon::ALL[0];
        let input = train_set(50, 50);
        let mut out = oversample_minority(&input, h, 9).unwrap();
        let mut sorted_in = input.clone();
        out.sort_by(|a, b| a.example_id.cmp(&b.example_id));
        sorted_in.sort_by(|a, b| a.example_id.cmp(&b.example_id));
        assert_eq!(out, sorted_in);
    }

    #[test]
    fn oversampling_is_deterministic_and_rejects_single_class() {
        let h = Horizon::ALL[0];
        let input = train_set(70, 30);
        assert_eq!(
            oversample_minority(&input, h, 4).unwrap(),
            oversample_minority(&input, h, 4).unwrap()
        );
        assert!(matches!(
            oversample_minority(&train_set(10, 0), h, 4),
            Err(Error::DegenerateTraining { horizon: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn oversampled_duplicates_are_originals(buy in 1usize..40, sell in 1usize..40, seed: u64) {
            let h = Horizon::ALL[0];
            let input = train_set(buy, sell);
            let out = oversample_minority(&input, h, seed).unwrap();
            let counts = class_counts(&out, h);
            prop_assert_eq!(counts[0], counts[1]);
            prop_assert_eq!(counts[0], buy.max(sell));
            let originals: HashMap<&ExampleId, &LabeledExample> = input.iter().map(|e| (&e.example_id, e)).collect();
            for e in &out {
                prop_assert_eq!(originals[&e.example_id], e);
            }
            for e in &input {
                prop_assert!(out.iter().any(|o| o.example_id == e.example_id));
            }
        }

        #[test]
        fn plans_cover_each_company_once(n in 10usize..200, seed: u64) {
            let uni = universe(n);
            let plan = make_fold_plan(&uni, seed).unwrap();
            prop_assert_eq!(plan.assignment.len(), n);
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
