//! Direction labels from adjusted-close price series.
//!
//! The label at horizon `T` months is buy (1) when the first close on or
//! after the filing date is strictly below the first close on or after the
//! date `T` calendar months later, and sell (0) otherwise, ties included.

use std::fmt;
use std::path::Path;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SLIP_DAYS: i64 = 5;

/// Forecast horizon in calendar months; one of 3, 6, 9, 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Horizon(u32);

impl Horizon {
    pub const ALL: [Horizon; 4] = [Horizon(3), Horizon(6), Horizon(9), Horizon(12)];

    pub fn new(months: u32) -> Result<Self> {
        match months {
            3 | 6 | 9 | 12 => Ok(Horizon(months)),
            other => Err(Error::InvalidHorizon(other)),
        }
    }

    pub fn months(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u32(self.0)
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Horizon::new(u32::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Binary decision: sell (0) or buy (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Sell = 0,
    Buy = 1,
}

impl Direction {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Direction::Sell),
            1 => Some(Direction::Buy),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Sell => "sell",
            Direction::Buy => "buy",
        }
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.bit())
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bit = u8::deserialize(d)?;
        Direction::from_bit(bit).ok_or_else(|| serde::de::Error::custom(format!("direction must be 0 or 1, got {bit}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    ticker: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    /// Validates strictly increasing dates and positive finite prices.
    pub fn new(ticker: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let ticker = ticker.into();
        let invalid = |message: String| Error::InvalidSeries {
            ticker: ticker.clone(),
            message,
        };
        if let Some(w) = observations.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(invalid(format!("dates not strictly increasing at {}", w[1].0)));
        }
        if let Some((d, p)) = observations.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(invalid(format!("non-positive price {p} on {d}")));
        }
        Ok(PriceSeries { ticker, observations })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Scales every price by `factor` (used to check scale invariance).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        PriceSeries::new(
            self.ticker.clone(),
            self.observations.iter().map(|&(d, p)| (d, p * factor)).collect(),
        )
    }
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    date: NaiveDate,
    adjusted_close: f64,
}

/// Reads a `date,adjusted_close` CSV. Files carrying raw `close` instead of
/// adjusted closes are rejected.
pub fn load_price_csv(path: &Path, ticker: &str) -> Result<PriceSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let malformed = |line: usize, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["date", "adjusted_close"] {
        return Err(malformed(
            1,
            format!("expected header date,adjusted_close, got {headers:?}"),
        ));
    }
    let mut observations = Vec::new();
    for (i, row) in reader.deserialize::<PriceRow>().enumerate() {
        let row = row.map_err(|e| malformed(i + 2, e.to_string()))?;
        observations.push((row.date, row.adjusted_close));
    }
    PriceSeries::new(ticker, observations)
}

/// First observation on or after `date`, at most `max_slip_days` later.
pub fn resolve_price_on_or_after(
    series: &PriceSeries,
    date: NaiveDate,
    max_slip_days: i64,
) -> Result<(NaiveDate, f64)> {
    let obs = series.observations();
    let idx = obs.partition_point(|(d, _)| *d < date);
    match obs.get(idx) {
        Some(&(d, p)) if (d - date).num_days() <= max_slip_days => Ok((d, p)),
        _ => Err(Error::UnresolvableDate { date, max_slip_days }),
    }
}

pub fn compute_direction(base_price: f64, target_price: f64) -> Result<Direction> {
    for p in [base_price, target_price] {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidPrice(p));
        }
    }
    Ok(if base_price < target_price {
        Direction::Buy
    } else {
        Direction::Sell
    })
}

/// Calendar-month addition with the day clamped to the target month's end.
pub fn add_months_clamped(date: NaiveDate, months: u32) -> NaiveDate {
    date.checked_add_months(Months::new(months))
        .expect("date arithmetic within chrono range")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionLabel {
    pub horizon: Horizon,
    pub value: Direction,
    pub base_price: f64,
    pub base_date: NaiveDate,
    pub target_price: f64,
    pub target_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedLabel {
    pub horizon: Horizon,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilingLabels {
    pub labels: Vec<DirectionLabel>,
    pub omitted: Vec<OmittedLabel>,
}

/// Labels one filing at each horizon. A horizon whose target price cannot
/// be resolved is omitted with a reason; an unresolvable base price fails
/// the whole filing.
pub fn label_filing(
    series: &PriceSeries,
    filing_date: NaiveDate,
    horizons: &[Horizon],
    max_slip_days: i64,
) -> Result<FilingLabels> {
    let (base_date, base_price) = resolve_price_on_or_after(series, filing_date, max_slip_days)?;
    let mut out = FilingLabels {
        labels: Vec::with_capacity(horizons.len()),
        omitted: Vec::new(),
    };
    for &horizon in horizons {
        let target = add_months_clamped(filing_date, horizon.months());
        match resolve_price_on_or_after(series, target, max_slip_days) {
            Ok((target_date, target_price)) => out.labels.push(DirectionLabel {
                horizon,
                value: compute_direction(base_price, target_price)?,
                base_price,
                base_date,
                target_price,
                target_date,
            }),
            Err(e) => out.omitted.push(OmittedLabel {
                horizon,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn weekday_series(start: &str, days: i64, price: impl Fn(i64) -> f64) -> PriceSeries {
        let start = d(start);
        let obs = (0..days)
            .map(|i| start + chrono::Duration::days(i))
            .filter(|day| chrono::Datelike::weekday(day).number_from_monday() <= 5)
            .enumerate()
            .map(|(i, day)| (day, price(i as i64)))
            .collect();
        PriceSeries::new("TST", obs).unwrap()
    }

    #[test]
    fn exact_hit_and_weekend_roll() {
        let s = weekday_series("2020-01-01", 30, |i| 100.0 + i as f64);
        assert_eq!(
            resolve_price_on_or_after(&s, d("2020-01-08"), 5).unwrap().0,
            d("2020-01-08")
        );
        // 2020-01-11 is a Saturday
        assert_eq!(
            resolve_price_on_or_after(&s, d("2020-01-11"), 5).unwrap().0,
            d("2020-01-13")
        );
        assert!(matches!(
            resolve_price_on_or_after(&s, d("2020-03-01"), 5),
            Err(Error::UnresolvableDate { .. })
        ));
    }

    #[test]
    fn slip_window_is_enforced() {
        let s = PriceSeries::new("T", vec![(d("2020-01-01"), 1.0), (d("2020-01-20"), 2.0)]).unwrap();
        assert!(resolve_price_on_or_after(&s, d("2020-01-10"), 5).is_err());
        assert_eq!(resolve_price_on_or_after(&s, d("2020-01-15"), 5).unwrap().1, 2.0);
    }

    #[test]
    fn direction_rule() {
        assert_eq!(compute_direction(100.0, 100.0).unwrap(), Direction::Sell);
        assert_eq!(compute_direction(100.0, 100.01).unwrap(), Direction::Buy);
        assert_eq!(compute_direction(50.25, 49.99).unwrap(), Direction::Sell);
        assert!(matches!(compute_direction(0.0, 1.0), Err(Error::InvalidPrice(_))));
        assert!(matches!(compute_direction(1.0, -2.0), Err(Error::InvalidPrice(_))));
    }

    #[test]
    fn month_end_clamp() {
        assert_eq!(add_months_clamped(d("2019-11-30"), 3), d("2020-02-29"));
        assert_eq!(add_months_clamped(d("2020-01-15"), 3), d("2020-04-15"));
        assert_eq!(add_months_clamped(d("2021-08-31"), 6), d("2022-02-28"));
    }

    #[test]
    fn constant_series_is_all_sell() {
        let s = weekday_series("2019-12-01", 500, |_| 42.0);
        let out = label_filing(&s, d("2020-01-15"), &Horizon::ALL, 5).unwrap();
        assert_eq!(out.labels.len(), 4);
        assert!(out.labels.iter().all(|l| l.value == Direction::Sell));
    }

    #[test]
    fn horizon_beyond_data_is_omitted() {
        let s = weekday_series("2020-01-01", 250, |i| 10.0 + i as f64);
        let out = label_filing(&s, d("2020-01-15"), &Horizon::ALL, 5).unwrap();
        let kept: Vec<u32> = out.labels.iter().map(|l| l.horizon.months()).collect();
        assert_eq!(kept, [3, 6]);
        assert_eq!(out.omitted.len(), 2);
        assert!(out.labels.iter().all(|l| l.value == Direction::Buy));
    }

    #[test]
    fn unresolvable_base_fails() {
        let s = weekday_series("2020-01-01", 60, |_| 1.0);
        assert!(label_filing(&s, d("2021-01-01"), &Horizon::ALL, 5).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(PriceSeries::new("T", vec![(d("2020-01-02"), 1.0), (d("2020-01-02"), 2.0)]).is_err());
        assert!(PriceSeries::new("T", vec![(d("2020-01-02"), 0.0)]).is_err());
    }

    #[test]
    fn horizon_values() {
        assert!(Horizon::new(4).is_err());
        assert_eq!(Horizon::ALL.map(Horizon::months), [3, 6, 9, 12]);
    }

    #[test]
    fn rejects_raw_close_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("T.csv");
        std::fs::write(&p, "date,close\n2020-01-02,1.0\n").unwrap();
        assert!(matches!(
            load_price_csv(&p, "T"),
            Err(Error::MalformedRow { line: 1, .. })
        ));
        std::fs::write(&p, "date,adjusted_close\n2020-01-02,1.5\n2020-01-03,1.25\n").unwrap();
        assert_eq!(load_price_csv(&p, "T").unwrap().observations().len(), 2);
    }

    proptest! {
        #[test]
        fn labels_are_self_consistent_and_scale_invariant(
            prices in proptest::collection::vec(1.0f64..500.0, 400..450),
            offset in 0i64..60,
            factor in 0.01f64..100.0,
        ) {
            let s = weekday_series("2020-01-01", 640, |i| prices[i as usize % prices.len()]);
            let filing = d("2020-01-01") + chrono::Duration::days(offset);
            let a = label_filing(&s, filing, &Horizon::ALL, 5).unwrap();
            for l in &a.labels {
                prop_assert_eq!(compute_direction(l.base_price, l.target_price).unwrap(), l.value);
            }
            let b = label_filing(&s.scaled(factor).unwrap(), filing, &Horizon::ALL, 5).unwrap();
            let va: Vec<_> = a.labels.iter().map(|l| (l.horizon, l.value)).collect();
            let vb: Vec<_> = b.labels.iter().map(|l| (l.horizon, l.value)).collect();
            prop_assert_eq!(va, vb);
        }
    }
}
