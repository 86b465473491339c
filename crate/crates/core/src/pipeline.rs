//! Stage orchestration over file artifacts, driven by one JSON config.
//!
//! Every stage reads its inputs from the output directory (plus the cache
//! and price directories), writes its outputs atomically, and records input
//! and output hashes in `run_manifest.json`. A stage whose config hash,
//! inputs, and outputs are unchanged since its last run is skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    build_examples, make_fold_plan_with, oversample_minority, split_for_fold, BuildOutcome, ExampleId, FoldPlan,
    LabelRecord, LabeledExample, FOLD_COUNT,
};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_horizon, HorizonEvaluation, PredictionSet, DEFAULT_MC_TRIALS};
use crate::fsutil::{read_json, read_jsonl, sha256_hex, to_json_pretty, to_jsonl, write_atomic};
use crate::ingest::{
    load_universe, Cache, CompanyRecord, EdgarClient, FetchPolicy, FileTransport, HttpTransport, IngestReport,
    SystemClock, Transport, YearRange,
};
use crate::labeler::{label_filing, load_price_csv, Horizon, OmittedLabel, PriceSeries, DEFAULT_MAX_SLIP_DAYS};
use crate::model::{
    derive_seed, load_external_predictions, predict, train_baseline, write_predictions, BaselineModel, Hyperparameters,
    TrialSpec,
};
use crate::parser::{extract_items, ItemSet, DEFAULT_MIN_ITEM_CHARS};
use crate::report;
use crate::summarizer::{
    summarize, EndpointDescriptor, OllamaEndpoint, Strategy, Summary, SummaryEndpoint, SummaryRequest,
    DEFAULT_BUDGET_TOKENS,
};

pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const ITEMS_FILE: &str = "items.jsonl";
pub const PARSE_REPORT_FILE: &str = "parse_report.json";
pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const DATASET_REPORT_FILE: &str = "dataset_report.json";
pub const FOLDS_FILE: &str = "folds.json";
pub const MODELS_DIR: &str = "models";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const REPORTS_DIR: &str = "reports";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

pub fn prediction_file_name(fold: usize, trial: usize, horizon: Horizon) -> String {
    format!("predictions_f{fold}_t{trial}_h{horizon}.jsonl")
}

pub fn model_file_name(fold: usize, trial: usize, horizon: Horizon) -> String {
    format!("model_f{fold}_t{trial}_h{horizon}.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummarizerConfig {
    pub budget_tokens: usize,
    pub strategy: Strategy,
    pub endpoint: Option<EndpointDescriptor>,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        SummarizerConfig {
            budget_tokens: DEFAULT_BUDGET_TOKENS,
            strategy: Strategy::Extractive,
            endpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchConfig {
    pub max_requests_per_second: f64,
    pub user_agent: String,
    pub retry_limit: u32,
    pub timeout_seconds: u64,
    pub include_amendments: bool,
    pub parallelism: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            max_requests_per_second: 10.0,
            user_agent: String::new(),
            retry_limit: 3,
            timeout_seconds: 60,
            include_amendments: false,
            parallelism: 4,
        }
    }
}

fn default_horizons() -> Vec<Horizon> {
    Horizon::ALL.to_vec()
}
fn default_fold_count() -> usize {
    FOLD_COUNT
}
fn default_trials() -> usize {
    10
}
fn default_mc_trials() -> usize {
    DEFAULT_MC_TRIALS
}
fn default_min_item_chars() -> usize {
    DEFAULT_MIN_ITEM_CHARS
}
fn default_max_slip_days() -> i64 {
    DEFAULT_MAX_SLIP_DAYS
}

/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub universe_path: PathBuf,
    pub universe_as_of: NaiveDate,
    pub edgar_base_url: String,
    pub cache_dir: PathBuf,
    pub price_dir: PathBuf,
    pub output_dir: PathBuf,
    pub study_years: YearRange,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<Horizon>,
    #[serde(default = "default_fold_count")]
    pub fold_count: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_mc_trials")]
    pub mc_trials: usize,
    /// Master seed; fold, oversampling, training, and baseline seeds derive
    /// from it.
    pub seed: u64,
    #[serde(default)]
    pub summarizer: SummarizerConfig,
    #[serde(default)]
    pub baseline: Hyperparameters,
    #[serde(default)]
    pub fetch: FetchConfig,
    #[serde(default = "default_min_item_chars")]
    pub min_item_chars: usize,
    #[serde(default = "default_max_slip_days")]
    pub max_slip_days: i64,
    /// Permits fold counts other than 10.
    #[serde(default)]
    pub allow_protocol_override: bool,
    /// Restricts train, predict, and evaluate to one test fold.
    #[serde(default)]
    pub only_fold: Option<usize>,
    /// Directory (or single file) of externally produced prediction files
    /// used by `evaluate` in place of the built-in baseline's.
    #[serde(default)]
    pub predictions_path: Option<PathBuf>,
}

/// Command-line overrides, applied key for key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fold: Option<usize>,
    pub horizon: Option<u32>,
    pub seed: Option<u64>,
    pub predictions: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.universe_path,
            &mut self.cache_dir,
            &mut self.price_dir,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = &mut self.predictions_path {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(rest) = self.edgar_base_url.strip_prefix("file://") {
            if Path::new(rest).is_relative() {
                self.edgar_base_url = format!("file://{}", base.join(rest).display());
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(f) = o.fold {
            self.only_fold = Some(f);
        }
        if let Some(m) = o.horizon {
            self.horizons = vec![Horizon::new(m).map_err(|e| Error::Config(e.to_string()))?];
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.predictions {
            self.predictions_path = Some(p.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fold_count != FOLD_COUNT && !self.allow_protocol_override {
            return Err(Error::Config(format!(
                "fold_count must be {FOLD_COUNT} unless allow_protocol_override is set"
            )));
        }
        if self.fold_count < 2 {
            return Err(Error::Config("fold_count must be at least 2".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("at least one horizon is required".into()));
        }
        let unique: HashSet<_> = self.horizons.iter().collect();
        if unique.len() != self.horizons.len() {
            return Err(Error::Config("horizons must be distinct".into()));
        }
        if self.trials == 0 || self.mc_trials == 0 {
            return Err(Error::Config("trials and mc_trials must be positive".into()));
        }
        if let Some(f) = self.only_fold {
            if f >= self.fold_count {
                return Err(Error::Config(format!("fold {f} out of range 0..{}", self.fold_count)));
            }
        }
        if self.study_years.start > self.study_years.end {
            return Err(Error::Config("study_years.start is after study_years.end".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    fn folds(&self) -> Vec<usize> {
        match self.only_fold {
            Some(f) => vec![f],
            None => (0..self.fold_count).collect(),
        }
    }

    /// Every (fold, trial, horizon) run this config asks for.
    pub fn grid(&self) -> Vec<TrialSpec> {
        let mut out = Vec::new();
        for fold in self.folds() {
            for trial in 0..self.trials {
                for &h in &self.horizons {
                    out.push(TrialSpec::new(self.seed, fold, trial, h));
                }
            }
        }
        out
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Parse,
    Summarize,
    Label,
    Dataset,
    Train,
    Predict,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Parse,
        Stage::Summarize,
        Stage::Label,
        Stage::Dataset,
        Stage::Train,
        Stage::Predict,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Parse => "parse",
            Stage::Summarize => "summarize",
            Stage::Label => "label",
            Stage::Dataset => "dataset",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub config: PipelineConfig,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    UpToDate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub status: StageStatus,
    pub outputs: Vec<PathBuf>,
}

/// Process exit code for an error: 2 config, 3 missing upstream artifact,
/// 4 data.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::InvalidHorizon(_) => 2,
        Error::MissingArtifact { .. } => 3,
        _ => 4,
    }
}

pub struct Pipeline {
    config: PipelineConfig,
    transport: Option<Arc<dyn Transport>>,
    endpoint: Option<Arc<dyn SummaryEndpoint>>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            config,
            transport: None,
            endpoint: None,
        })
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = Some(transport);
        self
    }

    pub fn with_endpoint(mut self, endpoint: Arc<dyn SummaryEndpoint>) -> Self {
        self.endpoint = Some(endpoint);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn run_all(&self) -> Result<Vec<StageOutcome>> {
        Stage::ALL.iter().map(|&s| self.run_stage(s)).collect()
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        let inputs = self.hash_inputs(stage)?;
        let config_hash = self.config.hash();
        let mut manifest = self.read_manifest()?;
        if let Some(prev) = manifest.stages.get(stage.name()) {
            if prev.config_hash == config_hash && prev.inputs == inputs && self.outputs_intact(prev) {
                info!("{stage}: up to date");
                return Ok(StageOutcome {
                    stage,
                    status: StageStatus::UpToDate,
                    outputs: prev.outputs.keys().map(|k| self.config.out(k)).collect(),
                });
            }
        }

        std::fs::create_dir_all(&self.config.output_dir).map_err(|e| Error::io(&self.config.output_dir, e))?;
        let started = Instant::now();
        let (outputs, seeds) = match stage {
            Stage::Ingest => (self.ingest()?, BTreeMap::new()),
            Stage::Parse => (self.parse()?, BTreeMap::new()),
            Stage::Summarize => (self.summarize()?, BTreeMap::new()),
            Stage::Label => (self.label()?, BTreeMap::new()),
            Stage::Dataset => self.dataset()?,
            Stage::Train => self.train()?,
            Stage::Predict => (self.predict()?, BTreeMap::new()),
            Stage::Evaluate => self.evaluate()?,
            Stage::Report => (self.report()?, BTreeMap::new()),
        };
        let elapsed = started.elapsed();
        info!("{stage}: done in {:.2?}", elapsed);

        let mut hashed = BTreeMap::new();
        for path in &outputs {
            hashed.insert(self.key(path), hash_file(path)?);
        }
        manifest.config_hash = config_hash.clone();
        manifest.config = self.config.clone();
        manifest.stages.insert(
            stage.name().to_string(),
            StageRecord {
                config_hash,
                inputs,
                outputs: hashed,
                seeds,
                elapsed_ms: u64::try_from(elapsed.as_millis()).unwrap_or(u64::MAX),
            },
        );
        write_atomic(
            &self.config.out(RUN_MANIFEST_FILE),
            to_json_pretty(&manifest)?.as_bytes(),
        )?;
        Ok(StageOutcome {
            stage,
            status: StageStatus::Ran,
            outputs,
        })
    }

    fn read_manifest(&self) -> Result<RunManifest> {
        let path = self.config.out(RUN_MANIFEST_FILE);
        if path.is_file() {
            if let Ok(m) = read_json::<RunManifest>(&path) {
                return Ok(m);
            }
            warn!("ignoring unreadable {}", path.display());
        }
        Ok(RunManifest {
            config_hash: self.config.hash(),
            config: self.config.clone(),
            stages: BTreeMap::new(),
        })
    }

    fn outputs_intact(&self, record: &StageRecord) -> bool {
        record
            .outputs
            .iter()
            .all(|(k, h)| hash_file(&self.config.out(k)).is_ok_and(|actual| &actual == h))
    }

    /// Path relative to the output directory when inside it.
    fn key(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.output_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    fn require(&self, name: &str, producer: Stage) -> Result<PathBuf> {
        let path = self.config.out(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::MissingArtifact {
                path,
                stage: producer.name().to_string(),
            })
        }
    }

    fn required_inputs(&self, stage: Stage) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let universe = || -> Result<PathBuf> {
            if c.universe_path.is_file() {
                Ok(c.universe_path.clone())
            } else {
                Err(Error::Config(format!(
                    "universe file {} not found",
                    c.universe_path.display()
                )))
            }
        };
        Ok(match stage {
            Stage::Ingest => vec![universe()?],
            Stage::Parse => vec![self.require(INGEST_REPORT_FILE, Stage::Ingest)?],
            Stage::Summarize => vec![self.require(ITEMS_FILE, Stage::Parse)?],
            Stage::Label => {
                let mut v = vec![self.require(INGEST_REPORT_FILE, Stage::Ingest)?, universe()?];
                v.extend(price_files(&c.price_dir)?);
                v
            }
            Stage::Dataset => vec![
                self.require(SUMMARIES_FILE, Stage::Summarize)?,
                self.require(LABELS_FILE, Stage::Label)?,
                universe()?,
            ],
            Stage::Train => vec![
                self.require(DATASET_FILE, Stage::Dataset)?,
                self.require(FOLDS_FILE, Stage::Dataset)?,
            ],
            Stage::Predict => {
                let mut v = vec![
                    self.require(DATASET_FILE, Stage::Dataset)?,
                    self.require(FOLDS_FILE, Stage::Dataset)?,
                ];
                for spec in c.grid() {
                    let name = format!("{MODELS_DIR}/{}", model_file_name(spec.fold, spec.trial, spec.horizon));
                    v.push(self.require(&name, Stage::Train)?);
                }
                v
            }
            Stage::Evaluate => {
                let mut v = vec![
                    self.require(DATASET_FILE, Stage::Dataset)?,
                    self.require(FOLDS_FILE, Stage::Dataset)?,
                ];
                v.extend(self.prediction_paths()?.into_values());
                v
            }
            Stage::Report => vec![self.require(EVALUATION_FILE, Stage::Evaluate)?],
        })
    }

    fn hash_inputs(&self, stage: Stage) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for path in self.required_inputs(stage)? {
            out.insert(self.key(&path), hash_file(&path)?);
        }
        Ok(out)
    }

    /// Prediction file for every grid cell, from the external predictions
    /// path when configured, else from this run's predict stage.
    fn prediction_paths(&self) -> Result<BTreeMap<TrialKey, PathBuf>> {
        let mut out = BTreeMap::new();
        let external = self.config.predictions_path.as_deref();
        let single_file = external.filter(|p| p.is_file());
        for spec in self.config.grid() {
            let name = prediction_file_name(spec.fold, spec.trial, spec.horizon);
            let path = match (external, single_file) {
                (_, Some(file)) => {
                    if file.file_name().and_then(|n| n.to_str()) != Some(name.as_str()) {
                        continue;
                    }
                    file.to_path_buf()
                }
                (Some(dir), None) => dir.join(&name),
                (None, _) => self.config.out(PREDICTIONS_DIR).join(&name),
            };
            if !path.is_file() {
                return Err(Error::MissingArtifact {
                    path,
                    stage: Stage::Predict.name().to_string(),
                });
            }
            out.insert((spec.fold, spec.trial, spec.horizon), path);
        }
        if out.is_empty() {
            let path = external
                .map(Path::to_path_buf)
                .unwrap_or_else(|| self.config.out(PREDICTIONS_DIR));
            return Err(Error::MissingArtifact {
                path,
                stage: Stage::Predict.name().to_string(),
            });
        }
        Ok(out)
    }

    fn universe(&self) -> Result<Vec<CompanyRecord>> {
        load_universe(&self.config.universe_path, self.config.universe_as_of)
    }

    fn ingest(&self) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let policy = FetchPolicy {
            max_requests_per_second: c.fetch.max_requests_per_second,
            user_agent: c.fetch.user_agent.clone(),
            cache_dir: c.cache_dir.clone(),
            retry_limit: c.fetch.retry_limit,
        };
        policy.validate()?;
        let transport: Arc<dyn Transport> = match &self.transport {
            Some(t) => t.clone(),
            None if c.edgar_base_url.starts_with("file://") => Arc::new(FileTransport),
            None => Arc::new(HttpTransport::new(Duration::from_secs(c.fetch.timeout_seconds))),
        };
        let client = EdgarClient::new(&c.edgar_base_url, policy, transport, Arc::new(SystemClock::new()))?
            .include_amendments(c.fetch.include_amendments)
            .parallelism(c.fetch.parallelism);
        let report = client.ingest(&self.universe()?, c.study_years)?;
        let path = c.out(INGEST_REPORT_FILE);
        write_atomic(&path, to_json_pretty(&report)?.as_bytes())?;
        Ok(vec![path])
    }

    fn ingest_report(&self) -> Result<IngestReport> {
        read_json(&self.require(INGEST_REPORT_FILE, Stage::Ingest)?)
    }

    fn parse(&self) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let report = self.ingest_report()?;
        let cache = Cache::new(&c.cache_dir);
        let outcomes: Vec<(String, Result<ItemSet>)> = report
            .entries
            .par_iter()
            .map(|entry| {
                let set = cache
                    .load_filing(entry)
                    .and_then(|filing| extract_items(&filing, c.min_item_chars));
                (entry.accession_id.clone(), set)
            })
            .collect();
        let mut sets = Vec::new();
        let mut failed = Vec::new();
        for (accession, outcome) in outcomes {
            match outcome {
                Ok(set) => sets.push(set),
                Err(e) => {
                    warn!("parse failed for {accession}: {e}");
                    failed.push((accession, e.to_string()));
                }
            }
        }
        let total = sets.len() + failed.len();
        let parse_report = ParseReport {
            filings: total,
            parsed: sets.len(),
            parse_rate: if total == 0 {
                0.0
            } else {
                sets.len() as f64 / total as f64
            },
            failed,
        };
        info!("parsed {} of {} filings", parse_report.parsed, total);
        let items = c.out(ITEMS_FILE);
        let rep = c.out(PARSE_REPORT_FILE);
        write_atomic(&items, to_jsonl(&sets)?.as_bytes())?;
        write_atomic(&rep, to_json_pretty(&parse_report)?.as_bytes())?;
        Ok(vec![items, rep])
    }

    fn summarize(&self) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let sets: Vec<ItemSet> = read_jsonl(&self.require(ITEMS_FILE, Stage::Parse)?)?;
        let endpoint: Option<Arc<dyn SummaryEndpoint>> = match (&self.endpoint, &c.summarizer.endpoint) {
            (Some(e), _) => Some(e.clone()),
            (None, Some(d)) if c.summarizer.strategy == Strategy::External => Some(Arc::new(OllamaEndpoint::new(d))),
            _ => None,
        };
        let template = c
            .summarizer
            .endpoint
            .as_ref()
            .map(|d| d.prompt_template.clone())
            .unwrap_or_else(|| crate::summarizer::DEFAULT_PROMPT_TEMPLATE.to_string());
        let outcomes: Vec<Result<Summary>> = sets
            .par_iter()
            .map(|set| {
                let req = SummaryRequest {
                    items: set,
                    budget_tokens: c.summarizer.budget_tokens,
                    strategy: c.summarizer.strategy,
                };
                summarize(&req, endpoint.as_deref().map(|e| (e, template.as_str())))
            })
            .collect();
        let mut summaries = Vec::new();
        for (set, outcome) in sets.iter().zip(outcomes) {
            match outcome {
                Ok(s) => summaries.push(s),
                Err(e @ Error::Config(_)) => return Err(e),
                Err(e) => warn!("summary skipped for {}: {e}", set.accession_id),
            }
        }
        let path = c.out(SUMMARIES_FILE);
        write_atomic(&path, to_jsonl(&summaries)?.as_bytes())?;
        Ok(vec![path])
    }

    fn label(&self) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let report = self.ingest_report()?;
        let tickers: HashMap<_, _> = self.universe()?.into_iter().map(|r| (r.cik, r.ticker)).collect();
        let mut series: HashMap<String, Option<PriceSeries>> = HashMap::new();
        let mut records = Vec::new();
        for entry in &report.entries {
            let omit_all = |reason: String| -> Vec<OmittedLabel> {
                c.horizons
                    .iter()
                    .map(|&horizon| OmittedLabel {
                        horizon,
                        reason: reason.clone(),
                    })
                    .collect()
            };
            let mut record = LabelRecord {
                cik: entry.cik.clone(),
                fiscal_year: entry.fiscal_year,
                accession_id: entry.accession_id.clone(),
                filing_date: entry.filing_date,
                labels: Vec::new(),
                omitted: Vec::new(),
            };
            let Some(ticker) = tickers.get(&entry.cik) else {
                record.omitted = omit_all(format!("cik {} not in universe", entry.cik));
                records.push(record);
                continue;
            };
            let prices = series.entry(ticker.clone()).or_insert_with(|| {
                let path = c.price_dir.join(format!("{ticker}.csv"));
                match load_price_csv(&path, ticker) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        warn!("no usable prices for {ticker}: {e}");
                        None
                    }
                }
            });
            match prices {
                None => record.omitted = omit_all(format!("no price series for {ticker}")),
                Some(s) => match label_filing(s, entry.filing_date, &c.horizons, c.max_slip_days) {
                    Ok(labels) => {
                        record.labels = labels.labels;
                        record.omitted = labels.omitted;
                    }
                    Err(e) => record.omitted = omit_all(e.to_string()),
                },
            }
            records.push(record);
        }
        let path = c.out(LABELS_FILE);
        write_atomic(&path, to_jsonl(&records)?.as_bytes())?;
        Ok(vec![path])
    }

    fn dataset(&self) -> Result<(Vec<PathBuf>, BTreeMap<String, u64>)> {
        let c = &self.config;
        let summaries: Vec<Summary> = read_jsonl(&self.require(SUMMARIES_FILE, Stage::Summarize)?)?;
        let labels: Vec<LabelRecord> = read_jsonl(&self.require(LABELS_FILE, Stage::Label)?)?;
        let universe = self.universe()?;
        let BuildOutcome { examples, dropped } = build_examples(&summaries, &labels, &universe);
        let present: HashSet<_> = examples.iter().map(|e| &e.cik).collect();
        let companies: Vec<CompanyRecord> = universe.iter().filter(|r| present.contains(&r.cik)).cloned().collect();
        let fold_seed = derive_seed(c.seed, &["folds"]);
        let plan = make_fold_plan_with(&companies, fold_seed, c.fold_count)?;

        let dataset = c.out(DATASET_FILE);
        let folds = c.out(FOLDS_FILE);
        let report = c.out(DATASET_REPORT_FILE);
        write_atomic(&dataset, to_jsonl(&examples)?.as_bytes())?;
        write_atomic(&folds, to_json_pretty(&plan)?.as_bytes())?;
        let summary = DatasetReport {
            examples: examples.len(),
            companies: companies.len(),
            dropped,
            fold_sizes: plan.fold_sizes(),
        };
        write_atomic(&report, to_json_pretty(&summary)?.as_bytes())?;
        Ok((
            vec![dataset, folds, report],
            BTreeMap::from([("folds".to_string(), fold_seed)]),
        ))
    }

    fn load_dataset(&self) -> Result<(Vec<LabeledExample>, FoldPlan)> {
        let examples = read_jsonl(&self.require(DATASET_FILE, Stage::Dataset)?)?;
        let plan = read_json(&self.require(FOLDS_FILE, Stage::Dataset)?)?;
        Ok((examples, plan))
    }

    fn train(&self) -> Result<(Vec<PathBuf>, BTreeMap<String, u64>)> {
        let c = &self.config;
        let (examples, plan) = self.load_dataset()?;
        let dir = c.out(MODELS_DIR);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let grid = c.grid();
        let splits: BTreeMap<usize, Vec<LabeledExample>> = c
            .folds()
            .into_iter()
            .map(|f| split_for_fold(&plan, f, &examples).map(|s| (f, s.train)))
            .collect::<Result<_>>()?;
        let runs: Vec<Result<(PathBuf, u64)>> = grid
            .par_iter()
            .map(|spec| {
                let name = model_file_name(spec.fold, spec.trial, spec.horizon);
                let os_seed = derive_seed(spec.seed, &["oversample"]);
                let train = oversample_minority(&splits[&spec.fold], spec.horizon, os_seed)?;
                let model = train_baseline(&train, spec.horizon, &c.baseline, spec.seed)?;
                let path = dir.join(&name);
                model.save(&path)?;
                Ok((path, spec.seed))
            })
            .collect();
        let mut outputs = Vec::new();
        let mut seeds = BTreeMap::new();
        for (spec, run) in grid.iter().zip(runs) {
            let (path, seed) = run?;
            outputs.push(path);
            seeds.insert(format!("f{}_t{}_h{}", spec.fold, spec.trial, spec.horizon), seed);
        }
        Ok((outputs, seeds))
    }

    fn predict(&self) -> Result<Vec<PathBuf>> {
        let c = &self.config;
        let (examples, plan) = self.load_dataset()?;
        let dir = c.out(PREDICTIONS_DIR);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let tests: BTreeMap<usize, Vec<LabeledExample>> = c
            .folds()
            .into_iter()
            .map(|f| split_for_fold(&plan, f, &examples).map(|s| (f, s.test)))
            .collect::<Result<_>>()?;
        c.grid()
            .par_iter()
            .map(|spec| {
                let model_path = c
                    .out(MODELS_DIR)
                    .join(model_file_name(spec.fold, spec.trial, spec.horizon));
                let model = BaselineModel::load(&model_path)?;
                let preds = predict(&model, &tests[&spec.fold], spec.horizon)?;
                let path = dir.join(prediction_file_name(spec.fold, spec.trial, spec.horizon));
                write_predictions(&path, &preds)?;
                Ok(path)
            })
            .collect()
    }

    fn evaluate(&self) -> Result<(Vec<PathBuf>, BTreeMap<String, u64>)> {
        let c = &self.config;
        let paths = self.prediction_paths()?;
        let (examples, plan) = self.load_dataset()?;
        let known: HashSet<ExampleId> = examples.iter().map(|e| e.example_id.clone()).collect();
        let mut evals = Vec::new();
        let mut seeds = BTreeMap::new();
        for &horizon in &c.horizons {
            let mut sets = Vec::new();
            for (&(fold, trial, h), path) in paths.iter().filter(|((_, _, h), _)| *h == horizon) {
                let predictions = load_external_predictions(path, &known)?
                    .into_iter()
                    .filter(|p| p.horizon == h)
                    .collect();
                sets.push(PredictionSet {
                    fold,
                    trial,
                    horizon: h,
                    predictions,
                });
            }
            let seed = derive_seed(c.seed, &["random-baseline", &horizon.to_string()]);
            seeds.insert(format!("random_baseline_h{horizon}"), seed);
            evals.push(evaluate_horizon(&sets, &examples, &plan, horizon, c.mc_trials, seed)?);
        }
        let path = c.out(EVALUATION_FILE);
        write_atomic(&path, to_json_pretty(&evals)?.as_bytes())?;
        Ok((vec![path], seeds))
    }

    fn report(&self) -> Result<Vec<PathBuf>> {
        let evals: Vec<HorizonEvaluation> = read_json(&self.require(EVALUATION_FILE, Stage::Evaluate)?)?;
        let dir = self.config.out(REPORTS_DIR);
        report::write_reports(&dir, &evals)?;
        Ok([
            report::AGGREGATE_FILE,
            report::BASELINE_FILE,
            report::SECTORS_FILE,
            report::SUMMARY_FILE,
        ]
        .iter()
        .map(|f| dir.join(f))
        .collect())
    }
}

type TrialKey = (usize, usize, Horizon);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub filings: usize,
    pub parsed: usize,
    pub parse_rate: f64,
    pub failed: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub examples: usize,
    pub companies: usize,
    pub dropped: BTreeMap<crate::dataset::DropReason, usize>,
    pub fold_sizes: Vec<usize>,
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn price_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("price directory {} not found", dir.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads a JSON config without resolving relative paths.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}
