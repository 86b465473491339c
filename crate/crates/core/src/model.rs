//! Classifier contract, the built-in bag-of-words logistic baseline, and
//! the JSONL prediction exchange format.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_counts, ExampleId, LabeledExample};
use crate::error::{Error, Result};
use crate::fsutil::{self, sha256_hex};
use crate::labeler::{Direction, Horizon};

pub use crate::text::tokenize;

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: ExampleId,
    pub horizon: Horizon,
    pub decision: Direction,
    pub score: f64,
}

impl Prediction {
    pub fn from_score(example_id: ExampleId, horizon: Horizon, score: f64) -> Self {
        Prediction {
            example_id,
            horizon,
            decision: decide(score),
            score,
        }
    }
}

/// Buy iff the score reaches the threshold (inclusive).
pub fn decide(score: f64) -> Direction {
    if score >= DECISION_THRESHOLD {
        Direction::Buy
    } else {
        Direction::Sell
    }
}

/// Identifies one (fold, trial, horizon) training run and its seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub fold: usize,
    pub trial: usize,
    pub horizon: Horizon,
    pub seed: u64,
}

impl TrialSpec {
    pub fn new(master_seed: u64, fold: usize, trial: usize, horizon: Horizon) -> Self {
        TrialSpec {
            fold,
            trial,
            horizon,
            seed: derive_seed(
                master_seed,
                &["trial", &fold.to_string(), &trial.to_string(), &horizon.to_string()],
            ),
        }
    }
}

/// Stable seed derivation from a master seed and a purpose path.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let key = format!("{master}/{}", parts.join("/"));
    let digest = sha256_hex(key.as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub min_token_count: usize,
    pub batch_size: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 1.0,
            epochs: 30,
            l2_penalty: 1e-4,
            min_token_count: 5,
            batch_size: 16,
        }
    }
}

/// Sparse count vector scaled to unit Euclidean length: (feature index,
/// value).
pub type Features = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub vocabulary: BTreeMap<String, usize>,
    /// One weight per vocabulary entry followed by the bias.
    pub weights: Vec<f64>,
    pub hyperparameters: Hyperparameters,
    pub horizon: Horizon,
    pub seed: u64,
}

impl BaselineModel {
    pub fn featurize(&self, text: &str) -> Features {
        featurize(&self.vocabulary, text)
    }

    pub fn score(&self, text: &str) -> f64 {
        sigmoid(linear(&self.weights, &self.featurize(text)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, fsutil::to_json_pretty(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        fsutil::read_json(path)
    }
}

pub fn build_vocabulary<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize) -> BTreeMap<String, usize> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in texts {
        for token in tokenize(text) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<String> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(t, _)| t)
        .collect();
    kept.sort();
    kept.into_iter().enumerate().map(|(i, t)| (t, i)).collect()
}

pub fn featurize(vocabulary: &BTreeMap<String, usize>, text: &str) -> Features {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in tokenize(text) {
        if let Some(&i) = vocabulary.get(&token) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    counts.into_iter().map(|(i, c)| (i, c / norm)).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn linear(weights: &[f64], x: &Features) -> f64 {
    let bias = weights[weights.len() - 1];
    bias + x.iter().map(|&(i, v)| weights[i] * v).sum::<f64>()
}

/// Mean logistic loss plus `l2 / 2 * |w|^2` (bias unpenalized), and its
/// gradient.
pub fn loss_and_gradient(weights: &[f64], batch: &[(Features, f64)], l2: f64) -> (f64, Vec<f64>) {
    let dim = weights.len();
    let mut grad = vec![0.0; dim];
    let mut loss = 0.0;
    let n = batch.len().max(1) as f64;
    for (x, y) in batch {
        let z = linear(weights, x);
        loss += softplus(z) - y * z;
        let residual = sigmoid(z) - y;
        for &(i, v) in x {
            grad[i] += residual * v;
        }
        grad[dim - 1] += residual;
    }
    for g in &mut grad {
        *g /= n;
    }
    loss /= n;
    let penalty: f64 = weights[..dim - 1].iter().map(|w| w * w).sum();
    loss += 0.5 * l2 * penalty;
    for (g, w) in grad[..dim - 1].iter_mut().zip(&weights[..dim - 1]) {
        *g += l2 * w;
    }
    (loss, grad)
}

/// Fits a fresh model by mini-batch gradient descent on the penalized
/// logistic loss. Examples lacking a label at `horizon` are ignored.
pub fn train_baseline(
    train: &[LabeledExample],
    horizon: Horizon,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<BaselineModel> {
    let counts = class_counts(train, horizon);
    if counts.contains(&0) {
        return Err(Error::DegenerateTraining {
            horizon: horizon.months(),
            message: format!("class counts sell={} buy={}", counts[0], counts[1]),
        });
    }
    if hyper.batch_size == 0 || hyper.learning_rate.is_nan() || hyper.learning_rate <= 0.0 {
        return Err(Error::Config("batch_size and learning_rate must be positive".into()));
    }
    let labeled: Vec<&LabeledExample> = train.iter().filter(|e| e.label(horizon).is_some()).collect();
    let vocabulary = build_vocabulary(labeled.iter().map(|e| e.text.as_str()), hyper.min_token_count);
    let data: Vec<(Features, f64)> = labeled
        .iter()
        .map(|e| {
            let y = e.label(horizon).expect("filtered").bit() as f64;
            (featurize(&vocabulary, &e.text), y)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..=vocabulary.len()).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(hyper.batch_size);
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (_, grad) = loss_and_gradient(&weights, &batch, hyper.l2_penalty);
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= hyper.learning_rate * g;
            }
        }
        let (loss, _) = loss_and_gradient(&weights, &data, hyper.l2_penalty);
        if !loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::TrainingFailure { epoch });
        }
    }

    Ok(BaselineModel {
        vocabulary,
        weights,
        hyperparameters: *hyper,
        horizon,
        seed,
    })
}

pub fn predict(model: &BaselineModel, examples: &[LabeledExample], horizon: Horizon) -> Result<Vec<Prediction>> {
    if model.horizon != horizon {
        return Err(Error::Config(format!(
            "model trained for {}-month horizon used at {}",
            model.horizon, horizon
        )));
    }
    Ok(examples
        .iter()
        .map(|e| Prediction::from_score(e.example_id.clone(), horizon, model.score(&e.text)))
        .collect())
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    fsutil::write_atomic(path, fsutil::to_jsonl(predictions)?.as_bytes())
}

/// Reads and validates a JSONL prediction file: scores in [0, 1], decision
/// consistent with the score, every example id known, and no repeated
/// (example_id, horizon) pair.
pub fn load_external_predictions(path: &Path, known: &HashSet<ExampleId>) -> Result<Vec<Prediction>> {
    let text = fsutil::read_to_string(path)?;
    let schema = |line: usize, message: String| Error::PredictionSchema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut seen: HashSet<(ExampleId, Horizon)> = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(raw).map_err(|e| schema(line, e.to_string()))?;
        if !(0.0..=1.0).contains(&p.score) {
            return Err(schema(line, format!("score {} outside [0, 1]", p.score)));
        }
        if p.decision != decide(p.score) {
            return Err(schema(
                line,
                format!("decision {} inconsistent with score {}", p.decision.bit(), p.score),
            ));
        }
        if !known.contains(&p.example_id) {
            return Err(schema(line, format!("unknown example_id {}", p.example_id)));
        }
        if !seen.insert((p.example_id.clone(), p.horizon)) {
            return Err(schema(
                line,
                format!(
                    "duplicate prediction for {} at {}-month horizon",
                    p.example_id, p.horizon
                ),
            ));
        }
        out.push(p);
    }
    Ok(out)
}
