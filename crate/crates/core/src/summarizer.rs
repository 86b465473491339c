//! Bounded-length summaries of a filing's narrative items.
//!
//! The extractive path is deterministic: sentences are scored by the mean
//! in-filing term frequency of their content words, each item receives a
//! share of the word budget proportional to its length, and the chosen
//! sentences are emitted in their original order. The external path sends
//! each item to an instruction model and falls back to extraction when the
//! endpoint fails.

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Cik;
use crate::parser::{ItemId, ItemSet};
use crate::text::{count_tokens, split_sentences, tokenize, truncate_to_budget, words_for_tokens};

pub const DEFAULT_BUDGET_TOKENS: usize = 2048;
pub const MIN_BUDGET_TOKENS: usize = 128;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "have", "in", "is", "it", "its", "of", "on",
    "or", "our", "that", "the", "this", "to", "we", "was", "were", "which", "with", "will", "may", "not", "such",
    "these", "those", "their", "any", "other",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Extractive,
    External,
}

#[derive(Debug, Clone, Copy)]
pub struct SummaryRequest<'a> {
    pub items: &'a ItemSet,
    pub budget_tokens: usize,
    pub strategy: Strategy,
}

impl SummaryRequest<'_> {
    fn validate(&self) -> Result<()> {
        if self.budget_tokens < MIN_BUDGET_TOKENS {
            return Err(Error::Config(format!(
                "summary budget must be at least {MIN_BUDGET_TOKENS} tokens, got {}",
                self.budget_tokens
            )));
        }
        if self.items.found().all(|(_, text)| text.trim().is_empty()) {
            return Err(Error::EmptyItems(format!(
                "filing {} has no found item text",
                self.items.accession_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub cik: Cik,
    pub fiscal_year: i32,
    pub accession_id: String,
    pub text: String,
    pub strategy_used: Strategy,
    pub source_char_counts: BTreeMap<ItemId, usize>,
    /// External summarization was requested but the endpoint failed.
    pub downgraded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

fn source_counts(items: &ItemSet) -> BTreeMap<ItemId, usize> {
    ItemId::ALL
        .iter()
        .map(|&id| (id, items.text(id).chars().count()))
        .collect()
}

/// Splits `total` across `weights` proportionally, largest remainder first
/// (ties to the earlier index).
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut remainders: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| ((total * w) % sum, i))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let leftover = total - shares.iter().sum::<usize>();
    for &(_, i) in remainders.iter().take(leftover) {
        shares[i] += 1;
    }
    shares
}

fn salience(sentence: &str, tf: &HashMap<String, usize>) -> f64 {
    let content: Vec<String> = tokenize(sentence)
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect();
    if content.is_empty() {
        return 0.0;
    }
    content.iter().map(|t| tf[t] as f64).sum::<f64>() / content.len() as f64
}

pub fn summarize_extractive(req: &SummaryRequest<'_>) -> Result<Summary> {
    req.validate()?;
    let items: Vec<(ItemId, &str)> = req.items.found().collect();

    let mut tf: HashMap<String, usize> = HashMap::new();
    for (_, text) in &items {
        for token in tokenize(text) {
            *tf.entry(token).or_insert(0) += 1;
        }
    }

    let word_budget = words_for_tokens(req.budget_tokens);
    let lengths: Vec<usize> = items.iter().map(|(_, t)| t.chars().count()).collect();
    let budgets = apportion(word_budget, &lengths);

    let mut best_overall: Option<(f64, &str)> = None;
    let mut sections = Vec::new();
    for ((_, text), item_budget) in items.iter().zip(budgets) {
        let sentences = split_sentences(text);
        let mut ranked: Vec<(usize, f64)> = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| (i, salience(s, &tf)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if let Some(&(i, score)) = ranked.first() {
            if best_overall.is_none_or(|(b, _)| score > b) {
                best_overall = Some((score, sentences[i]));
            }
        }

        let mut remaining = item_budget;
        let mut chosen = Vec::new();
        for (i, _) in ranked {
            let words = sentences[i].split_whitespace().count();
            if words <= remaining {
                remaining -= words;
                chosen.push(i);
            }
        }
        chosen.sort_unstable();
        if !chosen.is_empty() {
            sections.push(chosen.iter().map(|&i| sentences[i]).collect::<Vec<_>>().join(" "));
        }
    }

    let mut text = sections.join("\n\n");
    if text.is_empty() {
        // Every sentence was longer than its share; cut the best one down.
        let (_, sentence) = best_overall.expect("validated non-empty items");
        text = truncate_to_budget(sentence, req.budget_tokens);
    }
    debug_assert!(count_tokens(&text) <= req.budget_tokens);

    Ok(Summary {
        cik: req.items.cik.clone(),
        fiscal_year: req.items.fiscal_year,
        accession_id: req.items.accession_id.clone(),
        text,
        strategy_used: Strategy::Extractive,
        source_char_counts: source_counts(req.items),
        downgraded: false,
        model: None,
    })
}

/// Connection settings for an external summarization model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointDescriptor {
    pub base_url: String,
    pub model_name: String,
    /// May reference `{item_name}` and `{item_text}`.
    pub prompt_template: String,
    pub timeout_seconds: u64,
}

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Summarize the following \"{item_name}\" section of an \
annual report in a few factual sentences, keeping forward-looking statements.\n\n{item_text}";

pub trait SummaryEndpoint: Send + Sync {
    fn model_name(&self) -> &str;
    fn complete(&self, prompt: &str) -> std::result::Result<String, String>;
}

/// Client for an Ollama-style `/api/generate` endpoint.
pub struct OllamaEndpoint {
    url: String,
    model: String,
    agent: ureq::Agent,
}

impl OllamaEndpoint {
    pub fn new(descriptor: &EndpointDescriptor) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(descriptor.timeout_seconds)))
            .build();
        OllamaEndpoint {
            url: format!("{}/api/generate", descriptor.base_url.trim_end_matches('/')),
            model: descriptor.model_name.clone(),
            agent: config.into(),
        }
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
}

#[derive(Deserialize)]
struct GenerateResponse {
    response: String,
}

impl SummaryEndpoint for OllamaEndpoint {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn complete(&self, prompt: &str) -> std::result::Result<String, String> {
        let body = GenerateRequest {
            model: &self.model,
            prompt,
            stream: false,
        };
        let mut resp = self.agent.post(&self.url).send_json(&body).map_err(|e| e.to_string())?;
        let parsed: GenerateResponse = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        Ok(parsed.response)
    }
}

pub fn render_prompt(template: &str, item: ItemId, text: &str) -> String {
    template
        .replace("{item_name}", item.title())
        .replace("{item_text}", text)
}

/// Summarizes each found item through `endpoint` and truncates the joined
/// output to the budget. Any endpoint failure downgrades to the extractive
/// path with `downgraded` set.
pub fn summarize_external(
    req: &SummaryRequest<'_>,
    endpoint: &dyn SummaryEndpoint,
    prompt_template: &str,
) -> Result<Summary> {
    req.validate()?;
    let mut outputs = Vec::new();
    for (item, text) in req.items.found() {
        let prompt = render_prompt(prompt_template, item, text);
        info!(
            "summarizing {} {} with model {} (prompt {} chars)",
            req.items.accession_id,
            item,
            endpoint.model_name(),
            prompt.len()
        );
        match endpoint.complete(&prompt) {
            Ok(out) if !out.trim().is_empty() => outputs.push(out.trim().to_string()),
            Ok(_) => return downgrade(req, "endpoint returned empty output"),
            Err(e) => return downgrade(req, &e),
        }
    }
    Ok(Summary {
        cik: req.items.cik.clone(),
        fiscal_year: req.items.fiscal_year,
        accession_id: req.items.accession_id.clone(),
        text: truncate_to_budget(&outputs.join("\n\n"), req.budget_tokens),
        strategy_used: Strategy::External,
        source_char_counts: source_counts(req.items),
        downgraded: false,
        model: Some(endpoint.model_name().to_string()),
    })
}

fn downgrade(req: &SummaryRequest<'_>, reason: &str) -> Result<Summary> {
    warn!(
        "external summarizer failed for {}: {reason}; using extractive fallback",
        req.items.accession_id
    );
    let mut summary = summarize_extractive(req)?;
    summary.downgraded = true;
    Ok(summary)
}

/// Dispatches on the request's strategy.
pub fn summarize(req: &SummaryRequest<'_>, endpoint: Option<(&dyn SummaryEndpoint, &str)>) -> Result<Summary> {
    match (req.strategy, endpoint) {
        (Strategy::Extractive, _) => summarize_extractive(req),
        (Strategy::External, Some((ep, template))) => summarize_external(req, ep, template),
        (Strategy::External, None) => downgrade(req, "no endpoint configured"),
    }
}
