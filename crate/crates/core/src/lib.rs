//! Turns 10-K narrative text into labeled long-horizon stock-direction
//! datasets, trains a bag-of-words baseline, and evaluates buy/sell
//! forecasts against a Monte-Carlo fair-coin baseline.

pub mod dataset;
pub mod error;
pub mod evaluator;
pub mod fsutil;
pub mod ingest;
pub mod labeler;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod report;
pub mod sector;
pub mod summarizer;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use sector::Sector;
