//! Tokenization and lexical diversity metrics.
//!
//! Every metric operates on a [`TokenizedText`] produced by [`tokenize`], so
//! word counts, TTR-family metrics and decile-map keys all share one notion
//! of "word".

mod lexical;
mod mtld;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ResponseRecord;

pub use lexical::{hdd, maas, mattr, ngram_diversity, ttr};
pub use mtld::{mtld, MtldMode};

pub const DEFAULT_MATTR_WINDOW: usize = 50;
pub const DEFAULT_HDD_SAMPLE: usize = 42;
pub const DEFAULT_MTLD_THRESHOLD: f64 = 0.72;
pub const DEFAULT_NGRAM_MAX_N: usize = 4;
/// DEFLATE level used by [`compression_ratio`].
pub const COMPRESSION_LEVEL: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("text has no tokens")]
    EmptyText,
    #[error("text has a single token")]
    SingleToken,
    #[error("text too short: need at least {needed} tokens, got {got}")]
    TextTooShort { needed: usize, got: usize },
    #[error("empty list")]
    EmptyList,
    #[error("log-probability at index {index} is {value}; expected a finite value <= 0")]
    PositiveLogprob { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("response has no token_logprobs")]
    MissingLogprobs,
    #[error("{metric}: {source}")]
    Tagged {
        metric: Metric,
        #[source]
        source: Box<MetricError>,
    },
}

impl MetricError {
    /// Strips the metric tag, if any.
    pub fn root(&self) -> &MetricError {
        match self {
            MetricError::Tagged { source, .. } => source.root(),
            other => other,
        }
    }
}

/// A response split into lowercased word tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub source: String,
    pub tokens: Vec<String>,
    pub word_count: usize,
}

impl TokenizedText {
    /// Builds a tokenized text from already-split tokens.
    ///
    /// Tokens are taken as-is; callers are responsible for them being
    /// non-empty and whitespace-free.
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let source = tokens.join(" ");
        let word_count = tokens.len();
        Self {
            source,
            tokens,
            word_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}'
                | '\u{2010}'..='\u{2015}'
                | '\u{2026}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{00BF}'
                | '\u{00A1}'
                | '\u{00B7}'
                | '\u{2039}'
                | '\u{203A}'
                | '\u{3001}'
                | '\u{3002}'
        )
}

/// Splits on Unicode whitespace, strips leading/trailing punctuation from
/// each piece and lowercases. Pieces that strip to nothing are dropped.
pub fn tokenize(text: &str) -> TokenizedText {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|piece| piece.trim_matches(is_punct))
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
        .collect();
    let word_count = tokens.len();
    TokenizedText {
        source: text.to_string(),
        tokens,
        word_count,
    }
}

/// Word count under [`tokenize`].
pub fn word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|piece| !piece.trim_matches(is_punct).is_empty())
        .count()
}

/// Mean negative log-likelihood per token, in nats.
pub fn entropy(logprobs: &[f64]) -> Result<f64, MetricError> {
    if logprobs.is_empty() {
        return Err(MetricError::EmptyList);
    }
    for (index, &value) in logprobs.iter().enumerate() {
        if !(value <= 0.0) || !value.is_finite() {
            return Err(MetricError::PositiveLogprob { index, value });
        }
    }
    let total: f64 = logprobs.iter().map(|lp| -lp).sum();
    // normalise -0.0 to 0.0
    Ok(total / logprobs.len() as f64 + 0.0)
}

/// UTF-8 byte length over the byte length of a raw (headerless) DEFLATE
/// stream at level 6.
pub fn compression_ratio(text: &str) -> Result<f64, MetricError> {
    if text.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let mut encoder = DeflateEncoder::new(Vec::new(), Compression::new(COMPRESSION_LEVEL));
    encoder
        .write_all(text.as_bytes())
        .and_then(|_| encoder.flush())
        .expect("writing to an in-memory buffer cannot fail");
    let compressed = encoder
        .finish()
        .expect("finishing an in-memory deflate stream cannot fail");
    Ok(text.len() as f64 / compressed.len() as f64)
}

/// Lexical metrics computable from a response record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ttr,
    Mattr,
    Maas,
    Hdd,
    Mtld,
    MtldMa,
    MtldMaBi,
    Entropy,
    NgramDiv,
    CompRatio,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::Ttr,
        Metric::Mattr,
        Metric::Maas,
        Metric::Hdd,
        Metric::Mtld,
        Metric::MtldMa,
        Metric::MtldMaBi,
        Metric::Entropy,
        Metric::NgramDiv,
        Metric::CompRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Ttr => "ttr",
            Metric::Mattr => "mattr",
            Metric::Maas => "maas",
            Metric::Hdd => "hdd",
            Metric::Mtld => "mtld",
            Metric::MtldMa => "mtld_ma",
            Metric::MtldMaBi => "mtld_ma_bi",
            Metric::Entropy => "entropy",
            Metric::NgramDiv => "ngram_div",
            Metric::CompRatio => "comp_ratio",
        }
    }

    /// Whether the metric needs `token_logprobs` rather than text.
    pub fn needs_logprobs(self) -> bool {
        matches!(self, Metric::Entropy)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MetricError::InvalidParameter(format!("unknown metric `{s}`")))
    }
}

/// Tunable metric parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub mattr_window: usize,
    pub hdd_sample: usize,
    pub mtld_threshold: f64,
    pub ngram_max_n: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            mattr_window: DEFAULT_MATTR_WINDOW,
            hdd_sample: DEFAULT_HDD_SAMPLE,
            mtld_threshold: DEFAULT_MTLD_THRESHOLD,
            ngram_max_n: DEFAULT_NGRAM_MAX_N,
        }
    }
}

/// Which metrics [`score_response`] computes, and with what parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSelection {
    pub metrics: Vec<Metric>,
    pub params: MetricParams,
}

impl MetricSelection {
    pub fn new(metrics: impl IntoIterator<Item = Metric>) -> Self {
        Self {
            metrics: metrics.into_iter().collect(),
            params: MetricParams::default(),
        }
    }

    pub fn with_params(mut self, params: MetricParams) -> Self {
        self.params = params;
        self
    }
}

/// Named scores attached to one response.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricVector {
    pub values: BTreeMap<String, f64>,
}

impl MetricVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes one metric on a response.
pub fn compute_metric(
    metric: Metric,
    text: &TokenizedText,
    response: &ResponseRecord,
    params: &MetricParams,
) -> Result<f64, MetricError> {
    let value = match metric {
        Metric::Ttr => ttr(text),
        Metric::Mattr => mattr(text, params.mattr_window),
        Metric::Maas => maas(text),
        Metric::Hdd => hdd(text, params.hdd_sample),
        Metric::Mtld => mtld(text, params.mtld_threshold, MtldMode::Plain),
        Metric::MtldMa => mtld(text, params.mtld_threshold, MtldMode::MovingAverage),
        Metric::MtldMaBi => mtld(text, params.mtld_threshold, MtldMode::MovingAverageBidirectional),
        Metric::Entropy => match &response.token_logprobs {
            Some(lps) => entropy(lps),
            None => Err(MetricError::MissingLogprobs),
        },
        Metric::NgramDiv => ngram_diversity(text, params.ngram_max_n),
        Metric::CompRatio => compression_ratio(&response.text),
    };
    value.map_err(|e| MetricError::Tagged {
        metric,
        source: Box::new(e),
    })
}

/// Computes every selected metric on `tokenize(r.text)`.
///
/// Fails on the first metric error, tagged with the metric name.
pub fn score_response(
    r: &ResponseRecord,
    config: &MetricSelection,
) -> Result<MetricVector, MetricError> {
    let text = tokenize(&r.text);
    let mut out = MetricVector::default();
    for &metric in &config.metrics {
        let value = compute_metric(metric, &text, r, &config.params)?;
        out.insert(metric.as_str(), value);
    }
    Ok(out)
}
