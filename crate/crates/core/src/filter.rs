//! Preference-pair construction.
//!
//! Three strategies:
//!
//! - **Diverse-NS** keeps `(prompt, first, second)` as `(rejected = first,
//!   chosen = second)` when the second response clears the corpus-wide median
//!   first-response quality, beats the first on quality and diversity, and
//!   stays within a few words of its length. Diversity is entropy, quality is
//!   the reward-model score.
//! - **Diverse-NS-Lite** applies the same rules with TTR as diversity and the
//!   MAAS index as the quality proxy (higher MAAS counts as higher quality).
//! - **DivPO** pools every response for a prompt, takes the most diverse
//!   response from the top quality quartile as chosen and the least diverse
//!   from the bottom quartile as rejected. It has no length control.
//!
//! [`select_top_k`] then keeps the pairs with the largest diversity gain.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decile::percentile;
use crate::ingest::{GenerationRecord, PreferencePair, ResponseRecord, DEFAULT_MAX_LEN_DELTA};

pub const DEFAULT_TOP_K: usize = 3000;
pub const DEFAULT_DIVPO_UPPER_PCT: f64 = 75.0;
pub const DEFAULT_DIVPO_LOWER_PCT: f64 = 25.0;
/// Percentile of first-response quality the second response must reach.
pub const QUALITY_FLOOR_PCT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "DNS")]
    Dns,
    #[serde(rename = "DNS_LITE")]
    DnsLite,
    #[serde(rename = "DIVPO")]
    DivPo,
}

impl Method {
    /// Default `(diversity, quality)` metric names.
    pub fn default_metrics(self) -> (&'static str, &'static str) {
        match self {
            Method::Dns | Method::DivPo => ("entropy", "quality"),
            Method::DnsLite => ("ttr", "maas"),
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Method::Dns => "dns",
            Method::DnsLite => "dns-lite",
            Method::DivPo => "divpo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Method {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "dns" => Ok(Method::Dns),
            "dns-lite" => Ok(Method::DnsLite),
            "divpo" => Ok(Method::DivPo),
            _ => Err(FilterError::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("record `{id}` is missing score `{field}`")]
    MissingScore { id: String, field: String },
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("empty input")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub method: Method,
    pub diversity_metric: String,
    pub quality_metric: String,
    pub max_len_delta: usize,
    pub top_k: usize,
    pub divpo_upper_pct: f64,
    pub divpo_lower_pct: f64,
    /// Ranking key for [`select_top_k`]. `None` picks the method default:
    /// the diversity metric, except Diverse-NS-Lite which prefers entropy
    /// when every response carries it.
    pub gain_metric: Option<String>,
    /// Drop records with missing scores (before computing the quality
    /// median) instead of failing.
    pub skip_missing: bool,
}

impl FilterConfig {
    pub fn new(method: Method) -> Self {
        let (diversity, quality) = method.default_metrics();
        Self {
            method,
            diversity_metric: diversity.to_string(),
            quality_metric: quality.to_string(),
            max_len_delta: DEFAULT_MAX_LEN_DELTA,
            top_k: DEFAULT_TOP_K,
            divpo_upper_pct: DEFAULT_DIVPO_UPPER_PCT,
            divpo_lower_pct: DEFAULT_DIVPO_LOWER_PCT,
            gain_metric: None,
            skip_missing: false,
        }
    }

    pub fn dns() -> Self {
        Self::new(Method::Dns)
    }

    pub fn dns_lite() -> Self {
        Self::new(Method::DnsLite)
    }

    pub fn divpo() -> Self {
        Self::new(Method::DivPo)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let (lo, hi) = (self.divpo_lower_pct, self.divpo_upper_pct);
        if !(0.0 < lo && lo < hi && hi < 100.0) {
            return Err(FilterError::InvalidConfig(format!(
                "need 0 < divpo_lower_pct ({lo}) < divpo_upper_pct ({hi}) < 100"
            )));
        }
        if self.diversity_metric.is_empty() || self.quality_metric.is_empty() {
            return Err(FilterError::InvalidConfig("metric names must be non-empty".into()));
        }
        Ok(())
    }
}

/// Why records did not become pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_records: usize,
    /// Records (or DivPO pools) dropped for missing scores.
    pub missing_score: usize,
    /// Median first-response quality used by the quality floor.
    pub quality_floor: Option<f64>,
    /// Drops by the first failing rule: quality floor, quality gain,
    /// diversity gain, length parity.
    pub dropped_by_rule: [usize; 4],
    /// Pairs dropped because the ranking gain was not positive.
    pub nonpositive_gain: usize,
    /// DivPO prompts whose chosen and rejected picks coincided.
    pub degenerate_pools: usize,
    pub gain_metric: String,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub pairs: Vec<PreferencePair>,
    pub report: FilterReport,
}

fn score_of(r: &ResponseRecord, metric: &str, id: &str, which: &str) -> Result<f64, FilterError> {
    r.score(metric).ok_or_else(|| FilterError::MissingScore {
        id: id.to_string(),
        field: format!("{which}.{metric}"),
    })
}

struct Scored<'a> {
    rec: &'a GenerationRecord,
    d: [f64; 2],
    q: [f64; 2],
    wc: [usize; 2],
}

fn score_record<'a>(
    rec: &'a GenerationRecord,
    cfg: &FilterConfig,
) -> Result<Scored<'a>, FilterError> {
    let get = |r: &ResponseRecord, m: &str, which: &str| score_of(r, m, &rec.id, which);
    Ok(Scored {
        rec,
        d: [
            get(&rec.first, &cfg.diversity_metric, "first")?,
            get(&rec.second, &cfg.diversity_metric, "second")?,
        ],
        q: [
            get(&rec.first, &cfg.quality_metric, "first")?,
            get(&rec.second, &cfg.quality_metric, "second")?,
        ],
        wc: [rec.first.word_count(), rec.second.word_count()],
    })
}

/// Index (0-based) of the first Diverse-NS rule a record fails, if any.
fn first_failed_rule(s: &Scored<'_>, quality_floor: f64, max_len_delta: usize) -> Option<usize> {
    let [d1, d2] = s.d;
    let [q1, q2] = s.q;
    if !(q2 >= quality_floor) {
        Some(0)
    } else if !(q2 > q1) {
        Some(1)
    } else if !(d2 > d1) {
        Some(2)
    } else if s.wc[0].abs_diff(s.wc[1]) > max_len_delta {
        Some(3)
    } else {
        None
    }
}

fn has_all(rec: &GenerationRecord, metric: &str) -> bool {
    rec.first.score(metric).is_some() && rec.second.score(metric).is_some()
}

fn resolve_gain_metric(cfg: &FilterConfig, records: &[&GenerationRecord]) -> String {
    if let Some(g) = &cfg.gain_metric {
        return g.clone();
    }
    match cfg.method {
        Method::DnsLite if !records.is_empty() && records.iter().all(|r| has_all(r, "entropy")) => {
            "entropy".to_string()
        }
        _ => cfg.diversity_metric.clone(),
    }
}

/// A kept pair, or the failing rule index (`usize::MAX` for a score
/// error) with the error if any.
type Decision = Result<Option<PreferencePair>, (usize, Option<FilterError>)>;

/// Diverse-NS / Diverse-NS-Lite filtering. Output pairs are in corpus order.
pub fn dns_filter(
    corpus: &[GenerationRecord],
    cfg: &FilterConfig,
) -> Result<FilterOutcome, FilterError> {
    cfg.validate()?;
    if cfg.method == Method::DivPo {
        return Err(FilterError::InvalidConfig(
            "dns_filter called with method divpo".into(),
        ));
    }
    let mut report = FilterReport {
        input_records: corpus.len(),
        ..FilterReport::default()
    };

    let scored: Vec<Result<Scored<'_>, FilterError>> =
        corpus.par_iter().map(|rec| score_record(rec, cfg)).collect();
    let mut kept = Vec::with_capacity(scored.len());
    for s in scored {
        match s {
            Ok(s) => kept.push(s),
            Err(_) if cfg.skip_missing => report.missing_score += 1,
            Err(e) => return Err(e),
        }
    }

    let records: Vec<&GenerationRecord> = kept.iter().map(|s| s.rec).collect();
    let gain_metric = resolve_gain_metric(cfg, &records);
    report.gain_metric = gain_metric.clone();
    if kept.is_empty() {
        return Ok(FilterOutcome {
            pairs: Vec::new(),
            report,
        });
    }

    let first_quality: Vec<f64> = kept.iter().map(|s| s.q[0]).collect();
    let floor = percentile(&first_quality, QUALITY_FLOOR_PCT);
    report.quality_floor = Some(floor);

    let decisions: Vec<Decision> = kept
        .par_iter()
        .map(|s| {
            if let Some(rule) = first_failed_rule(s, floor, cfg.max_len_delta) {
                return Err((rule, None));
            }
            let rec = s.rec;
            let diversity_gain = if gain_metric == cfg.diversity_metric {
                s.d[1] - s.d[0]
            } else {
                let g2 = score_of(&rec.second, &gain_metric, &rec.id, "second");
                let g1 = score_of(&rec.first, &gain_metric, &rec.id, "first");
                match (g2, g1) {
                    (Ok(a), Ok(b)) => a - b,
                    (Err(e), _) | (_, Err(e)) => return Err((usize::MAX, Some(e))),
                }
            };
            if !(diversity_gain > 0.0) {
                return Ok(None);
            }
            Ok(Some(PreferencePair {
                id: rec.id.clone(),
                prompt_id: rec.prompt_id.clone(),
                prompt_text: rec.prompt_text.clone(),
                chosen: rec.second.clone(),
                rejected: rec.first.clone(),
                diversity_gain,
                quality_gain: s.q[1] - s.q[0],
                method: cfg.method,
            }))
        })
        .collect();

    let mut pairs = Vec::new();
    for d in decisions {
        match d {
            Ok(Some(p)) => pairs.push(p),
            Ok(None) => report.nonpositive_gain += 1,
            Err((_, Some(e))) => return Err(e),
            Err((rule, None)) => report.dropped_by_rule[rule] += 1,
        }
    }
    report.pairs = pairs.len();
    Ok(FilterOutcome { pairs, report })
}

/// DivPO selection over one prompt's responses. Returns `None` for an empty
/// pool or when the chosen and rejected picks are the same response.
pub fn divpo_filter(
    prompt_id: &str,
    prompt_text: &str,
    pool: &[ResponseRecord],
    cfg: &FilterConfig,
) -> Result<Option<PreferencePair>, FilterError> {
    cfg.validate()?;
    divpo_pool(prompt_id, prompt_text, pool, cfg, &cfg.diversity_metric)
}

fn divpo_pool(
    prompt_id: &str,
    prompt_text: &str,
    pool: &[ResponseRecord],
    cfg: &FilterConfig,
    gain_metric: &str,
) -> Result<Option<PreferencePair>, FilterError> {
    if pool.is_empty() {
        return Ok(None);
    }
    let mut q = Vec::with_capacity(pool.len());
    let mut d = Vec::with_capacity(pool.len());
    for (i, r) in pool.iter().enumerate() {
        let id = format!("{prompt_id}#{i}");
        q.push(score_of(r, &cfg.quality_metric, &id, "response")?);
        d.push(score_of(r, &cfg.diversity_metric, &id, "response")?);
    }
    let upper = percentile(&q, cfg.divpo_upper_pct);
    let lower = percentile(&q, cfg.divpo_lower_pct);

    let mut chosen: Option<usize> = None;
    let mut rejected: Option<usize> = None;
    for i in 0..pool.len() {
        if q[i] >= upper && chosen.is_none_or(|c| d[i] > d[c]) {
            chosen = Some(i);
        }
        if q[i] <= lower && rejected.is_none_or(|r| d[i] < d[r]) {
            rejected = Some(i);
        }
    }
    let (c, r) = match (chosen, rejected) {
        (Some(c), Some(r)) if c != r => (c, r),
        _ => return Ok(None),
    };
    let diversity_gain = if gain_metric == cfg.diversity_metric {
        d[c] - d[r]
    } else {
        score_of(&pool[c], gain_metric, prompt_id, "chosen")?
            - score_of(&pool[r], gain_metric, prompt_id, "rejected")?
    };
    Ok(Some(PreferencePair {
        id: prompt_id.to_string(),
        prompt_id: prompt_id.to_string(),
        prompt_text: prompt_text.to_string(),
        chosen: pool[c].clone(),
        rejected: pool[r].clone(),
        diversity_gain,
        quality_gain: q[c] - q[r],
        method: Method::DivPo,
    }))
}

/// Groups a corpus into per-prompt pools (both responses of every record,
/// in file order) keyed by first appearance of the prompt.
pub fn prompt_pools(corpus: &[GenerationRecord]) -> Vec<(&str, &str, Vec<ResponseRecord>)> {
    let mut order: Vec<(&str, &str, Vec<ResponseRecord>)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for rec in corpus {
        let slot = *index.entry(rec.prompt_id.as_str()).or_insert_with(|| {
            order.push((rec.prompt_id.as_str(), rec.prompt_text.as_str(), Vec::new()));
            order.len() - 1
        });
        order[slot].2.push(rec.first.clone());
        order[slot].2.push(rec.second.clone());
    }
    order
}

/// DivPO over a whole corpus, one candidate pair per prompt.
pub fn divpo_corpus(
    corpus: &[GenerationRecord],
    cfg: &FilterConfig,
) -> Result<FilterOutcome, FilterError> {
    cfg.validate()?;
    let gain_metric = cfg
        .gain_metric
        .clone()
        .unwrap_or_else(|| cfg.diversity_metric.clone());
    let mut report = FilterReport {
        input_records: corpus.len(),
        gain_metric: gain_metric.clone(),
        ..FilterReport::default()
    };
    let pools = prompt_pools(corpus);
    let results: Vec<Result<Option<PreferencePair>, FilterError>> = pools
        .par_iter()
        .map(|(pid, text, pool)| divpo_pool(pid, text, pool, cfg, &gain_metric))
        .collect();
    let mut pairs = Vec::new();
    for r in results {
        match r {
            Ok(Some(p)) => pairs.push(p),
            Ok(None) => report.degenerate_pools += 1,
            Err(_) if cfg.skip_missing => report.missing_score += 1,
            Err(e) => return Err(e),
        }
    }
    report.pairs = pairs.len();
    Ok(FilterOutcome { pairs, report })
}

/// Runs the configured method.
pub fn filter_corpus(
    corpus: &[GenerationRecord],
    cfg: &FilterConfig,
) -> Result<FilterOutcome, FilterError> {
    match cfg.method {
        Method::Dns | Method::DnsLite => dns_filter(corpus, cfg),
        Method::DivPo => divpo_corpus(corpus, cfg),
    }
}

/// Sorts by descending diversity gain (ties by ascending pair id) and keeps
/// the first `top_k`.
pub fn select_top_k(pairs: &[PreferencePair], cfg: &FilterConfig) -> Vec<PreferencePair> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| {
        b.diversity_gain
            .total_cmp(&a.diversity_gain)
            .then_with(|| a.id.cmp(&b.id))
    });
    sorted.truncate(cfg.top_k);
    sorted
}

/// Mean and population standard deviation of `wc(chosen) - wc(rejected)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthDeltaReport {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn length_delta_report(pairs: &[PreferencePair]) -> Result<LengthDeltaReport, FilterError> {
    if pairs.is_empty() {
        return Err(FilterError::EmptyInput);
    }
    let deltas: Vec<f64> = pairs.iter().map(|p| p.length_delta() as f64).collect();
    let n = deltas.len() as f64;
    let mean = deltas.iter().sum::<f64>() / n;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(LengthDeltaReport {
        n: pairs.len(),
        mean,
        std: var.sqrt(),
    })
}
