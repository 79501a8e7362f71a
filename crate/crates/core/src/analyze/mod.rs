//! Statistics and evaluation helpers: correlation, t-tests, Jaccard pair
//! mining for side-by-side evaluation, POS-bigram repetition, and win-rate
//! tabulation of ingested judgments.

pub mod special;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::{self, IngestError, ReadOutcome};
use crate::textstat::tokenize;

pub use special::t_two_sided_p;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("both sets are empty")]
    BothEmpty,
    #[error("empty input")]
    EmptyInput,
    #[error("empty response list")]
    EmptyList,
    #[error("empty corpus")]
    EmptyCorpus,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn sample_variance(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Sample Pearson correlation with a two-sided p-value from the t-transform
/// `t = r sqrt(n-2) / sqrt(1 - r^2)` on `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p_value, n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub x_name: String,
    pub y_name: String,
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pairs: Vec<CorrelationEntry>,
}

/// Correlates every `x` series with every `y` series.
pub fn correlation_report(
    xs: &[(String, Vec<f64>)],
    ys: &[(String, Vec<f64>)],
) -> Result<CorrelationReport, StatsError> {
    let mut pairs = Vec::with_capacity(xs.len() * ys.len());
    for (x_name, x) in xs {
        for (y_name, y) in ys {
            let c = pearson(x, y)?;
            pairs.push(CorrelationEntry {
                x_name: x_name.clone(),
                y_name: y_name.clone(),
                r: c.r,
                p_value: c.p_value,
                n: c.n,
            });
        }
    }
    Ok(CorrelationReport { pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestReport {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub equal_variance: bool,
}

/// Independent two-sample t-test, `t = (mean(a) - mean(b)) / se`.
///
/// `equal_variance` selects Student's pooled test; otherwise Welch's test
/// with Welch-Satterthwaite degrees of freedom.
pub fn ttest_ind(a: &[f64], b: &[f64], equal_variance: bool) -> Result<TTestReport, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewSamples {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma), sample_variance(b, mb));
    let (se, df) = if equal_variance {
        let df = na + nb - 2.0;
        let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
        ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
    } else {
        let (wa, wb) = (va / na, vb / nb);
        let s2 = wa + wb;
        let df = s2 * s2 / (wa * wa / (na - 1.0) + wb * wb / (nb - 1.0));
        (s2.sqrt(), df)
    };
    let diff = ma - mb;
    let (t, p) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = diff / se;
        (t, t_two_sided_p(t, df))
    };
    Ok(TTestReport {
        t_statistic: t,
        p_value: p,
        df: if df.is_finite() { df } else { na + nb - 2.0 },
        n_a: a.len(),
        n_b: b.len(),
        equal_variance,
    })
}

/// Lowercased word types of a text.
pub fn token_set(text: &str) -> HashSet<String> {
    tokenize(text).tokens.into_iter().collect()
}

/// `|a ∩ b| / |a ∪ b|`.
pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64, StatsError> {
    if a.is_empty() && b.is_empty() {
        return Err(StatsError::BothEmpty);
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub index_a: usize,
    pub index_b: usize,
    pub similarity: f64,
}

/// Ranks every cross-method pair by token-set Jaccard similarity, ascending,
/// and returns the first `k` (ties by `(index_a, index_b)`).
pub fn least_similar_pairs<S: AsRef<str>>(
    a: &[S],
    b: &[S],
    k: usize,
) -> Result<Vec<EvalPair>, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyList);
    }
    let sets_a: Vec<_> = a.iter().map(|t| token_set(t.as_ref())).collect();
    let sets_b: Vec<_> = b.iter().map(|t| token_set(t.as_ref())).collect();
    let mut pairs = Vec::with_capacity(a.len() * b.len());
    for (i, sa) in sets_a.iter().enumerate() {
        for (j, sb) in sets_b.iter().enumerate() {
            pairs.push(EvalPair {
                index_a: i,
                index_b: j,
                similarity: jaccard(sa, sb)?,
            });
        }
    }
    pairs.sort_by(|x, y| {
        x.similarity
            .total_cmp(&y.similarity)
            .then((x.index_a, x.index_b).cmp(&(y.index_a, y.index_b)))
    });
    pairs.truncate(k);
    Ok(pairs)
}

/// A document with one POS tag per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedText {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub tags: Vec<String>,
}

impl TaggedText {
    pub fn new(
        doc_id: impl Into<String>,
        tokens: Vec<String>,
        tags: Vec<String>,
    ) -> Result<Self, StatsError> {
        if tokens.len() != tags.len() {
            return Err(StatsError::LengthMismatch(tokens.len(), tags.len()));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            tokens,
            tags,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigramStat {
    pub bigram: (String, String),
    /// Documents containing the bigram at least once.
    pub docs_present: usize,
    pub occurrences: usize,
    /// Share of occurrences starting at token position 0, in percent.
    pub pct_at_start: f64,
}

/// Counts tag bigrams across documents and returns the `top_n` present in
/// the most documents (ties by bigram, lexicographically).
pub fn pos_bigram_report(corpus: &[TaggedText], top_n: usize) -> Result<Vec<BigramStat>, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    // bigram -> (docs, occurrences, at start)
    let mut counts: HashMap<(&str, &str), (usize, usize, usize)> = HashMap::new();
    for doc in corpus {
        if doc.tags.len() != doc.tokens.len() {
            return Err(StatsError::LengthMismatch(doc.tokens.len(), doc.tags.len()));
        }
        let mut seen = HashSet::new();
        for (pos, w) in doc.tags.windows(2).enumerate() {
            let key = (w[0].as_str(), w[1].as_str());
            let entry = counts.entry(key).or_default();
            if seen.insert(key) {
                entry.0 += 1;
            }
            entry.1 += 1;
            if pos == 0 {
                entry.2 += 1;
            }
        }
    }
    let mut stats: Vec<BigramStat> = counts
        .into_iter()
        .map(|((a, b), (docs, occ, start))| BigramStat {
            bigram: (a.to_string(), b.to_string()),
            docs_present: docs,
            occurrences: occ,
            pct_at_start: 100.0 * start as f64 / occ as f64,
        })
        .collect();
    stats.sort_by(|x, y| {
        y.docs_present
            .cmp(&x.docs_present)
            .then_with(|| x.bigram.cmp(&y.bigram))
    });
    stats.truncate(top_n);
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    #[serde(rename = "TIE")]
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub pair_id: String,
    pub winner: Winner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub n: usize,
    pub win_a_pct: f64,
    pub win_b_pct: f64,
    pub tie_pct: f64,
}

pub fn win_rate(winners: &[Winner]) -> Result<WinRate, StatsError> {
    if winners.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = winners.len();
    let pct = |w: Winner| 100.0 * winners.iter().filter(|&&x| x == w).count() as f64 / n as f64;
    Ok(WinRate {
        n,
        win_a_pct: pct(Winner::A),
        win_b_pct: pct(Winner::B),
        tie_pct: pct(Winner::Tie),
    })
}

/// One method's response to a prompt, as used for pair mining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResponse {
    pub prompt_id: String,
    pub method: String,
    pub text: String,
}

/// Groups responses by prompt (sorted by prompt id) and then by method,
/// keeping file order within each group.
pub fn group_responses(
    responses: &[MethodResponse],
) -> BTreeMap<&str, BTreeMap<&str, Vec<&str>>> {
    let mut out: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = BTreeMap::new();
    for r in responses {
        out.entry(r.prompt_id.as_str())
            .or_default()
            .entry(r.method.as_str())
            .or_default()
            .push(r.text.as_str());
    }
    out
}

type FieldCheck<'a> = (&'a str, fn(&Value) -> bool);

fn check_fields(v: &Value, fields: &[FieldCheck]) -> Result<(), ingest::Violation> {
    let obj = v
        .as_object()
        .ok_or_else(|| ("<record>".to_string(), "expected an object".to_string()))?;
    for (name, ok) in fields {
        match obj.get(*name) {
            Some(x) if ok(x) => {}
            Some(_) => return Err((name.to_string(), "wrong type".to_string())),
            None => return Err((name.to_string(), "missing".to_string())),
        }
    }
    Ok(())
}

fn is_str_array(v: &Value) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(Value::is_string))
}

/// Reads a `tagged` file of `{doc_id, tokens, tags}` lines.
pub fn read_tagged(path: impl AsRef<Path>, strict: bool) -> Result<ReadOutcome<TaggedText>, IngestError> {
    let check = |v: &Value| {
        check_fields(v, &[("doc_id", Value::is_string), ("tokens", is_str_array), ("tags", is_str_array)])?;
        let len = |k: &str| v[k].as_array().map_or(0, Vec::len);
        if len("tokens") != len("tags") {
            return Err(("tags".to_string(), "length differs from tokens".to_string()));
        }
        Ok(())
    };
    ingest::read_file(
        path,
        &["tagged"],
        strict,
        check,
        Some(|t: &TaggedText| t.doc_id.as_str()),
    )
}

/// Reads a `judgments` file of `{pair_id, winner}` lines.
pub fn read_judgments(path: impl AsRef<Path>, strict: bool) -> Result<ReadOutcome<Judgment>, IngestError> {
    let check = |v: &Value| {
        check_fields(v, &[("pair_id", Value::is_string), ("winner", Value::is_string)])?;
        match v["winner"].as_str() {
            Some("A" | "B" | "TIE") => Ok(()),
            _ => Err(("winner".to_string(), "expected A, B or TIE".to_string())),
        }
    };
    ingest::read_file(path, &["judgments"], strict, check, None)
}

/// Reads a `responses` file of `{prompt_id, method, text}` lines.
pub fn read_responses(
    path: impl AsRef<Path>,
    strict: bool,
) -> Result<ReadOutcome<MethodResponse>, IngestError> {
    let check = |v: &Value| {
        check_fields(
            v,
            &[("prompt_id", Value::is_string), ("method", Value::is_string), ("text", Value::is_string)],
        )
    };
    ingest::read_file(path, &["responses"], strict, check, None)
}
