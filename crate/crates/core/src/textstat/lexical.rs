use std::collections::{HashMap, HashSet};

use super::{MetricError, TokenizedText};

/// Maps each token to a dense id in order of first appearance.
pub(super) fn token_ids(tokens: &[String]) -> (Vec<usize>, usize) {
    let mut vocab: HashMap<&str, usize> = HashMap::with_capacity(tokens.len());
    let ids = tokens
        .iter()
        .map(|tok| {
            let next = vocab.len();
            *vocab.entry(tok.as_str()).or_insert(next)
        })
        .collect();
    (ids, vocab.len())
}

fn type_count(tokens: &[String]) -> usize {
    tokens.iter().map(String::as_str).collect::<HashSet<_>>().len()
}

/// Distinct tokens over total tokens.
pub fn ttr(t: &TokenizedText) -> Result<f64, MetricError> {
    if t.tokens.is_empty() {
        return Err(MetricError::EmptyText);
    }
    Ok(type_count(&t.tokens) as f64 / t.tokens.len() as f64)
}

/// Mean TTR over every contiguous window of `window` tokens. Texts no
/// longer than the window score their plain TTR.
pub fn mattr(t: &TokenizedText, window: usize) -> Result<f64, MetricError> {
    if window == 0 {
        return Err(MetricError::InvalidParameter("mattr window must be >= 1".into()));
    }
    let n = t.tokens.len();
    if n == 0 {
        return Err(MetricError::EmptyText);
    }
    if n <= window {
        return ttr(t);
    }

    let (ids, vocab) = token_ids(&t.tokens);
    let mut counts = vec![0usize; vocab];
    let mut distinct = 0usize;
    for &id in &ids[..window] {
        if counts[id] == 0 {
            distinct += 1;
        }
        counts[id] += 1;
    }
    let mut sum = distinct as f64 / window as f64;
    for i in window..n {
        let out = ids[i - window];
        counts[out] -= 1;
        if counts[out] == 0 {
            distinct -= 1;
        }
        let inc = ids[i];
        if counts[inc] == 0 {
            distinct += 1;
        }
        counts[inc] += 1;
        sum += distinct as f64 / window as f64;
    }
    Ok(sum / (n - window + 1) as f64)
}

/// Maas index `(log N - log V) / (log N)^2`, base-10 logarithms.
pub fn maas(t: &TokenizedText) -> Result<f64, MetricError> {
    let n = t.tokens.len();
    match n {
        0 => return Err(MetricError::EmptyText),
        1 => return Err(MetricError::SingleToken),
        _ => {}
    }
    let v = type_count(&t.tokens);
    let log_n = (n as f64).log10();
    Ok((log_n - (v as f64).log10()) / (log_n * log_n))
}

/// Probability that a type with `freq` occurrences among `total` tokens is
/// absent from a without-replacement sample of `sample` tokens, i.e.
/// `C(total - freq, sample) / C(total, sample)`.
fn absent_probability(total: usize, freq: usize, sample: usize) -> f64 {
    if total - freq < sample {
        return 0.0;
    }
    (0..sample)
        .map(|i| (total - freq - i) as f64 / (total - i) as f64)
        .product()
}

/// HD-D: expected number of distinct types in a random `sample_size`-token
/// sample (without replacement), divided by `sample_size`.
pub fn hdd(t: &TokenizedText, sample_size: usize) -> Result<f64, MetricError> {
    if sample_size == 0 {
        return Err(MetricError::InvalidParameter("hdd sample size must be >= 1".into()));
    }
    let n = t.tokens.len();
    if n < sample_size {
        return Err(MetricError::TextTooShort {
            needed: sample_size,
            got: n,
        });
    }
    let mut freqs: HashMap<&str, usize> = HashMap::new();
    for tok in &t.tokens {
        *freqs.entry(tok.as_str()).or_default() += 1;
    }
    // sort for a summation order independent of hash iteration
    let mut freqs: Vec<usize> = freqs.into_values().collect();
    freqs.sort_unstable();
    let expected: f64 = freqs
        .into_iter()
        .map(|f| 1.0 - absent_probability(n, f, sample_size))
        .sum();
    Ok(expected / sample_size as f64)
}

/// Sum over n = 1..=max_n of distinct n-grams over total n-grams.
pub fn ngram_diversity(t: &TokenizedText, max_n: usize) -> Result<f64, MetricError> {
    if max_n == 0 {
        return Err(MetricError::InvalidParameter("ngram max_n must be >= 1".into()));
    }
    let len = t.tokens.len();
    if len < max_n {
        return Err(MetricError::TextTooShort {
            needed: max_n,
            got: len,
        });
    }
    let (ids, _) = token_ids(&t.tokens);
    let total = (1..=max_n)
        .map(|n| {
            let grams: HashSet<&[usize]> = ids.windows(n).collect();
            grams.len() as f64 / (len - n + 1) as f64
        })
        .sum();
    Ok(total)
}
