use super::lexical::token_ids;
use super::{MetricError, TokenizedText};

/// MTLD flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtldMode {
    /// Factor counting, averaged over forward and backward passes.
    Plain,
    /// Mean length of the factor starting at each token position.
    MovingAverage,
    /// [`MtldMode::MovingAverage`] averaged over forward and reversed order.
    MovingAverageBidirectional,
}

/// Running type/token tally over dense token ids. Resetting is O(1) thanks
/// to the generation stamp.
struct Segment {
    stamp: Vec<u32>,
    generation: u32,
    types: usize,
    tokens: usize,
}

impl Segment {
    fn new(vocab: usize) -> Self {
        Self {
            stamp: vec![0; vocab],
            generation: 1,
            types: 0,
            tokens: 0,
        }
    }

    fn reset(&mut self) {
        self.generation += 1;
        self.types = 0;
        self.tokens = 0;
    }

    /// Adds a token and returns the running TTR.
    fn push(&mut self, id: usize) -> f64 {
        self.tokens += 1;
        if self.stamp[id] != self.generation {
            self.stamp[id] = self.generation;
            self.types += 1;
        }
        self.types as f64 / self.tokens as f64
    }
}

/// One directional MTLD pass: `N / (full factors + partial factor)`.
///
/// A factor closes as soon as the running TTR reaches the threshold. When no
/// factor closes and the trailing TTR is 1, the result is `N`.
fn factor_pass(ids: &[usize], vocab: usize, threshold: f64) -> f64 {
    let mut seg = Segment::new(vocab);
    let mut factors = 0.0;
    let mut current = 1.0;
    for &id in ids {
        current = seg.push(id);
        if current <= threshold {
            factors += 1.0;
            seg.reset();
            current = 1.0;
        }
    }
    factors += (1.0 - current) / (1.0 - threshold);
    if factors == 0.0 {
        ids.len() as f64
    } else {
        ids.len() as f64 / factors
    }
}

/// Mean length of the completed factors starting at each position. Factors
/// that run off the end are discarded; if none completes the result falls
/// back to the forward factor pass.
fn moving_average_pass(ids: &[usize], vocab: usize, threshold: f64) -> f64 {
    let mut seg = Segment::new(vocab);
    let mut total = 0usize;
    let mut completed = 0usize;
    for start in 0..ids.len() {
        seg.reset();
        for &id in &ids[start..] {
            if seg.push(id) <= threshold {
                total += seg.tokens;
                completed += 1;
                break;
            }
        }
    }
    if completed == 0 {
        factor_pass(ids, vocab, threshold)
    } else {
        total as f64 / completed as f64
    }
}

/// Measure of textual lexical diversity.
pub fn mtld(t: &TokenizedText, threshold: f64, mode: MtldMode) -> Result<f64, MetricError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricError::InvalidParameter(format!(
            "mtld threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if t.tokens.is_empty() {
        return Err(MetricError::EmptyText);
    }
    let (forward, vocab) = token_ids(&t.tokens);
    let backward: Vec<usize> = forward.iter().rev().copied().collect();
    let value = match mode {
        MtldMode::Plain => {
            (factor_pass(&forward, vocab, threshold) + factor_pass(&backward, vocab, threshold))
                / 2.0
        }
        MtldMode::MovingAverage => moving_average_pass(&forward, vocab, threshold),
        MtldMode::MovingAverageBidirectional => {
            (moving_average_pass(&forward, vocab, threshold)
                + moving_average_pass(&backward, vocab, threshold))
                / 2.0
        }
    };
    Ok(value)
}
