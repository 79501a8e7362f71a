//! Length-bucketed decile maps.
//!
//! A [`DecileMap`] stores, for each response word count, the 10th..90th
//! percentiles of a metric over a reference corpus. [`dd`] then ranks a new
//! response against responses of the same length, which removes most of the
//! length bias that lexical diversity metrics carry.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{self, FileHeader, IngestError};

pub const DEFAULT_MIN_BUCKET: usize = 20;
pub const PERCENTILE_METHOD: &str = "linear_inclusive";

#[derive(Debug, Error)]
pub enum DecileError {
    #[error("empty input")]
    EmptyInput,
    #[error("decile map has no buckets")]
    EmptyMap,
    #[error("non-finite metric value at position {0}")]
    NonFinite(usize),
    #[error("only {total} samples, fewer than min_bucket = {min_bucket}")]
    InsufficientData { total: usize, min_bucket: usize },
    #[error("unsupported percentile method `{0}`")]
    UnsupportedMethod(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Linear-interpolation percentile over sorted data (the "inclusive" or
/// type-7 definition): position `p/100 * (n-1)` between closest ranks.
pub fn percentile_linear(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    // multiply before dividing so integral positions come out exact
    let pos = (p * (sorted.len() - 1) as f64 / 100.0).clamp(0.0, (sorted.len() - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_linear(&sorted, p)
}

/// Returns the key nearest to `target`, preferring the smaller key on ties.
pub fn nearest_key<V>(map: &BTreeMap<usize, V>, target: usize) -> Option<usize> {
    let below = map.range(..=target).next_back().map(|(k, _)| *k);
    let above = map.range(target..).next().map(|(k, _)| *k);
    match (below, above) {
        (Some(b), Some(a)) => Some(if a - target < target - b { a } else { b }),
        (b, a) => b.or(a),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub word_count: usize,
    pub thresholds: [f64; 9],
    pub sample_count: usize,
}

impl Bucket {
    fn from_values(word_count: usize, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let mut thresholds = [0.0; 9];
        for (k, t) in thresholds.iter_mut().enumerate() {
            *t = percentile_linear(&values, 10.0 * (k + 1) as f64);
        }
        // interpolation is monotone in exact arithmetic; pin it in floating point
        for k in 1..9 {
            thresholds[k] = thresholds[k].max(thresholds[k - 1]);
        }
        Self {
            word_count,
            thresholds,
            sample_count: values.len(),
        }
    }

    /// Number of thresholds strictly exceeded by `value`.
    pub fn decile(&self, value: f64) -> u8 {
        self.thresholds.iter().filter(|&&t| value > t).count() as u8
    }
}

/// Per-word-count groups of metric values. Accumulators merge
/// associatively, so partial aggregates can be built in parallel.
#[derive(Debug, Clone, Default)]
pub struct BucketAccumulator {
    groups: BTreeMap<usize, Vec<f64>>,
}

impl BucketAccumulator {
    pub fn add(&mut self, word_count: usize, value: f64) {
        self.groups.entry(word_count).or_default().push(value);
    }

    pub fn merge(mut self, other: BucketAccumulator) -> Self {
        for (wc, mut values) in other.groups {
            self.groups.entry(wc).or_default().append(&mut values);
        }
        self
    }

    pub fn total(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    /// Folds sparse groups into their neighbours until every group has at
    /// least `min_bucket` samples.
    fn consolidate(mut self, min_bucket: usize) -> Result<BTreeMap<usize, Vec<f64>>, DecileError> {
        let total = self.total();
        if total == 0 {
            return Err(DecileError::EmptyInput);
        }
        if total < min_bucket {
            return Err(DecileError::InsufficientData { total, min_bucket });
        }
        let is_dense = |v: &Vec<f64>| v.len() >= min_bucket;
        let dense: BTreeMap<usize, ()> = self
            .groups
            .iter()
            .filter(|(_, v)| is_dense(v))
            .map(|(k, _)| (*k, ()))
            .collect();
        if !dense.is_empty() {
            let sparse: Vec<usize> = self
                .groups
                .iter()
                .filter(|(_, v)| !is_dense(v))
                .map(|(k, _)| *k)
                .collect();
            for wc in sparse {
                let target = nearest_key(&dense, wc).expect("dense set is non-empty");
                let mut values = self.groups.remove(&wc).expect("key present");
                self.groups.get_mut(&target).expect("key present").append(&mut values);
            }
            return Ok(self.groups);
        }
        // nothing dense: repeatedly fold the smallest group into its nearest neighbour
        while let Some((&wc, _)) = self
            .groups
            .iter()
            .filter(|(_, v)| !is_dense(v))
            .min_by_key(|(k, v)| (v.len(), **k))
        {
            let mut values = self.groups.remove(&wc).expect("key present");
            let target = nearest_key(&self.groups, wc).expect("total >= min_bucket implies a neighbour");
            self.groups.get_mut(&target).expect("key present").append(&mut values);
        }
        Ok(self.groups)
    }
}

/// Lookup table from word count to nine ascending decile thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DecileMap {
    pub metric: String,
    pub min_bucket: usize,
    pub built_from: String,
    pub buckets: BTreeMap<usize, Bucket>,
}

/// SHA-256 over the `(word_count, value)` sequence in input order.
pub fn fingerprint_scores(scores: &[(usize, f64)]) -> String {
    let mut hasher = Sha256::new();
    for (wc, v) in scores {
        hasher.update((*wc as u64).to_le_bytes());
        hasher.update(v.to_bits().to_le_bytes());
    }
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

/// Groups values by word count, merges buckets smaller than `min_bucket`
/// into the nearest populated word count, and records the 10th..90th
/// percentiles of each bucket.
pub fn build_map(
    scores: &[(usize, f64)],
    metric: &str,
    min_bucket: usize,
) -> Result<DecileMap, DecileError> {
    if scores.is_empty() {
        return Err(DecileError::EmptyInput);
    }
    let mut acc = BucketAccumulator::default();
    for (i, &(wc, v)) in scores.iter().enumerate() {
        if !v.is_finite() {
            return Err(DecileError::NonFinite(i));
        }
        acc.add(wc, v);
    }
    build_map_from(acc, metric, min_bucket, fingerprint_scores(scores))
}

/// Finishes a map from a (possibly parallel-built) accumulator.
pub fn build_map_from(
    acc: BucketAccumulator,
    metric: &str,
    min_bucket: usize,
    built_from: String,
) -> Result<DecileMap, DecileError> {
    let buckets = acc
        .consolidate(min_bucket)?
        .into_iter()
        .map(|(wc, values)| (wc, Bucket::from_values(wc, values)))
        .collect();
    Ok(DecileMap {
        metric: metric.to_string(),
        min_bucket,
        built_from,
        buckets,
    })
}

impl DecileMap {
    /// The bucket at `word_count`, or the nearest one (smaller on ties).
    pub fn bucket_for(&self, word_count: usize) -> Option<&Bucket> {
        nearest_key(&self.buckets, word_count).map(|k| &self.buckets[&k])
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<usize, DecileError> {
        let mut header = FileHeader::new("decile_map");
        header.extra.insert("metric".into(), Value::from(self.metric.clone()));
        header
            .extra
            .insert("percentile_method".into(), Value::from(PERCENTILE_METHOD));
        header.extra.insert("min_bucket".into(), Value::from(self.min_bucket));
        header
            .extra
            .insert("built_from".into(), Value::from(self.built_from.clone()));
        let buckets: Vec<&Bucket> = self.buckets.values().collect();
        Ok(ingest::write_lines(path, &header, &buckets)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DecileError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                IngestError::MissingFile(path.to_path_buf())
            } else {
                IngestError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        let out = ingest::read_lines::<Bucket, _>(
            std::io::BufReader::new(file),
            &["decile_map"],
            true,
            check_bucket,
            None,
        )?;
        let header = out.header;
        let field = |name: &str| {
            header.extra.get(name).cloned().ok_or_else(|| IngestError::SchemaViolation {
                line: 1,
                field: name.to_string(),
                reason: "missing".into(),
            })
        };
        let method = field("percentile_method")?;
        if method.as_str() != Some(PERCENTILE_METHOD) {
            return Err(DecileError::UnsupportedMethod(method.to_string()));
        }
        let bad = |name: &str| IngestError::SchemaViolation {
            line: 1,
            field: name.to_string(),
            reason: "wrong type".into(),
        };
        let metric = field("metric")?.as_str().ok_or_else(|| bad("metric"))?.to_string();
        let min_bucket = field("min_bucket")?.as_u64().ok_or_else(|| bad("min_bucket"))? as usize;
        let built_from = field("built_from")?
            .as_str()
            .ok_or_else(|| bad("built_from"))?
            .to_string();
        if out.records.is_empty() {
            return Err(DecileError::EmptyMap);
        }
        let buckets = out.records.into_iter().map(|b| (b.word_count, b)).collect();
        Ok(Self {
            metric,
            min_bucket,
            built_from,
            buckets,
        })
    }
}

fn check_bucket(v: &Value) -> Result<(), (String, String)> {
    let thresholds = v
        .get("thresholds")
        .and_then(Value::as_array)
        .ok_or_else(|| ("thresholds".to_string(), "missing or not an array".to_string()))?;
    let values: Option<Vec<f64>> = thresholds.iter().map(Value::as_f64).collect();
    match values {
        Some(t) if t.len() == 9 && t.windows(2).all(|w| w[0] <= w[1]) => Ok(()),
        _ => Err((
            "thresholds".to_string(),
            "expected 9 non-decreasing numbers".to_string(),
        )),
    }
}

/// Diversity decile of one response: the number of thresholds in its
/// length bucket that `value` strictly exceeds (0..=9).
pub fn dd(map: &DecileMap, word_count: usize, value: f64) -> Result<u8, DecileError> {
    map.bucket_for(word_count)
        .map(|b| b.decile(value))
        .ok_or(DecileError::EmptyMap)
}

/// Mean DD of `tuned` minus mean DD of `base`.
pub fn delta_dd(
    map: &DecileMap,
    base: &[(usize, f64)],
    tuned: &[(usize, f64)],
) -> Result<f64, DecileError> {
    Ok(mean_dd(map, tuned)? - mean_dd(map, base)?)
}

pub fn mean_dd(map: &DecileMap, values: &[(usize, f64)]) -> Result<f64, DecileError> {
    if values.is_empty() {
        return Err(DecileError::EmptyInput);
    }
    let total: u64 = values
        .iter()
        .map(|&(wc, v)| dd(map, wc, v).map(u64::from))
        .sum::<Result<u64, _>>()?;
    Ok(total as f64 / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_bucket(values: &[f64]) -> DecileMap {
        let scores: Vec<(usize, f64)> = values.iter().map(|&v| (10, v)).collect();
        build_map(&scores, "ttr", 1).unwrap()
    }

    #[test]
    fn thresholds_for_one_to_hundred() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let map = one_bucket(&values);
        let b = &map.buckets[&10];
        assert_eq!(b.sample_count, 100);
        // position p/100 * 99 -> value 1 + 0.99 p
        for (k, t) in b.thresholds.iter().enumerate() {
            let expected = 1.0 + 0.99 * 10.0 * (k + 1) as f64;
            assert!((t - expected).abs() < 1e-12, "{k}: {t} vs {expected}");
        }
        assert!((b.thresholds[0] - 10.9).abs() < 1e-12);
        assert!((b.thresholds[8] - 90.1).abs() < 1e-12);
    }

    #[test]
    fn identical_values() {
        let map = one_bucket(&[0.42; 30]);
        assert!(map.buckets[&10].thresholds.iter().all(|&t| t == 0.42));
        assert_eq!(dd(&map, 10, 0.42).unwrap(), 0);
        assert_eq!(dd(&map, 10, 0.43).unwrap(), 9);
    }

    #[test]
    fn sparse_bucket_merges_into_neighbour() {
        let mut scores: Vec<(usize, f64)> = (0..50).map(|i| (100, i as f64)).collect();
        scores.extend((0..5).map(|i| (103, i as f64)));
        scores.extend((0..30).map(|i| (20, i as f64)));
        let map = build_map(&scores, "ttr", 20).unwrap();
        assert_eq!(map.buckets.keys().copied().collect::<Vec<_>>(), vec![20, 100]);
        assert_eq!(map.buckets[&100].sample_count, 55);
        assert_eq!(map.buckets[&20].sample_count, 30);
    }

    #[test]
    fn merge_ties_go_to_smaller() {
        let mut scores: Vec<(usize, f64)> = (0..20).map(|i| (10, i as f64)).collect();
        scores.extend((0..20).map(|i| (20, i as f64)));
        scores.push((15, 1.0));
        let map = build_map(&scores, "ttr", 20).unwrap();
        assert_eq!(map.buckets[&10].sample_count, 21);
        assert_eq!(map.buckets[&20].sample_count, 20);
    }

    #[test]
    fn all_sparse_agglomerates() {
        let scores: Vec<(usize, f64)> = (0..30).map(|i| (i, i as f64)).collect();
        let map = build_map(&scores, "ttr", 20).unwrap();
        assert_eq!(map.buckets.len(), 1);
        assert_eq!(map.buckets.values().next().unwrap().sample_count, 30);
        assert!(matches!(
            build_map(&scores[..5], "ttr", 20),
            Err(DecileError::InsufficientData { total: 5, min_bucket: 20 })
        ));
        assert!(matches!(build_map(&[], "ttr", 20), Err(DecileError::EmptyInput)));
    }

    #[test]
    fn all_sparse_keeps_several_buckets() {
        let scores: Vec<(usize, f64)> = (0..200).map(|i| (i, i as f64)).collect();
        let map = build_map(&scores, "ttr", 20).unwrap();
        assert!(map.buckets.len() > 1);
        assert!(map.buckets.values().all(|b| b.sample_count >= 20));
        assert_eq!(map.buckets.values().map(|b| b.sample_count).sum::<usize>(), 200);
    }

    #[test]
    fn dd_cases() {
        let scores: Vec<(usize, f64)> = (0..=10).map(|i| (5, i as f64)).collect();
        let map = build_map(&scores, "ttr", 1).unwrap();
        assert_eq!(map.buckets[&5].thresholds, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(dd(&map, 5, -1.0).unwrap(), 0);
        assert_eq!(dd(&map, 5, 1.0).unwrap(), 0);
        assert_eq!(dd(&map, 5, 5.5).unwrap(), 5);
        assert_eq!(dd(&map, 5, 100.0).unwrap(), 9);
        // nearest bucket
        assert_eq!(dd(&map, 500, 5.5).unwrap(), 5);
    }

    #[test]
    fn delta_dd_cases() {
        let scores: Vec<(usize, f64)> = (0..=10).map(|i| (5, i as f64)).collect();
        let map = build_map(&scores, "ttr", 1).unwrap();
        let base = vec![(5, 0.5), (5, 1.5)];
        assert_eq!(delta_dd(&map, &base, &base).unwrap(), 0.0);
        assert_eq!(delta_dd(&map, &[(5, 0.0)], &[(5, 10.0)]).unwrap(), 9.0);
        assert_eq!(delta_dd(&map, &base, &[(5, 2.5), (5, 3.5)]).unwrap(), 2.0);
        assert!(matches!(delta_dd(&map, &[], &base), Err(DecileError::EmptyInput)));
    }

    #[test]
    fn nearest_key_ties() {
        let m: BTreeMap<usize, ()> = [(10, ()), (20, ())].into_iter().collect();
        assert_eq!(nearest_key(&m, 15), Some(10));
        assert_eq!(nearest_key(&m, 16), Some(20));
        assert_eq!(nearest_key(&m, 0), Some(10));
        assert_eq!(nearest_key(&m, 99), Some(20));
        assert_eq!(nearest_key(&BTreeMap::<usize, ()>::new(), 3), None);
    }

    #[test]
    fn map_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.jsonl");
        let scores: Vec<(usize, f64)> = (0..200).map(|i| (i % 4, (i as f64).sqrt())).collect();
        let map = build_map(&scores, "mtld", 20).unwrap();
        map.write(&path).unwrap();
        assert_eq!(DecileMap::read(&path).unwrap(), map);
    }

    #[test]
    fn accumulator_merge_is_order_free() {
        let scores: Vec<(usize, f64)> = (0..300).map(|i| (i % 7, ((i * 37) % 101) as f64)).collect();
        let whole = build_map(&scores, "ttr", 20).unwrap();
        let (a, b) = scores.split_at(123);
        let mut left = BucketAccumulator::default();
        let mut right = BucketAccumulator::default();
        a.iter().for_each(|&(w, v)| left.add(w, v));
        b.iter().for_each(|&(w, v)| right.add(w, v));
        let merged = build_map_from(right.merge(left), "ttr", 20, whole.built_from.clone()).unwrap();
        assert_eq!(merged, whole);
    }

    proptest! {
        #[test]
        fn consolidated_buckets_are_dense(
            scores in prop::collection::vec((1usize..120, 0.0f64..1.0), 20..400),
            min_bucket in 1usize..20,
        ) {
            let map = build_map(&scores, "m", min_bucket).unwrap();
            prop_assert!(map.buckets.values().all(|b| b.sample_count >= min_bucket));
            prop_assert_eq!(map.buckets.values().map(|b| b.sample_count).sum::<usize>(), scores.len());
        }

        #[test]
        fn monotone_in_value(values in prop::collection::vec(-50.0f64..50.0, 1..60), a in -60.0f64..60.0, b in -60.0f64..60.0) {
            let map = one_bucket(&values);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(dd(&map, 10, lo).unwrap() <= dd(&map, 10, hi).unwrap());
        }

        #[test]
        fn increasing_transform_invariance(values in prop::collection::vec(-5.0f64..5.0, 1..60), pick in 0usize..60) {
            // holds for queries drawn from the bucket's own samples
            let query = values[pick % values.len()];
            let f = |x: f64| x.exp() * 3.0 + x.powi(3);
            let transformed: Vec<f64> = values.iter().map(|&x| f(x)).collect();
            let a = dd(&one_bucket(&values), 10, query).unwrap();
            let b = dd(&one_bucket(&transformed), 10, f(query)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn delta_bounded(base in prop::collection::vec(-10.0f64..10.0, 1..20), tuned in prop::collection::vec(-10.0f64..10.0, 1..20)) {
            let scores: Vec<(usize, f64)> = (0..40).map(|i| (7, i as f64 / 2.0 - 10.0)).collect();
            let map = build_map(&scores, "ttr", 1).unwrap();
            let b: Vec<(usize, f64)> = base.into_iter().map(|v| (7, v)).collect();
            let t: Vec<(usize, f64)> = tuned.into_iter().map(|v| (7, v)).collect();
            let d = delta_dd(&map, &b, &t).unwrap();
            prop_assert!((-9.0..=9.0).contains(&d));
        }
    }
}
