//! Builds a per-length decile map and compares two sets of responses.
//!
//! Longer texts naturally score lower on many diversity metrics, so each
//! response is ranked only against base responses of similar length.

use divcurate::decile::{build_map, dd, delta_dd, mean_dd};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (word count, metric value) for a base model's responses
    let base: Vec<(usize, f64)> = (0..600)
        .map(|i| {
            let words = 40 + (i % 3) * 20;
            let value = 0.9 - words as f64 / 200.0 + (i * 37 % 100) as f64 / 500.0;
            (words, value)
        })
        .collect();
    let map = build_map(&base, "ttr", 20)?;
    for (words, bucket) in &map.buckets {
        println!("{words:>3} words: {} samples, thresholds {:.3?}", bucket.sample_count, bucket.thresholds);
    }

    println!("DD of a 60-word response scoring 0.75: {}", dd(&map, 60, 0.75)?);
    println!("DD of a 45-word response scoring 0.75: {}", dd(&map, 45, 0.75)?);

    let tuned: Vec<(usize, f64)> = base.iter().map(|&(w, v)| (w, v + 0.05)).collect();
    println!("mean DD base {:.3}, tuned {:.3}", mean_dd(&map, &base)?, mean_dd(&map, &tuned)?);
    println!("ΔDD = {:+.3}", delta_dd(&map, &base, &tuned)?);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("ttr.map.jsonl");
    map.write(&path)?;
    println!("map written to {}", path.display());
    Ok(())
}
