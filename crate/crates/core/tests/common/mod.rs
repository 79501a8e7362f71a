#![allow(dead_code)]

use std::path::{Path, PathBuf};

use divcurate::cli::{self, CliError};
use divcurate::{GenerationRecord, ResponseRecord};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Runs the CLI in-process.
pub fn run<S: AsRef<str>>(args: &[S]) -> Result<(), CliError> {
    cli::run_with_args(std::iter::once("divcurate").chain(args.iter().map(AsRef::as_ref)))
}

pub fn p(path: &Path) -> String {
    path.to_str().expect("utf-8 path").to_string()
}

/// `words` distinct placeholder tokens.
pub fn text_of(words: usize, salt: &str) -> String {
    (0..words).map(|i| format!("{salt}{i}")).collect::<Vec<_>>().join(" ")
}

pub fn response(words: usize, salt: &str) -> ResponseRecord {
    ResponseRecord::new(text_of(words, salt))
}

pub fn record(id: &str, prompt_id: &str, first: ResponseRecord, second: ResponseRecord) -> GenerationRecord {
    GenerationRecord {
        id: id.to_string(),
        prompt_id: prompt_id.to_string(),
        prompt_text: format!("prompt {prompt_id}"),
        three_words: vec!["alpha".into(), "beta".into(), "gamma".into()],
        model_id: "synthetic".into(),
        first,
        second,
    }
}

/// Value on a coarse grid so that ties occur.
fn grid<R: Rng>(rng: &mut R, steps: u32) -> f64 {
    f64::from(rng.gen_range(0..=steps)) / f64::from(steps)
}

/// A scored corpus with quality, entropy, ttr and maas on both responses.
/// Second responses are within `max_gap` words of the first.
pub fn random_scored_corpus<R: Rng>(rng: &mut R, n: usize, n_prompts: usize, max_gap: i64) -> Vec<GenerationRecord> {
    (0..n)
        .map(|i| {
            let w1 = rng.gen_range(10..60usize);
            let w2 = (w1 as i64 + rng.gen_range(-max_gap..=max_gap)).max(1) as usize;
            let mut scored = |w: usize, salt: &str| {
                response(w, salt)
                    .with_quality(grid(rng, 40))
                    .with_metric("entropy", grid(rng, 40) * 5.0)
                    .with_metric("ttr", grid(rng, 40))
                    .with_metric("maas", grid(rng, 40) * 0.1)
            };
            let first = scored(w1, "f");
            let second = scored(w2, "s");
            record(&format!("r{i:05}"), &format!("p{:04}", i % n_prompts), first, second)
        })
        .collect()
}
