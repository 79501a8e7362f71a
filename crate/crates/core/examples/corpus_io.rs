//! Writes a corpus, reads it back strictly and leniently, and runs the CLI
//! `score` and `filter` steps in-process.

use std::fs::OpenOptions;
use std::io::Write;

use divcurate::ingest::{read_corpus, read_pairs, write_corpus};
use divcurate::{GenerationRecord, ResponseRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let corpus_path = dir.path().join("corpus.jsonl");
    let records: Vec<GenerationRecord> = (0..4)
        .map(|i| GenerationRecord {
            id: format!("r{i}"),
            prompt_id: "p0".into(),
            prompt_text: "Write a story using the words moon, kettle, falcon.".into(),
            three_words: vec!["moon".into(), "kettle".into(), "falcon".into()],
            model_id: "example".into(),
            first: ResponseRecord::new("The moon rose over the kettle and the kettle sang to the moon.")
                .with_logprobs(vec![-1.0; 14])
                .with_quality(0.3),
            second: ResponseRecord::new(format!("A falcon circled the moon while a kettle hissed below, story {i}."))
                .with_logprobs(vec![-2.0 - i as f64 * 0.1; 13])
                .with_quality(0.5 + i as f64 * 0.1),
        })
        .collect();
    write_corpus(&records, &corpus_path, "corpus")?;

    // append a malformed line: strict reading fails, lenient reading skips it
    writeln!(OpenOptions::new().append(true).open(&corpus_path)?, "{{\"id\": 5}}")?;
    match read_corpus(&corpus_path, true) {
        Err(e) => println!("strict: {e}"),
        Ok(_) => unreachable!(),
    }
    let lenient = read_corpus(&corpus_path, false)?;
    println!("lenient: {} records, skipped lines {:?}", lenient.records.len(), lenient.skipped_lines);

    let scored = dir.path().join("scored.jsonl");
    let pairs = dir.path().join("pairs.jsonl");
    let s = |p: &std::path::Path| p.to_string_lossy().into_owned();
    divcurate::cli::run_with_args([
        "divcurate", "score", "--lenient", "-i", &s(&corpus_path), "-o", &s(&scored), "--metrics", "entropy,ttr,maas",
    ])?;
    divcurate::cli::run_with_args(["divcurate", "filter", "-i", &s(&scored), "-o", &s(&pairs), "--method", "dns"])?;
    for p in read_pairs(&pairs, true)?.records {
        println!("pair {}: entropy gain {:+.3}, quality gain {:+.3}", p.id, p.diversity_gain, p.quality_gain);
    }
    Ok(())
}
