//! Builds preference pairs three ways from the same scored corpus.

use divcurate::filter::{filter_corpus, length_delta_report, select_top_k, FilterConfig};
use divcurate::{GenerationRecord, ResponseRecord};

fn response(words: usize, quality: f64, entropy: f64, ttr: f64, maas: f64) -> ResponseRecord {
    let text = (0..words).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
    ResponseRecord::new(text)
        .with_quality(quality)
        .with_metric("entropy", entropy)
        .with_metric("ttr", ttr)
        .with_metric("maas", maas)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus: Vec<GenerationRecord> = (0..12)
        .map(|i| {
            let x = i as f64;
            GenerationRecord {
                id: format!("r{i:02}"),
                prompt_id: format!("p{}", i % 3),
                prompt_text: "Write a story with the words lantern, harbor, ember.".into(),
                three_words: vec!["lantern".into(), "harbor".into(), "ember".into()],
                model_id: "example".into(),
                first: response(30 + i, 0.4 + 0.02 * x, 2.0, 0.6, 0.05),
                second: response(28 + 2 * i, 0.45 + 0.03 * x, 2.0 + 0.1 * x, 0.58 + 0.01 * x, 0.06),
            }
        })
        .collect();

    for cfg in [FilterConfig::dns(), FilterConfig::dns_lite(), FilterConfig::divpo()] {
        let outcome = filter_corpus(&corpus, &cfg)?;
        let kept = select_top_k(&outcome.pairs, &FilterConfig { top_k: 3, ..cfg.clone() });
        print!("{:<8} {} pair(s), drops by rule {:?}", cfg.method, outcome.pairs.len(), outcome.report.dropped_by_rule);
        if let Ok(ld) = length_delta_report(&outcome.pairs) {
            print!(", mean Δwc {:+.2}", ld.mean);
        }
        println!();
        for p in kept {
            println!("    {}  gain {:+.3}  Δwc {:+}", p.id, p.diversity_gain, p.length_delta());
        }
    }
    Ok(())
}
