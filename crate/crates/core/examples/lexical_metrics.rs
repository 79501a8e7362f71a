//! Scores a few texts with every lexical metric.
//!
//! Run with `cargo run --example lexical_metrics`.

use divcurate::textstat::{score_response, Metric, MetricSelection};
use divcurate::ResponseRecord;

fn main() {
    let texts = [
        "The lighthouse keeper counted ships, storms, gulls and the slow turning of years.",
        "The cat sat. The cat sat. The cat sat on the mat, and the cat sat again.",
    ];
    // entropy needs per-token log-probabilities, so leave it out here
    let metrics: Vec<Metric> = Metric::ALL.into_iter().filter(|m| !m.needs_logprobs()).collect();
    let mut selection = MetricSelection::new(metrics);
    selection.params.hdd_sample = 10;
    selection.params.mattr_window = 8;

    for text in texts {
        println!("{text}");
        let scores = score_response(&ResponseRecord::new(text), &selection).expect("scorable text");
        for (name, value) in &scores.values {
            println!("  {name:<11} {value:.4}");
        }
    }

    let with_logprobs = ResponseRecord::new("a short reply").with_logprobs(vec![-0.2, -1.7, -0.4]);
    let entropy = score_response(&with_logprobs, &MetricSelection::new([Metric::Entropy])).unwrap();
    println!("entropy of a 3-token reply: {:.4}", entropy.get("entropy").unwrap());
}
