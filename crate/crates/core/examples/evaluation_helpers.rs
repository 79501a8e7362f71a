//! Pair mining for side-by-side judging, POS-bigram repetition, win rates.

use divcurate::analyze::{least_similar_pairs, pos_bigram_report, win_rate, TaggedText, Winner};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let method_a = ["The fox crossed the frozen river at dawn.", "A quiet fox waited by the river."];
    let method_b = ["Snow fell on the harbor all night.", "The fox crossed the river."];
    for pair in least_similar_pairs(&method_a, &method_b, 3)? {
        println!("A[{}] vs B[{}]: jaccard {:.3}", pair.index_a, pair.index_b, pair.similarity);
    }

    let doc = |id: &str, tags: &[&str]| {
        let tags: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
        TaggedText::new(id, tags.clone(), tags)
    };
    let corpus = vec![
        doc("d1", &["IN", "DT", "NN", "VBD"])?,
        doc("d2", &["IN", "DT", "JJ", "NN"])?,
        doc("d3", &["PRP", "VBD", "DT", "NN"])?,
    ];
    for s in pos_bigram_report(&corpus, 3)? {
        println!("{} {}: in {} docs, {:.0}% at start", s.bigram.0, s.bigram.1, s.docs_present, s.pct_at_start);
    }

    let rate = win_rate(&[Winner::A, Winner::A, Winner::B, Winner::Tie])?;
    println!("A {:.1}% / B {:.1}% / tie {:.1}%", rate.win_a_pct, rate.win_b_pct, rate.tie_pct);
    Ok(())
}
