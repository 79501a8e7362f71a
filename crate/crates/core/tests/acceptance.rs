//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::time::{Duration, Instant};

use common::{fixture, p, record, response, run};
use divcurate::analyze;
use divcurate::decile;
use divcurate::filter::{self, FilterConfig, Method};
use divcurate::semdiv::{self, EmbeddingMatrix};
use divcurate::textstat::{self, MtldMode, TokenizedText};
use divcurate::{GenerationRecord, PreferencePair, ResponseRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rayon::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

fn wc(r: &ResponseRecord) -> i64 {
    r.text.split_whitespace().count() as i64
}

// ------------------------------------------------------------ length parity

fn length_parity() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let corpus = common::random_scored_corpus(&mut rng, 10_000, 2_000, 12);
    let mut notes = Vec::new();
    let mut elapsed = Duration::ZERO;
    for cfg in [FilterConfig::dns(), FilterConfig::dns_lite()] {
        let start = Instant::now();
        let outcome = single_threaded(|| filter::filter_corpus(&corpus, &cfg)).map_err(|e| e.to_string())?;
        let report = filter::length_delta_report(&outcome.pairs).map_err(|e| e.to_string())?;
        elapsed += start.elapsed();

        let pairs = &outcome.pairs;
        check(pairs.len() > 100, || format!("{}: only {} pairs", cfg.method, pairs.len()))?;
        let over = pairs.iter().filter(|p| (wc(&p.chosen) - wc(&p.rejected)).abs() > 5).count();
        check(over == 0, || format!("{}: {over} pairs exceed 5 words", cfg.method))?;
        let sum: i64 = pairs.iter().map(|p| wc(&p.chosen) - wc(&p.rejected)).sum();
        let mean = sum as f64 / pairs.len() as f64;
        check(mean == report.mean, || format!("{}: mean {} != recomputed {mean}", cfg.method, report.mean))?;
        notes.push(format!("{} {} pairs, mean Δwc {:.3}", cfg.method, pairs.len(), mean));
    }
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("{} in {:.2?} on one thread", notes.join("; "), elapsed))
}

// ------------------------------------------------------------- length bias

fn length_bias() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut corpus = Vec::new();
    for prompt in 0..300 {
        for j in 0..10 {
            let w1 = rng.gen_range(20..120usize);
            let w2 = (w1 as i64 + rng.gen_range(-15..=15)).max(5) as usize;
            let make = |w: usize, salt: &str, rng: &mut ChaCha20Rng| {
                response(w, salt)
                    .with_quality(rng.gen_range(0.0..1.0))
                    .with_metric("entropy", 100.0 / w as f64)
            };
            let first = make(w1, "a", &mut rng);
            let second = make(w2, "b", &mut rng);
            corpus.push(record(&format!("r{prompt}_{j}"), &format!("p{prompt}"), first, second));
        }
    }
    let mean_delta = |pairs: &[PreferencePair]| {
        pairs.iter().map(|p| (wc(&p.chosen) - wc(&p.rejected)) as f64).sum::<f64>() / pairs.len() as f64
    };
    let divpo = filter::filter_corpus(&corpus, &FilterConfig::divpo()).map_err(|e| e.to_string())?;
    let dns = filter::filter_corpus(&corpus, &FilterConfig::dns()).map_err(|e| e.to_string())?;
    check(!divpo.pairs.is_empty() && !dns.pairs.is_empty(), || "no pairs".into())?;
    let (dv, dn) = (mean_delta(&divpo.pairs), mean_delta(&dns.pairs));
    check(dv < -10.0, || format!("DivPO mean Δwc {dv}"))?;
    check((-5.0..=5.0).contains(&dn), || format!("Diverse-NS mean Δwc {dn}"))?;
    Ok(format!(
        "DivPO mean Δwc {dv:.2} over {} pairs; Diverse-NS {dn:.2} over {}",
        divpo.pairs.len(),
        dns.pairs.len()
    ))
}

// ---------------------------------------------------------- metric oracles

fn random_tokens<R: Rng>(rng: &mut R, n: usize, vocab: usize) -> TokenizedText {
    // squared uniform skews toward low ids, so some types repeat a lot
    TokenizedText::from_tokens((0..n).map(|_| {
        let u: f64 = rng.gen();
        format!("t{}", (u * u * vocab as f64) as usize)
    }))
}

fn hdd_monte_carlo(t: &TokenizedText, sample: usize, draws: usize, seed: u64) -> (f64, f64) {
    let mut ids: Vec<usize> = {
        let mut map = BTreeMap::new();
        t.tokens
            .iter()
            .map(|tok| {
                let next = map.len();
                *map.entry(tok.clone()).or_insert(next)
            })
            .collect()
    };
    let vocab = ids.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![0u64; vocab];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for draw in 1..=draws as u64 {
        let (picked, _) = ids.partial_shuffle(&mut rng, sample);
        let mut distinct = 0usize;
        for &id in picked.iter() {
            if seen[id] != draw {
                seen[id] = draw;
                distinct += 1;
            }
        }
        let x = distinct as f64 / sample as f64;
        sum += x;
        sum_sq += x * x;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean) * m / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn hdd_oracle() -> Result<String, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let texts: Vec<TokenizedText> = (0..20)
        .map(|_| {
            let n = rng.gen_range(42..=200);
            let vocab = rng.gen_range(10..60);
            random_tokens(&mut rng, n, vocab)
        })
        .collect();
    let worst = texts
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let exact = textstat::hdd(t, 42).map_err(|e| e.to_string())?;
            let (mc, se) = hdd_monte_carlo(t, 42, 1_000_000, 100 + i as u64);
            let z = (exact - mc).abs() / se;
            check(z <= 3.0, || format!("text {i}: exact {exact}, MC {mc} ± {se} (z = {z:.2})"))?;
            Ok(z)
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(format!("HD-D max |z| {worst:.2}"))
}

fn mtld_oracle() -> Result<String, String> {
    let seq = |s: &str| TokenizedText::from_tokens(s.split(' '));
    let th = 0.72;
    // Each case lists the forward and backward factor traces.
    let cases: [(&str, f64); 5] = [
        // fwd: [a b c a b] [a b c a b] -> 2 factors; bwd likewise
        ("a b c a b a b c a b", 10.0 / 2.0),
        // no factor closes and the tail TTR is 1
        ("a b c d e f g h i j", 10.0),
        // fwd and bwd: [a a] [a a]
        ("a a a a", 4.0 / 2.0),
        // one partial factor at TTR 3/4 in both directions
        ("a b c a", 4.0 / ((1.0 - 0.75) / (1.0 - th))),
        // fwd: [a b a] then [c d e f g] with TTR 1 -> 1 factor;
        // bwd: g f e d c a b a ends at TTR 7/8 -> partial only
        ("a b a c d e f g", (8.0 / 1.0 + 8.0 / ((1.0 - 7.0 / 8.0) / (1.0 - th))) / 2.0),
    ];
    for (text, expected) in cases {
        let got = textstat::mtld(&seq(text), th, MtldMode::Plain).map_err(|e| e.to_string())?;
        check(got == expected, || format!("MTLD `{text}`: {got} != {expected}"))?;
    }
    Ok("MTLD 5/5 exact".into())
}

fn mattr_oracle() -> Result<String, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = rng.gen_range(1..400);
        let window = rng.gen_range(1..80);
        let vocab = rng.gen_range(2..100);
        let t = random_tokens(&mut rng, n, vocab);
        let got = textstat::mattr(&t, window).map_err(|e| e.to_string())?;
        let w = window.min(n);
        let windows: Vec<f64> = t
            .tokens
            .windows(w)
            .map(|win| win.iter().collect::<HashSet<_>>().len() as f64 / w as f64)
            .collect();
        let expected = windows.iter().sum::<f64>() / windows.len() as f64;
        let err = (got - expected).abs();
        check(err <= 1e-12, || format!("MATTR case {i}: {got} vs {expected}"))?;
        worst = worst.max(err);
    }
    Ok(format!("MATTR max err {worst:.1e}"))
}

fn dsi_oracle() -> Result<String, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let rows = rng.gen_range(2..=200);
        let dims = rng.gen_range(1..=64);
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                let mut row: Vec<f64> = (0..dims).map(|_| rng.gen_range(-1.0..1.0)).collect();
                row[0] += 2.0; // keeps every row away from zero norm
                row
            })
            .collect();
        let m = EmbeddingMatrix::from_rows("m", &data).map_err(|e| e.to_string())?;
        let got = semdiv::dsi(&m).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        let mut count = 0usize;
        for a in 0..rows {
            for b in 0..rows {
                if a < b {
                    let dot: f64 = data[a].iter().zip(&data[b]).map(|(x, y)| x * y).sum();
                    let na = data[a].iter().map(|x| x * x).sum::<f64>().sqrt();
                    let nb = data[b].iter().map(|x| x * x).sum::<f64>().sqrt();
                    total += 1.0 - dot / (na * nb);
                    count += 1;
                }
            }
        }
        let expected = total / count as f64;
        let err = (got - expected).abs();
        check(err <= 1e-12, || format!("DSI case {i}: {got} vs {expected}"))?;
        worst = worst.max(err);
    }
    Ok(format!("DSI max err {worst:.1e}"))
}

fn metric_oracles() -> Outcome {
    let parts = [hdd_oracle()?, mtld_oracle()?, mattr_oracle()?, dsi_oracle()?];
    Ok(parts.join("; "))
}

// -------------------------------------------------------- filtering oracle

/// Type-7 percentile written from the definition.
fn pct(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn brute_dns(corpus: &[GenerationRecord], div: &str, qual: &str, gain: &str) -> Vec<(String, f64)> {
    let s = |r: &ResponseRecord, k: &str| r.score(k).unwrap();
    let floor = pct(&corpus.iter().map(|r| s(&r.first, qual)).collect::<Vec<_>>(), 50.0);
    let mut out = Vec::new();
    for r in corpus {
        let (q1, q2) = (s(&r.first, qual), s(&r.second, qual));
        let (d1, d2) = (s(&r.first, div), s(&r.second, div));
        let g = s(&r.second, gain) - s(&r.first, gain);
        if q2 >= floor && q2 > q1 && d2 > d1 && (wc(&r.second) - wc(&r.first)).abs() <= 5 && g > 0.0 {
            out.push((r.id.clone(), g));
        }
    }
    out
}

fn brute_divpo(corpus: &[GenerationRecord]) -> Vec<(String, f64, String, String)> {
    let mut order: Vec<&str> = Vec::new();
    let mut pools: BTreeMap<&str, Vec<&ResponseRecord>> = BTreeMap::new();
    for r in corpus {
        if !pools.contains_key(r.prompt_id.as_str()) {
            order.push(&r.prompt_id);
        }
        let pool = pools.entry(&r.prompt_id).or_default();
        pool.push(&r.first);
        pool.push(&r.second);
    }
    let mut out = Vec::new();
    for pid in order {
        let pool = &pools[pid];
        let q: Vec<f64> = pool.iter().map(|r| r.score("quality").unwrap()).collect();
        let d: Vec<f64> = pool.iter().map(|r| r.score("entropy").unwrap()).collect();
        let (hi, lo) = (pct(&q, 75.0), pct(&q, 25.0));
        let best = (0..pool.len()).filter(|&i| q[i] >= hi).fold(None, |acc: Option<usize>, i| match acc {
            Some(c) if d[c] >= d[i] => Some(c),
            _ => Some(i),
        });
        let worst = (0..pool.len()).filter(|&i| q[i] <= lo).fold(None, |acc: Option<usize>, i| match acc {
            Some(c) if d[c] <= d[i] => Some(c),
            _ => Some(i),
        });
        if let (Some(c), Some(r)) = (best, worst) {
            if c != r {
                out.push((pid.to_string(), d[c] - d[r], pool[c].text.clone(), pool[r].text.clone()));
            }
        }
    }
    out
}

fn brute_top_k(mut scored: Vec<(String, f64)>, k: usize) -> Vec<String> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|x| x.0).collect()
}

fn filtering_oracle() -> Outcome {
    let mut total_pairs = [0usize; 3];
    for seed in 0..20u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(1000 + seed);
        let corpus = common::random_scored_corpus(&mut rng, 1000, 80, 8);
        let ids = |pairs: &[PreferencePair]| pairs.iter().map(|p| p.id.clone()).collect::<HashSet<_>>();

        for (slot, method, div, qual, gain) in [
            (0, Method::Dns, "entropy", "quality", "entropy"),
            (1, Method::DnsLite, "ttr", "maas", "entropy"),
        ] {
            let mut cfg = FilterConfig::new(method);
            cfg.top_k = 60;
            let got = filter::filter_corpus(&corpus, &cfg).map_err(|e| e.to_string())?.pairs;
            let expected = brute_dns(&corpus, div, qual, gain);
            let want: HashSet<String> = expected.iter().map(|x| x.0.clone()).collect();
            check(ids(&got) == want, || format!("seed {seed} {method}: pair ids differ"))?;
            let top: Vec<String> = filter::select_top_k(&got, &cfg).into_iter().map(|p| p.id).collect();
            check(top == brute_top_k(expected, cfg.top_k), || format!("seed {seed} {method}: top-k differs"))?;
            total_pairs[slot] += got.len();
        }

        let mut cfg = FilterConfig::divpo();
        cfg.top_k = 25;
        let got = filter::filter_corpus(&corpus, &cfg).map_err(|e| e.to_string())?.pairs;
        let expected = brute_divpo(&corpus);
        let got_full: HashSet<_> = got.iter().map(|p| (p.id.clone(), p.chosen.text.clone(), p.rejected.text.clone())).collect();
        let want_full: HashSet<_> = expected.iter().map(|x| (x.0.clone(), x.2.clone(), x.3.clone())).collect();
        check(got_full == want_full, || format!("seed {seed} DIVPO: pairs differ"))?;
        let top: Vec<String> = filter::select_top_k(&got, &cfg).into_iter().map(|p| p.id).collect();
        let brute = brute_top_k(expected.into_iter().map(|x| (x.0, x.1)).collect(), cfg.top_k);
        check(top == brute, || format!("seed {seed} DIVPO: top-k differs"))?;
        total_pairs[2] += got.len();
    }
    Ok(format!(
        "20 seeds x 1000 records; pairs DNS {}, DNS_LITE {}, DIVPO {}",
        total_pairs[0], total_pairs[1], total_pairs[2]
    ))
}

// ------------------------------------------------------------------ deciles

fn decile_correctness() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let mut values: Vec<f64> = (0..100).map(|_| rng.gen_range(-50.0..50.0)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        if values.len() < 100 {
            continue;
        }
        values.shuffle(&mut rng);
        let wcount = rng.gen_range(1..200usize);
        let samples: Vec<(usize, f64)> = values.iter().map(|&v| (wcount, v)).collect();
        let map = decile::build_map(&samples, "m", 20).map_err(|e| e.to_string())?;
        let query = values[rng.gen_range(0..100)];
        let rank = values.iter().filter(|&&v| v < query).count();
        let got = decile::dd(&map, wcount, query).map_err(|e| e.to_string())?;
        check(usize::from(got) == rank / 10, || format!("trial {trial}: dd {got}, rank {rank}"))?;
    }

    // general bucket sizes: dd = #{i : rank > i (n-1) / 10}
    for trial in 0..1000 {
        let n = rng.gen_range(20..300);
        let mut values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        let n = values.len();
        let samples: Vec<(usize, f64)> = values.iter().map(|&v| (7, v)).collect();
        let map = decile::build_map(&samples, "m", 20).map_err(|e| e.to_string())?;
        let rank = rng.gen_range(0..n);
        let expected = (1..=9).filter(|&i| 10 * rank > i * (n - 1)).count();
        let got = decile::dd(&map, 7, values[rank]).map_err(|e| e.to_string())?;
        check(usize::from(got) == expected, || format!("general trial {trial}: dd {got} vs {expected} (n {n})"))?;
    }

    let scores: Vec<(usize, f64)> = (0..5000).map(|_| (rng.gen_range(5..150), rng.gen_range(0.0..1.0))).collect();
    let map = decile::build_map(&scores, "m", 20).map_err(|e| e.to_string())?;
    for _ in 0..100_000 {
        let w = rng.gen_range(0..200);
        let (a, b): (f64, f64) = (rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (dl, dh) = (decile::dd(&map, w, lo).unwrap(), decile::dd(&map, w, hi).unwrap());
        check(dl <= dh, || format!("dd({lo}) = {dl} > dd({hi}) = {dh} at wc {w}"))?;
    }
    Ok(format!("1000 rank trials, 1000 general-n trials, 1e5 monotone pairs over {} buckets", map.buckets.len()))
}

// --------------------------------------------------------------- statistics

fn statistics() -> Outcome {
    let text = fs::read_to_string(fixture("stats_oracle.json")).map_err(|e| e.to_string())?;
    let oracle: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let nums = |v: &Value| -> Vec<f64> { v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
    let f = |v: &Value| v.as_f64().unwrap();
    let (mut stat_err, mut p_err): (f64, f64) = (0.0, 0.0);
    let mut n70 = 0;
    let datasets = oracle["datasets"].as_array().ok_or("no datasets")?;
    for ds in datasets {
        let name = ds["name"].as_str().unwrap_or("?");
        let (a, b) = (nums(&ds["a"]), nums(&ds["b"]));
        if a.len() == 70 && b.len() == 70 {
            n70 += 1;
        }
        if let Some(pr) = ds.get("pearson") {
            let c = analyze::pearson(&a, &b).map_err(|e| format!("{name}: {e}"))?;
            stat_err = stat_err.max((c.r - f(&pr["r"])).abs());
            p_err = p_err.max((c.p_value - f(&pr["p"])).abs());
        }
        for (key, equal) in [("student", true), ("welch", false)] {
            let t = analyze::ttest_ind(&a, &b, equal).map_err(|e| format!("{name}: {e}"))?;
            stat_err = stat_err.max((t.t_statistic - f(&ds[key]["t"])).abs());
            p_err = p_err.max((t.p_value - f(&ds[key]["p"])).abs());
            let rev = analyze::ttest_ind(&b, &a, equal).map_err(|e| e.to_string())?;
            check(rev.t_statistic == -t.t_statistic && rev.p_value == t.p_value, || {
                format!("{name} {key}: not antisymmetric")
            })?;
        }
    }
    check(stat_err <= 1e-9, || format!("statistic error {stat_err:e}"))?;
    check(p_err <= 1e-6, || format!("p-value error {p_err:e}"))?;
    check(n70 > 0, || "no 70-sample datasets".into())?;
    Ok(format!(
        "{} datasets ({n70} with n = 70); max |Δstat| {stat_err:.1e}, max |Δp| {p_err:.1e}; t antisymmetric",
        datasets.len()
    ))
}

// -------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let d = dir.path();
    let corpus = p(&fixture("corpus_200.jsonl"));
    let small = p(&fixture("corpus_small.jsonl"));
    let metrics = "ttr,mattr,maas,hdd,mtld,mtld_ma,mtld_ma_bi,entropy,ngram_div,comp_ratio";

    let pipeline = |tag: &str, workers: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let f = |name: &str| p(&d.join(format!("{tag}_{name}")));
        let steps: Vec<Vec<String>> = vec![
            vec!["score".into(), "-i".into(), corpus.clone(), "-o".into(), f("scored.jsonl"), "--metrics".into(), metrics.into()],
            vec!["score".into(), "-i".into(), small.clone(), "-o".into(), f("tuned.jsonl"), "--metrics".into(), metrics.into()],
            vec!["build-map".into(), "-i".into(), f("scored.jsonl"), "-o".into(), f("map.jsonl"), "--metric".into(), "mtld".into(), "--min-bucket".into(), "10".into()],
            vec!["filter".into(), "-i".into(), f("scored.jsonl"), "-o".into(), f("dns.jsonl"), "--method".into(), "dns".into()],
            vec!["filter".into(), "-i".into(), f("scored.jsonl"), "-o".into(), f("lite.jsonl"), "--method".into(), "dns-lite".into()],
            vec!["filter".into(), "-i".into(), f("scored.jsonl"), "-o".into(), f("divpo.jsonl"), "--method".into(), "divpo".into()],
            vec![
                "dd-report".into(), "-i".into(), f("scored.jsonl"), "--tuned".into(), f("tuned.jsonl"), "--map".into(), f("map.jsonl"),
                "-o".into(), f("dd.jsonl"), "--plot-data".into(), f("dd.tsv"),
            ],
        ];
        for mut step in steps {
            step.extend(["--workers".to_string(), workers.to_string()]);
            run(&step).map_err(|e| format!("{}: {e}", step[0]))?;
        }
        ["scored.jsonl", "tuned.jsonl", "map.jsonl", "dns.jsonl", "lite.jsonl", "divpo.jsonl", "dd.jsonl", "dd.tsv"]
            .iter()
            .map(|n| Ok((n.to_string(), fs::read(f(n)).map_err(|e| e.to_string())?)))
            .collect()
    };
    let reference = pipeline("w1a", "1")?;
    for (tag, workers) in [("w1b", "1"), ("w8a", "8"), ("w8b", "8")] {
        let other = pipeline(tag, workers)?;
        for ((name, a), (_, b)) in reference.iter().zip(&other) {
            check(a == b, || format!("{name} differs between w1a and {tag}"))?;
        }
    }
    let pairs = reference.iter().find(|(n, _)| n == "dns.jsonl").map_or(0, |(_, b)| b.split(|&c| c == b'\n').count() - 2);
    Ok(format!("{} outputs byte-identical over 4 runs (workers 1, 1, 8, 8); {pairs} DNS pairs", reference.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("length parity", length_parity),
        ("length-bias mechanism", length_bias),
        ("metric oracles", metric_oracles),
        ("filtering oracle", filtering_oracle),
        ("decile correctness", decile_correctness),
        ("statistics", statistics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2?}]", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{:.2?}]", start.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
