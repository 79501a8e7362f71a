use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{
    BuildMapArgs, CliError, Command, CommonArgs, CorrelateArgs, DdReportArgs, FilterArgs,
    PairsForEvalArgs, PosReportArgs, Responses, RunManifest, ScoreArgs, Settings, TtestArgs,
    WinRateArgs,
};
use crate::analyze::{self, TTestReport};
use crate::decile::{self, DecileMap, DEFAULT_MIN_BUCKET};
use crate::filter::{self, FilterConfig, Method};
use crate::ingest::{self, FileHeader, GenerationRecord, ReadOutcome, ResponseRecord};
use crate::semdiv::{self, EmbeddingStore};
use crate::textstat::{self, Metric, MetricParams};

const DSI: &str = "dsi";
const DEFAULT_EVAL_PAIRS: usize = 50;
const DEFAULT_TOP_BIGRAMS: usize = 5;

pub(super) fn known_keys(command: &Command) -> &'static [&'static str] {
    const IO: [&str; 2] = ["input", "output"];
    match command {
        Command::Score(_) => &["input", "output", "metrics", "embeddings", "mattr_window", "hdd_sample", "mtld_threshold", "ngram_max_n"],
        Command::BuildMap(_) => &["input", "output", "metric", "min_bucket", "responses"],
        Command::Filter(_) => &[
            "input", "output", "method", "max_len_delta", "top_k", "gain_metric", "diversity_metric",
            "quality_metric", "divpo_upper_pct", "divpo_lower_pct", "skip_missing",
        ],
        Command::DdReport(_) => &["input", "output", "tuned", "maps", "plot_data", "responses"],
        Command::Correlate(_) => &["input", "output", "x", "y", "responses"],
        Command::Ttest(_) => &["input", "output", "against", "metrics", "welch", "responses"],
        Command::PairsForEval(_) => &["input", "output", "method_a", "method_b", "k"],
        Command::PosReport(_) => &["input", "output", "top_n"],
        Command::WinRate(_) => &IO,
    }
}

pub(super) fn dispatch(command: &Command, settings: &Settings) -> Result<(), CliError> {
    match command {
        Command::Score(a) => score(a, settings),
        Command::BuildMap(a) => build_map(a, settings),
        Command::Filter(a) => filter_cmd(a, settings),
        Command::DdReport(a) => dd_report(a, settings),
        Command::Correlate(a) => correlate(a, settings),
        Command::Ttest(a) => ttest(a, settings),
        Command::PairsForEval(a) => pairs_for_eval(a, settings),
        Command::PosReport(a) => pos_report(a, settings),
        Command::WinRate(a) => win_rate(a, settings),
    }
}

/// Input and output paths plus the strictness flag, after config merging.
struct Io {
    input: PathBuf,
    output: Option<PathBuf>,
    strict: bool,
}

impl Io {
    fn resolve(common: &CommonArgs, settings: &Settings) -> Result<Self, CliError> {
        let input = settings
            .pick_opt(common.input.clone(), "input")?
            .ok_or_else(|| CliError::Validation("--input is required".into()))?;
        Ok(Self {
            input,
            output: settings.pick_opt(common.output.clone(), "output")?,
            strict: !settings.switch(common.lenient, "lenient")?,
        })
    }

    fn require_output(&self) -> Result<&Path, CliError> {
        self.output
            .as_deref()
            .ok_or_else(|| CliError::Validation("--output is required".into()))
    }
}

fn report_skipped<T>(path: &Path, outcome: &ReadOutcome<T>) {
    if outcome.skipped() > 0 {
        eprintln!(
            "{}: skipped {} malformed line(s): {:?}",
            path.display(),
            outcome.skipped(),
            outcome.skipped_lines
        );
    }
}

fn load_corpus(path: &Path, strict: bool) -> Result<Vec<GenerationRecord>, CliError> {
    let outcome = ingest::read_corpus(path, strict)?;
    report_skipped(path, &outcome);
    Ok(outcome.records)
}

fn write_manifest(command: &str, config: Value, inputs: &[&Path], output: &Path) -> Result<(), CliError> {
    RunManifest::new(command, config, inputs)?.write_for(output)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn header(kind: &str, extra: Value) -> FileHeader {
    let mut h = FileHeader::new(kind);
    if let Value::Object(map) = extra {
        h.extra.extend(map);
    }
    h
}

/// Writes machine-readable rows when an output path was given, and prints
/// the human-readable table either way.
fn emit_report<T: Serialize>(
    command: &str,
    io: &Io,
    inputs: &[&Path],
    config: Value,
    kind: &str,
    rows: &[T],
    table: &str,
) -> Result<(), CliError> {
    print!("{table}");
    if let Some(out) = &io.output {
        ingest::write_lines(out, &header(kind, json!({})), rows)?;
        write_manifest(command, config, inputs, out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- score

enum ScoreMetric {
    Lexical(Metric),
    Dsi,
}

fn parse_score_metrics(names: &[String]) -> Result<Vec<ScoreMetric>, CliError> {
    if names.is_empty() {
        return Err(CliError::Validation("--metrics is required".into()));
    }
    names
        .iter()
        .map(|n| match n.trim() {
            DSI => Ok(ScoreMetric::Dsi),
            other => other.parse().map(ScoreMetric::Lexical).map_err(CliError::from),
        })
        .collect()
}

/// Per-response preconditions that make a metric impossible to compute at
/// all, as opposed to per-record soft failures.
fn check_score_inputs(
    corpus: &[GenerationRecord],
    metrics: &[ScoreMetric],
    store: Option<&EmbeddingStore>,
) -> Result<(), CliError> {
    let wants_entropy = metrics.iter().any(|m| matches!(m, ScoreMetric::Lexical(x) if x.needs_logprobs()));
    let wants_dsi = metrics.iter().any(|m| matches!(m, ScoreMetric::Dsi));
    for rec in corpus {
        for (which, r) in Responses::Both.select(rec) {
            if wants_entropy && r.token_logprobs.is_none() {
                return Err(CliError::Validation(format!(
                    "record `{}`: field `{which}.token_logprobs` is required by metric `entropy`",
                    rec.id
                )));
            }
            if wants_dsi {
                let key = r.embedding_ref.as_deref().ok_or_else(|| {
                    CliError::Validation(format!(
                        "record `{}`: field `{which}.embedding_ref` is required by metric `dsi`",
                        rec.id
                    ))
                })?;
                if let Some(store) = store {
                    if !store.contains(key) {
                        return Err(CliError::Validation(format!(
                            "record `{}`: embedding `{key}` not found in store",
                            rec.id
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Scores one response, leaving out metrics that fail on it.
fn score_one(
    r: &ResponseRecord,
    metrics: &[ScoreMetric],
    params: &MetricParams,
    store: Option<&EmbeddingStore>,
    failures: &mut BTreeMap<String, usize>,
) -> Result<ResponseRecord, CliError> {
    let tokens = textstat::tokenize(&r.text);
    let mut out = r.clone();
    let mut vector = out.metrics.take().unwrap_or_default();
    for metric in metrics {
        let (name, value) = match metric {
            ScoreMetric::Lexical(m) => (m.as_str(), textstat::compute_metric(*m, &tokens, r, params).ok()),
            ScoreMetric::Dsi => {
                let store = store.ok_or_else(|| CliError::Validation("metric `dsi` needs --embeddings".into()))?;
                let key = r.embedding_ref.as_deref().unwrap_or_default();
                let matrix = store.load(key)?;
                (DSI, semdiv::dsi(&matrix).ok())
            }
        };
        match value {
            Some(v) => vector.insert(name, v),
            None => *failures.entry(name.to_string()).or_default() += 1,
        }
    }
    out.metrics = Some(vector);
    Ok(out)
}

fn score(args: &ScoreArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let output = io.require_output()?;
    let names = settings.pick_list(args.metrics.clone(), "metrics")?;
    let metrics = parse_score_metrics(&names)?;
    let defaults = MetricParams::default();
    let params = MetricParams {
        mattr_window: settings.pick(args.mattr_window, "mattr_window", defaults.mattr_window)?,
        hdd_sample: settings.pick(args.hdd_sample, "hdd_sample", defaults.hdd_sample)?,
        mtld_threshold: settings.pick(args.mtld_threshold, "mtld_threshold", defaults.mtld_threshold)?,
        ngram_max_n: settings.pick(args.ngram_max_n, "ngram_max_n", defaults.ngram_max_n)?,
    };
    let embeddings: Option<PathBuf> = settings.pick_opt(args.embeddings.clone(), "embeddings")?;
    let wants_dsi = metrics.iter().any(|m| matches!(m, ScoreMetric::Dsi));
    if wants_dsi && embeddings.is_none() {
        return Err(CliError::Validation("metric `dsi` needs --embeddings".into()));
    }
    let store = match (&embeddings, wants_dsi) {
        (Some(path), true) => Some(EmbeddingStore::open(path)?),
        _ => None,
    };

    let corpus = load_corpus(&io.input, io.strict)?;
    check_score_inputs(&corpus, &metrics, store.as_ref())?;

    let scored: Vec<(GenerationRecord, BTreeMap<String, usize>)> = corpus
        .par_iter()
        .map(|rec| {
            let mut failures = BTreeMap::new();
            let mut out = rec.clone();
            out.first = score_one(&rec.first, &metrics, &params, store.as_ref(), &mut failures)?;
            out.second = score_one(&rec.second, &metrics, &params, store.as_ref(), &mut failures)?;
            Ok((out, failures))
        })
        .collect::<Result<_, CliError>>()?;
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut records = Vec::with_capacity(scored.len());
    for (rec, f) in scored {
        for (k, v) in f {
            *failures.entry(k).or_default() += v;
        }
        records.push(rec);
    }

    ingest::write_corpus(&records, output, "scored")?;
    let effective = json!({
        "input": io.input,
        "output": output,
        "strict": io.strict,
        "metrics": names,
        "params": params,
        "embeddings": embeddings,
    });
    write_metrics_manifest(output, &names, &params)?;
    let mut inputs = vec![io.input.as_path()];
    if let (Some(p), true) = (&embeddings, wants_dsi) {
        inputs.push(p.as_path());
    }
    write_manifest("score", effective, &inputs, output)?;

    eprintln!("scored {} record(s) -> {}", records.len(), output.display());
    for (metric, n) in &failures {
        eprintln!("  {metric}: {n} response(s) could not be scored");
    }
    Ok(())
}

/// `metrics.manifest` in the output directory: metric names and parameters.
fn write_metrics_manifest(output: &Path, names: &[String], params: &MetricParams) -> Result<(), CliError> {
    let dir = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let body = json!({
        "tool_version": super::VERSION,
        "metrics": names,
        "params": params,
        "tokenizer": "unicode whitespace split, edge punctuation stripped, lowercased",
        "compression": {"codec": "deflate", "level": textstat::COMPRESSION_LEVEL},
        "available": Metric::ALL.iter().map(|m| m.as_str()).chain([DSI]).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&body).map_err(|e| CliError::Internal(e.to_string()))?;
    write_text(&dir.join("metrics.manifest"), &(text + "\n"))
}

// ------------------------------------------------------------ build-map

/// `(word_count, value)` for every selected response carrying `metric`,
/// plus the number of responses without it.
fn metric_samples(corpus: &[GenerationRecord], metric: &str, which: Responses) -> (Vec<(usize, f64)>, usize) {
    let mut samples = Vec::new();
    let mut missing = 0;
    for rec in corpus {
        for (_, r) in which.select(rec) {
            match r.score(metric) {
                Some(v) => samples.push((r.word_count(), v)),
                None => missing += 1,
            }
        }
    }
    (samples, missing)
}

fn build_map(args: &BuildMapArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let output = io.require_output()?;
    let metric: String = settings
        .pick_opt(args.metric.clone(), "metric")?
        .ok_or_else(|| CliError::Validation("--metric is required".into()))?;
    let min_bucket = settings.pick(args.min_bucket, "min_bucket", DEFAULT_MIN_BUCKET)?;
    let which = settings.pick(args.responses, "responses", Responses::Both)?;

    let corpus = load_corpus(&io.input, io.strict)?;
    if corpus.is_empty() {
        return Err(CliError::Validation(format!("{}: no records", io.input.display())));
    }
    let (samples, missing) = metric_samples(&corpus, &metric, which);
    if samples.is_empty() {
        return Err(CliError::Validation(format!("metric `{metric}` absent from {}", io.input.display())));
    }
    let map = decile::build_map(&samples, &metric, min_bucket)?;
    map.write(output)?;
    let effective = json!({
        "input": io.input,
        "output": output,
        "strict": io.strict,
        "metric": metric,
        "min_bucket": min_bucket,
        "responses": which,
        "percentile_method": decile::PERCENTILE_METHOD,
    });
    write_manifest("build-map", effective, &[&io.input], output)?;
    eprintln!(
        "decile map for `{metric}`: {} sample(s), {} bucket(s), {missing} response(s) without the metric",
        samples.len(),
        map.buckets.len()
    );
    Ok(())
}

// --------------------------------------------------------------- filter

fn filter_config(args: &FilterArgs, settings: &Settings) -> Result<FilterConfig, CliError> {
    let method: String = settings.pick(args.method.clone(), "method", "dns".to_string())?;
    let method: Method = method.parse()?;
    let mut cfg = FilterConfig::new(method);
    cfg.max_len_delta = settings.pick(args.max_len_delta, "max_len_delta", cfg.max_len_delta)?;
    cfg.top_k = settings.pick(args.top_k, "top_k", cfg.top_k)?;
    cfg.gain_metric = settings.pick_opt(args.gain_metric.clone(), "gain_metric")?;
    cfg.diversity_metric = settings.pick(args.diversity_metric.clone(), "diversity_metric", cfg.diversity_metric)?;
    cfg.quality_metric = settings.pick(args.quality_metric.clone(), "quality_metric", cfg.quality_metric)?;
    cfg.divpo_upper_pct = settings.pick(args.divpo_upper_pct, "divpo_upper_pct", cfg.divpo_upper_pct)?;
    cfg.divpo_lower_pct = settings.pick(args.divpo_lower_pct, "divpo_lower_pct", cfg.divpo_lower_pct)?;
    cfg.skip_missing = settings.switch(args.skip_missing, "skip_missing")?;
    cfg.validate()?;
    Ok(cfg)
}

const RULE_NAMES: [&str; 4] = ["quality floor", "quality gain", "diversity gain", "length parity"];

fn filter_cmd(args: &FilterArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let output = io.require_output()?;
    let cfg = filter_config(args, settings)?;
    let corpus = load_corpus(&io.input, io.strict)?;

    let outcome = filter::filter_corpus(&corpus, &cfg)?;
    let selected = filter::select_top_k(&outcome.pairs, &cfg);
    ingest::write_pairs_with_limit(&selected, output, cfg.max_len_delta)?;
    let effective = json!({
        "input": io.input,
        "output": output,
        "strict": io.strict,
        "filter": cfg,
    });
    write_manifest("filter", effective, &[&io.input], output)?;

    let r = &outcome.report;
    let mut summary = String::new();
    let _ = writeln!(summary, "filter {} on {} record(s)", cfg.method, r.input_records);
    let _ = writeln!(summary, "  pairs kept:        {} (of {} candidates, top_k {})", selected.len(), r.pairs, cfg.top_k);
    if let Some(floor) = r.quality_floor {
        let _ = writeln!(summary, "  quality floor:     {floor}");
    }
    if cfg.method != Method::DivPo {
        for (name, n) in RULE_NAMES.iter().zip(r.dropped_by_rule) {
            let _ = writeln!(summary, "  dropped by {name:<15} {n}");
        }
        let _ = writeln!(summary, "  non-positive gain: {}", r.nonpositive_gain);
    } else {
        let _ = writeln!(summary, "  degenerate pools:  {}", r.degenerate_pools);
    }
    let _ = writeln!(summary, "  missing scores:    {}", r.missing_score);
    let _ = writeln!(summary, "  gain metric:       {}", r.gain_metric);
    if let Ok(ld) = filter::length_delta_report(&selected) {
        let _ = writeln!(summary, "  length delta:      mean {:.4}, std {:.4} (n = {})", ld.mean, ld.std, ld.n);
    }
    eprint!("{summary}");
    Ok(())
}

// ------------------------------------------------------------ dd-report

#[derive(Debug, Serialize)]
struct DdRow {
    metric: String,
    base_mean_dd: f64,
    tuned_mean_dd: f64,
    delta_dd: f64,
    n_base: usize,
    n_tuned: usize,
}

fn all_samples(corpus: &[GenerationRecord], metric: &str, which: Responses, path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    let mut out = Vec::new();
    for rec in corpus {
        for (slot, r) in which.select(rec) {
            let v = r.score(metric).ok_or_else(|| {
                CliError::Validation(format!(
                    "{}: metric `{metric}` absent from record `{}` ({slot})",
                    path.display(),
                    rec.id
                ))
            })?;
            out.push((r.word_count(), v));
        }
    }
    Ok(out)
}

fn dd_report(args: &DdReportArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let output = io.require_output()?;
    let tuned_path: PathBuf = settings
        .pick_opt(args.tuned.clone(), "tuned")?
        .ok_or_else(|| CliError::Validation("--tuned is required".into()))?;
    let map_paths: Vec<PathBuf> = if args.maps.is_empty() {
        settings.get("maps")?.unwrap_or_default()
    } else {
        args.maps.clone()
    };
    if map_paths.is_empty() {
        return Err(CliError::Validation("at least one --map is required".into()));
    }
    let plot: Option<PathBuf> = settings.pick_opt(args.plot_data.clone(), "plot_data")?;
    let which = settings.pick(args.responses, "responses", Responses::Both)?;

    let base = load_corpus(&io.input, io.strict)?;
    let tuned = load_corpus(&tuned_path, io.strict)?;
    let maps = map_paths
        .iter()
        .map(DecileMap::read)
        .collect::<Result<Vec<_>, _>>()?;

    let rows = maps
        .par_iter()
        .map(|map| {
            let b = all_samples(&base, &map.metric, which, &io.input)?;
            let t = all_samples(&tuned, &map.metric, which, &tuned_path)?;
            let base_mean = decile::mean_dd(map, &b)?;
            let tuned_mean = decile::mean_dd(map, &t)?;
            Ok(DdRow {
                metric: map.metric.clone(),
                base_mean_dd: base_mean,
                tuned_mean_dd: tuned_mean,
                delta_dd: tuned_mean - base_mean,
                n_base: b.len(),
                n_tuned: t.len(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    ingest::write_lines(output, &header("dd_report", json!({})), &rows)?;
    if let Some(plot) = &plot {
        let mut text = String::from("metric\tbase_mean_dd\ttuned_mean_dd\tdelta_dd\n");
        for r in &rows {
            let _ = writeln!(text, "{}\t{}\t{}\t{}", r.metric, r.base_mean_dd, r.tuned_mean_dd, r.delta_dd);
        }
        write_text(plot, &text)?;
    }
    let effective = json!({
        "input": io.input,
        "tuned": tuned_path,
        "maps": map_paths,
        "output": output,
        "plot_data": plot,
        "strict": io.strict,
        "responses": which,
    });
    let mut inputs: Vec<&Path> = vec![&io.input, &tuned_path];
    inputs.extend(map_paths.iter().map(PathBuf::as_path));
    write_manifest("dd-report", effective, &inputs, output)?;

    let mut table = format!("{:<16} {:>10} {:>10} {:>10}\n", "metric", "base DD", "tuned DD", "ΔDD");
    for r in &rows {
        let _ = writeln!(table, "{:<16} {:>10.4} {:>10.4} {:>+10.4}", r.metric, r.base_mean_dd, r.tuned_mean_dd, r.delta_dd);
    }
    print!("{table}");
    Ok(())
}

// ------------------------------------------------------------ correlate

fn correlate(args: &CorrelateArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let xs = settings.pick_list(args.x.clone(), "x")?;
    let ys = settings.pick_list(args.y.clone(), "y")?;
    if xs.is_empty() || ys.is_empty() {
        return Err(CliError::Validation("--x and --y each need at least one metric".into()));
    }
    let which = settings.pick(args.responses, "responses", Responses::Both)?;
    let corpus = load_corpus(&io.input, io.strict)?;

    let names: Vec<&String> = xs.iter().chain(&ys).collect();
    let mut series: BTreeMap<&str, Vec<f64>> = names.iter().map(|n| (n.as_str(), Vec::new())).collect();
    let mut incomplete = 0;
    for rec in &corpus {
        for (_, r) in which.select(rec) {
            let values: Option<Vec<f64>> = names.iter().map(|n| r.score(n)).collect();
            match values {
                Some(vals) => {
                    for (n, v) in names.iter().zip(vals) {
                        series.get_mut(n.as_str()).expect("series key").push(v);
                    }
                }
                None => incomplete += 1,
            }
        }
    }
    let collect = |ms: &[String]| -> Vec<(String, Vec<f64>)> {
        ms.iter().map(|m| (m.clone(), series[m.as_str()].clone())).collect()
    };
    let report = analyze::correlation_report(&collect(&xs), &collect(&ys))?;
    if incomplete > 0 {
        eprintln!("correlate: {incomplete} response(s) lacked a requested metric and were left out");
    }

    let mut table = format!("{:<14} {:<14} {:>9} {:>12} {:>6}\n", "x", "y", "r", "p", "n");
    for e in &report.pairs {
        let _ = writeln!(table, "{:<14} {:<14} {:>9.4} {:>12.4e} {:>6}", e.x_name, e.y_name, e.r, e.p_value, e.n);
    }
    let effective = json!({"input": io.input, "x": xs, "y": ys, "responses": which, "strict": io.strict});
    emit_report("correlate", &io, &[&io.input], effective, "correlation", &report.pairs, &table)
}

// ---------------------------------------------------------------- ttest

#[derive(Debug, Serialize)]
struct TtestRow {
    metric: String,
    mean_a: f64,
    mean_b: f64,
    student: TTestReport,
    welch: TTestReport,
}

fn present_values(corpus: &[GenerationRecord], metric: &str, which: Responses) -> Vec<f64> {
    corpus
        .iter()
        .flat_map(|rec| which.select(rec))
        .filter_map(|(_, r)| r.score(metric))
        .collect()
}

fn ttest(args: &TtestArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let against: PathBuf = settings
        .pick_opt(args.against.clone(), "against")?
        .ok_or_else(|| CliError::Validation("--against is required".into()))?;
    let metrics = settings.pick_list(args.metrics.clone(), "metrics")?;
    if metrics.is_empty() {
        return Err(CliError::Validation("--metrics is required".into()));
    }
    let welch = settings.switch(args.welch, "welch")?;
    let which = settings.pick(args.responses, "responses", Responses::Both)?;
    let a = load_corpus(&io.input, io.strict)?;
    let b = load_corpus(&against, io.strict)?;

    let mut rows = Vec::with_capacity(metrics.len());
    for m in &metrics {
        let (va, vb) = (present_values(&a, m, which), present_values(&b, m, which));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        rows.push(TtestRow {
            metric: m.clone(),
            student: analyze::ttest_ind(&va, &vb, true).map_err(|e| CliError::Validation(format!("metric `{m}`: {e}")))?,
            welch: analyze::ttest_ind(&va, &vb, false)?,
            mean_a: mean(&va),
            mean_b: mean(&vb),
        });
    }

    let headline = if welch { "Welch" } else { "Student" };
    let mut table = format!(
        "{:<14} {:>10} {:>10} {:>10} {:>12}   ({headline}; other test in parentheses)\n",
        "metric", "mean A", "mean B", "t", "p"
    );
    for r in &rows {
        let (main, other) = if welch { (&r.welch, &r.student) } else { (&r.student, &r.welch) };
        let _ = writeln!(
            table,
            "{:<14} {:>10.4} {:>10.4} {:>10.4} {:>12.4e}   ({:.4}, {:.4e})",
            r.metric, r.mean_a, r.mean_b, main.t_statistic, main.p_value, other.t_statistic, other.p_value
        );
    }
    let effective = json!({
        "input": io.input,
        "against": against,
        "metrics": metrics,
        "welch": welch,
        "responses": which,
        "strict": io.strict,
    });
    emit_report("ttest", &io, &[&io.input, &against], effective, "ttest", &rows, &table)
}

// ------------------------------------------------------- pairs-for-eval

#[derive(Debug, Serialize)]
struct EvalPairRow {
    pair_id: String,
    prompt_id: String,
    index_a: usize,
    index_b: usize,
    similarity: f64,
    text_a: String,
    text_b: String,
}

fn pairs_for_eval(args: &PairsForEvalArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let method_a: String = settings
        .pick_opt(args.method_a.clone(), "method_a")?
        .ok_or_else(|| CliError::Validation("--method-a is required".into()))?;
    let method_b: String = settings
        .pick_opt(args.method_b.clone(), "method_b")?
        .ok_or_else(|| CliError::Validation("--method-b is required".into()))?;
    let k = settings.pick(args.k, "k", DEFAULT_EVAL_PAIRS)?;

    let outcome = analyze::read_responses(&io.input, io.strict)?;
    report_skipped(&io.input, &outcome);
    let grouped = analyze::group_responses(&outcome.records);
    let prompts: Vec<(&str, &Vec<&str>, &Vec<&str>)> = grouped
        .iter()
        .filter_map(|(pid, by_method)| {
            Some((*pid, by_method.get(method_a.as_str())?, by_method.get(method_b.as_str())?))
        })
        .collect();
    if prompts.is_empty() {
        return Err(CliError::Validation(format!(
            "no prompt has responses from both `{method_a}` and `{method_b}`"
        )));
    }
    let skipped = grouped.len() - prompts.len();

    let per_prompt = prompts
        .par_iter()
        .map(|(pid, a, b)| {
            let pairs = analyze::least_similar_pairs(a, b, usize::MAX)?;
            Ok(pairs
                .into_iter()
                .map(|p| EvalPairRow {
                    pair_id: format!("{pid}:{}:{}", p.index_a, p.index_b),
                    prompt_id: pid.to_string(),
                    index_a: p.index_a,
                    index_b: p.index_b,
                    similarity: p.similarity,
                    text_a: a[p.index_a].to_string(),
                    text_b: b[p.index_b].to_string(),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut rows: Vec<EvalPairRow> = per_prompt.into_iter().flatten().collect();
    rows.sort_by(|x, y| {
        x.similarity
            .total_cmp(&y.similarity)
            .then_with(|| (&x.prompt_id, x.index_a, x.index_b).cmp(&(&y.prompt_id, y.index_a, y.index_b)))
    });
    rows.truncate(k);
    if skipped > 0 {
        eprintln!("pairs-for-eval: {skipped} prompt(s) lacked one of the methods");
    }

    let mut table = format!("{:<24} {:>10}\n", "pair_id", "jaccard");
    for r in &rows {
        let _ = writeln!(table, "{:<24} {:>10.4}", r.pair_id, r.similarity);
    }
    let effective = json!({
        "input": io.input,
        "method_a": method_a,
        "method_b": method_b,
        "k": k,
        "strict": io.strict,
    });
    emit_report("pairs-for-eval", &io, &[&io.input], effective, "eval_pairs", &rows, &table)
}

// ----------------------------------------------------------- pos-report

fn pos_report(args: &PosReportArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let top_n = settings.pick(args.top_n, "top_n", DEFAULT_TOP_BIGRAMS)?;
    let outcome = analyze::read_tagged(&io.input, io.strict)?;
    report_skipped(&io.input, &outcome);
    let stats = analyze::pos_bigram_report(&outcome.records, top_n)?;

    let mut table = format!("{:<16} {:>10} {:>12}   (of {} documents)\n", "bigram", "present", "at start %", outcome.records.len());
    for s in &stats {
        let name = format!("{} {}", s.bigram.0, s.bigram.1);
        let _ = writeln!(table, "{name:<16} {:>10} {:>12.2}", s.docs_present, s.pct_at_start);
    }
    let effective = json!({"input": io.input, "top_n": top_n, "strict": io.strict});
    emit_report("pos-report", &io, &[&io.input], effective, "pos_report", &stats, &table)
}

// ------------------------------------------------------------- win-rate

fn win_rate(args: &WinRateArgs, settings: &Settings) -> Result<(), CliError> {
    let io = Io::resolve(&args.common, settings)?;
    let outcome = analyze::read_judgments(&io.input, io.strict)?;
    report_skipped(&io.input, &outcome);
    let winners: Vec<_> = outcome.records.iter().map(|j| j.winner).collect();
    let rate = analyze::win_rate(&winners)?;
    let table = format!(
        "judgments: {}\n  A wins: {:.2}%\n  B wins: {:.2}%\n  ties:   {:.2}%\n",
        rate.n, rate.win_a_pct, rate.win_b_pct, rate.tie_pct
    );
    let effective = json!({"input": io.input, "strict": io.strict});
    emit_report("win-rate", &io, &[&io.input], effective, "win_rate", &[rate], &table)
}
