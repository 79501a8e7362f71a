//! Record schemas and line-delimited JSON readers/writers.
//!
//! Every file starts with a header line `{"schema_version": 1, "kind": ...}`
//! followed by one JSON object per line. Readers reject unknown major schema
//! versions and validate each record before handing it out.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::filter::Method;
use crate::textstat::{word_count, MetricVector};

pub const SCHEMA_VERSION: u64 = 1;
/// Largest word-count gap allowed between chosen and rejected in a
/// Diverse-NS pair unless configured otherwise.
pub const DEFAULT_MAX_LEN_DELTA: usize = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: field `{field}`: {reason}")]
    SchemaViolation {
        line: usize,
        field: String,
        reason: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("unsupported schema_version {found} (this build reads version {SCHEMA_VERSION})")]
    UnsupportedVersion { found: u64 },
    #[error("expected file kind {expected}, found `{found}`")]
    WrongKind { expected: String, found: String },
    #[error("record {index}: {reason}")]
    InvariantViolation { index: usize, reason: String },
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            IngestError::MissingFile(path.to_path_buf())
        } else {
            IngestError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    /// True for I/O failures as opposed to content problems.
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::MissingFile(_) | IngestError::Io { .. })
    }
}

/// One model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_ref: Option<String>,
    /// Scores attached by `score`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricVector>,
}

impl ResponseRecord {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            token_logprobs: None,
            quality_score: None,
            embedding_ref: None,
            metrics: None,
        }
    }

    pub fn with_logprobs(mut self, logprobs: Vec<f64>) -> Self {
        self.token_logprobs = Some(logprobs);
        self
    }

    pub fn with_quality(mut self, quality: f64) -> Self {
        self.quality_score = Some(quality);
        self
    }

    pub fn with_metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.get_or_insert_with(MetricVector::default).insert(name, value);
        self
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }

    /// Looks up a named score: `quality` reads `quality_score`, `word_count`
    /// is computed from the text, anything else reads the metric vector.
    pub fn score(&self, name: &str) -> Option<f64> {
        match name {
            "quality" | "quality_score" => self.quality_score,
            "word_count" => Some(self.word_count() as f64),
            _ => self.metrics.as_ref().and_then(|m| m.get(name)),
        }
    }
}

/// A prompt with its first and redrafted second response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub prompt_id: String,
    pub prompt_text: String,
    pub three_words: Vec<String>,
    pub model_id: String,
    pub first: ResponseRecord,
    pub second: ResponseRecord,
}

/// A chosen/rejected pair for preference optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    /// Source record id (Diverse-NS) or prompt id (DivPO).
    pub id: String,
    pub prompt_id: String,
    pub prompt_text: String,
    pub chosen: ResponseRecord,
    pub rejected: ResponseRecord,
    pub diversity_gain: f64,
    pub quality_gain: f64,
    pub method: Method,
}

impl PreferencePair {
    /// `wc(chosen) - wc(rejected)`.
    pub fn length_delta(&self) -> i64 {
        self.chosen.word_count() as i64 - self.rejected.word_count() as i64
    }

    /// Checks the Diverse-NS pair invariants. DivPO pairs always pass.
    pub fn check_invariants(&self, max_len_delta: usize) -> Result<(), String> {
        if !matches!(self.method, Method::Dns | Method::DnsLite) {
            return Ok(());
        }
        let delta = self.length_delta();
        if delta.unsigned_abs() as usize > max_len_delta {
            return Err(format!(
                "pair `{}`: word-count delta {delta} exceeds {max_len_delta}",
                self.id
            ));
        }
        if !(self.diversity_gain > 0.0) {
            return Err(format!("pair `{}`: diversity_gain must be > 0", self.id));
        }
        if !(self.quality_gain > 0.0) {
            return Err(format!("pair `{}`: quality_gain must be > 0", self.id));
        }
        Ok(())
    }
}

/// First line of every file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    pub schema_version: u64,
    pub kind: String,
    /// Kind-specific metadata.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl FileHeader {
    pub fn new(kind: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            extra: Map::new(),
        }
    }
}

/// Records read from a file along with lenient-mode bookkeeping.
#[derive(Debug, Clone)]
pub struct ReadOutcome<T> {
    pub header: FileHeader,
    pub records: Vec<T>,
    /// Line numbers (1-based, header is line 1) of skipped records.
    pub skipped_lines: Vec<usize>,
}

impl<T> ReadOutcome<T> {
    pub fn skipped(&self) -> usize {
        self.skipped_lines.len()
    }
}

pub type Violation = (String, String);

fn violation(field: impl Into<String>, reason: impl Into<String>) -> Violation {
    (field.into(), reason.into())
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, Violation> {
    v.as_object()
        .ok_or_else(|| violation(if path.is_empty() { "<record>" } else { path }, "expected an object"))
}

fn req_str<'a>(obj: &'a Map<String, Value>, prefix: &str, field: &str) -> Result<&'a str, Violation> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(violation(join(prefix, field), "missing")),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(violation(join(prefix, field), "expected a string")),
    }
}

fn opt<'a>(obj: &'a Map<String, Value>, field: &str) -> Option<&'a Value> {
    obj.get(field).filter(|v| !v.is_null())
}

fn req_number(obj: &Map<String, Value>, prefix: &str, field: &str) -> Result<f64, Violation> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(violation(join(prefix, field), "missing")),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| violation(join(prefix, field), "expected a number")),
    }
}

fn check_response(v: Option<&Value>, path: &str) -> Result<(), Violation> {
    let v = v.ok_or_else(|| violation(path, "missing"))?;
    let obj = as_object(v, path)?;
    let text = req_str(obj, path, "text")?;
    if text.trim().is_empty() {
        return Err(violation(join(path, "text"), "empty after trimming"));
    }
    if let Some(lps) = opt(obj, "token_logprobs") {
        let field = join(path, "token_logprobs");
        let arr = lps
            .as_array()
            .ok_or_else(|| violation(&field, "expected an array"))?;
        for (i, lp) in arr.iter().enumerate() {
            match lp.as_f64() {
                Some(x) if x <= 0.0 => {}
                Some(x) => return Err(violation(&field, format!("element {i} is {x} > 0"))),
                None => return Err(violation(&field, format!("element {i} is not a number"))),
            }
        }
    }
    if let Some(q) = opt(obj, "quality_score") {
        if !q.is_number() {
            return Err(violation(join(path, "quality_score"), "expected a number"));
        }
    }
    if let Some(e) = opt(obj, "embedding_ref") {
        if !e.is_string() {
            return Err(violation(join(path, "embedding_ref"), "expected a string"));
        }
    }
    if let Some(m) = opt(obj, "metrics") {
        let field = join(path, "metrics");
        let map = m
            .as_object()
            .ok_or_else(|| violation(&field, "expected an object"))?;
        if let Some((k, _)) = map.iter().find(|(_, v)| !v.is_number()) {
            return Err(violation(join(&field, k), "expected a number"));
        }
    }
    Ok(())
}

fn check_generation(v: &Value) -> Result<(), Violation> {
    let obj = as_object(v, "")?;
    for field in ["id", "prompt_id", "prompt_text", "model_id"] {
        req_str(obj, "", field)?;
    }
    match obj.get("three_words") {
        None | Some(Value::Null) => return Err(violation("three_words", "missing")),
        Some(Value::Array(words)) => {
            if words.len() != 3 {
                return Err(violation(
                    "three_words",
                    format!("expected exactly 3 entries, found {}", words.len()),
                ));
            }
            for w in words {
                match w.as_str() {
                    Some(s) if !s.trim().is_empty() => {}
                    _ => return Err(violation("three_words", "entries must be non-empty strings")),
                }
            }
        }
        Some(_) => return Err(violation("three_words", "expected an array")),
    }
    check_response(obj.get("first"), "first")?;
    check_response(obj.get("second"), "second")
}

fn check_pair(v: &Value) -> Result<(), Violation> {
    let obj = as_object(v, "")?;
    for field in ["id", "prompt_id", "prompt_text"] {
        req_str(obj, "", field)?;
    }
    check_response(obj.get("chosen"), "chosen")?;
    check_response(obj.get("rejected"), "rejected")?;
    req_number(obj, "", "diversity_gain")?;
    req_number(obj, "", "quality_gain")?;
    let method = req_str(obj, "", "method")?;
    serde_json::from_value::<Method>(Value::String(method.to_string()))
        .map_err(|_| violation("method", format!("unknown method `{method}`")))?;
    Ok(())
}

/// Parses and checks the header line.
pub fn parse_header(line: &str, kinds: &[&str]) -> Result<FileHeader, IngestError> {
    let schema = |field: &str, reason: String| IngestError::SchemaViolation {
        line: 1,
        field: field.to_string(),
        reason,
    };
    let value: Value =
        serde_json::from_str(line).map_err(|e| schema("<header>", format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema("<header>", "expected an object".into()))?;
    let version = obj
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| schema("schema_version", "missing or not an integer".into()))?;
    if version != SCHEMA_VERSION {
        return Err(IngestError::UnsupportedVersion { found: version });
    }
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("kind", "missing or not a string".into()))?;
    if !kinds.is_empty() && !kinds.contains(&kind) {
        return Err(IngestError::WrongKind {
            expected: kinds.join("|"),
            found: kind.to_string(),
        });
    }
    serde_json::from_value(value).map_err(|e| schema("<header>", e.to_string()))
}

/// Generic line-delimited reader.
///
/// `check` validates the raw JSON value and names the offending field;
/// `id_of` (if given) enforces id uniqueness within the file.
pub fn read_lines<T, R>(
    reader: R,
    kinds: &[&str],
    strict: bool,
    check: impl Fn(&Value) -> Result<(), Violation>,
    id_of: Option<fn(&T) -> &str>,
) -> Result<ReadOutcome<T>, IngestError>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut lines = reader.lines();
    let first = match lines.next() {
        Some(line) => line.map_err(|e| IngestError::io(Path::new("<input>"), e))?,
        None => {
            return Err(IngestError::SchemaViolation {
                line: 1,
                field: "schema_version".into(),
                reason: "file is empty; expected a header line".into(),
            })
        }
    };
    let header = parse_header(&first, kinds)?;

    let mut records = Vec::new();
    let mut skipped_lines = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| IngestError::io(Path::new("<input>"), e))?;
        let parsed = parse_record::<T>(&line, line_no, &check).and_then(|rec| {
            if let Some(id_of) = id_of {
                let id = id_of(&rec);
                if !seen.insert(id.to_string()) {
                    return Err(IngestError::DuplicateId {
                        line: line_no,
                        id: id.to_string(),
                    });
                }
            }
            Ok(rec)
        });
        match parsed {
            Ok(rec) => records.push(rec),
            Err(e) if strict => return Err(e),
            Err(_) => skipped_lines.push(line_no),
        }
    }
    Ok(ReadOutcome {
        header,
        records,
        skipped_lines,
    })
}

fn parse_record<T: DeserializeOwned>(
    line: &str,
    line_no: usize,
    check: &impl Fn(&Value) -> Result<(), Violation>,
) -> Result<T, IngestError> {
    let schema = |(field, reason): Violation| IngestError::SchemaViolation {
        line: line_no,
        field,
        reason,
    };
    let value: Value = serde_json::from_str(line)
        .map_err(|e| schema(violation("<record>", format!("invalid JSON: {e}"))))?;
    check(&value).map_err(schema)?;
    serde_json::from_value(value).map_err(|e| schema(violation("<record>", e.to_string())))
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| IngestError::io(path, e))
}

fn relabel_io(e: IngestError, path: &Path) -> IngestError {
    match e {
        IngestError::Io { source, .. } => IngestError::io(path, source),
        other => other,
    }
}

/// [`read_lines`] over a file, with I/O errors naming `path`.
pub fn read_file<T: DeserializeOwned>(
    path: impl AsRef<Path>,
    kinds: &[&str],
    strict: bool,
    check: impl Fn(&Value) -> Result<(), Violation>,
    id_of: Option<fn(&T) -> &str>,
) -> Result<ReadOutcome<T>, IngestError> {
    let path = path.as_ref();
    read_lines(open(path)?, kinds, strict, check, id_of).map_err(|e| relabel_io(e, path))
}

/// Reads a corpus (raw or scored) from any buffered reader.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    strict: bool,
) -> Result<ReadOutcome<GenerationRecord>, IngestError> {
    read_lines(
        reader,
        &["corpus", "scored"],
        strict,
        check_generation,
        Some(|r: &GenerationRecord| r.id.as_str()),
    )
}

/// Reads a corpus file. In strict mode the first malformed line aborts; in
/// lenient mode malformed lines are skipped and counted.
pub fn read_corpus(
    path: impl AsRef<Path>,
    strict: bool,
) -> Result<ReadOutcome<GenerationRecord>, IngestError> {
    let path = path.as_ref();
    parse_corpus(open(path)?, strict).map_err(|e| relabel_io(e, path))
}

pub fn read_pairs(
    path: impl AsRef<Path>,
    strict: bool,
) -> Result<ReadOutcome<PreferencePair>, IngestError> {
    let path = path.as_ref();
    read_lines(open(path)?, &["pairs"], strict, check_pair, None).map_err(|e| relabel_io(e, path))
}

/// Writes a header and one JSON line per item.
pub fn write_lines<T: Serialize>(
    path: impl AsRef<Path>,
    header: &FileHeader,
    items: &[T],
) -> Result<usize, IngestError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IngestError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e: io::Error| IngestError::io(path, e);
    serde_json::to_writer(&mut out, header).map_err(|e| io_err(e.into()))?;
    out.write_all(b"\n").map_err(io_err)?;
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(items.len())
}

pub fn write_corpus(
    records: &[GenerationRecord],
    path: impl AsRef<Path>,
    kind: &str,
) -> Result<usize, IngestError> {
    write_lines(path, &FileHeader::new(kind), records)
}

/// Writes pairs after checking the Diverse-NS invariants with the default
/// five-word limit.
pub fn write_pairs(pairs: &[PreferencePair], path: impl AsRef<Path>) -> Result<usize, IngestError> {
    write_pairs_with_limit(pairs, path, DEFAULT_MAX_LEN_DELTA)
}

pub fn write_pairs_with_limit(
    pairs: &[PreferencePair],
    path: impl AsRef<Path>,
    max_len_delta: usize,
) -> Result<usize, IngestError> {
    for (index, pair) in pairs.iter().enumerate() {
        pair.check_invariants(max_len_delta)
            .map_err(|reason| IngestError::InvariantViolation { index, reason })?;
    }
    write_lines(path, &FileHeader::new("pairs"), pairs)
}
