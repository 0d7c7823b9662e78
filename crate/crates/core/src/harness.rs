//! Batch runner and JSON-lines result ledger.
//!
//! A manifest lists scenario files with the checker to run on each:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "output_dir": "out",
//!   "scenarios": [
//!     {"id": "sharp", "path": "z.json", "check": "kk", "regime": "normed-sharp"},
//!     {"path": "z.json", "check": "levy", "family": [[1], [1, 2]], "s": "1", "t": "1"},
//!     {"path": "z.json", "check": "tail", "s": "1/2", "t": "1/2", "u": "1/2", "v": "1/2"},
//!     {"path": "z.json", "check": "sharpness", "q": "3/2"},
//!     {"path": "walk.json", "check": "mont"}
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest. Scenario files follow the
//! `{"group", "elements", "p", "q"}` schema; `mont` files hold
//! `{"group", "law", "z0", "z1", "n", "t_grid", "mode"}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::envelope::FiniteDistribution;
use crate::error::{Error, Result};
use crate::instances::group_from_json;
use crate::rademacher::{
    check_kk, check_levy, check_mont, check_tail_product, sharpness_ratio, ConstantTag, InequalityReport,
    LaminarFamily, MontMode, RademacherScenario, Regime, Slack,
};
use crate::scalar::{parse_rational, rational_from_json, Scalar};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const LEDGER_FILE: &str = "ledger.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(default)]
    pub id: Option<String>,
    pub path: PathBuf,
    pub check: String,
    /// Overrides such as `regime`, `p`, `q`, `s`, `t`, `family`, `mode`.
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scenarios: Vec<ManifestEntry>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

impl BatchManifest {
    pub fn parse(text: &[u8]) -> Result<Self> {
        serde_json::from_slice(text).map_err(|e| Error::MalformedJson(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Satisfied,
    Violated,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub index: usize,
    pub part: usize,
    pub id: String,
    pub path: String,
    pub check: String,
    /// SHA-256 of the scenario file bytes, hex.
    pub input_sha256: Option<String>,
    pub tool_version: String,
    pub timestamp_ms: u64,
    pub status: RecordStatus,
    pub report: Option<Value>,
    pub error: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutcome {
    pub records: Vec<LedgerRecord>,
    pub ledger_path: PathBuf,
    pub exit_code: i32,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn scalar_param(params: &Map<String, Value>, key: &str) -> Result<Scalar> {
    let v = params.get(key).ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{key}`")))?;
    Ok(Scalar::Exact(rational_from_json(v)?))
}

/// Runs the checker named by `check` on the bytes of one scenario file.
pub fn run_check(check: &str, bytes: &[u8], params: &Map<String, Value>, seed: u64) -> Result<Vec<InequalityReport>> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::MalformedJson(e.to_string()))?;
    let scenario = || -> Result<RademacherScenario> {
        let mut doc = doc.clone();
        for key in ["p", "q"] {
            if let Some(v) = params.get(key) {
                doc[key] = v.clone();
            }
        }
        RademacherScenario::from_json(&doc)
    };
    match check {
        "kk" => {
            let regime: Regime = params.get("regime").and_then(Value::as_str).unwrap_or("normed-general").parse()?;
            Ok(vec![check_kk(&scenario()?, regime)?])
        }
        "levy" => {
            let s = scenario()?;
            let family = match params.get("family") {
                Some(Value::String(name)) => named_family(name, s.n())?,
                Some(v) => LaminarFamily::from_json(v)?,
                None => LaminarFamily::prefixes(s.n()),
            };
            Ok(vec![check_levy(&s, &family, &scalar_param(params, "s")?, &scalar_param(params, "t")?)?])
        }
        "tail" => {
            let s = scenario()?;
            let [a, b, c, d] = ["s", "t", "u", "v"].map(|k| scalar_param(params, k));
            Ok(vec![check_tail_product(&s, &a?, &b?, &c?, &d?)?])
        }
        "sharpness" => {
            let s = scenario()?;
            Ok(vec![sharpness_report(&s)?])
        }
        "mont" => {
            let mut doc = doc.clone();
            for (k, v) in params {
                doc[k.as_str()] = v.clone();
            }
            run_mont(&doc, seed)
        }
        other => Err(Error::InvalidParameter(format!("unknown check `{other}`"))),
    }
}

pub fn named_family(name: &str, n: usize) -> Result<LaminarFamily> {
    match name {
        "prefixes" => Ok(LaminarFamily::prefixes(n)),
        "suffixes" => Ok(LaminarFamily::suffixes(n)),
        "singletons" => Ok(LaminarFamily::singletons(n)),
        other => Err(Error::InvalidFamily(format!("unknown family `{other}`"))),
    }
}

/// Sharpness of `x_1 = x_2 = x` (the first element) as an inequality report
/// whose slack is exactly 1 when the equality is certified in rationals.
pub fn sharpness_report(s: &RademacherScenario) -> Result<InequalityReport> {
    let r = sharpness_ratio(&s.instance, &s.elements[0], &s.q)?;
    let close = (r.ratio - r.expected).abs() <= 1e-12;
    let satisfied = r.exact_match.unwrap_or(close);
    let mut witness = s.to_json();
    witness["ratio_pow_q"] = json!(r.ratio_pow_q);
    let mut report = InequalityReport::new(
        "sharpness",
        Scalar::Approx(r.ratio),
        Scalar::Approx(r.expected),
        ConstantTag { value: Scalar::Approx(r.expected), formula: "C_{1,q}=2^{1-1/q}".into() },
        satisfied,
        r.exact_match.is_some(),
        witness,
    );
    if r.exact_match == Some(true) {
        report.slack = Slack::Finite(Scalar::from_int(1));
    }
    Ok(report)
}

/// `mode` is `"exact"`, `"sample"` (with `samples` and optional `seed`), or
/// `{"sample": {"seed": .., "samples": ..}}`.
pub fn parse_mont_mode(v: Option<&Value>, doc: &Value, default_seed: u64) -> Result<MontMode> {
    let samples_of = |o: &Value| o.get("samples").and_then(Value::as_u64).unwrap_or(100_000);
    let seed_of = |o: &Value| o.get("seed").and_then(Value::as_u64).unwrap_or(default_seed);
    match v {
        None => Ok(MontMode::Exact),
        Some(Value::String(s)) if s == "exact" => Ok(MontMode::Exact),
        Some(Value::String(s)) if s == "sample" => Ok(MontMode::Sample { seed: seed_of(doc), samples: samples_of(doc) }),
        Some(Value::Object(o)) if o.contains_key("sample") => {
            let inner = &o["sample"];
            Ok(MontMode::Sample { seed: seed_of(inner), samples: samples_of(inner) })
        }
        Some(other) => Err(Error::InvalidParameter(format!("unknown mode {other}"))),
    }
}

fn run_mont(doc: &Value, seed: u64) -> Result<Vec<InequalityReport>> {
    let missing = |k: &str| Error::InvalidParameter(format!("missing `{k}`"));
    let instance = group_from_json(doc.get("group").ok_or_else(|| missing("group"))?)?;
    let law = FiniteDistribution::from_json(&instance, doc.get("law").ok_or_else(|| missing("law"))?)?;
    let z0 = instance.element_from_json(doc.get("z0").ok_or_else(|| missing("z0"))?)?;
    let z1 = match doc.get("z1") {
        Some(v) => instance.element_from_json(v)?,
        None => z0.clone(),
    };
    let n = doc.get("n").and_then(Value::as_u64).ok_or_else(|| missing("n"))?;
    let n = u32::try_from(n).map_err(|_| Error::InvalidParameter("n is too large".into()))?;
    let grid = doc
        .get("t_grid")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("t_grid"))?
        .iter()
        .map(|t| rational_from_json(t).map(Scalar::Exact))
        .collect::<Result<Vec<_>>>()?;
    let mode = parse_mont_mode(doc.get("mode"), doc, seed)?;
    check_mont(&instance, &law, &z0, &z1, n, &grid, mode)
}

fn error_value(e: &Error) -> Value {
    json!({"code": e.code(), "message": e.to_string()})
}

fn entry_id(index: usize, entry: &ManifestEntry) -> String {
    entry.id.clone().unwrap_or_else(|| {
        entry.path.file_stem().map(|s| format!("{index:03}-{}", s.to_string_lossy())).unwrap_or_else(|| format!("{index:03}"))
    })
}

fn run_entry(index: usize, entry: &ManifestEntry, base: &Path, seed: u64) -> Vec<LedgerRecord> {
    let id = entry_id(index, entry);
    let record = |part: usize, digest: Option<String>, status, report, error| LedgerRecord {
        index,
        part,
        id: id.clone(),
        path: entry.path.to_string_lossy().into_owned(),
        check: entry.check.clone(),
        input_sha256: digest,
        tool_version: TOOL_VERSION.to_string(),
        timestamp_ms: now_ms(),
        status,
        report,
        error,
    };
    let bytes = match fs::read(base.join(&entry.path)) {
        Ok(b) => b,
        Err(e) => return vec![record(0, None, RecordStatus::Error, None, Some(error_value(&Error::from(e))))],
    };
    let digest = format!("{:x}", Sha256::digest(&bytes));
    match run_check(&entry.check, &bytes, &entry.params, seed) {
        Err(e) => vec![record(0, Some(digest), RecordStatus::Error, None, Some(error_value(&e)))],
        Ok(reports) => reports
            .into_iter()
            .enumerate()
            .map(|(part, r)| {
                let status = if r.satisfied { RecordStatus::Satisfied } else { RecordStatus::Violated };
                let value = serde_json::to_value(&r).unwrap_or(Value::Null);
                record(part, Some(digest.clone()), status, Some(value), None)
            })
            .collect(),
    }
}

/// 0 when every record is satisfied, 2 when any inequality is violated,
/// otherwise 1 when any scenario failed to run.
pub fn exit_code(records: &[LedgerRecord]) -> i32 {
    if records.iter().any(|r| r.status == RecordStatus::Violated) {
        2
    } else if records.iter().any(|r| r.status == RecordStatus::Error) {
        1
    } else {
        0
    }
}

/// Runs every scenario concurrently and writes `ledger.jsonl` into the
/// output directory, in manifest order. Paths resolve against `base`.
pub fn run_batch(manifest: &BatchManifest, base: &Path) -> Result<BatchOutcome> {
    let per_entry: Vec<Vec<LedgerRecord>> = manifest
        .scenarios
        .par_iter()
        .enumerate()
        .map(|(i, entry)| run_entry(i, entry, base, manifest.seed))
        .collect();
    let records: Vec<LedgerRecord> = per_entry.into_iter().flatten().collect();
    let dir = base.join(&manifest.output_dir);
    fs::create_dir_all(&dir)?;
    let ledger_path = dir.join(LEDGER_FILE);
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(&ledger_path, text)?;
    let exit_code = exit_code(&records);
    Ok(BatchOutcome { records, ledger_path, exit_code })
}

pub fn read_ledger(text: &str) -> Result<Vec<LedgerRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::MalformedJson(e.to_string())))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SummaryFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for SummaryFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(SummaryFormat::Json),
            "csv" => Ok(SummaryFormat::Csv),
            "markdown" | "markdown-table" | "md" => Ok(SummaryFormat::Markdown),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
struct SummaryRow {
    id: String,
    part: usize,
    inequality: String,
    lhs: String,
    rhs: String,
    formula: String,
    slack: String,
    status: String,
}

fn text_of(v: Option<&Value>) -> String {
    match v {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => other.to_string(),
    }
}

fn summary_rows(records: &[LedgerRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = records
        .iter()
        .map(|r| {
            let rep = r.report.as_ref();
            let field = |k: &str| text_of(rep.and_then(|v| v.get(k)));
            let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            SummaryRow {
                id: r.id.clone(),
                part: r.part,
                inequality: if rep.is_some() { field("inequality") } else { r.check.clone() },
                lhs: field("lhs"),
                rhs: field("rhs"),
                formula: text_of(rep.and_then(|v| v.get("constant")).and_then(|c| c.get("formula"))),
                slack: field("slack"),
                status,
            }
        })
        .collect();
    rows.sort();
    rows
}

/// Deterministic summary sorted by scenario id and part.
pub fn emit_summary(records: &[LedgerRecord], format: SummaryFormat) -> Result<String> {
    let rows = summary_rows(records);
    match format {
        SummaryFormat::Json => Ok(serde_json::to_string_pretty(&rows)?),
        SummaryFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(["id", "part", "inequality", "lhs", "rhs", "formula", "slack", "status"])
                .map_err(|e| Error::Io(e.to_string()))?;
            for r in &rows {
                w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
        }
        SummaryFormat::Markdown => {
            let mut out = String::from("| id | part | inequality | lhs | rhs | formula | slack | status |\n");
            out.push_str("|---|---|---|---|---|---|---|---|\n");
            for r in &rows {
                let cells = [&r.id, &r.part.to_string(), &r.inequality, &r.lhs, &r.rhs, &r.formula, &r.slack, &r.status]
                    .map(|c| c.replace('|', "\\|"));
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            Ok(out)
        }
    }
}

/// Parses a threshold given on the command line.
pub fn parse_scalar(text: &str) -> Result<Scalar> {
    Ok(Scalar::Exact(parse_rational(text)?))
}
