//! Persistence: configs, curve tables, scan timelines and run manifests.
//!
//! CSV files carry one header row and floating values with 9 significant
//! digits in plain dot-decimal notation. Non-finite values are written as
//! `inf`, `-inf` and `nan`, both in CSV and (as strings) in JSON.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::harness::{
    scan_rows, CurvePoint, ExperimentConfig, OccupancyReport, PdPfaCurve, RecoveryCell, RecoveryReport, ScanPath,
    ScanRow,
};

/// Significant digits of every floating value written to CSV.
pub const SIGNIFICANT_DIGITS: usize = 9;

pub const DETECTION_COLUMNS: [&str; 9] =
    ["technique", "snr_db", "threshold_factor", "n", "trials", "nd", "nf", "pd", "pfa"];
pub const RECOVERY_COLUMNS: [&str; 14] = [
    "solver",
    "scheme",
    "n",
    "k",
    "m",
    "snr_db",
    "trials",
    "mean_re",
    "mean_mse",
    "mean_cc",
    "mean_rsnr",
    "mean_hd",
    "mean_tr_ms",
    "mean_tp_ms",
];
pub const SCAN_COLUMNS: [&str; 6] = ["slot", "channel", "technique", "decision", "truth", "est_snr_db"];

/// Text for a non-finite float.
pub fn float_token(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Parse a float, accepting the `inf`/`-inf`/`nan` tokens.
pub fn parse_float(s: &str) -> Result<f64> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => t.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("not a number: `{s}`"))),
    }
}

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits, shortest form.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return float_token(x);
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded the way [`format_float`] writes it.
pub fn round_sig(x: f64) -> f64 {
    parse_float(&format_float(x)).unwrap_or(x)
}

/// Serde adapter: finite floats as numbers, others as string tokens.
pub mod float_token_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::float_token(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum F {
            Num(f64),
            Text(String),
        }
        match F::deserialize(d)? {
            F::Num(x) => Ok(x),
            F::Text(t) => super::parse_float(&t).map_err(serde::de::Error::custom),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map_err(io_err(path))
}

/// Header row then string records.
pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return invalid(format!(
            "{}: unexpected CSV header `{}`",
            path.display(),
            found.iter().collect::<Vec<_>>().join(",")
        ));
    }
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(csv_err(path))
}

fn f(x: f64) -> String {
    format_float(x)
}

pub fn write_detection_csv(path: &Path, curve: &PdPfaCurve) -> Result<()> {
    let rows = curve.points.iter().map(|p| {
        vec![
            p.technique.to_string(),
            f(p.snr_db),
            f(p.threshold_factor),
            p.n.to_string(),
            p.trials.to_string(),
            p.nd.to_string(),
            p.nf.to_string(),
            f(p.pd),
            f(p.pfa),
        ]
    });
    write_rows(path, &DETECTION_COLUMNS, rows)
}

pub fn read_detection_csv(path: &Path) -> Result<PdPfaCurve> {
    Ok(PdPfaCurve { points: read_rows::<CurvePoint>(path, &DETECTION_COLUMNS)? })
}

pub fn write_recovery_csv(path: &Path, report: &RecoveryReport) -> Result<()> {
    let rows = report.cells.iter().map(|c| {
        vec![
            c.solver.to_string(),
            c.scheme.to_string(),
            c.n.to_string(),
            c.k.to_string(),
            c.m.to_string(),
            f(c.snr_db),
            c.trials.to_string(),
            f(c.mean_re),
            f(c.mean_mse),
            f(c.mean_cc),
            f(c.mean_rsnr),
            f(c.mean_hd),
            f(c.mean_tr_ms),
            f(c.mean_tp_ms),
        ]
    });
    write_rows(path, &RECOVERY_COLUMNS, rows)
}

pub fn read_recovery_csv(path: &Path) -> Result<RecoveryReport> {
    Ok(RecoveryReport { cells: read_rows::<RecoveryCell>(path, &RECOVERY_COLUMNS)? })
}

pub fn write_scan_csv(path: &Path, report: &OccupancyReport, scan_path: ScanPath) -> Result<()> {
    let rows = scan_rows(report, scan_path).into_iter().map(|r| {
        vec![
            r.slot.to_string(),
            r.channel.to_string(),
            r.technique.to_string(),
            r.decision.to_string(),
            r.truth.to_string(),
            f(r.est_snr_db),
        ]
    });
    write_rows(path, &SCAN_COLUMNS, rows)
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanRow>> {
    read_rows(path, &SCAN_COLUMNS)
}

/// Named numeric columns, e.g. a signal and its estimate.
pub fn write_columns_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return invalid("header and column counts differ");
    }
    let len = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    let rows = (0..len).map(|i| columns.iter().map(|c| c.get(i).map(|v| f(*v)).unwrap_or_default()).collect());
    write_rows(path, header, rows)
}

/// Header and numeric columns of a CSV file. A file without a header row is
/// read as a single column named `value`.
pub fn read_columns_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first = text.lines().next().unwrap_or("");
    let has_header = first.split(',').any(|c| parse_float(c).is_err());
    let mut r = csv::ReaderBuilder::new().has_headers(has_header).from_reader(text.as_bytes());
    let mut header: Vec<String> =
        if has_header { r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect() } else { Vec::new() };
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        if cols.is_empty() {
            cols = vec![Vec::new(); rec.len()];
            header = (0..rec.len()).map(|i| if i == 0 { "value".into() } else { format!("value{i}") }).collect();
        }
        for (i, field) in rec.iter().enumerate().take(cols.len()) {
            if !field.trim().is_empty() {
                cols[i]
                    .push(parse_float(field).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?);
            }
        }
    }
    Ok((header, cols))
}

/// One column by name, or the first column when `name` is absent.
pub fn read_column(path: &Path, name: Option<&str>) -> Result<Vec<f64>> {
    let (header, cols) = read_columns_csv(path)?;
    let idx = match name {
        Some(n) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::InvalidArgument(format!("{}: no column `{n}`", path.display())))?,
        None => 0,
    };
    cols.into_iter().nth(idx).ok_or_else(|| Error::InvalidArgument(format!("{}: no data", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

/// Compact JSON with keys sorted at every level.
pub fn canonical_json(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key.
    let sorted: serde_json::Value = serde_json::from_str(&value.to_string()).expect("reparse own output");
    sorted.to_string()
}

/// SHA-256 hex digest of the canonical form of `value`.
pub fn document_hash(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(canonical_json(value).as_bytes()))
}

/// SHA-256 of the canonical JSON of the fully resolved config.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    Ok(document_hash(&serde_json::to_value(cfg)?))
}

/// Written as `manifest.json` beside the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub base_seed: u64,
    /// Output files, relative to the manifest's directory.
    pub output_paths: Vec<PathBuf>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(config_hash: String, base_seed: u64, started_at: String) -> Self {
        Self {
            config_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: String::new(),
            base_seed,
            output_paths: Vec::new(),
        }
    }

    /// Stamp the finish time and write `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_at = now_rfc3339();
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, &self)?;
        Ok(path)
    }
}
