//! Machine-readable reports: one row per assertion, plus tagged sweep tables.
//!
//! JSON output has recursively sorted keys and contains no timestamp unless
//! one is attached explicitly, so identical runs give identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{GapError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = GapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(crate::error::invalid("format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

/// One checked assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub theorem: String,
    pub parameters: String,
    pub computed: f64,
    pub reference: f64,
    pub residual: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(
        theorem: &str,
        parameters: impl Into<String>,
        computed: f64,
        reference: f64,
        residual: f64,
        pass: bool,
    ) -> Self {
        Self {
            theorem: theorem.to_string(),
            parameters: parameters.into(),
            computed,
            reference,
            residual,
            pass,
        }
    }

    /// Row asserting `computed ≥ reference` exactly; residual is the excess.
    pub fn at_least(theorem: &str, parameters: impl Into<String>, computed: f64, reference: f64) -> Self {
        Self::new(theorem, parameters, computed, reference, computed - reference, computed >= reference)
    }

    /// Row asserting `|computed − reference| ≤ tol·|reference|`.
    pub fn close(theorem: &str, parameters: impl Into<String>, computed: f64, reference: f64, tol: f64) -> Self {
        let rel = (computed - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
        Self::new(theorem, parameters, computed, reference, rel, rel <= tol)
    }

    /// Row recording a failed computation.
    pub fn failed(theorem: &str, parameters: impl Into<String>, error: &GapError) -> Self {
        Self::new(
            theorem,
            format!("{}; error: {error}", parameters.into()),
            f64::NAN,
            f64::NAN,
            f64::NAN,
            false,
        )
    }
}

/// A table of `(parameter, computed, reference, residual)` rows with column
/// labels, e.g. `(delta, quotient, limit, rel_gap)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub theorem: String,
    pub title: String,
    pub columns: [String; 4],
    pub extra_columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub notes: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub computed: f64,
    pub reference: f64,
    pub residual: f64,
    /// Values of the extra columns, NaN where absent.
    pub extra: Vec<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

impl SweepReport {
    pub fn new(theorem: &str, title: impl Into<String>, columns: [&str; 4], extra_columns: &[&str]) -> Self {
        Self {
            theorem: theorem.to_string(),
            title: title.into(),
            columns: columns.map(str::to_string),
            extra_columns: extra_columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    /// Sets `pass` to false and records why.
    pub fn fail(&mut self, note: impl Into<String>) {
        self.pass = false;
        self.notes.push(note.into());
    }

    /// CSV of the table with the theorem id as the first column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["theorem"];
        header.extend(self.columns.iter().map(String::as_str));
        header.extend(self.extra_columns.iter().map(String::as_str));
        header.extend(["pass", "error"]);
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.rows {
            let mut rec = vec![
                self.theorem.clone(),
                fmt_f64(row.parameter),
                fmt_f64(row.computed),
                fmt_f64(row.reference),
                fmt_f64(row.residual),
            ];
            rec.extend(row.extra.iter().map(|v| fmt_f64(*v)));
            rec.push(row.pass.to_string());
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_error)?;
        }
        finish_csv(w)
    }

    /// Assertion rows derived from the table, one per sweep row.
    pub fn assertion_rows(&self, parameters: &str) -> Vec<ReportRow> {
        self.rows
            .iter()
            .map(|r| {
                ReportRow::new(
                    &self.theorem,
                    format!("{parameters}, {}={}", self.columns[0], r.parameter),
                    r.computed,
                    r.reference,
                    r.residual,
                    r.pass,
                )
            })
            .collect()
    }
}

/// Full output of a recipe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    /// Result identifiers the recipe verifies, e.g. `T1.1`.
    pub theorems: Vec<String>,
    pub parameters: Map<String, Value>,
    pub rows: Vec<ReportRow>,
    pub sweeps: Vec<SweepReport>,
    pub notes: Vec<String>,
    pub pass: bool,
    pub elapsed_seconds: Option<f64>,
    pub generated_unix: Option<u64>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            theorems: Vec::new(),
            parameters: Map::new(),
            rows: Vec::new(),
            sweeps: Vec::new(),
            notes: Vec::new(),
            pass: true,
            elapsed_seconds: None,
            generated_unix: None,
        }
    }

    pub fn theorem(&mut self, id: &str) {
        if !self.theorems.iter().any(|t| t == id) {
            self.theorems.push(id.to_string());
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn push(&mut self, row: ReportRow) {
        self.theorem(&row.theorem.clone());
        self.pass &= row.pass;
        self.rows.push(row);
    }

    pub fn push_sweep(&mut self, sweep: SweepReport) {
        self.theorem(&sweep.theorem.clone());
        self.pass &= sweep.pass;
        self.sweeps.push(sweep);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Merges another report's rows, sweeps and notes.
    pub fn absorb(&mut self, other: Report) {
        for id in &other.theorems {
            self.theorem(id);
        }
        self.pass &= other.pass;
        self.rows.extend(other.rows);
        self.sweeps.extend(other.sweeps);
        self.notes.extend(other.notes);
    }

    pub fn stamp_now(&mut self) {
        self.generated_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }

    pub fn failing_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// JSON with recursively sorted keys.
    pub fn to_json(&self) -> Result<String> {
        to_sorted_json(self)
    }

    /// CSV of the assertion rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["theorem", "parameters", "computed", "reference", "residual", "pass"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.theorem.clone(),
                r.parameters.clone(),
                fmt_f64(r.computed),
                fmt_f64(r.reference),
                fmt_f64(r.residual),
                r.pass.to_string(),
            ])
            .map_err(csv_error)?;
        }
        finish_csv(w)
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

fn csv_error(e: csv::Error) -> GapError {
    GapError::Solver {
        message: format!("csv encoding failed: {e}"),
        log: Vec::new(),
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| GapError::Solver {
        message: format!("csv flush failed: {e}"),
        log: Vec::new(),
    })?;
    String::from_utf8(bytes).map_err(|e| GapError::Solver {
        message: format!("csv output is not UTF-8: {e}"),
        log: Vec::new(),
    })
}

fn sort_value(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_value(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_value).collect()),
        other => other,
    }
}

/// Pretty JSON of any serializable value with keys sorted at every level.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| GapError::Solver {
        message: format!("json encoding failed: {e}"),
        log: Vec::new(),
    })?;
    let mut s = serde_json::to_string_pretty(&sort_value(v)).map_err(|e| GapError::Solver {
        message: format!("json encoding failed: {e}"),
        log: Vec::new(),
    })?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("odi-check");
        r.param("n", 3);
        r.param("kappa", 1.0);
        r.push(ReportRow::close("T1.1", "n=3, \"quoted\"", 1.0, 1.0, 1e-12));
        let mut s = SweepReport::new("T1.1", "clamped", ["delta", "quotient", "limit", "rel_gap"], &["envelope"]);
        s.rows.push(SweepRow {
            parameter: 8.0,
            computed: 0.1,
            reference: 0.0625,
            residual: 0.6,
            extra: vec![0.2],
            pass: true,
            error: None,
        });
        r.push_sweep(s);
        r
    }

    #[test]
    fn json_keys_are_sorted_and_deterministic() {
        let a = sample().to_json().unwrap();
        let b = sample().to_json().unwrap();
        assert_eq!(a, b);
        let cmd = a.find("\"command\"").unwrap();
        let params = a.find("\"parameters\"").unwrap();
        let theorems = a.find("\"theorems\"").unwrap();
        assert!(cmd < params && params < theorems);
        assert!(a.find("\"kappa\"").unwrap() < a.find("\"n\"").unwrap());
    }

    #[test]
    fn csv_quotes_fields() {
        let csv = sample().to_csv().unwrap();
        assert!(csv.starts_with("theorem,parameters,computed,reference,residual,pass\n"));
        assert!(csv.contains("\"n=3, \"\"quoted\"\"\""));
        let sweep = sample().sweeps[0].to_csv().unwrap();
        assert!(sweep.starts_with("theorem,delta,quotient,limit,rel_gap,envelope,pass,error\n"));
    }

    #[test]
    fn failing_row_clears_pass() {
        let mut r = sample();
        assert!(r.pass);
        r.push(ReportRow::at_least("T1.2", "x", 0.5, 1.0));
        assert!(!r.pass);
        assert_eq!(r.failing_rows().count(), 1);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("hgap-report-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.json");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        fs::remove_dir_all(&dir).unwrap();
    }
}
