//! Result tables and their CSV/JSON encodings.
//!
//! Every file starts with the run description it was produced from: CSV
//! files carry it as a `# meta: {json}` comment line, JSON files under
//! `meta`. Numbers are printed with 12 significant digits; JSON rows hold
//! the same rounded values as the CSV.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::run::RunSpec;

/// Prefix of the metadata line in CSV files.
pub const META_PREFIX: &str = "# meta: ";

/// Significant digits of printed numbers.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated values with a metadata comment line.
    #[default]
    Csv,
    /// One JSON object with `meta` and `rows`.
    Json,
}

/// One trial of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub chsh: f64,
    #[serde(rename = "xA")]
    pub x_a: usize,
    #[serde(rename = "xA2")]
    pub x_a2: usize,
    #[serde(rename = "yB")]
    pub y_b: usize,
    #[serde(rename = "yB2")]
    pub y_b2: usize,
    pub minus_pos: u8,
    pub violated: bool,
    pub chsh_err: Option<f64>,
}

/// One point of a violation-probability curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub axis: f64,
    pub probability: f64,
    pub stderr: f64,
}

/// One histogram bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

/// Rows of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Trials(Vec<TrialRow>),
    Curve(Vec<CurveRow>),
    Hist(Vec<HistRow>),
}

impl Table {
    /// CSV header line without the newline.
    pub fn header(&self) -> &'static str {
        match self {
            Table::Trials(_) => "trial,chsh,xA,xA2,yB,yB2,minus_pos,violated,chsh_err",
            Table::Curve(_) => "axis,probability,stderr",
            Table::Hist(_) => "bin_lo,bin_hi,count",
        }
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        match self {
            Table::Trials(r) => r.len(),
            Table::Curve(r) => r.len(),
            Table::Hist(r) => r.len(),
        }
    }

    /// Whether there are no rows.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed,
/// scientific notation outside `1e-4 ≤ |x| < 1e12`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to the printed precision.
pub fn rounded(x: f64) -> f64 {
    format_number(x).parse().unwrap_or(x)
}

fn csv_rows(table: &Table, out: &mut String) {
    let f = format_number;
    match table {
        Table::Trials(rows) => {
            for r in rows {
                let err = r.chsh_err.map(f).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.trial,
                    f(r.chsh),
                    r.x_a,
                    r.x_a2,
                    r.y_b,
                    r.y_b2,
                    r.minus_pos,
                    r.violated,
                    err
                );
            }
        }
        Table::Curve(rows) => {
            for r in rows {
                let _ = writeln!(out, "{},{},{}", f(r.axis), f(r.probability), f(r.stderr));
            }
        }
        Table::Hist(rows) => {
            for r in rows {
                let _ = writeln!(out, "{},{},{}", f(r.bin_lo), f(r.bin_hi), r.count);
            }
        }
    }
}

fn rounded_rows(table: &Table) -> serde_json::Value {
    let value = match table {
        Table::Trials(rows) => serde_json::to_value(
            rows.iter()
                .map(|r| TrialRow { chsh: rounded(r.chsh), chsh_err: r.chsh_err.map(rounded), ..r.clone() })
                .collect::<Vec<_>>(),
        ),
        Table::Curve(rows) => serde_json::to_value(
            rows.iter()
                .map(|r| CurveRow {
                    axis: rounded(r.axis),
                    probability: rounded(r.probability),
                    stderr: rounded(r.stderr),
                })
                .collect::<Vec<_>>(),
        ),
        Table::Hist(rows) => serde_json::to_value(
            rows.iter()
                .map(|r| HistRow { bin_lo: rounded(r.bin_lo), bin_hi: rounded(r.bin_hi), count: r.count })
                .collect::<Vec<_>>(),
        ),
    };
    value.expect("rows serialize")
}

/// Encodes `table` with its run description.
pub fn render(spec: &RunSpec, table: &Table, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(META_PREFIX);
            out.push_str(&serde_json::to_string(spec).expect("spec serializes"));
            out.push('\n');
            out.push_str(table.header());
            out.push('\n');
            csv_rows(table, &mut out);
            out
        }
        Format::Json => {
            let doc = serde_json::json!({ "meta": spec, "rows": rounded_rows(table) });
            let mut out = serde_json::to_string_pretty(&doc).expect("document serializes");
            out.push('\n');
            out
        }
    }
}

/// Writes the encoded table to `path`, or to stdout when `path` is `None`.
pub fn write_output(spec: &RunSpec, table: &Table, path: Option<&Path>, format: Format) -> io::Result<()> {
    let text = render(spec, table, format);
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Errors reading a run description back from a file.
#[derive(Debug, thiserror::Error)]
pub enum MetaError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("no run metadata found in {0}")]
    Missing(String),
    #[error("malformed run metadata in {path}: {source}")]
    Malformed { path: String, source: serde_json::Error },
}

/// Recovers the run description from a CSV or JSON output file.
pub fn read_spec(path: &Path) -> Result<RunSpec, MetaError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| MetaError::Io { path: name.clone(), source })?;
    let malformed = |source| MetaError::Malformed { path: name.clone(), source };
    if let Some(line) = text.lines().next().and_then(|l| l.strip_prefix(META_PREFIX)) {
        return serde_json::from_str(line).map_err(malformed);
    }
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|_| MetaError::Missing(name.clone()))?;
    let meta = doc.get_mut("meta").map(serde_json::Value::take).ok_or_else(|| MetaError::Missing(name.clone()))?;
    serde_json::from_value(meta).map_err(malformed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(2.0), "2");
        assert_eq!(format_number(-1.5), "-1.5");
        assert_eq!(format_number(std::f64::consts::SQRT_2 * 2.0), "2.82842712475");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(123456.7890123456), "123456.789012");
        assert_eq!(format_number(1.0e-5), "1e-5");
        assert_eq!(format_number(2.5e-4), "0.00025");
        assert_eq!(format_number(1.0e12), "1e12");
        assert_eq!(format_number(999999999999.4), "999999999999");
        // rounding carries into the next decade before choosing the notation
        assert_eq!(format_number(9.9999999999999e-5), "0.0001");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn rounding_matches_print() {
        let x = 1.234_567_890_123_456;
        assert_eq!(rounded(x), 1.234_567_890_12);
        assert_eq!(format_number(rounded(x)), format_number(x));
    }
}
