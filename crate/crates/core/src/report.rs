//! Deterministic CSV and key-value report emission.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A row type with a fixed column order.
pub trait CsvRecord {
    fn header() -> Vec<&'static str>;
    fn fields(&self) -> Vec<String>;
}

/// Ten significant digits in scientific notation; round-trips through `parse`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn fmt_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(";")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Renders the header and every record; an empty slice gives the header only.
pub fn to_csv<R: CsvRecord>(records: &[R]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    let header = R::header();
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let f = r.fields();
        if f.len() != header.len() {
            return Err(Error::dims("csv record", header.len(), f.len()));
        }
        w.write_record(&f).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

pub fn write_csv<R: CsvRecord>(records: &[R], path: &Path) -> Result<()> {
    write_text(path, &to_csv(records)?)
}

/// Writes `text`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `key = value` lines in the given order.
pub fn key_values(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}
