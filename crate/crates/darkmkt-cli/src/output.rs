//! Report emission: JSON for scalar reports, CSV for series. Every number
//! is rounded to 12 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SIG_DIGITS: usize = 12;

pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{}", round_sig(v))
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(report: &T) -> CliResult<Value> {
    let mut v = serde_json::to_value(report).map_err(|e| CliError::Usage(format!("serialization: {e}")))?;
    round_value(&mut v);
    Ok(v)
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn io_err(out: Option<&Path>, e: io::Error) -> CliError {
    CliError::io(out.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()), e)
}

pub fn write_json<T: Serialize>(report: &T, out: Option<&Path>) -> CliResult<()> {
    let v = to_json(report)?;
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &v).map_err(|e| io_err(out, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(out, e))
}

/// Rows of already formatted cells under `header`.
pub fn write_csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>, out: Option<&Path>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    let wrap = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => io_err(out, e),
        other => CliError::Usage(format!("csv: {other:?}")),
    };
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|e| io_err(out, e))
}

pub fn write_text(text: &str, out: Option<&Path>) -> CliResult<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_err(out, e))
}
