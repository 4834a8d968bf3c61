//! Report rendering: 6 significant digits everywhere, destination file or stdout.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use segstat_core::stats::round_sig;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const SIG_DIGITS: usize = 6;

pub fn round(x: f64) -> f64 {
    round_sig(x, SIG_DIGITS)
}

/// Cell text for CSV reports; `None` renders as an empty cell.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| round(v).to_string()).unwrap_or_default()
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(report)?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = sink(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_rounded_integers_kept() {
        let v = serde_json::json!({"a": 0.47140452079103173, "n": 12345678901u64, "xs": [2.0, 1.0 / 3.0]});
        let s = to_json(&v).unwrap();
        assert!(s.contains("0.471405"));
        assert!(s.contains("12345678901"));
        assert!(s.contains("0.333333"));
        assert_eq!(cell(None), "");
        assert_eq!(cell(Some(89.71400000001)), "89.714");
    }
}
