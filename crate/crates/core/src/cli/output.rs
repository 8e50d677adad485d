//! Report records and their JSON and long-format CSV renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{Format, RunConfig};
use super::CliError;
use crate::numerics::BigRational;

/// One output row: a label and named fields. Numbers are stored as decimal
/// strings with 15 significant digits so that JSON and CSV carry identical text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    pub fields: BTreeMap<String, String>,
}

impl Record {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            fields: BTreeMap::new(),
        }
    }

    pub fn num(mut self, key: &str, x: f64) -> Self {
        self.fields.insert(key.to_string(), fmt_num(x));
        self
    }

    pub fn int(mut self, key: &str, x: impl ToString) -> Self {
        self.fields.insert(key.to_string(), x.to_string());
        self
    }

    pub fn text(mut self, key: &str, s: impl Into<String>) -> Self {
        self.fields.insert(key.to_string(), s.into());
        self
    }

    pub fn exact(self, x: &BigRational) -> Self {
        self.text("exact", x.to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }
}

/// Everything one run prints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub results: Vec<Record>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub exit_code: i32,
}

/// Decimal rendering with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    // the exponent after rounding to 15 digits, so that 0.99…96 counts as 1
    let sci = format!("{x:.14e}");
    let exponent: i32 = sci[sci.find('e').map_or(0, |i| i + 1)..].parse().unwrap_or(0);
    if (-5..15).contains(&exponent) {
        let decimals = (14 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

impl Report {
    pub fn render(&self) -> Result<String, CliError> {
        match self.config.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        let config = serde_json::to_string(&self.config).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(buf, "# config {config}").map_err(|e| CliError::Io(e.to_string()))?;
        for w in &self.warnings {
            writeln!(buf, "# warning {w}").map_err(|e| CliError::Io(e.to_string()))?;
        }
        {
            let mut wtr = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Io(e.to_string());
            wtr.write_record(["name", "field", "value"]).map_err(io)?;
            for rec in &self.results {
                for (k, v) in &rec.fields {
                    wtr.write_record([rec.name.as_str(), k.as_str(), v.as_str()]).map_err(io)?;
                }
            }
            wtr.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Writes to `--out` when given, else stdout.
    pub fn emit(&self) -> Result<(), CliError> {
        let text = self.render()?;
        match &self.config.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }
}

/// Parses long-format CSV back into `(name, field, value)` triples, skipping comments.
pub fn parse_csv(text: &str) -> Result<Vec<(String, String, String)>, CliError> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| CliError::Io(e.to_string()))?;
            Ok((r[0].to_string(), r[1].to_string(), r[2].to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_num(0.5), "0.500000000000000");
        assert_eq!(fmt_num(3.0), "3.00000000000000");
        assert_eq!(fmt_num(123.456), "123.456000000000");
        assert_eq!(fmt_num(-0.001234), "-0.00123400000000000");
        assert_eq!(fmt_num(1e-9), "1.00000000000000e-9");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(0.9999999999999996), "1.00000000000000");
        assert_eq!(fmt_num(1e-5), "0.0000100000000000000");
        assert_eq!(fmt_num(-2.5e-6), "-2.50000000000000e-6");
        for x in [0.1, 1.0 / 3.0, std::f64::consts::E, 6.02e23, -4.4e-12] {
            let back: f64 = fmt_num(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-14 * x.abs());
        }
    }
}
