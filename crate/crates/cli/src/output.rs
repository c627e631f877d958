//! CSV tables with a config-hash comment line.

use crate::error::CliError;
use num_rational::BigRational;
use std::io::Write;
use std::path::Path;

/// Twelve significant digits in scientific notation.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

/// Exact rational as `num/den`, also for integers.
pub fn rational(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key=value` lines written after the hash.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn render(&self, config_hash: &str) -> Result<String, CliError> {
        let mut out = format!("# config sha256={config_hash}\n");
        for n in &self.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Config(format!("csv buffer: {e}")))?;
        out.push_str(&String::from_utf8_lossy(&body));
        Ok(out)
    }
}

/// Writes to `out` or stdout.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn formats() {
        assert_eq!(real(1.0), "1.00000000000e0");
        assert_eq!(real(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(rational(&BigRational::from_integer(BigInt::from(3))), "3/1");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.render("ab").unwrap(), "# config sha256=ab\na,b\n1,\"x,y\"\n");
    }
}
