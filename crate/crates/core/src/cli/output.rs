//! CSV emission: `# key=value` metadata lines, a header row, then rows.
//! Floats use the shortest representation that parses back to the same
//! value, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub struct Csv {
    meta: String,
    header: String,
    rows: String,
}

impl Csv {
    /// Starts with the artifact version, the command and every parameter.
    pub fn new(command: &str, cfg: &RunConfig, header: &[&str]) -> Self {
        let p = &cfg.params;
        let mut meta = String::new();
        let _ = writeln!(meta, "# ellipnls {VERSION}");
        let _ = writeln!(meta, "# command={command}");
        for (k, v) in [
            ("a", p.a),
            ("c1", p.c1),
            ("c2", p.c2),
            ("c3", p.c3),
            ("h0", p.h0),
            ("f0", p.f0),
            ("phi0", p.phi0),
        ] {
            let _ = writeln!(meta, "# {k}={}", num(v));
        }
        let _ = writeln!(meta, "# gamma2={}", gamma2_name(cfg));
        Self {
            meta,
            header: header.join(","),
            rows: String::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.meta, "# {key}={value}");
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.text_row(&cells);
    }

    pub fn text_row(&mut self, cells: &[String]) {
        self.rows.push_str(&cells.join(","));
        self.rows.push('\n');
    }

    pub fn text(&self) -> String {
        format!("{}{}\n{}", self.meta, self.header, self.rows)
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, self.text())
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn gamma2_name(cfg: &RunConfig) -> String {
    serde_json::to_value(cfg.gamma2)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

/// (key, value) report in the same CSV layout.
pub fn report(command: &str, cfg: &RunConfig, rows: &[(String, String)]) -> Csv {
    let mut csv = Csv::new(command, cfg, &["key", "value"]);
    for (k, v) in rows {
        csv.text_row(&[k.clone(), v.clone()]);
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for v in [0.1, -2.0, 1e-300, 4.80605282798881, 1.0 / 3.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn meta_lands_before_header() {
        let mut c = Csv::new("x", &RunConfig::default(), &["a", "b"]);
        c.meta("k", 3);
        c.row(&[1.0, 2.0]);
        let text = c.text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[lines.len() - 3], "# k=3");
        assert_eq!(lines[lines.len() - 2], "a,b");
    }
}
