//! CSV, JSON and matrix writers. Every file carries the schema version, the code
//! version and the config hash.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Output {
    dir: PathBuf,
    hash: String,
}

/// Fixed-width scientific notation, so CSV columns diff cleanly.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.15e}")
    } else {
        x.to_string()
    }
}

impl Output {
    pub fn new(dir: &Path, hash: &str) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn header(&self) -> String {
        format!("# schema={SCHEMA}\n# version={VERSION}\n# config_hash={}\n", self.hash)
    }

    /// Writes a CSV with the comment header, one row per entry and `footer` as
    /// trailing comment lines.
    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>], footer: &[String]) -> io::Result<()> {
        let mut s = self.header();
        s.push_str(&columns.join(","));
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        for f in footer {
            s.push_str("# ");
            s.push_str(f);
            s.push('\n');
        }
        fs::write(self.path(name), s)
    }

    /// Writes `payload` (a JSON object) with `schema`, `version` and `config_hash` added.
    pub fn json<T: Serialize>(&self, name: &str, payload: &T) -> io::Result<()> {
        let mut map = match serde_json::to_value(payload)? {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("data".into(), other);
                m
            }
        };
        map.insert("schema".into(), SCHEMA.into());
        map.insert("version".into(), VERSION.into());
        map.insert("config_hash".into(), self.hash.clone().into());
        let mut text = serde_json::to_string_pretty(&Value::Object(map))?;
        text.push('\n');
        fs::write(self.path(name), text)
    }

    /// Gnuplot `matrix nonuniform` layout: first row holds the x coordinates after a
    /// leading count, each following row starts with its y coordinate.
    pub fn matrix(&self, name: &str, comments: &[String], xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> io::Result<()> {
        let mut s = self.header();
        for c in comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        s.push_str(&xs.len().to_string());
        for x in xs {
            s.push(' ');
            s.push_str(&num(*x));
        }
        s.push('\n');
        for (y, row) in ys.iter().zip(values) {
            s.push_str(&num(*y));
            for v in row {
                s.push(' ');
                s.push_str(&num(*v));
            }
            s.push('\n');
        }
        fs::write(self.path(name), s)
    }
}
