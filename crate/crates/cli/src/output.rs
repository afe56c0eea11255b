//! CSV and JSON writers for run artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;

/// 17 significant digits, enough to round-trip an f64.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    /// Writes a CSV file; `preamble` lines go before the header as `# ` comments.
    pub fn csv(&mut self, name: &str, preamble: &[String], header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        for line in preamble {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        std::fs::write(path, buf)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }
}
