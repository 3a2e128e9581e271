//! Report emission.  Every run is self-describing: CSV output carries the
//! resolved configuration as `# key=value` comment lines before the
//! header, JSON output carries it as a `config` object next to the
//! payload.  Given the same configuration (seed included) a run reproduces
//! its output byte for byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use nru_core::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One finished report: tabular for CSV, structured for JSON.
pub struct Report {
    pub command: &'static str,
    /// Resolved parameters, echoed into the output.
    pub config: BTreeMap<String, String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// JSON payload; placed under `"report"`.
    pub payload: serde_json::Value,
}

impl Report {
    pub fn emit(&self, format: Format, output: Option<&PathBuf>) -> Result<()> {
        let text = match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        };
        match output {
            Some(path) => {
                let mut file = BufWriter::new(File::create(path)?);
                file.write_all(text.as_bytes())?;
                file.flush()?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(text.as_bytes())?;
                lock.flush()?;
            }
        }
        Ok(())
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# version={VERSION}\n"));
        out.push_str(&format!("# command={}\n", self.command));
        for (key, value) in &self.config {
            out.push_str(&format!("# {key}={value}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> String {
        let config: serde_json::Map<String, serde_json::Value> = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let envelope = serde_json::json!({
            "version": VERSION,
            "command": self.command,
            "config": config,
            "report": self.payload,
        });
        let mut text =
            serde_json::to_string_pretty(&envelope).expect("reports are serializable");
        text.push('\n');
        text
    }
}

/// Shortest exact decimal form; infinities print as `inf`.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Quote a CSV cell when it contains a delimiter, quote, or newline.
fn csv_escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}
