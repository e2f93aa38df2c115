//! Output envelope and CSV helpers.
//!
//! Every result is wrapped in one JSON object embedding the artifact version,
//! the resolved scientific parameters and the seed, so a run can be
//! reproduced from its own output. Execution details (thread caps, output
//! paths) are deliberately left out: identical parameters and seed must give
//! byte-identical bytes regardless of worker count.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

pub struct Envelope {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub results: Value,
}

impl Envelope {
    pub fn render(&self) -> String {
        let doc = json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "results": self.results,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let body = self.render();
        print!("{body}");
        if let Some(path) = out {
            fs::write(path, body.as_bytes())?;
        }
        Ok(())
    }
}

/// Write a metadata comment line, a header, then numeric rows. The comment
/// carries the same envelope fields as the JSON summary so the CSV alone
/// suffices to reproduce the run.
pub fn write_csv(
    path: &Path,
    meta: &Envelope,
    header: &str,
    rows: &[Vec<String>],
) -> std::io::Result<()> {
    let meta_line = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": meta.command,
        "seed": meta.seed,
        "config": meta.config,
    });
    let mut body = format!("# {meta_line}\n{header}\n");
    for row in rows {
        body.push_str(&row.join(","));
        body.push('\n');
    }
    fs::write(path, body)
}

/// Render an `f64` for CSV cells; finite shortest round-trip, else `inf`/`nan`.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
