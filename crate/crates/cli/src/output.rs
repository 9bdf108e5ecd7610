//! Output files with a provenance header.
//!
//! CSV files start with two comment lines, `# provenance: {json}` and
//! `# generated_unix: <seconds>`. JSON files are objects whose first member is
//! `provenance` and whose second line holds `generated_unix`. In both formats
//! the timestamp is alone on its line; everything else is a function of the
//! provenance config and the input files.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const CSV_PROVENANCE: &str = "# provenance: ";
pub const TIMESTAMP_KEY: &str = "generated_unix";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(config: &RunConfig) -> Self {
        Provenance {
            tool: "approach".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string(v).map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))
}

pub fn csv_document(config: &RunConfig, body: &str) -> CliResult<String> {
    Ok(format!("{CSV_PROVENANCE}{}\n# {TIMESTAMP_KEY}: {}\n{body}", to_json(&Provenance::new(config))?, now()))
}

pub fn json_document<T: Serialize>(config: &RunConfig, result: &T) -> CliResult<String> {
    Ok(format!(
        "{{\"provenance\":{},\n\"{TIMESTAMP_KEY}\":{},\n\"result\":{}}}\n",
        to_json(&Provenance::new(config))?,
        now(),
        to_json(result)?
    ))
}

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("out {}: {e}", path.display())))
}

/// The document with its timestamp line removed.
pub fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with(&format!("# {TIMESTAMP_KEY}:")) && !l.starts_with(&format!("\"{TIMESTAMP_KEY}\":")))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn json_document_parses_and_strips() {
        let c = RunConfig::defaults(Command::Ot);
        let doc = json_document(&c, &vec![1.5, 2.0]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["result"][0], 1.5);
        assert_eq!(v["provenance"]["config"]["command"], "ot");
        let stripped = strip_timestamp(&doc);
        assert!(!stripped.contains(TIMESTAMP_KEY));
        assert_eq!(stripped.lines().count(), 2);
    }

    #[test]
    fn csv_document_header() {
        let c = RunConfig::defaults(Command::Scan);
        let doc = csv_document(&c, "n,max_dist\n").unwrap();
        let lines: Vec<&str> = doc.lines().collect();
        assert!(lines[0].starts_with(CSV_PROVENANCE));
        assert!(lines[1].starts_with("# generated_unix: "));
        assert_eq!(lines[2], "n,max_dist");
        assert_eq!(strip_timestamp(&doc).lines().count(), 2);
    }
}
