use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::{CliError, Command, Config, Format};

/// What a subcommand produced.
pub struct Outcome {
    /// JSON object merged into the top-level document.
    pub result: Map<String, Value>,
    /// Plot-ready CSV for `--format csv`; scalar fields are used otherwise.
    pub table: Option<String>,
    pub passed: bool,
}

fn document(command: Command, config: &Config, passed: bool) -> Map<String, Value> {
    let mut doc = Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert("config".into(), json!(config));
    doc.insert("passed".into(), json!(passed));
    doc
}

fn scalar_csv(result: &Map<String, Value>) -> String {
    let fields: Vec<(&String, &Value)> = result
        .iter()
        .filter(|(_, v)| v.is_number() || v.is_string() || v.is_boolean())
        .collect();
    let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<String> = fields
        .iter()
        .map(|(_, v)| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

pub fn emit(command: Command, config: &Config, outcome: &Outcome) -> Result<(), CliError> {
    let text = match config.format {
        Format::Json => {
            let mut doc = document(command, config, outcome.passed);
            doc.extend(outcome.result.clone());
            serde_json::to_string_pretty(&Value::Object(doc))? + "\n"
        }
        Format::Csv => match &outcome.table {
            Some(t) => t.clone(),
            None => scalar_csv(&outcome.result),
        },
    };
    match &config.out {
        Some(path) => write_atomic(path, &text),
        // a closed pipe (`| head`) is not an error
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
                path: "<stdout>".into(),
                source: e,
            }),
            _ => Ok(()),
        },
    }
}

pub fn error_report(command: Command, config: &Config, err: &CliError) -> String {
    let mut doc = document(command, config, false);
    doc.insert(
        "error".into(),
        json!({"kind": err.kind(), "message": err.to_string()}),
    );
    serde_json::to_string_pretty(&Value::Object(doc)).unwrap_or_default()
}

/// Writes next to the target, then renames over it.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut f = fs::File::create(tmp).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(tmp, path).map_err(io)
}
