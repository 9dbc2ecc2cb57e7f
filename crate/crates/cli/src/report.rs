//! Report assembly and output in JSON or TSV.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

pub const SCHEMA: u64 = 1;
/// Vectors longer than this go to sidecar files.
pub const SIDECAR_LEN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

/// Ordered key-value report. Vectors are added through [`Report::vector`] so
/// that long ones can be moved to sidecar files when written.
pub struct Report {
    fields: Map<String, Value>,
    vectors: Vec<(String, Vec<f64>)>,
}

impl Report {
    pub fn new(command: &str, seed: u64, threads: Option<usize>, timestamp: bool) -> Self {
        let mut fields = Map::new();
        fields.insert("schema".into(), json!(SCHEMA));
        fields.insert("command".into(), json!(command));
        fields.insert(
            "version".into(),
            json!({ "perron-cli": env!("CARGO_PKG_VERSION"), "perron-core": perron_core::VERSION }),
        );
        fields.insert("seed".into(), json!(seed));
        fields.insert("threads".into(), json!(threads.unwrap_or(1)));
        if timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            fields.insert("timestamp".into(), json!(secs));
        }
        Self {
            fields,
            vectors: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    pub fn vector(&mut self, key: &str, values: &[f64]) {
        // placeholder keeps the key order stable
        self.fields.insert(key.into(), Value::Null);
        self.vectors.push((key.into(), values.to_vec()));
    }

    /// Writes the report to `output` (or stdout) and any sidecar files next to it.
    pub fn emit(mut self, format: Format, output: Option<&Path>, command: &str) -> io::Result<()> {
        for (key, values) in std::mem::take(&mut self.vectors) {
            let value = if values.len() > SIDECAR_LEN {
                let path = sidecar_path(output, command, &key);
                let mut text = String::with_capacity(values.len() * 24);
                for v in &values {
                    text.push_str(&format!("{v:e}\n"));
                }
                fs::write(&path, text)?;
                json!({ "path": path.display().to_string(), "len": values.len() })
            } else {
                json!(values)
            };
            self.fields.insert(key, value);
        }
        let text = match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&Value::Object(self.fields)).map_err(io::Error::other)?;
                s.push('\n');
                s
            }
            Format::Tsv => {
                let mut rows = Vec::new();
                flatten("", &Value::Object(self.fields), &mut rows);
                rows.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
            }
        };
        match output {
            Some(path) => fs::write(path, text),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()
            }
        }
    }
}

fn sidecar_path(output: Option<&Path>, command: &str, key: &str) -> PathBuf {
    match output {
        Some(path) => {
            let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            name.push(format!(".{key}.txt"));
            path.with_file_name(name)
        }
        None => PathBuf::from(format!("{command}.{key}.txt")),
    }
}

/// Dotted keys for nested objects; arrays of scalars become comma-separated cells.
fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, rows);
            }
        }
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let cells: Vec<String> = items.iter().map(scalar).collect();
            rows.push((prefix.to_string(), cells.join(",")));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
