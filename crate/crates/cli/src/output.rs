//! File emission with a metadata block.
//!
//! CSV files open with `# `-prefixed lines (tool, subcommand, seed, then the
//! sorted config echo). JSON files carry the same information under a
//! top-level `metadata` key. Nothing time- or host-dependent is written, so
//! reruns reproduce files byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

pub const TOOL: &str = concat!("isac-eval ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct Metadata<'a> {
    pub subcommand: &'a str,
    pub seed: u64,
    pub echo: &'a BTreeMap<String, String>,
}

impl Metadata<'_> {
    pub fn csv_header(&self) -> String {
        let mut s = format!("# tool: {TOOL}\n# subcommand: {}\n# seed: {}\n", self.subcommand, self.seed);
        for (k, v) in self.echo {
            s.push_str(&format!("# config: {k} = {v}\n"));
        }
        s
    }

    pub fn json(&self) -> Value {
        let config: Map<String, Value> = self.echo.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({
            "tool": TOOL,
            "subcommand": self.subcommand,
            "seed": self.seed,
            "config": config,
        })
    }
}

/// Writes `body` (CSV with its own column header) after the metadata block.
pub fn write_csv(dir: &Path, name: &str, meta: &Metadata, body: &[u8]) -> io::Result<PathBuf> {
    let mut bytes = meta.csv_header().into_bytes();
    bytes.extend_from_slice(body);
    write_file(dir, name, &bytes)
}

/// Writes a JSON object with `metadata` first, then the fields of `payload`.
pub fn write_json(dir: &Path, name: &str, meta: &Metadata, payload: Value) -> io::Result<PathBuf> {
    let mut obj = Map::new();
    obj.insert("metadata".into(), meta.json());
    match payload {
        Value::Object(fields) => obj.extend(fields),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(io::Error::other)?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

/// Drops metadata lines, leaving plain CSV.
pub fn strip_comments(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}
