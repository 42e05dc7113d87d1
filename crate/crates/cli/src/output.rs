use std::fs;
use std::path::{Path, PathBuf};

use qcirc::spectrum::format_sig;
use serde::Serialize;
use serde_json::Value;

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Output directory that records every file it writes for the manifest.
pub struct OutDir {
    dir: PathBuf,
    command: String,
    unit_mode: &'static str,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    unit_mode: &'a str,
    files: &'a [String],
}

impl OutDir {
    pub fn create(dir: &Path, command: &str, paper_units: bool) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            command: command.into(),
            unit_mode: if paper_units { "paper" } else { "exact" },
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.into());
        Ok(())
    }

    /// Pretty JSON with floats cut to 12 significant digits.
    pub fn write_report<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let v = serde_json::to_value(value).map_err(|e| CliError::numerical(e.to_string()))?;
        self.write_json(name, &round_json(v))
    }

    /// Pretty JSON at full precision, for files meant to be read back.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.files.sort();
        let m = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: "qcirc",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            unit_mode: self.unit_mode,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| CliError::numerical(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            serde_json::Number::from_f64(round_sig(n.as_f64().unwrap_or(0.0))).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// CSV table with a fixed header; whole numbers print as integers, the rest
/// with 12 significant digits.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[String]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { text }
    }

    pub fn row(&mut self, cells: &[f64]) {
        let cells: Vec<String> = cells
            .iter()
            .map(|&x| if x.fract() == 0.0 && x.abs() < 1e15 { format!("{}", x as i64) } else { format_sig(x) })
            .collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
