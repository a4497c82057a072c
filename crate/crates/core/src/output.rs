//! Deterministic CSV and JSON rendering of run results.
//!
//! A [`Report`] holds one or more named tables of rows. JSON output is a
//! single document that also embeds the effective config; CSV output is one
//! file per table, each row carrying the config digest and seed.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Config;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub config_digest: String,
    pub config: Config,
    pub tables: Vec<(String, Vec<Value>)>,
}

impl Report {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.into(),
            seed: config.seed,
            config_digest: config.digest(),
            config: config.clone(),
            tables: Vec::new(),
        }
    }

    /// Append a table; every row must serialize to a JSON object.
    pub fn table<T: Serialize>(mut self, name: &str, rows: &[T]) -> Result<Self> {
        let rows = rows.iter().map(serde_json::to_value).collect::<std::result::Result<Vec<_>, _>>()?;
        if rows.iter().any(|r| !r.is_object()) {
            return Err(Error::Numeric(format!("table {name} has non-object rows")));
        }
        self.tables.push((name.into(), rows));
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut doc = Map::new();
        doc.insert("command".into(), self.command.clone().into());
        doc.insert("seed".into(), self.seed.into());
        doc.insert("config_digest".into(), self.config_digest.clone().into());
        doc.insert("config".into(), serde_json::to_value(&self.config)?);
        for (name, rows) in &self.tables {
            doc.insert(name.clone(), Value::Array(rows.clone()));
        }
        Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
    }

    /// CSV text of one table.
    pub fn to_csv(&self, index: usize) -> Result<String> {
        let (_, rows) = &self.tables[index];
        let mut header: Vec<String> = Vec::new();
        for row in rows {
            for key in row.as_object().expect("object rows").keys() {
                if !header.contains(key) {
                    header.push(key.clone());
                }
            }
        }
        for extra in ["seed", "config_digest"] {
            if !header.iter().any(|h| h == extra) {
                header.push(extra.into());
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).map_err(csv_err)?;
        for row in rows {
            let obj = row.as_object().expect("object rows");
            let record: Vec<String> = header
                .iter()
                .map(|h| match (obj.get(h), h.as_str()) {
                    (Some(v), _) => cell(v),
                    (None, "seed") => self.seed.to_string(),
                    (None, "config_digest") => self.config_digest.clone(),
                    (None, _) => String::new(),
                })
                .collect();
            w.write_record(&record).map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?)
            .map_err(|e| Error::Numeric(e.to_string()))
    }

    /// Render to stdout-ready text.
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => {
                let parts = (0..self.tables.len()).map(|i| self.to_csv(i)).collect::<Result<Vec<_>>>()?;
                Ok(parts.join("\n"))
            }
        }
    }

    /// Write into `dir`: `<command>.json`, or one `<table>.csv` per table
    /// plus `config.toml`. Existing files are only replaced with `force`.
    pub fn write(&self, dir: &Path, format: Format, force: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files: Vec<(PathBuf, String)> = Vec::new();
        match format {
            Format::Json => files.push((dir.join(format!("{}.json", self.command)), self.to_json()?)),
            Format::Csv => {
                for (i, (name, _)) in self.tables.iter().enumerate() {
                    files.push((dir.join(format!("{name}.csv")), self.to_csv(i)?));
                }
                files.push((dir.join("config.toml"), self.config.to_toml()));
            }
        }
        for (path, _) in &files {
            refuse_overwrite(path, force)?;
        }
        for (path, text) in &files {
            std::fs::write(path, text)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

/// Error unless `path` is free or `force` is set.
pub fn refuse_overwrite(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Config(format!("{} exists; use --force to overwrite", path.display())));
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numeric(e.to_string())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        other => other.to_string(),
    }
}
