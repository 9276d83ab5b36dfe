use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use spades_core::report::format_float;

use crate::CliError;

/// CSV table built in memory so that runs can be compared byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    columns: usize,
    text: String,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    /// Appends a row of already formatted cells.
    pub fn push_raw(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch in {}", self.name);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn push(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| format_float(*v)).collect();
        self.push_raw(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn rows(&self) -> usize {
        self.text.lines().count() - 1
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub tables: Vec<CsvTable>,
    pub summary: Vec<(String, String)>,
    pub plots: Vec<(String, String)>,
    pub effective_config: String,
}

impl Report {
    pub fn new(scenario: &str) -> Self {
        Report {
            scenario: scenario.to_string(),
            ..Report::default()
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.note(key, format_float(v));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn table(&self, name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k:width$} = {v}");
        }
        out
    }

    /// Writes CSVs, the summary, the effective config and, if asked, SVGs.
    pub fn write(&self, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, text: &str| -> Result<(), CliError> {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        for t in &self.tables {
            put(&format!("{}.csv", t.name), t.as_str())?;
        }
        put(&format!("{}_summary.txt", self.scenario), &self.summary_text())?;
        put(&format!("{}_effective.toml", self.scenario), &self.effective_config)?;
        if svg {
            for (name, text) in &self.plots {
                put(&format!("{name}.svg"), text)?;
            }
        }
        Ok(written)
    }
}
