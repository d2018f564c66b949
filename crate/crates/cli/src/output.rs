use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "logkdv";

/// Named pass/fail verdict written to the summary.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), pass: value <= limit, value, limit }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            limit: 1.0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub config: &'a C,
    pub results: R,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        let path = self.root.join(name);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.serialize(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.into());
        Ok(())
    }

    /// Writes `<subcommand>.json` and returns its path.
    pub fn summary<C: Serialize, R: Serialize>(
        mut self,
        subcommand: &'static str,
        seed: u64,
        config: &C,
        results: R,
        checks: Vec<Check>,
    ) -> Result<PathBuf, CliError> {
        let name = format!("{subcommand}.json");
        self.written.push(name.clone());
        let s = Summary {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            config,
            results,
            checks,
            files: self.written,
        };
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(&s).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
