use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kernelscope::Embedding;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::args::Common;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] kernelscope::Error),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let (kind, path) = match self {
            CliError::Core(e) => (e.kind(), e.path().map(Path::to_path_buf)),
            CliError::Usage(_) => ("usage", None),
            CliError::Output { path, .. } => ("output", Some(path.clone())),
        };
        let mut obj = serde_json::json!({
            "error": kind,
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let Some(p) = path {
            obj["path"] = Value::String(p.display().to_string());
        }
        obj
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Everything needed to rerun a command; embedded verbatim in its report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub dataset: Option<String>,
    pub embedding: Embedding,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub kernels: Vec<String>,
    pub lambda_grid: Vec<f64>,
    pub gamma_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub threads: usize,
    pub out: String,
    pub options: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn new(command: &str, common: &Common, n: usize, n_points: usize, kernels: Vec<String>, lambda_grid: Vec<f64>) -> Self {
        Self {
            command: command.to_string(),
            dataset: common.dataset.as_ref().map(|p| p.display().to_string()),
            embedding: common.embedding,
            n,
            n_points,
            kernels,
            lambda_grid,
            gamma_grid: common.gamma_grid.clone(),
            seed: common.seed,
            threads: common.threads,
            out: common.out.display().to_string(),
            options: BTreeMap::new(),
        }
    }

    pub fn option(mut self, key: &str, value: impl Serialize) -> Self {
        self.options
            .insert(key.to_string(), serde_json::to_value(value).expect("option serializes"));
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n == 0 {
            return Err(usage("--n must be at least 1"));
        }
        if self.n_points < 2 {
            return Err(usage("--N must be at least 2"));
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(usage("--lambda-grid values must be finite and non-negative"));
        }
        if let Some(g) = &self.gamma_grid {
            if g.is_empty() || g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(usage("--gamma-grid values must be finite and positive"));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    seeds: &'a BTreeMap<String, u64>,
    result: &'a T,
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.header.join(",") + "\n";
        for r in &self.rows {
            out += &r.join(",");
            out.push('\n');
        }
        out
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Output {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `report.json` and `report.csv` into the output directory.
pub fn emit<T: Serialize>(config: &RunConfig, seeds: &BTreeMap<String, u64>, result: &T, table: &Table) -> CliResult<()> {
    let out = PathBuf::from(&config.out);
    let json = serde_json::to_string_pretty(&Envelope { config, seeds, result }).expect("report serializes");
    write_file(&out.join("report.json"), json + "\n")?;
    write_file(&out.join("report.csv"), table.to_csv())
}

/// Shortest round-trip form; non-finite values print as `NaN`/`inf`/`-inf`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float serializes")
    } else {
        format!("{v}")
    }
}
