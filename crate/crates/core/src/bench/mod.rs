//! Benchmark harness: configuration, datasets, grid runs and tables.

pub mod config;
pub mod data;
pub mod run;
pub mod synth;
pub mod table;


use std::path::{Path, PathBuf};

pub use config::{config_reference, load_config, parse_config, BenchConfig, DataSource, Problem, ProblemKind};
pub use data::{format_csv_matrix, load_csv_matrix, parse_csv_matrix, write_csv_matrix, CsvMatrix, DEFAULT_MISSING_TOKEN};
pub use run::{
    build_model, build_target, data_seed, execute_run, load_dataset, read_records, run_experiment,
    run_experiment_with, run_seed, write_records, RunContext, RunMetrics, RunOptions, RunRecord, RunSummary,
    RECORD_HEADER,
};
pub use synth::{synth_data, uniform_frame, Dataset, SynthSpec, Synthetic, Truth};
pub use table::{emit_table, table_rows, Metric, TableFormat, TableRow, MISSING_CELL};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error{}{}: {msg}", path.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default(), line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data {
        path: Option<PathBuf>,
        line: Option<u64>,
        msg: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("records file error: {0}")]
    Records(String),
}

impl BenchError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn data(path: Option<&Path>, line: Option<u64>, msg: String) -> Self {
        BenchError::Data {
            path: path.map(Path::to_path_buf),
            line,
            msg,
        }
    }

    pub(crate) fn with_path(self, p: &Path) -> Self {
        match self {
            BenchError::Data { path: None, line, msg } => BenchError::Data {
                path: Some(p.to_path_buf()),
                line,
                msg,
            },
            other => other,
        }
    }

    /// Process exit code: 1 for configuration or input data problems,
    /// 3 for file-system failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Data { .. } => 1,
            BenchError::Io { .. } | BenchError::Records(_) => 3,
        }
    }
}
