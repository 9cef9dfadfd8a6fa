//! Experiment plumbing behind the command-line tool: matrix files, test
//! matrices, trace files and the individual experiments.

mod convdiff;
mod experiments;
mod mm;
mod trace;

pub use convdiff::generate_convdiff;
pub use experiments::{
    cmd_bound, cmd_sharp, cmd_solve, cmd_stagnate, cmd_tables, table1_rows, table2_rows, BoundKind, ExperimentConfig,
    ExperimentReport, Table1Row, Table2Row,
};
pub use mm::{read_matrix_market, read_matrix_market_from, write_matrix_market};
pub use trace::{read_trace_dat, trace_record, write_trace_dat, TraceRecord, TraceRow};

use crate::adversarial::AdversarialError;
use crate::solver::SolverError;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl HarnessError {
    /// 1 usage, 2 numerical failure, 3 I/O (including malformed input
    /// files).
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Numerical(_) => 2,
            HarnessError::Parse { .. } | HarnessError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

impl From<AdversarialError> for HarnessError {
    fn from(e: AdversarialError) -> Self {
        match e {
            AdversarialError::InvalidMu(_)
            | AdversarialError::DimensionTooSmall { .. }
            | AdversarialError::InvalidParameter(_)
            | AdversarialError::ZeroRhs => HarnessError::Config(e.to_string()),
            AdversarialError::Io(source) => HarnessError::Io { path: PathBuf::new(), source },
            other => HarnessError::Numerical(other.to_string()),
        }
    }
}

/// Writes through a temporary file in the destination directory and
/// renames it into place.
pub(crate) fn atomic_write(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let run = || -> std::io::Result<()> {
        let tmp = tempfile::NamedTempFile::new_in(dir)?;
        {
            let mut w = std::io::BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    };
    run().map_err(|e| HarnessError::io(path, e))
}
