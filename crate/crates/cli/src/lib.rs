//! Command-line front end for the `mspca` detector: score a series, evaluate a
//! benchmark directory, benchmark op counts, and generate synthetic series.

pub mod args;
pub mod bench;
pub mod commands;
pub mod config;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use args::{BenchArgs, Cli, Command, CommonArgs, SynthArgs};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] mspca::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit code: 1 usage/config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        use mspca::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(E::Config(_)) => 1,
            CliError::Core(E::Numeric { .. } | E::State(_) | E::DimensionMismatch { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

/// Write a file through a temporary sibling and rename it into place, so a
/// failure never leaves a partial file behind.
pub fn write_atomic<F>(path: &Path, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let ctx = || format!("writing {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(ctx(), e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(|e| CliError::io(ctx(), e))?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::io(ctx(), e.error))?;
    Ok(())
}

/// Write to `path` atomically, or to stdout when no path is given.
pub fn write_output<F>(path: Option<&Path>, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    match path {
        Some(p) => write_atomic(p, fill),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush().map_err(|e| CliError::io("writing stdout", e))
        }
    }
}

/// Dispatch a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Score(a) => commands::cmd_score(&RunConfig::resolve(&a)?),
        Command::Eval(a) => commands::cmd_eval(&RunConfig::resolve(&a)?),
        Command::Bench(b) => bench::cmd_bench(&RunConfig::resolve(&b.common)?, &b),
        Command::Synth(s) => commands::cmd_synth(&s.spec, &s.out, s.seed),
    }
}
