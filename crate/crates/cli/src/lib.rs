//! `hopscatter` command line: dataset generation, training, tracking,
//! evaluation, the ablation grid, gradient checks and reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data or configuration,
//! 3 failure while computing.

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub mod args;
mod commands;
pub mod smoke;

pub use args::Cli;
pub use smoke::{pipeline_smoke, SmokeOptions, SmokeSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Caps worker threads when parallelism is compiled in.
pub const THREADS_ENV: &str = "HOPSCATTER_THREADS";

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(stage: &'static str, code: i32, message: impl Into<String>) -> Self {
        CliError {
            stage,
            code,
            message: message.into(),
        }
    }

    pub fn usage(stage: &'static str, message: impl Into<String>) -> Self {
        Self::new(stage, EXIT_USAGE, message)
    }

    pub fn data(stage: &'static str, message: impl Into<String>) -> Self {
        Self::new(stage, EXIT_DATA, message)
    }

    pub fn from_core(stage: &'static str, e: hopscatter::Error) -> Self {
        let code = if e.is_data_error() {
            EXIT_DATA
        } else {
            EXIT_RUNTIME
        };
        Self::new(stage, code, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

/// Tags core errors with a stage name.
pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for hopscatter::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::data(
            "environment",
            format!("{THREADS_ENV} must be a positive integer, got `{raw}`"),
        )
    })?;
    #[cfg(feature = "parallel")]
    {
        // a pool built earlier in the same process keeps its size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    log::debug!("{THREADS_ENV}={n} ignored: built without parallelism");
    Ok(())
}

/// Parses `argv` (program name first), runs the verb and returns the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match configure_threads().and_then(|()| commands::dispatch(cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
