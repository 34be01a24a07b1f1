//! Library surface of the experiment driver, exposed so integration tests
//! can run commands in-process.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

/// Errors split by exit code: configuration problems exit with 1, runtime
/// failures with 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<spl_core::Error> for CliError {
    fn from(e: spl_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Cap worker parallelism with `SPL_THREADS`; defaults to the hardware
/// concurrency. Safe to call more than once.
pub fn init_parallelism() {
    if let Ok(v) = std::env::var("SPL_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
