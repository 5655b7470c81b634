//! Scenario-file front end for `egt-core`: strict parsing, dispatch by kind,
//! CSV/JSON artifacts.

pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::CliError;

/// Environment variable capping worker threads; unset means one thread.
pub const THREADS_ENV: &str = "EGT_THREADS";

/// Worker count from [`THREADS_ENV`].
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Invalid(vec![format!("{THREADS_ENV}: expected a positive integer, got {s:?}")])),
        },
    }
}
