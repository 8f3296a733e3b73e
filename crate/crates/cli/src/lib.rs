//! IO, command-line front end and parallel runners for `gpd-elcr-core`.

pub mod cli;
pub mod error;
pub mod input;
pub mod output;
pub mod parallel;

pub use cli::run;
pub use error::{exit, CliError};
