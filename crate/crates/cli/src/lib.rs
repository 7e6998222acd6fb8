//! Shared pieces of the `rieszcap` command-line tool: fixture generators,
//! the report envelope and exit-code mapping.

pub mod fixtures;
pub mod report;

pub use report::{exit_code, Report, EXIT_DOMAIN, EXIT_OK, EXIT_SOLVER, EXIT_VERDICT};
