//! The `cmca` command line: load, recode, split, fit and export.

pub mod artifacts;
pub mod export;
pub mod plot;
pub mod run;

pub use run::{main_with, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
