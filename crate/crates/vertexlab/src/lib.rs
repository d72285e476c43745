//! Batch driver for the `vertexlab-core` checks: suites with JSON/CSV
//! reports, spectrum and weight tables, and lattice files.

pub mod config;
pub mod error;
pub mod lattice_io;
pub mod report;
pub mod suites;
pub mod tables;

pub use config::{Format, SuiteConfig, SUITES};
pub use error::{CliError, CliResult};
pub use report::{CheckRow, SuiteReport, Summary};
pub use suites::run;
pub use tables::{emit_tables, TableKind, TableParams};
