//! Batch front end: operator-description files in, JSON reports and
//! plot-ready CSV out.

pub mod error;
pub mod run;
pub mod spec_file;

pub use error::{exit, CliError, Diagnostic};
pub use run::{run, Flags, ReportFile};
pub use spec_file::{parse_str, read, OperatorSpecFile};
