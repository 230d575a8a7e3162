//! Filesystem, reporting and command-line layer over `evsup-core`.

pub mod checkpoint;
pub mod cli;
pub mod compare;
pub mod dataset;
pub mod error;
pub mod fsutil;
pub mod maps;
pub mod reports;
pub mod run;

pub use error::{AppError, AppResult};
