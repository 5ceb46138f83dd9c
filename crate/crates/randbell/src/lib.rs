//! Std companion to `randbell-core`: a rayon executor for trial runs,
//! CSV/JSON output with reproducible run metadata, the invariant suite and
//! the `randbell` command line.

#![forbid(unsafe_code)]

pub mod check;
pub mod cli;
pub mod output;
pub mod parallel;
pub mod run;

pub use randbell_core;
