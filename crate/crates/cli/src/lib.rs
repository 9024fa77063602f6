//! Command-line layer for mixpower: run-spec loading, the `power`,
//! `curve`, `snr`, `scale` and `sample` commands, and summary rendering.

pub mod commands;
pub mod report;
pub mod runspec;
