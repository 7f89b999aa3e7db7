//! Problem files, reports, plots and the command implementations behind
//! the `branchidx` binary.

pub mod commands;
pub mod plot;
pub mod problem;
pub mod report;
