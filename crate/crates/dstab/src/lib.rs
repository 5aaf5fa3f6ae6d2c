//! Front end of the δ-complete stability analyzer: description files, a
//! thread pool for the solver and the command line.

pub mod cli;
pub mod dsl;
pub mod exec;
pub mod report;
