//! File formats, built-in scenarios, CSV reports, and the plumbing behind
//! the `symcoord` command-line tool.

pub mod format;
pub mod report;
pub mod scenario;
