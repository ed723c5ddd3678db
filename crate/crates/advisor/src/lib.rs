//! Luck advisor for Fighting Fantasy combat: table cache, live sessions,
//! HTTP API and command line.

pub mod advice;
pub mod api;
pub mod cache;
pub mod cli;
pub mod session;

/// Version of every JSON document this crate reads or writes.
pub const SCHEMA_VERSION: u32 = 1;
