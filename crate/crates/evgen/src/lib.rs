//! Command-line front end and HTTP service over `evgen-core`.

pub mod api;
pub mod cli;
