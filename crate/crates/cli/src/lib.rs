//! Library half of the `polaron` binary: config parsing, output writers and the
//! experiment drivers.

pub mod commands;
pub mod config;
pub mod output;
