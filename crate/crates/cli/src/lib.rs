//! Command implementations and file formats for the conditional scaling
//! command line tool. The binary in `main.rs` is a thin argument-parsing
//! shell around [`commands`].

pub mod commands;
pub mod error;
pub mod io;
pub mod result;

pub use error::CliError;
