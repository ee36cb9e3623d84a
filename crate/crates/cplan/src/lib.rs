//! HTTP service and command line front end for the control-plan engine.
//!
//! - [`service`]: the operations, shared by HTTP, CLI and replay
//! - [`http`]: axum router
//! - [`replay`]: scripted session runs
//! - [`cli`]: argument parsing and subcommands

pub mod cli;
pub mod error;
pub mod http;
pub mod replay;
pub mod service;
