pub mod cli;
pub mod config;
pub mod server;
pub mod service;

pub use cli::{run_cli, run_cli_with};
