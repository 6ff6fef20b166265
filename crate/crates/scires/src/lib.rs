//! Batch CLI and HTTP session service around `scires-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod pipeline;
pub mod service;
