//! Command-line driver and HTTP service for `bidgame`.

pub mod commands;
pub mod service;
