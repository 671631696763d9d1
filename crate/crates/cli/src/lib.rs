//! Command-line front end and HTTP API of the recipe pipeline.

pub mod api;
pub mod commands;
