//! IO, configuration and stage orchestration around the core library.
//!
//! The binary in `main.rs` is a thin argument-parsing shell over this crate;
//! everything with behavior lives here so tests can drive stages directly.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod stages;
