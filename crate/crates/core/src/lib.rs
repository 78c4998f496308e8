//! Core logic for building and evaluating Arabic function-calling corpora.
//!
//! Everything in this crate is pure: no files, no clocks, no global state.
//! Randomized operations take an explicit seed and derive per-sample streams
//! from it, so results never depend on thread scheduling or input order
//! beyond what the algorithms themselves define. The crate builds without
//! the standard library (`default-features = false`) as long as an allocator
//! is present; the `std` feature only switches dependency features and adds
//! `std::error::Error` impls through `thiserror`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod audit;
pub mod hashing;
pub mod metrics;
pub mod parser;
pub mod sampler;
pub mod schema;
pub mod serializer;
pub mod splitter;
