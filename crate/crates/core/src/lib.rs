//! Trace-driven laboratory for graph-aware last-level cache management.
//!
//! The pipeline is: build a CSR graph ([`graph`]), optionally move hot
//! vertices to the front of the ID space ([`reorder`]), generate the memory
//! accesses of a vertex-centric kernel ([`trace`]), and replay them through
//! an L1-filtered LLC under competing replacement policies ([`cachesim`]).
//! [`harness`] strings the stages together and writes CSV tables.

pub mod cachesim;
pub mod error;
pub mod graph;
pub mod harness;
pub mod reorder;
pub mod trace;

pub use error::{Error, Result};
