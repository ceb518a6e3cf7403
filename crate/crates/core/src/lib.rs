//! Batch-dynamic graph sketching algorithms executed on a simulated MPC cost model.
//!
//! The crate is `no_std` and only needs `alloc`. Every algorithm takes its
//! randomness from an explicit seed, so identical inputs reproduce identical
//! state and identical round accounting.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod connectivity;
pub mod euler_tour;
pub mod field;
pub mod graph;
pub mod l0_sketch;
pub mod matching;
pub mod mpc_engine;
pub mod msf_apps;
pub mod oracle;

pub use graph::{Edge, EdgeLedger, Update, UpdateBatch, UpdateKind, Vertex};
