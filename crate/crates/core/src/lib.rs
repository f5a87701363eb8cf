//! Extended formulations of (k,l)-sparsity matroid base polytopes built from
//! randomized two-party communication protocols.
//!
//! The pipeline runs bottom-up:
//!
//! * [`graph`]: simple graphs, vertex/edge subsets and the JSON ingestion format.
//! * [`sparsity`]: sparsity/tightness oracles (pebble game and brute force) and
//!   basis enumeration.
//! * [`orientation`]: orientations with prescribed in-degrees.
//! * [`protocol`]: the two protocol variants behind the [`protocol::Protocol`]
//!   trait, with exact expectation and Monte Carlo estimation.
//! * [`slack`]: the slack matrix and the protocol-induced factorization `S = T·U`.
//! * [`formulation`]: the lifted polytope, its `.ine` emission and verification.

pub mod error;
pub mod fixtures;
pub mod formulation;
pub mod graph;
pub mod orientation;
pub mod protocol;
pub mod rational;
pub mod slack;
pub mod sparsity;

pub use error::{Error, Result};
pub use graph::{EdgeSet, Graph, Limits, SparsityParams, VertexSet};
pub use protocol::{Protocol, Variant, VariantChoice};
