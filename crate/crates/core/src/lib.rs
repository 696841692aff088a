//! Structure-only link analysis for ontologies.
//!
//! The pipeline runs N-Triples input through [`triples`] into a
//! [`projection::HeteroGraph`], collapses it to an undirected
//! [`graph::SimpleGraph`], and then scores node pairs with the proximity
//! indices in [`graphcore`] or the embedders in [`embed`]. [`eval`] holds
//! the five-fold link-prediction benchmark, [`recommend`] generates
//! missing/redundant edge candidates and the temporal benchmark, and
//! [`explain`] interprets SNoRe-based recommendations.

pub mod embed;
pub mod error;
pub mod eval;
pub mod explain;
pub mod fixtures;
pub mod graph;
pub mod graph_io;
pub mod graphcore;
pub mod projection;
pub mod recommend;
pub mod rng;
pub mod triples;
pub mod vocab;

pub use error::{Error, Result};
pub use graph::{HeteroGraph, NodeMap, SimpleGraph};
pub use triples::{Term, TermKind, Triple, TripleStore};
