//! Structure-only node embedders: the SNoRe sparse symbolic embedding,
//! a Laplacian spectral embedding, and TransE. Each one has a
//! [`Scorer`](crate::graphcore::Scorer) wrapper.

pub mod io;
pub mod snore;
pub mod spectral;
pub mod transe;

pub use snore::{snore_fit, snore_score, SnoreParams, SnoreScorer, SparseEmbedding};
pub use spectral::{spectral_fit, SpectralEmbedding, SpectralParams, SpectralScorer};
pub use transe::{transe_fit, transe_score, KGEmbedding, TransEParams, TransEScorer};
