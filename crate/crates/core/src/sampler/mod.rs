//! Gibbs sampler for the hierarchical panel model.

mod chain;
mod gibbs;
pub mod gig;
pub mod linalg;
mod state;
mod store;

pub use chain::{chain_header, chain_rng, run_chain, run_chain_into};
pub use gibbs::{CellStats, GibbsSampler, VARIANCE_FLOOR};
pub use gig::{Gig, InverseGamma};
pub use state::{EffectCovariances, EffectScales, ParameterState};
pub use store::{DrawHeader, DrawSink, DrawStore, DrawWriter, STORE_VERSION};
