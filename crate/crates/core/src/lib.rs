//! Classical and quantum models of document retrieval as a particle-beam
//! measurement.
//!
//! Documents ("docuscles") leave an emitter in a state, pass through testing
//! appliances that check relevance `R` or an expansion term `X`, and are
//! counted. The crate evaluates the resulting probabilities exactly
//! ([`probability`], [`quantum`]), simulates finite beams ([`beam`]), and runs
//! randomized studies over many instances ([`experiments`]).

pub mod beam;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod probability;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use probability::{BoostReport, ClassicalState, Event};
pub use quantum::{DensityMatrix, Projector, QBoostReport};
