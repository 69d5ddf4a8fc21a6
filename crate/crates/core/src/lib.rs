//! Game-theoretic attribution and interactions for set functions and small
//! neural networks.
//!
//! * [`game`]: players, coalitions, synthetic and network-backed games.
//! * [`exact`]: enumeration of Shapley/Banzhaf values, pairwise and
//!   multi-order interactions, pattern rewards.
//! * [`sampling`]: Monte-Carlo counterparts and the instability diagnostic.
//! * [`nn`]: the network kernel.
//! * [`loss`]: the interaction loss used as a training regularizer.
//! * [`experiments`]: experiment runners behind the command-line tool.
//!
//! Every random draw uses ChaCha8 (see [`rng`]), so results are reproducible
//! across platforms.

pub mod error;
pub mod estimate;
pub mod exact;
pub mod experiments;
pub mod game;
pub mod loss;
pub mod nn;
pub mod rng;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
