//! Evolutionary game theory engine.
//!
//! Three focal games (Hawk-Dove, the iterated Prisoner's Dilemma and the War
//! of Attrition) together with the machinery to study them:
//!
//! * [`game`] builds and evaluates normal-form payoff bimatrices.
//! * [`strategies`] executes IPD strategies and analyses memory-one play.
//! * [`dynamics`] integrates single- and two-population replicator dynamics.
//! * [`equilibria`] checks Nash equilibria and evolutionarily stable strategies.
//! * [`stochastic`] runs Moran processes and War-of-Attrition contests.
//! * [`tournament`] plays matches, tournaments and the coevolution presets.
//!
//! Everything random is driven by explicit 64-bit seeds; see [`rng`].

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod game;
mod linalg;
pub mod rng;
pub mod stochastic;
pub mod strategies;
pub mod tournament;

pub use error::{Error, Result};
pub use game::{Matrix, MixedStrategy, PayoffBimatrix};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance used wherever a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;
