//! Replicable reinforcement learning on tabular episodic MDPs.
//!
//! The exact oracles in [`mdp`] are generic over [`Scalar`] so they run in
//! `f32`, `f64` or exact rationals; the randomized algorithms work in `f64`.
//! Steps and tiers follow the conventions documented in [`mdp`].

pub mod backward;
pub mod bandit;
pub mod error;
pub mod estimator;
pub mod explore;
pub mod lower;
pub mod mdp;
pub mod primitives;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use seed::{SharedSeed, Stream};

/// Double-precision MDP used by the algorithms and the harness.
pub type Mdp = mdp::TabularMdp<f64>;
/// Single-precision MDP.
pub type Mdp32 = mdp::TabularMdp<f32>;
/// MDP over exact rationals for identity checks.
pub type ExactMdp = mdp::TabularMdp<num::BigRational>;
