//! Shared-randomness building blocks.

mod corr;
mod divergence;
mod heavy;
mod rounding;

pub use corr::{
    corr_samp, corr_samp_index, correlated_index, joint_corr_samp_indices, max_proposals,
    prod_corr_samp, prod_corr_samp_indices, BernoulliProduct, DiscreteDistribution,
    DEFAULT_TRUNCATION,
};
pub use divergence::{
    bernoulli_product_tv, bernoulli_product_tv_bound, divergences, total_variation, Divergences,
};
pub use heavy::{rep_heavy_hitters, HeavyHitterParams, HeavyHitters};
pub use rounding::{coord_round, coord_round_with_shifts, rand_round, RandomizedRounding};
