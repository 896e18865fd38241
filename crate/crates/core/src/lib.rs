//! Thompson-sampling algorithms for cascading-bandit learning to rank.
//!
//! This crate is `no_std` (it needs `alloc`) and carries everything that is
//! pure computation: the cascade click model, conjugate and Laplace posterior
//! machinery, the ranking policies and the synthetic instance generators.
//! File formats, the experiment harness and the command line live in the
//! `cascade-bandits` crate.
//!
//! All randomness is threaded through caller-supplied [`rand::RngCore`]
//! handles, so every simulation is reproducible from its seeds.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cascade;
pub mod envgen;
pub mod error;
pub mod features;
pub mod glm;
pub mod linalg;
pub mod policies;
pub mod posterior;

pub use cascade::{
    best_action, expected_cascade_reward, linear_step_regret, simulate_cascade_round,
    step_regret, Feedback, RankedAction, RegretRecord,
};
pub use envgen::{
    env_step, misspecified_prior, sample_beta_instances, sample_linear_instance,
    sample_logistic_instance, BanditInstance, FeedbackMode, InstanceKind, PriorSpec,
};
pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use glm::{irls_solve, kappa_min, sigmoid, sigmoid_derivative, GlmDataset, IrlsOptions, LinkFunction};
pub use policies::Policy;
