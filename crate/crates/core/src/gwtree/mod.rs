//! Galton-Watson trees: generating-function analytics, lazily grown trees,
//! biased and randomly biased walks on them, and trap diagnostics.
//!
//! Analytics objects ([`OffspringLaw`], [`GwAnalytics`]) are immutable and
//! shareable. A [`TreeArena`] is owned by one replica and grows as the walk
//! explores it.

mod aidekon;
mod analytics;
mod arena;
mod law;
mod traps;
mod walk;

pub use aidekon::{aidekon_speed, escape_probability, AidekonConfig, AidekonEstimate};
pub use analytics::{
    alpha_tree, critical_bias, extinction_prob, harris_split, leafless_sigma2, pipe_alpha, random_bias_alpha,
    Extinction, GwAnalytics, HarrisSplit, PipeAlpha, RandomBiasAlpha,
};
pub use arena::{gen_tree, BudSampler, NodeId, NodeKind, TreeArena, TreeMode, TreeSpec, NODE_CAP, ROOT};
pub use law::{AtomLaw, BiasSpec, OffspringLaw};
pub use traps::{trap_height_direct, trap_height_tail, TrapTailPoint};
pub use walk::{STEP_CAP as TREE_STEP_CAP, 
    hitting_exponent_tree, lattice_diagnostic, random_bias_stable_ks, simulate_tree_walk, speed_estimate,
    transition_weights, LatticeDiagnostic, SpeedEstimate, StableFit, TreeHittingExponent, TreeWalkBudget, TreeWalkRecord,
};

use thiserror::Error;

use crate::estat::StatError;
use crate::randkit::RandError;

#[derive(Debug, Error)]
pub enum GwError {
    #[error("offspring pmf is empty")]
    EmptyPmf,
    #[error("pmf entry {index} is {value}; entries must be finite and non-negative")]
    BadMass { index: usize, value: f64 },
    #[error("pmf sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("law is not supercritical (mean {0})")]
    NotSupercritical(f64),
    #[error("operation needs p0 > 0")]
    Leafless,
    #[error("operation needs p0 = 0")]
    HasLeaves,
    #[error("bias {0} out of range")]
    Bias(f64),
    #[error("atom law: {0}")]
    AtomLaw(&'static str),
    #[error("tree exceeded the node cap of {0}")]
    NodeCap(usize),
    #[error("bad argument: {0}")]
    Argument(&'static str),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Rand(#[from] RandError),
}

#[cfg(test)]
mod tests;
