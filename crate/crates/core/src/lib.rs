//! Monte Carlo laboratory for random walks in random environments.
//!
//! The crate is organised by model family:
//!
//! * [`randkit`]: seeded streams, heavy-tailed and stable samplers, the
//!   generalized arcsine law and domain-of-attraction normalizing sequences.
//! * [`estat`]: estimators shared by every experiment (Hill, KS, log-log
//!   regression, bootstrap).
//! * [`trapmodel`]: directed and biased Bouchaud trap models.
//! * [`rwre1d`]: nearest-neighbour random walk in i.i.d. random environment on Z.
//! * [`gwtree`]: Galton-Watson analytics and biased walks on supercritical trees.
//! * [`perc`]: biased walks on bond-percolation clusters of Z^d boxes.
//! * [`critical`]: the incipient infinite cluster of a critical tree.

// `!(x > 0.0)` is how NaN gets rejected along with the bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod estat;
pub mod gwtree;
pub mod perc;
pub mod randkit;
pub mod replicas;
pub mod rwre1d;
pub mod trapmodel;

pub use randkit::{SeedTree, Stream};
pub use estat::EstimateReport;
