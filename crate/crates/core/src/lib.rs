//! Partition-valued Markov chains with at most `k` blocks, driven by
//! paintbox sampling.
//!
//! The state space is the set of partitions of `{1, …, n}` with at most `k`
//! blocks. One transition re-colors each block with an independent paintbox
//! draw from a mixing measure on the ranked `k`-simplex and scatters the
//! color classes into `k` shared columns through uniform permutations; the
//! nonempty columns form the next state. The crate provides:
//!
//! - exact transition kernels for discrete mixtures and for the
//!   Dirichlet-mixing family, where the probability reduces to a ratio of
//!   alpha-permanents ([`kernel`]);
//! - stationary distributions of the finite levels, with projection
//!   consistency, exchangeability, and reversibility checks
//!   ([`equilibrium`]);
//! - continuous-time simulation by two path-equivalent drivers, including a
//!   replayable event stream that couples chains started from different
//!   states ([`ctmc`]);
//! - the companion measure-valued process on the ranked simplex and a
//!   joint driver coupling it to the set-valued chain ([`frequency`]).
//!
//! All sampling is reproducible through [`RngStream`]: a `(seed, stream)`
//! pair pins the entire draw sequence.

pub mod ctmc;
pub mod equilibrium;
pub mod error;
pub mod frequency;
pub mod kernel;
pub mod mass;
pub mod paintbox;
pub mod partition;
pub mod rng;
pub mod tol;

pub use error::{Error, Result};
pub use mass::{MassPartition, NuMeasure};
pub use partition::{Permutation, SetPartition};
pub use rng::RngStream;
