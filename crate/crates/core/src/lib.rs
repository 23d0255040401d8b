//! Smallest-eigenvalue bounds for reversible Markov chains.
//!
//! A family of closed odd walks, one per state, bounds `1 + lambda_min`
//! from below through its congestion `eta`: `lambda_min >= 2/eta - 1`.
//! The crate builds small instances of three chains (the switch chain on
//! regular graphs, the Jerrum-Sinclair matchings chain and the heat-bath
//! chain on contingency tables), computes their spectra densely and checks
//! the bound against canonical walk sets.

pub mod analysis;
pub mod chain;
pub mod contingency;
pub mod eigen;
pub mod error;
pub mod matchings;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod spectral;
pub mod switch;
pub mod walks;

pub use analysis::{analyze, random_sweep, AnalysisOptions};
pub use chain::{build_chain, Chain, ChainDescriptor, Family, FamilyInstance, StateSpace, StationaryDistribution, TransitionKernel};
pub use error::{Error, Result};
pub use rational::Rational;
pub use report::{AnalysisReport, RandomSweepReport, Verdict};
pub use walks::{congestion, OddWalk, WalkSet};
