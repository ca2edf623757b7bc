// SPDX-License-Identifier: Apache-2.0

//! Stochastic submodular probing with state-dependent costs and rejections.
//!
//! Items carry a random state drawn from a known per-item distribution; the
//! cost of selecting an item depends on its realized state, and a probed item
//! must be accepted or rejected on the spot. The crate provides:
//!
//! - [`model`]: instances, lattice-submodular objective families, the lifted
//!   set function `h` over item-state pairs and exhaustive property checkers;
//! - [`extension`]: the multilinear extension `H` (two exact evaluators and a
//!   Monte Carlo estimator) and marginal weights;
//! - [`optimizer`]: the knapsack-box LP and the continuous greedy loop;
//! - [`policies`]: the small-cost, large-cost and combined (StoCan) probing
//!   policies, simulated or evaluated exactly, in any arrival order;
//! - [`oracle`]: exhaustive optimal adaptive policy value for tiny instances;
//! - [`harness`]: instance files, generators, reports and the CLI commands.

pub mod error;
pub mod extension;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

pub use extension::{FractionalSolution, WeightMatrix};
pub use matrix::PairMatrix;
pub use model::{Instance, ItemStateSet, LatticeFunction, Objective, StateRealization};

/// Tolerance used when validating probabilities, costs and LP feasibility.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Tolerance for comparisons that are exact in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
