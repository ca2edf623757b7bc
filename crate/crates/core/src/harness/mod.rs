// SPDX-License-Identifier: Apache-2.0

//! Instance files, generators and the `optimize` / `simulate` / `verify`
//! campaigns behind the command line tool.
//!
//! All randomness flows from one master seed through named substreams, so a
//! given `(instance, config, seed)` always produces the same report bytes.

mod commands;
mod file;
mod generate;
mod report;

pub use commands::{
    optimize, simulate, verify, ExperimentConfig, MarginalChoice, OrderSpec, DEFAULT_RUNS,
    GREEDY_SLACK, SIM_SIGMAS, VERIFY_RANDOM_ORDERS,
};
pub use file::{load_instance, parse_instance, InstanceFile, ItemEntry, LoadedInstance};
pub use generate::{generate_instance, reference_suite, FamilyKind, GenParams};
pub use report::{
    Check, CheckStatus, ConfigEcho, ExtensionValues, InstanceSummary, InstanceVerification,
    OptimizeReport, PolicyRow, Ratio, Relation, SimulateReport, SolutionReport, VerifyReport,
    VerifySummary,
};
