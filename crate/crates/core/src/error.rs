// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::policies::RunRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input; `path` locates the offending value.
    #[error("invalid input at `{path}`: {message}")]
    Validation { path: String, message: String },

    /// An exhaustive routine was asked to enumerate a domain above its guard.
    #[error("{what}: domain size {size} exceeds the limit {limit}; {hint}")]
    Capacity {
        what: &'static str,
        size: u128,
        limit: u128,
        hint: &'static str,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A policy run exceeded the budget. Never expected; carries the run.
    #[error("budget violated: total cost {} exceeds budget {budget}", .record.total_cost)]
    BudgetViolation { budget: f64, record: Box<RunRecord> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn capacity(
        what: &'static str,
        size: u128,
        limit: u128,
        hint: &'static str,
    ) -> Self {
        Error::Capacity {
            what,
            size,
            limit,
            hint,
        }
    }

    /// Process exit code used by the CLI: 2 for input errors, 3 for capacity
    /// guards, 1 for anything that indicates a failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::Precondition(_)
            | Error::Io { .. }
            | Error::Json { .. } => 2,
            Error::Capacity { .. } => 3,
            Error::BudgetViolation { .. } => 1,
        }
    }
}

/// `(base)^exp` as `u128`, saturating, for capacity guards.
pub(crate) fn domain_size(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}
