// SPDX-License-Identifier: Apache-2.0

//! Report schemas. Field order is the serialization order.

use serde::Serialize;

use crate::policies::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub path: String,
    pub digest: String,
    pub items: usize,
    pub states: usize,
    pub budget: f64,
    pub family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub rounds: usize,
    pub marginals: String,
    pub y: Vec<Vec<f64>>,
    pub y_small: Vec<Vec<f64>>,
    pub y_large: Vec<Vec<f64>>,
    /// `Σ y_is c_i(s)`.
    pub expected_spend: f64,
}

/// `H` at `y` and its two halves; `method` is `exact` or `estimated`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionValues {
    pub method: String,
    pub h_y: f64,
    pub h_y_small: f64,
    pub h_y_large: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub command: &'static str,
    pub seed: u64,
    pub config: ConfigEcho,
    pub instance: InstanceSummary,
    pub solution: SolutionReport,
    pub extension: ExtensionValues,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    pub policy: PolicyKind,
    pub order: String,
    pub runs: u64,
    pub mean: f64,
    /// `null` for a single run.
    pub stderr: Option<f64>,
    pub ci95: Option<[f64; 2]>,
    pub budget_violations: u64,
    pub max_large_selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub command: &'static str,
    pub seed: u64,
    pub config: ConfigEcho,
    pub instance: InstanceSummary,
    pub solution: SolutionReport,
    pub policies: Vec<PolicyRow>,
    pub total_runs: u64,
    pub budget_violations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// `ge`: pass iff `lhs ≥ rhs − slack`. `le`: pass iff `lhs ≤ rhs + slack`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub relation: Relation,
    pub lhs: f64,
    pub lhs_source: String,
    pub rhs: f64,
    pub rhs_source: String,
    pub slack: f64,
    pub slack_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn compare(
        name: impl Into<String>,
        relation: Relation,
        (lhs, lhs_source): (f64, &str),
        (rhs, rhs_source): (f64, &str),
        (slack, slack_source): (f64, &str),
    ) -> Self {
        let holds = match relation {
            Relation::Ge => lhs >= rhs - slack,
            Relation::Le => lhs <= rhs + slack,
        };
        Self {
            name: name.into(),
            status: if holds {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            relation,
            lhs,
            lhs_source: lhs_source.into(),
            rhs,
            rhs_source: rhs_source.into(),
            slack,
            slack_source: slack_source.into(),
            note: None,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            relation: Relation::Ge,
            lhs: 0.0,
            lhs_source: String::new(),
            rhs: 0.0,
            rhs_source: String::new(),
            slack: 0.0,
            slack_source: String::new(),
            note: Some(reason.into()),
        }
    }

    /// Re-derives the verdict from the recorded numbers.
    pub fn recomputed_status(&self) -> CheckStatus {
        match self.status {
            CheckStatus::Skipped => CheckStatus::Skipped,
            _ => {
                let holds = match self.relation {
                    Relation::Ge => self.lhs >= self.rhs - self.slack,
                    Relation::Le => self.lhs <= self.rhs + self.slack,
                };
                if holds {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ratio {
    pub name: String,
    pub numerator: String,
    pub denominator: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceVerification {
    pub instance: InstanceSummary,
    pub solution: SolutionReport,
    pub extension: ExtensionValues,
    pub optimal_policy_value: Option<f64>,
    pub policies: Vec<PolicyRow>,
    pub ratios: Vec<Ratio>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub total_runs: u64,
    pub budget_violations: u64,
    pub all_passed: bool,
}

/// The campaign settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub rounds: usize,
    pub marginals: String,
    pub samples: usize,
    pub runs: usize,
    pub order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub seed: u64,
    pub config: ConfigEcho,
    pub results: Vec<InstanceVerification>,
    pub summary: VerifySummary,
}

impl VerifyReport {
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.results.iter().flat_map(|r| r.checks.iter())
    }
}
