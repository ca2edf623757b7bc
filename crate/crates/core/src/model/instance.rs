// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::PairMatrix;
use crate::rng::{substream, Stream};
use crate::VALIDATION_TOL;

/// Items with independent random states, state-dependent costs and a budget.
///
/// Construction rejects (never repairs) rows that are not probability
/// distributions and costs that decrease as the state improves.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    probs: PairMatrix,
    costs: PairMatrix,
    budget: f64,
}

impl Instance {
    pub fn new(probs: &[Vec<f64>], costs: &[Vec<f64>], budget: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("items", "at least one item is required"));
        }
        if probs.len() != costs.len() {
            return Err(Error::validation(
                "items",
                format!(
                    "{} probability rows but {} cost rows",
                    probs.len(),
                    costs.len()
                ),
            ));
        }
        let states = probs[0].len();
        if states == 0 {
            return Err(Error::validation(
                "items[0].probs",
                "at least one state is required",
            ));
        }
        for (i, (p, c)) in probs.iter().zip(costs).enumerate() {
            if p.len() != states {
                return Err(Error::validation(
                    format!("items[{i}].probs"),
                    format!("expected {states} states, found {}", p.len()),
                ));
            }
            if c.len() != states {
                return Err(Error::validation(
                    format!("items[{i}].costs"),
                    format!("expected {states} states, found {}", c.len()),
                ));
            }
            for (k, &v) in p.iter().enumerate() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::validation(
                        format!("items[{i}].probs[{k}]"),
                        format!("probability {v} is outside [0, 1]"),
                    ));
                }
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::validation(
                    format!("items[{i}].probs"),
                    format!("probabilities sum to {total}, not 1"),
                ));
            }
            for (k, &v) in c.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::validation(
                        format!("items[{i}].costs[{k}]"),
                        format!("cost {v} must be finite and nonnegative"),
                    ));
                }
            }
            for k in 1..states {
                if c[k] < c[k - 1] {
                    return Err(Error::validation(
                        format!("items[{i}].costs"),
                        format!(
                            "cost must not decrease with the state: item {i}, state {} costs {} \
                             but lower state {} costs {}",
                            k + 1,
                            c[k],
                            k,
                            c[k - 1]
                        ),
                    ));
                }
            }
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::validation(
                "budget",
                format!("budget {budget} must be positive"),
            ));
        }
        Ok(Self {
            probs: PairMatrix::from_rows(probs).expect("rows checked"),
            costs: PairMatrix::from_rows(costs).expect("rows checked"),
            budget,
        })
    }

    pub fn items(&self) -> usize {
        self.probs.items()
    }

    pub fn states(&self) -> usize {
        self.probs.states()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn prob(&self, i: usize, s: usize) -> f64 {
        self.probs.get(i, s)
    }

    pub fn cost(&self, i: usize, s: usize) -> f64 {
        self.costs.get(i, s)
    }

    pub fn probs(&self) -> &PairMatrix {
        &self.probs
    }

    pub fn costs(&self) -> &PairMatrix {
        &self.costs
    }

    /// Whether `(i, s)` costs more than half the budget.
    /// Exactly half counts as small.
    pub fn is_large(&self, i: usize, s: usize) -> bool {
        self.cost(i, s) > self.budget / 2.0
    }
}

/// One joint draw of all item states; entries are in `1..=S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateRealization(pub Vec<usize>);

impl StateRealization {
    pub fn state(&self, i: usize) -> usize {
        self.0[i]
    }

    /// Probability of this realization under the instance's product law.
    pub fn probability(&self, inst: &Instance) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &s)| inst.prob(i, s))
            .product()
    }
}

/// Draws each item's state independently from its row of `probs`.
pub fn draw_realization_with(inst: &Instance, rng: &mut impl Rng) -> StateRealization {
    let states = inst.states();
    StateRealization(
        (0..inst.items())
            .map(|i| {
                let row = inst.probs().row(i);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (k, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc && p > 0.0 {
                        return k + 1;
                    }
                }
                // u landed in the rounding gap above the cumulative sum.
                row.iter().rposition(|&p| p > 0.0).map_or(states, |k| k + 1)
            })
            .collect(),
    )
}

pub fn draw_realization(inst: &Instance, seed: u64) -> StateRealization {
    draw_realization_with(inst, &mut substream(seed, Stream::States, 0))
}
