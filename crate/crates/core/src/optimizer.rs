// SPDX-License-Identifier: Apache-2.0

//! Continuous greedy over the knapsack-box polytope
//! `{x : 0 ≤ x_is ≤ p_i(s), Σ x_is c_i(s) ≤ B}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{sampled_marginals, FractionalSolution, ObjectiveTable, WeightMatrix};
use crate::matrix::PairMatrix;
use crate::model::{Instance, LatticeFunction};
use crate::rng::{child_seed, Stream};

pub const DEFAULT_ROUNDS: usize = 1000;
pub const DEFAULT_MARGINAL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub x: FractionalSolution,
    pub objective_value: f64,
}

/// Maximizes `Σ ω_is x_is` over the polytope by filling pairs in order of
/// decreasing `ω_is / c_i(s)`.
///
/// The polytope is a box cut by a single knapsack row, so the density order
/// is optimal and at most one pair ends strictly between 0 and its cap.
/// Zero-cost pairs with positive weight are filled first; equal densities are
/// taken in `(i, s)` order.
pub fn solve_inner_lp(w: &WeightMatrix, inst: &Instance) -> Result<LpSolution> {
    let (items, states) = (inst.items(), inst.states());
    if w.0.items() != items || w.0.states() != states {
        return Err(Error::Precondition(format!(
            "weight matrix is {}x{}, instance is {items}x{states}",
            w.0.items(),
            w.0.states()
        )));
    }
    if let Some((i, s, v)) = w.0.iter().find(|(_, _, v)| !v.is_finite()) {
        return Err(Error::Precondition(format!("weight ({i},{s}) is {v}")));
    }

    let mut x = PairMatrix::zeros(items, states);
    let mut paid = Vec::new();
    for (i, s, weight) in w.0.iter() {
        if weight <= 0.0 {
            continue;
        }
        if inst.cost(i, s) == 0.0 {
            x.set(i, s, inst.prob(i, s));
        } else {
            paid.push((i, s, weight / inst.cost(i, s)));
        }
    }
    // stable: equal densities keep (i, s) order
    paid.sort_by(|a, b| b.2.total_cmp(&a.2));

    let mut remaining = inst.budget();
    for (i, s, _) in paid {
        if remaining <= 0.0 {
            break;
        }
        let cost = inst.cost(i, s);
        let take = inst.prob(i, s).min(remaining / cost);
        x.set(i, s, take);
        remaining -= take * cost;
    }
    let objective_value = w.0.dot(&x);
    Ok(LpSolution {
        x: FractionalSolution::new(x)?,
        objective_value,
    })
}

/// How continuous greedy obtains marginal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyMarginals {
    Exact,
    Sampled { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GreedyConfig {
    /// Number of rounds `T`; each moves `y` by `x^LP / T`.
    pub rounds: usize,
    pub marginals: GreedyMarginals,
    pub seed: u64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_ROUNDS,
            marginals: GreedyMarginals::Exact,
            seed: 0,
        }
    }
}

pub fn continuous_greedy<F>(
    inst: &Instance,
    f: &F,
    cfg: &GreedyConfig,
) -> Result<FractionalSolution>
where
    F: LatticeFunction + Sync,
{
    continuous_greedy_observed(inst, f, cfg, |_, _| {})
}

/// Continuous greedy, calling `observe(round, y)` after every update.
pub fn continuous_greedy_observed<F>(
    inst: &Instance,
    f: &F,
    cfg: &GreedyConfig,
    mut observe: impl FnMut(usize, &FractionalSolution),
) -> Result<FractionalSolution>
where
    F: LatticeFunction + Sync,
{
    if cfg.rounds == 0 {
        return Err(Error::validation(
            "rounds",
            "at least one round is required",
        ));
    }
    let (items, states) = (inst.items(), inst.states());
    let table = match cfg.marginals {
        GreedyMarginals::Exact => Some(ObjectiveTable::new(f, items, states)?),
        GreedyMarginals::Sampled { samples } => {
            if samples == 0 {
                return Err(Error::validation(
                    "samples",
                    "at least one sample is required",
                ));
            }
            None
        }
    };
    let step = 1.0 / cfg.rounds as f64;
    let mut y = FractionalSolution::zeros(items, states);
    for round in 0..cfg.rounds {
        let w = match (&table, cfg.marginals) {
            (Some(t), _) => t.marginal_weights(&y),
            (None, GreedyMarginals::Sampled { samples }) => {
                let seed = child_seed(cfg.seed, Stream::Subsets, round as u64);
                sampled_marginals(&y, f, samples, seed).weights
            }
            (None, GreedyMarginals::Exact) => unreachable!(),
        };
        // No policy can select a pair costing more than the whole budget,
        // so it gets no mass; the optimal policy's marginals stay feasible.
        let w = WeightMatrix(PairMatrix::from_fn(items, states, |i, s| {
            if inst.cost(i, s) > inst.budget() {
                0.0
            } else {
                w.0.get(i, s)
            }
        }));
        let lp = solve_inner_lp(&w, inst)?;
        let next = PairMatrix::from_fn(items, states, |i, s| {
            // the cap absorbs rounding in the accumulated steps
            (y.get(i, s) + step * lp.x.get(i, s)).min(inst.prob(i, s))
        });
        y = FractionalSolution::new(next)?;
        observe(round + 1, &y);
    }
    Ok(y)
}

/// Splits `y` into its small-cost (`c ≤ B/2`) and large-cost parts.
pub fn split_solution(
    y: &FractionalSolution,
    inst: &Instance,
) -> (FractionalSolution, FractionalSolution) {
    let (items, states) = (y.items(), y.states());
    let part = |large: bool| {
        let m = PairMatrix::from_fn(items, states, |i, s| {
            if inst.is_large(i, s) == large {
                y.get(i, s)
            } else {
                0.0
            }
        });
        FractionalSolution::new(m).expect("restriction of a valid solution")
    };
    (part(false), part(true))
}

/// Checks `y ≤ p` entrywise and `Σ y c ≤ B`, both up to `tol`.
pub fn check_lp_feasible(y: &FractionalSolution, inst: &Instance, tol: f64) -> Result<()> {
    if y.items() != inst.items() || y.states() != inst.states() {
        return Err(Error::Precondition(format!(
            "solution is {}x{}, instance is {}x{}",
            y.items(),
            y.states(),
            inst.items(),
            inst.states()
        )));
    }
    for (i, s, v) in y.matrix().iter() {
        if v > inst.prob(i, s) + tol {
            return Err(Error::Precondition(format!(
                "y({i},{s}) = {v} exceeds p = {}",
                inst.prob(i, s)
            )));
        }
    }
    let spend = y.matrix().dot(inst.costs());
    if spend > inst.budget() + tol {
        return Err(Error::Precondition(format!(
            "expected spend {spend} exceeds budget {}",
            inst.budget()
        )));
    }
    Ok(())
}
