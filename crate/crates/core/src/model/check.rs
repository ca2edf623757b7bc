// SPDX-License-Identifier: Apache-2.0

//! Monotonicity and lattice-submodularity checkers.
//!
//! Both properties are statements about every comparable pair `u ≤ v`.
//! Each is implied by its restriction to covering pairs `v = u + 1_j`
//! (chain any `u ≤ v` through unit increments and telescope), so the
//! exhaustive mode enumerates covering pairs only and is still exact.

use rand::Rng;
use serde::Serialize;

use super::{for_each_state_vector, lattice_index, LatticeFunction, StateVector};
use crate::error::{domain_size, Error, Result};
use crate::rng::{substream, Stream};
use crate::EXACT_TOL;

/// Largest lattice `(S+1)^I` the exhaustive mode will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    /// Random increment chains from uniformly drawn starting points.
    Sampled {
        chains: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome<W> {
    pub holds: bool,
    pub witness: Option<W>,
    pub comparisons: u64,
}

/// `f(point) > f(point + 1_item)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneWitness {
    pub point: StateVector,
    pub item: usize,
    pub before: f64,
    pub after: f64,
}

/// Raising `item` to `state` gains more at `upper` than at `lower ≤ upper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmodularWitness {
    pub lower: StateVector,
    pub upper: StateVector,
    pub item: usize,
    pub state: usize,
    pub lower_gain: f64,
    pub upper_gain: f64,
}

fn tabulate(f: &impl LatticeFunction, items: usize, states: usize) -> Result<Vec<f64>> {
    let size = domain_size(states + 1, items);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::capacity(
            "exhaustive property check",
            size,
            EXHAUSTIVE_LIMIT,
            "use CheckMode::Sampled for this domain",
        ));
    }
    let mut table = Vec::with_capacity(size as usize);
    for_each_state_vector(items, states, |u| table.push(f.value(u)));
    Ok(table)
}

fn join(u: &[usize], i: usize, s: usize) -> StateVector {
    let mut w = u.to_vec();
    w[i] = w[i].max(s);
    w
}

pub fn check_monotone(
    f: &impl LatticeFunction,
    items: usize,
    states: usize,
    mode: CheckMode,
) -> Result<CheckOutcome<MonotoneWitness>> {
    let mut comparisons = 0u64;
    let mut witness = None;
    match mode {
        CheckMode::Exhaustive => {
            let table = tabulate(f, items, states)?;
            let strides: Vec<usize> = (0..items).map(|i| (states + 1).pow(i as u32)).collect();
            for_each_state_vector(items, states, |u| {
                if witness.is_some() {
                    return;
                }
                let k = lattice_index(u, states);
                for i in 0..items {
                    if u[i] == states {
                        continue;
                    }
                    comparisons += 1;
                    let (before, after) = (table[k], table[k + strides[i]]);
                    if before > after + EXACT_TOL {
                        witness = Some(MonotoneWitness {
                            point: u.to_vec(),
                            item: i,
                            before,
                            after,
                        });
                        return;
                    }
                }
            });
        }
        CheckMode::Sampled { chains, seed } => {
            'chains: for c in 0..chains {
                let mut rng = substream(seed, Stream::Checker, c as u64);
                let mut u: StateVector = (0..items).map(|_| rng.gen_range(0..=states)).collect();
                let mut before = f.value(&u);
                loop {
                    let open: Vec<usize> = (0..items).filter(|&i| u[i] < states).collect();
                    if open.is_empty() {
                        break;
                    }
                    let i = open[rng.gen_range(0..open.len())];
                    let point = u.clone();
                    u[i] += 1;
                    let after = f.value(&u);
                    comparisons += 1;
                    if before > after + EXACT_TOL {
                        witness = Some(MonotoneWitness {
                            point,
                            item: i,
                            before,
                            after,
                        });
                        break 'chains;
                    }
                    before = after;
                }
            }
        }
    }
    Ok(CheckOutcome {
        holds: witness.is_none(),
        witness,
        comparisons,
    })
}

/// Checks `f(u ∨ s·1_i) − f(u) ≥ f(v ∨ s·1_i) − f(v)` for `u ≤ v`.
pub fn check_lattice_submodular(
    f: &impl LatticeFunction,
    items: usize,
    states: usize,
    mode: CheckMode,
) -> Result<CheckOutcome<SubmodularWitness>> {
    let mut comparisons = 0u64;
    let mut witness = None;
    // Compares all (i, s) between a covering pair `lower < upper`.
    let mut compare_pair = |lower: &[usize], upper: &[usize], value: &dyn Fn(&[usize]) -> f64| {
        let (fl, fu) = (value(lower), value(upper));
        for i in 0..items {
            for s in 1..=states {
                comparisons += 1;
                let lower_gain = value(&join(lower, i, s)) - fl;
                let upper_gain = value(&join(upper, i, s)) - fu;
                if lower_gain + EXACT_TOL < upper_gain {
                    return Some(SubmodularWitness {
                        lower: lower.to_vec(),
                        upper: upper.to_vec(),
                        item: i,
                        state: s,
                        lower_gain,
                        upper_gain,
                    });
                }
            }
        }
        None
    };
    match mode {
        CheckMode::Exhaustive => {
            let table = tabulate(f, items, states)?;
            let lookup = |u: &[usize]| table[lattice_index(u, states)];
            for_each_state_vector(items, states, |u| {
                if witness.is_some() {
                    return;
                }
                for j in 0..items {
                    if u[j] == states {
                        continue;
                    }
                    let mut v = u.to_vec();
                    v[j] += 1;
                    if let Some(w) = compare_pair(u, &v, &lookup) {
                        witness = Some(w);
                        return;
                    }
                }
            });
        }
        CheckMode::Sampled { chains, seed } => {
            let direct = |u: &[usize]| f.value(u);
            'chains: for c in 0..chains {
                let mut rng = substream(seed, Stream::Checker, c as u64);
                let mut u: StateVector = (0..items).map(|_| rng.gen_range(0..=states)).collect();
                loop {
                    let open: Vec<usize> = (0..items).filter(|&i| u[i] < states).collect();
                    if open.is_empty() {
                        break;
                    }
                    let mut v = u.clone();
                    v[open[rng.gen_range(0..open.len())]] += 1;
                    if let Some(w) = compare_pair(&u, &v, &direct) {
                        witness = Some(w);
                        break 'chains;
                    }
                    u = v;
                }
            }
        }
    }
    Ok(CheckOutcome {
        holds: witness.is_none(),
        witness,
        comparisons,
    })
}
