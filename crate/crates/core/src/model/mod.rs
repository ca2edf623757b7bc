// SPDX-License-Identifier: Apache-2.0

//! Problem instances, objectives and the lifted set function `h`.
//!
//! Items are indexed `0..items`; states are `1..=states`, and state `0` marks
//! an item that is absent from a selection. Objectives are functions of a
//! state vector `u ∈ {0..S}^I`.

mod check;
mod instance;
mod objective;

pub use check::{
    check_lattice_submodular, check_monotone, CheckMode, CheckOutcome, MonotoneWitness,
    SubmodularWitness, EXHAUSTIVE_LIMIT,
};
pub use instance::{draw_realization, draw_realization_with, Instance, StateRealization};
pub use objective::{Curve, Objective, ObjectiveSpec};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// State vector over `{0..S}^I`; `0` means "absent".
pub type StateVector = Vec<usize>;

/// A monotone lattice-submodular function is expected but never assumed;
/// see [`check_monotone`] and [`check_lattice_submodular`].
pub trait LatticeFunction {
    fn value(&self, u: &[usize]) -> f64;
}

impl<F: Fn(&[usize]) -> f64> LatticeFunction for F {
    fn value(&self, u: &[usize]) -> f64 {
        self(u)
    }
}

/// A set of item-state pairs. Several states of one item may coexist;
/// `h` only looks at the largest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemStateSet {
    items: usize,
    states: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl ItemStateSet {
    pub fn new(items: usize, states: usize) -> Self {
        Self {
            items,
            states,
            pairs: BTreeSet::new(),
        }
    }

    pub fn from_pairs(
        items: usize,
        states: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = Self::new(items, states);
        for (i, s) in pairs {
            set.insert(i, s)?;
        }
        Ok(set)
    }

    /// Inserts `(i, s)`; returns whether it was new.
    pub fn insert(&mut self, i: usize, s: usize) -> Result<bool> {
        if i >= self.items || s == 0 || s > self.states {
            return Err(Error::validation(
                format!("pair({i},{s})"),
                format!(
                    "expected item < {} and state in 1..={}",
                    self.items, self.states
                ),
            ));
        }
        Ok(self.pairs.insert((i, s)))
    }

    pub fn contains(&self, i: usize, s: usize) -> bool {
        self.pairs.contains(&(i, s))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// Per-item maximum state, `0` for items without a pair.
    pub fn state_vector(&self) -> StateVector {
        let mut u = vec![0; self.items];
        for &(i, s) in &self.pairs {
            u[i] = u[i].max(s);
        }
        u
    }

    /// Keeps only the per-item maximum state.
    pub fn reduced(&self) -> Self {
        let u = self.state_vector();
        Self {
            items: self.items,
            states: self.states,
            pairs: u
                .iter()
                .enumerate()
                .filter(|&(_, &s)| s > 0)
                .map(|(i, &s)| (i, s))
                .collect(),
        }
    }
}

/// `h(U) = f(u)` with `u(i)` the largest state paired with `i` in `U`.
pub fn h_eval(set: &ItemStateSet, f: &impl LatticeFunction) -> f64 {
    f.value(&set.state_vector())
}

/// Mixed-radix index of `u` in `{0..S}^I` (item 0 least significant).
pub fn lattice_index(u: &[usize], states: usize) -> usize {
    u.iter().rev().fold(0, |acc, &s| acc * (states + 1) + s)
}

/// Inverse of [`lattice_index`].
pub fn lattice_vector(mut index: usize, items: usize, states: usize) -> StateVector {
    let radix = states + 1;
    (0..items)
        .map(|_| {
            let s = index % radix;
            index /= radix;
            s
        })
        .collect()
}

/// Visits every `u ∈ {0..S}^I` in [`lattice_index`] order.
pub fn for_each_state_vector(items: usize, states: usize, mut visit: impl FnMut(&[usize])) {
    let mut u = vec![0usize; items];
    loop {
        visit(&u);
        let mut k = 0;
        loop {
            if k == items {
                return;
            }
            if u[k] < states {
                u[k] += 1;
                break;
            }
            u[k] = 0;
            k += 1;
        }
    }
}
