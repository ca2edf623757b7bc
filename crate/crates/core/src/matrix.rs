// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Dense `items x states` matrix indexed by item `i` (0-based) and state `s`
/// (1-based, `1..=states`). State 0 ("absent") has no column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatrix {
    items: usize,
    states: usize,
    data: Vec<f64>,
}

impl PairMatrix {
    pub fn zeros(items: usize, states: usize) -> Self {
        Self {
            items,
            states,
            data: vec![0.0; items * states],
        }
    }

    pub fn from_fn(items: usize, states: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(items, states);
        for i in 0..items {
            for s in 1..=states {
                m.set(i, s, f(i, s));
            }
        }
        m
    }

    /// Builds from rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let items = rows.len();
        let states = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != states) {
            return None;
        }
        Some(Self {
            items,
            states,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn items(&self) -> usize {
        self.items
    }

    #[inline]
    pub fn states(&self) -> usize {
        self.states
    }

    #[inline]
    fn offset(&self, i: usize, s: usize) -> usize {
        debug_assert!(i < self.items && (1..=self.states).contains(&s));
        i * self.states + (s - 1)
    }

    #[inline]
    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.data[self.offset(i, s)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, s: usize, v: f64) {
        let k = self.offset(i, s);
        self.data[k] = v;
    }

    /// Row `i` as a slice; entry `k` holds state `k + 1`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.states..(i + 1) * self.states]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.items).map(|i| self.row(i).to_vec()).collect()
    }

    /// Iterates `(i, s, value)` in lexicographic `(i, s)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / self.states, k % self.states + 1, v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            items: self.items,
            states: self.states,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &PairMatrix) -> bool {
        self.items == other.items && self.states == other.states
    }

    /// `Σ_is self_is · other_is`.
    pub fn dot(&self, other: &PairMatrix) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}
