// SPDX-License-Identifier: Apache-2.0

//! Exhaustive ground truth for tiny instances.
//!
//! The optimal adaptive policy may choose which item to probe next from
//! everything observed so far, accept or reject each probed item, and stop
//! at any time. Its value is computed by a memoized recursion over
//! per-item status: unprobed, probed and rejected, or selected in state `s`.
//! Spent budget is always recomputed from the selected set.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Instance, LatticeFunction};

pub const MAX_ORACLE_ITEMS: usize = 5;
pub const MAX_ORACLE_STATES: usize = 3;
/// Item limit for the unmemoized recursion.
pub const MAX_NAIVE_ITEMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// `f(π*)`.
    pub value: f64,
    /// Best first probe, or `None` when stopping immediately is optimal.
    pub first_probe: Option<usize>,
}

fn guard(inst: &Instance, max_items: usize) -> Result<()> {
    if inst.items() > max_items || inst.states() > MAX_ORACLE_STATES {
        return Err(Error::capacity(
            "optimal policy search",
            (inst.items() as u128) << 32 | inst.states() as u128,
            (max_items as u128) << 32 | MAX_ORACLE_STATES as u128,
            "the oracle handles at most 5 items and 3 states (size encodes items<<32|states)",
        ));
    }
    Ok(())
}

const UNPROBED: u8 = 0;
const REJECTED: u8 = 1;
// selected in state s is stored as s + 1

struct Search<'a, F> {
    inst: &'a Instance,
    f: &'a F,
    memo: Option<Vec<f64>>,
}

impl<F: LatticeFunction> Search<'_, F> {
    fn key(&self, status: &[u8]) -> usize {
        let radix = self.inst.states() + 2;
        status
            .iter()
            .rev()
            .fold(0, |acc, &v| acc * radix + v as usize)
    }

    fn spent(&self, status: &[u8]) -> f64 {
        status
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v > REJECTED)
            .map(|(i, &v)| self.inst.cost(i, (v - 1) as usize))
            .sum()
    }

    fn stop_value(&self, status: &[u8]) -> f64 {
        let u: Vec<usize> = status
            .iter()
            .map(|&v| if v > REJECTED { (v - 1) as usize } else { 0 })
            .collect();
        self.f.value(&u)
    }

    /// `(value, best probe)` of the state.
    fn solve(&mut self, status: &mut Vec<u8>) -> (f64, Option<usize>) {
        let mut best = (self.stop_value(status), None);
        let spent = self.spent(status);
        for i in 0..status.len() {
            if status[i] != UNPROBED {
                continue;
            }
            status[i] = REJECTED;
            let reject = self.value(status);
            let mut probe = 0.0;
            for s in 1..=self.inst.states() {
                let p = self.inst.prob(i, s);
                if p == 0.0 {
                    continue;
                }
                let mut v = reject;
                if spent + self.inst.cost(i, s) <= self.inst.budget() {
                    status[i] = s as u8 + 1;
                    v = v.max(self.value(status));
                }
                probe += p * v;
            }
            status[i] = UNPROBED;
            if probe > best.0 {
                best = (probe, Some(i));
            }
        }
        best
    }

    fn value(&mut self, status: &mut Vec<u8>) -> f64 {
        let key = self.key(status);
        if let Some(v) = self.memo.as_ref().map(|m| m[key]).filter(|v| !v.is_nan()) {
            return v;
        }
        let v = self.solve(status).0;
        if let Some(m) = self.memo.as_mut() {
            m[key] = v;
        }
        v
    }
}

/// Value of the optimal deterministic adaptive policy.
pub fn optimal_policy_value<F: LatticeFunction>(inst: &Instance, f: &F) -> Result<OracleResult> {
    guard(inst, MAX_ORACLE_ITEMS)?;
    let size = (inst.states() + 2).pow(inst.items() as u32);
    let mut search = Search {
        inst,
        f,
        memo: Some(vec![f64::NAN; size]),
    };
    let (value, first_probe) = search.solve(&mut vec![UNPROBED; inst.items()]);
    Ok(OracleResult { value, first_probe })
}

/// The same recursion without a memo table.
pub fn optimal_policy_value_unmemoized<F: LatticeFunction>(inst: &Instance, f: &F) -> Result<f64> {
    guard(inst, MAX_NAIVE_ITEMS)?;
    let mut search = Search {
        inst,
        f,
        memo: None,
    };
    Ok(search.solve(&mut vec![UNPROBED; inst.items()]).0)
}

/// Best nonadaptive policy: a fixed probe order plus a fixed accept rule per
/// `(item, state)`, where an accepted pair is taken only if it still fits.
pub fn exhaustive_nonadaptive_value<F>(inst: &Instance, f: &F) -> Result<f64>
where
    F: LatticeFunction + Sync,
{
    guard(inst, MAX_ORACLE_ITEMS)?;
    let (items, states) = (inst.items(), inst.states());
    // pairs a rule may usefully accept
    let pairs: Vec<(usize, usize)> = (0..items)
        .flat_map(|i| (1..=states).map(move |s| (i, s)))
        .filter(|&(i, s)| inst.prob(i, s) > 0.0 && inst.cost(i, s) <= inst.budget())
        .collect();
    let best = (0u64..1 << pairs.len())
        .into_par_iter()
        .map(|mask| {
            let mut accept = vec![vec![false; states + 1]; items];
            for (k, &(i, s)) in pairs.iter().enumerate() {
                accept[i][s] = mask >> k & 1 == 1;
            }
            let active: Vec<usize> = (0..items)
                .filter(|&i| accept[i].iter().any(|&a| a))
                .collect();
            let worst_spend: f64 = active
                .iter()
                .map(|&i| {
                    (1..=states)
                        .filter(|&s| accept[i][s])
                        .map(|s| inst.cost(i, s))
                        .fold(0.0, f64::max)
                })
                .sum();
            let eval = |order: &[usize]| {
                let mut u = vec![0; items];
                fixed_rule_value(inst, f, &accept, order, &mut u, 0.0)
            };
            if worst_spend <= inst.budget() {
                // the budget never binds, so the order is irrelevant
                eval(&active)
            } else {
                let mut best = f64::NEG_INFINITY;
                for_each_permutation(&mut active.clone(), 0, &mut |order| {
                    best = best.max(eval(order));
                });
                best
            }
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

fn fixed_rule_value<F: LatticeFunction>(
    inst: &Instance,
    f: &F,
    accept: &[Vec<bool>],
    rest: &[usize],
    u: &mut Vec<usize>,
    spent: f64,
) -> f64 {
    let Some((&i, tail)) = rest.split_first() else {
        return f.value(u);
    };
    let mut total = 0.0;
    for s in 1..=inst.states() {
        let p = inst.prob(i, s);
        if p == 0.0 {
            continue;
        }
        let c = inst.cost(i, s);
        total += p * if accept[i][s] && spent + c <= inst.budget() {
            u[i] = s;
            let v = fixed_rule_value(inst, f, accept, tail, u, spent + c);
            u[i] = 0;
            v
        } else {
            fixed_rule_value(inst, f, accept, tail, u, spent)
        };
    }
    total
}

fn for_each_permutation(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for j in k..v.len() {
        v.swap(k, j);
        for_each_permutation(v, k + 1, visit);
        v.swap(k, j);
    }
}
