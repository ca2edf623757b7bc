// SPDX-License-Identifier: Apache-2.0

//! Randomized probing policies driven by a fractional solution `y`.
//!
//! Items are probed one at a time in an arrival order. A probed item in
//! state `s` is a candidate for the small policy when `c_i(s) ≤ B/2` and for
//! the large policy otherwise; a candidate that still fits in the budget is
//! accepted with probability `y_is / (4 p_i(s))`. StoCan flips a fair coin
//! to pick one of the two. Probing is free and only accepted pairs are
//! charged. A rejection is final.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain_size, Error, Result};
use crate::extension::{FractionalSolution, ObjectiveTable};
use crate::matrix::PairMatrix;
use crate::model::{
    draw_realization_with, lattice_index, Instance, LatticeFunction, StateRealization,
};
use crate::optimizer::check_lp_feasible;
use crate::rng::{substream, Stream};
use crate::stats::Estimate;
use crate::VALIDATION_TOL;

/// Limit on `S^I · 2^I` for exact policy evaluation.
pub const EXACT_POLICY_LIMIT: u128 = 1_000_000;

const RUN_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Small,
    Large,
    Stocan,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Small => "small",
            PolicyKind::Large => "large",
            PolicyKind::Stocan => "stocan",
        }
    }
}

/// The branch a run actually executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    DiscardedBySize,
    RejectedByCoin,
    SkippedNoBudget,
    Accepted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Event {
    pub item: usize,
    pub state: usize,
    pub action: Action,
}

/// A permutation of the items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ArrivalOrder(Vec<usize>);

impl ArrivalOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for (k, &i) in order.iter().enumerate() {
            if i >= order.len() || seen[i] {
                return Err(Error::validation(
                    format!("order[{k}]"),
                    format!("{order:?} is not a permutation of 0..{}", order.len()),
                ));
            }
            seen[i] = true;
        }
        Ok(Self(order))
    }

    pub fn identity(items: usize) -> Self {
        Self((0..items).collect())
    }

    pub fn random(items: usize, rng: &mut impl Rng) -> Self {
        let mut v: Vec<usize> = (0..items).collect();
        v.shuffle(rng);
        Self(v)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderMode {
    Fixed(ArrivalOrder),
    /// A fresh uniformly random order for every run.
    FreshRandom,
}

/// One execution of a policy on one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub policy: PolicyKind,
    pub branch: Branch,
    pub order: ArrivalOrder,
    pub realization: StateRealization,
    pub events: Vec<Event>,
    pub selected: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub value: f64,
}

/// Aggregate of a simulation campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub policy: PolicyKind,
    pub estimate: Estimate,
    pub budget_violations: u64,
    /// Largest `|G|` seen on a large-branch run.
    pub max_large_selected: usize,
    pub small_branch_runs: u64,
    /// How often each pair was selected, `counts[i][s-1]`.
    pub inclusion_counts: Vec<Vec<u64>>,
}

impl SimulationSummary {
    pub fn runs(&self) -> u64 {
        self.estimate.samples
    }

    pub fn inclusion_frequency(&self, i: usize, s: usize) -> f64 {
        self.inclusion_counts[i][s - 1] as f64 / self.runs() as f64
    }
}

struct Outcome {
    u: Vec<usize>,
    selected: Vec<(usize, usize)>,
    total_cost: f64,
}

/// Small, large and StoCan policies bound to an instance, objective and `y`.
pub struct ProbingPolicy<'a, F> {
    inst: &'a Instance,
    f: &'a F,
    accept: PairMatrix,
    table: Option<ObjectiveTable>,
    ignore_budget: bool,
}

impl<'a, F: LatticeFunction + Sync> ProbingPolicy<'a, F> {
    /// Fails when `y` is not LP-feasible (up to `1e-9`), which would push an
    /// acceptance probability above 1/4.
    pub fn new(inst: &'a Instance, f: &'a F, y: &FractionalSolution) -> Result<Self> {
        check_lp_feasible(y, inst, VALIDATION_TOL)?;
        let accept = PairMatrix::from_fn(inst.items(), inst.states(), |i, s| {
            let p = inst.prob(i, s);
            if p == 0.0 {
                0.0
            } else {
                y.get(i, s).min(p) / (4.0 * p)
            }
        });
        assert!(accept.iter().all(|(_, _, a)| (0.0..=0.25).contains(&a)));
        // a lookup table when cheap, otherwise direct evaluation
        let table = ObjectiveTable::new(f, inst.items(), inst.states()).ok();
        Ok(Self {
            inst,
            f,
            accept,
            table,
            ignore_budget: false,
        })
    }

    /// The small policy that accepts regardless of the remaining budget.
    /// Its runs may exceed `B`.
    #[cfg(feature = "test-fixtures")]
    pub fn without_budget(mut self) -> Self {
        self.ignore_budget = true;
        self
    }

    pub fn acceptance_probability(&self, i: usize, s: usize) -> f64 {
        self.accept.get(i, s)
    }

    fn value(&self, u: &[usize]) -> f64 {
        match &self.table {
            Some(t) => t.value_at(lattice_index(u, self.inst.states())),
            None => self.f.value(u),
        }
    }

    fn is_candidate(&self, branch: Branch, i: usize, s: usize) -> bool {
        self.inst.is_large(i, s) == (branch == Branch::Large)
    }

    fn execute(
        &self,
        branch: Branch,
        phi: &StateRealization,
        order: &[usize],
        coins: &mut impl Rng,
        mut events: Option<&mut Vec<Event>>,
    ) -> Outcome {
        let budget = self.inst.budget();
        let mut spent = 0.0;
        let mut u = vec![0; self.inst.items()];
        let mut selected = Vec::new();
        for &i in order {
            let s = phi.state(i);
            let c = self.inst.cost(i, s);
            let action = if !self.is_candidate(branch, i, s) {
                Action::DiscardedBySize
            } else if !self.ignore_budget && spent + c > budget {
                Action::SkippedNoBudget
            } else if coins.gen::<f64>() < self.accept.get(i, s) {
                spent += c;
                u[i] = s;
                selected.push((i, s));
                Action::Accepted
            } else {
                Action::RejectedByCoin
            };
            if let Some(ev) = events.as_deref_mut() {
                ev.push(Event {
                    item: i,
                    state: s,
                    action,
                });
            }
        }
        Outcome {
            u,
            selected,
            total_cost: spent,
        }
    }

    /// Executes one run; `seed` drives the accept coins and StoCan's branch
    /// coin through separate substreams.
    pub fn run(
        &self,
        kind: PolicyKind,
        phi: &StateRealization,
        order: &ArrivalOrder,
        seed: u64,
    ) -> Result<RunRecord> {
        self.run_indexed(kind, phi, order, seed, 0)
    }

    fn branch_for(kind: PolicyKind, seed: u64, index: u64) -> Branch {
        match kind {
            PolicyKind::Small => Branch::Small,
            PolicyKind::Large => Branch::Large,
            PolicyKind::Stocan => {
                if substream(seed, Stream::Branch, index).gen_bool(0.5) {
                    Branch::Small
                } else {
                    Branch::Large
                }
            }
        }
    }

    fn run_indexed(
        &self,
        kind: PolicyKind,
        phi: &StateRealization,
        order: &ArrivalOrder,
        seed: u64,
        index: u64,
    ) -> Result<RunRecord> {
        if order.len() != self.inst.items() || phi.0.len() != self.inst.items() {
            return Err(Error::Precondition(format!(
                "order and realization must cover {} items",
                self.inst.items()
            )));
        }
        if let Some(k) = phi.0.iter().position(|&s| s == 0 || s > self.inst.states()) {
            return Err(Error::validation(
                format!("realization[{k}]"),
                "state out of range",
            ));
        }
        let branch = Self::branch_for(kind, seed, index);
        let mut coins = substream(seed, Stream::Coins, index);
        let mut events = Vec::with_capacity(order.len());
        let out = self.execute(branch, phi, order.as_slice(), &mut coins, Some(&mut events));
        let record = RunRecord {
            policy: kind,
            branch,
            order: order.clone(),
            realization: phi.clone(),
            events,
            selected: out.selected,
            total_cost: out.total_cost,
            value: self.value(&out.u),
        };
        if !self.ignore_budget && record.total_cost > self.inst.budget() {
            return Err(Error::BudgetViolation {
                budget: self.inst.budget(),
                record: Box::new(record),
            });
        }
        Ok(record)
    }

    fn order_for(&self, mode: &OrderMode, seed: u64, run: u64) -> ArrivalOrder {
        match mode {
            OrderMode::Fixed(o) => o.clone(),
            OrderMode::FreshRandom => {
                ArrivalOrder::random(self.inst.items(), &mut substream(seed, Stream::Order, run))
            }
        }
    }

    /// Averages `h(G)` over `runs` independent runs. Run `r` draws its
    /// realization from substream `(seed, States, r)`, so every policy
    /// simulated with the same seed sees the same realizations.
    pub fn simulate(
        &self,
        kind: PolicyKind,
        runs: usize,
        order_mode: &OrderMode,
        seed: u64,
    ) -> Result<SimulationSummary> {
        if runs == 0 {
            return Err(Error::validation("runs", "at least one run is required"));
        }
        if let OrderMode::Fixed(o) = order_mode {
            if o.len() != self.inst.items() {
                return Err(Error::validation(
                    "order",
                    "order length differs from item count",
                ));
            }
        }
        let (items, states) = (self.inst.items(), self.inst.states());
        struct Chunk {
            values: Vec<f64>,
            violation: Option<u64>,
            violations: u64,
            max_large: usize,
            small_runs: u64,
            counts: Vec<u64>,
        }
        let chunks: Vec<Chunk> = (0..runs.div_ceil(RUN_CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * RUN_CHUNK;
                let hi = runs.min(lo + RUN_CHUNK);
                let mut chunk = Chunk {
                    values: Vec::with_capacity(hi - lo),
                    violation: None,
                    violations: 0,
                    max_large: 0,
                    small_runs: 0,
                    counts: vec![0; items * states],
                };
                for r in lo as u64..hi as u64 {
                    let phi =
                        draw_realization_with(self.inst, &mut substream(seed, Stream::States, r));
                    let order = self.order_for(order_mode, seed, r);
                    let branch = Self::branch_for(kind, seed, r);
                    let mut coins = substream(seed, Stream::Coins, r);
                    let out = self.execute(branch, &phi, order.as_slice(), &mut coins, None);
                    if out.total_cost > self.inst.budget() {
                        chunk.violations += 1;
                        chunk.violation.get_or_insert(r);
                    }
                    match branch {
                        Branch::Small => chunk.small_runs += 1,
                        Branch::Large => chunk.max_large = chunk.max_large.max(out.selected.len()),
                    }
                    for &(i, s) in &out.selected {
                        chunk.counts[i * states + s - 1] += 1;
                    }
                    chunk.values.push(self.value(&out.u));
                }
                chunk
            })
            .collect();

        let mut values = Vec::with_capacity(runs);
        let mut counts = vec![0u64; items * states];
        let (mut violations, mut max_large, mut small_runs) = (0, 0, 0);
        let mut first_violation = None;
        for c in chunks {
            values.extend(c.values);
            violations += c.violations;
            max_large = max_large.max(c.max_large);
            small_runs += c.small_runs;
            if first_violation.is_none() {
                first_violation = c.violation;
            }
            counts.iter_mut().zip(c.counts).for_each(|(a, b)| *a += b);
        }
        if let (false, Some(r)) = (self.ignore_budget, first_violation) {
            let phi = draw_realization_with(self.inst, &mut substream(seed, Stream::States, r));
            let order = self.order_for(order_mode, seed, r);
            // replay for the full record; run_indexed reports the violation
            self.run_indexed(kind, &phi, &order, seed, r)?;
        }
        Ok(SimulationSummary {
            policy: kind,
            estimate: Estimate::from_values(&values),
            budget_violations: violations,
            max_large_selected: max_large,
            small_branch_runs: small_runs,
            inclusion_counts: counts.chunks(states).map(<[u64]>::to_vec).collect(),
        })
    }

    /// Exact expected value over realizations and coin outcomes.
    pub fn exact_value(&self, kind: PolicyKind, order: &ArrivalOrder) -> Result<f64> {
        let (items, states) = (self.inst.items(), self.inst.states());
        let size = domain_size(states, items).saturating_mul(domain_size(2, items));
        if size > EXACT_POLICY_LIMIT {
            return Err(Error::capacity(
                "exact policy evaluation",
                size,
                EXACT_POLICY_LIMIT,
                "use simulate_policy_value instead",
            ));
        }
        if order.len() != items {
            return Err(Error::validation(
                "order",
                "order length differs from item count",
            ));
        }
        let mut u = vec![0; items];
        let mut branch_value = |b| self.walk(b, order.as_slice(), &mut u, 0.0);
        Ok(match kind {
            PolicyKind::Small => branch_value(Branch::Small),
            PolicyKind::Large => branch_value(Branch::Large),
            PolicyKind::Stocan => {
                0.5 * branch_value(Branch::Small) + 0.5 * branch_value(Branch::Large)
            }
        })
    }

    fn walk(&self, branch: Branch, rest: &[usize], u: &mut Vec<usize>, spent: f64) -> f64 {
        let Some((&i, tail)) = rest.split_first() else {
            return self.value(u);
        };
        let mut total = 0.0;
        for s in 1..=self.inst.states() {
            let p = self.inst.prob(i, s);
            if p == 0.0 {
                continue;
            }
            let c = self.inst.cost(i, s);
            let a = self.accept.get(i, s);
            let blocked = !self.is_candidate(branch, i, s)
                || (!self.ignore_budget && spent + c > self.inst.budget())
                || a == 0.0;
            let v = if blocked {
                self.walk(branch, tail, u, spent)
            } else {
                u[i] = s;
                let accepted = self.walk(branch, tail, u, spent + c);
                u[i] = 0;
                let rejected = self.walk(branch, tail, u, spent);
                a * accepted + (1.0 - a) * rejected
            };
            total += p * v;
        }
        total
    }
}

pub fn run_pi_small<F: LatticeFunction + Sync>(
    inst: &Instance,
    f: &F,
    y: &FractionalSolution,
    phi: &StateRealization,
    order: &ArrivalOrder,
    seed: u64,
) -> Result<RunRecord> {
    ProbingPolicy::new(inst, f, y)?.run(PolicyKind::Small, phi, order, seed)
}

pub fn run_pi_large<F: LatticeFunction + Sync>(
    inst: &Instance,
    f: &F,
    y: &FractionalSolution,
    phi: &StateRealization,
    order: &ArrivalOrder,
    seed: u64,
) -> Result<RunRecord> {
    ProbingPolicy::new(inst, f, y)?.run(PolicyKind::Large, phi, order, seed)
}

pub fn run_stocan<F: LatticeFunction + Sync>(
    inst: &Instance,
    f: &F,
    y: &FractionalSolution,
    phi: &StateRealization,
    order: &ArrivalOrder,
    seed: u64,
) -> Result<RunRecord> {
    ProbingPolicy::new(inst, f, y)?.run(PolicyKind::Stocan, phi, order, seed)
}

pub fn simulate_policy_value<F: LatticeFunction + Sync>(
    kind: PolicyKind,
    inst: &Instance,
    f: &F,
    y: &FractionalSolution,
    runs: usize,
    order_mode: &OrderMode,
    seed: u64,
) -> Result<SimulationSummary> {
    ProbingPolicy::new(inst, f, y)?.simulate(kind, runs, order_mode, seed)
}

pub fn exact_policy_value<F: LatticeFunction + Sync>(
    kind: PolicyKind,
    inst: &Instance,
    f: &F,
    y: &FractionalSolution,
    order: &ArrivalOrder,
) -> Result<f64> {
    ProbingPolicy::new(inst, f, y)?.exact_value(kind, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::draw_realization;

    fn modular(u: &[usize]) -> f64 {
        u.iter().sum::<usize>() as f64
    }

    fn frac(rows: &[Vec<f64>]) -> FractionalSolution {
        FractionalSolution::from_rows(rows).unwrap()
    }

    #[test]
    fn zero_y_selects_nothing() {
        let inst = Instance::new(&vec![vec![0.5, 0.5]; 3], &vec![vec![0.2, 0.4]; 3], 1.0).unwrap();
        let f = |u: &[usize]| 0.7 + modular(u);
        let y = FractionalSolution::zeros(3, 2);
        for seed in 0..20 {
            let phi = draw_realization(&inst, seed);
            let order = ArrivalOrder::identity(3);
            for rec in [
                run_pi_small(&inst, &f, &y, &phi, &order, seed).unwrap(),
                run_pi_large(&inst, &f, &y, &phi, &order, seed).unwrap(),
                run_stocan(&inst, &f, &y, &phi, &order, seed).unwrap(),
            ] {
                assert!(rec.selected.is_empty());
                assert_eq!(rec.value, 0.7);
                assert_eq!(rec.events.len(), 3);
            }
        }
        for kind in [PolicyKind::Small, PolicyKind::Large, PolicyKind::Stocan] {
            let v = exact_policy_value(kind, &inst, &f, &y, &ArrivalOrder::identity(3)).unwrap();
            assert!((v - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn stocan_hand_enumeration() {
        let inst = Instance::new(&[vec![0.5, 0.5]], &[vec![1.0, 2.0]], 2.0).unwrap();
        let y = frac(&[vec![0.5, 0.5]]);
        let v = exact_policy_value(
            PolicyKind::Stocan,
            &inst,
            &modular,
            &y,
            &ArrivalOrder::identity(1),
        )
        .unwrap();
        assert!((v - 0.1875).abs() < 1e-15, "{v}");
    }

    #[test]
    fn small_policy_acceptance_rate() {
        let inst = Instance::new(&[vec![1.0]], &[vec![0.5]], 1.0).unwrap();
        let y = frac(&[vec![1.0]]);
        let s = simulate_policy_value(
            PolicyKind::Small,
            &inst,
            &modular,
            &y,
            100_000,
            &OrderMode::FreshRandom,
            1,
        )
        .unwrap();
        assert!((s.inclusion_frequency(0, 1) - 0.25).abs() <= 0.006);
    }

    #[test]
    fn large_policy_acceptance_rate_and_small_discards() {
        let inst = Instance::new(&[vec![1.0]], &[vec![1.0]], 1.0).unwrap();
        let y = frac(&[vec![1.0]]);
        let s = simulate_policy_value(
            PolicyKind::Large,
            &inst,
            &modular,
            &y,
            100_000,
            &OrderMode::FreshRandom,
            2,
        )
        .unwrap();
        assert!((s.inclusion_frequency(0, 1) - 0.25).abs() <= 0.006);
        let small = simulate_policy_value(
            PolicyKind::Small,
            &inst,
            &modular,
            &y,
            1000,
            &OrderMode::FreshRandom,
            2,
        )
        .unwrap();
        assert_eq!(small.estimate.mean, 0.0);
    }

    #[test]
    fn large_policy_ignores_small_costs() {
        let inst = Instance::new(&vec![vec![0.5, 0.5]; 2], &vec![vec![0.1, 0.5]; 2], 1.0).unwrap();
        let y = frac(&vec![vec![0.5, 0.5]; 2]);
        let policy = ProbingPolicy::new(&inst, &modular, &y).unwrap();
        for seed in 0..50 {
            let phi = draw_realization(&inst, seed);
            let rec = policy
                .run(PolicyKind::Large, &phi, &ArrivalOrder::identity(2), seed)
                .unwrap();
            assert!(rec.selected.is_empty());
            assert!(rec
                .events
                .iter()
                .all(|e| e.action == Action::DiscardedBySize));
        }
    }

    #[test]
    fn branch_coin_is_fair() {
        let inst = Instance::new(&[vec![1.0]], &[vec![1.0]], 1.0).unwrap();
        let y = frac(&[vec![0.5]]);
        let s = simulate_policy_value(
            PolicyKind::Stocan,
            &inst,
            &modular,
            &y,
            100_000,
            &OrderMode::FreshRandom,
            3,
        )
        .unwrap();
        let freq = s.small_branch_runs as f64 / 100_000.0;
        assert!((freq - 0.5).abs() <= 0.006, "{freq}");
    }

    #[test]
    fn single_run_flags_stderr() {
        let inst = Instance::new(&[vec![1.0]], &[vec![1.0]], 1.0).unwrap();
        let y = frac(&[vec![0.5]]);
        let s = simulate_policy_value(
            PolicyKind::Stocan,
            &inst,
            &modular,
            &y,
            1,
            &OrderMode::FreshRandom,
            3,
        )
        .unwrap();
        assert!(s.estimate.stderr.is_none());
    }

    #[test]
    fn infeasible_y_is_rejected() {
        let inst = Instance::new(&[vec![0.5, 0.5]], &[vec![1.0, 1.0]], 1.0).unwrap();
        let over_cap = frac(&[vec![0.6, 0.0]]);
        assert!(matches!(
            ProbingPolicy::new(&inst, &modular, &over_cap),
            Err(Error::Precondition(_))
        ));
        let inst = Instance::new(&[vec![0.5, 0.5]], &[vec![3.0, 3.0]], 1.0).unwrap();
        let over_budget = frac(&[vec![0.5, 0.0]]);
        assert!(matches!(
            ProbingPolicy::new(&inst, &modular, &over_budget),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_probability_state_never_accepts() {
        let inst = Instance::new(&[vec![1.0, 0.0]], &[vec![0.5, 1.0]], 1.0).unwrap();
        let y = frac(&[vec![1.0, 0.0]]);
        let policy = ProbingPolicy::new(&inst, &modular, &y).unwrap();
        assert_eq!(policy.acceptance_probability(0, 2), 0.0);
        assert_eq!(policy.acceptance_probability(0, 1), 0.25);
    }

    #[test]
    fn bad_order_rejected() {
        assert!(ArrivalOrder::new(vec![0, 0, 1]).is_err());
        assert!(ArrivalOrder::new(vec![0, 3, 1]).is_err());
        assert!(ArrivalOrder::new(vec![2, 0, 1]).is_ok());
    }

    #[test]
    fn simulation_is_reproducible() {
        let inst = Instance::new(&vec![vec![0.3, 0.7]; 3], &vec![vec![0.2, 0.6]; 3], 1.0).unwrap();
        let y = frac(&vec![vec![0.3, 0.3]; 3]);
        let a = simulate_policy_value(
            PolicyKind::Stocan,
            &inst,
            &modular,
            &y,
            5000,
            &OrderMode::FreshRandom,
            8,
        )
        .unwrap();
        let b = simulate_policy_value(
            PolicyKind::Stocan,
            &inst,
            &modular,
            &y,
            5000,
            &OrderMode::FreshRandom,
            8,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
