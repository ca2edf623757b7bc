// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Runs every criterion, prints one line each, and exits
//! non-zero if any fails. Expected values come from independent oracles
//! (brute-force extension, naive optimal policy, grid search), never from
//! the code under test.

mod common;

use std::f64::consts::E;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use common::{instance_batch, random_point, rng, within_below};
use stoprobe::extension::{estimate_h, exact_h_bruteforce, exact_h_factored, FractionalSolution};
use stoprobe::matrix::PairMatrix;
use stoprobe::model::draw_realization;
use stoprobe::optimizer::{
    continuous_greedy, solve_inner_lp, split_solution, GreedyConfig, GreedyMarginals,
};
use stoprobe::oracle::{optimal_policy_value, optimal_policy_value_unmemoized};
use stoprobe::policies::{
    ArrivalOrder, Branch, OrderMode, PolicyKind, ProbingPolicy, SimulationSummary,
};
use stoprobe::rng::{child_seed, substream, Stream};
use stoprobe::{Instance, Objective, WeightMatrix};

const RUNS: usize = 100_000;
const ORDERS: u64 = 10;
const GREEDY: f64 = 1.0 - 1.0 / E;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

/// One oracle-sized instance with everything the policy criteria share.
struct Case {
    inst: Instance,
    f: Objective,
    y: FractionalSolution,
    y_small: FractionalSolution,
    h_small: f64,
    h_large: f64,
    h_y: f64,
    opt: f64,
    opt_naive: f64,
    small: SimulationSummary,
    large: SimulationSummary,
    stocan: SimulationSummary,
    orders: Vec<(ArrivalOrder, SimulationSummary)>,
}

fn build_cases() -> Vec<Case> {
    instance_batch(20, 3, 2, 9000)
        .into_iter()
        .enumerate()
        .map(|(k, (inst, f))| {
            let cfg = GreedyConfig {
                rounds: 200,
                marginals: GreedyMarginals::Exact,
                seed: 0,
            };
            let y = continuous_greedy(&inst, &f, &cfg).unwrap();
            let (y_small, y_large) = split_solution(&y, &inst);
            let h = |x: &FractionalSolution| exact_h_bruteforce(x, &f).unwrap();
            let policy = ProbingPolicy::new(&inst, &f, &y).unwrap();
            let seed = 40 + k as u64;
            let identity = OrderMode::Fixed(ArrivalOrder::identity(inst.items()));
            let sim = |kind, mode: &OrderMode| policy.simulate(kind, RUNS, mode, seed).unwrap();
            let orders = (0..ORDERS)
                .map(|j| {
                    let order =
                        ArrivalOrder::random(inst.items(), &mut substream(seed, Stream::Order, j));
                    let s = sim(PolicyKind::Stocan, &OrderMode::Fixed(order.clone()));
                    (order, s)
                })
                .collect();
            Case {
                h_small: h(&y_small),
                h_large: h(&y_large),
                h_y: h(&y),
                opt: optimal_policy_value(&inst, &f).unwrap().value,
                opt_naive: optimal_policy_value_unmemoized(&inst, &f).unwrap(),
                small: sim(PolicyKind::Small, &identity),
                large: sim(PolicyKind::Large, &identity),
                stocan: sim(PolicyKind::Stocan, &identity),
                orders,
                y_small,
                y,
                inst,
                f,
            }
        })
        .collect()
}

fn split_subadditivity() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for (inst, f) in instance_batch(50, 5, 3, 7000) {
        let y = continuous_greedy(&inst, &f, &GreedyConfig::default()).unwrap();
        let (small, large) = split_solution(&y, &inst);
        let h = |x: &FractionalSolution| exact_h_bruteforce(x, &f).unwrap();
        let margin = h(&small) + h(&large) - h(&y);
        worst = worst.min(margin);
        if margin < -1e-12 {
            failures += 1;
        }
    }
    Outcome::new(
        failures == 0,
        format!("50 instances (I<=5, S<=3), min H(ys)+H(yl)-H(y) = {worst:.3e}"),
    )
}

fn greedy_vs_optimum(cases: &[Case]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for c in cases {
        ok &= (c.opt - c.opt_naive).abs() <= 1e-9;
        let margin = c.h_y - (GREEDY * c.opt - 0.02);
        worst = worst.min(margin);
        ok &= margin >= 0.0;
    }
    Outcome::new(
        ok,
        format!("20 instances (I<=3, S<=2, T=200), min H(y)-((1-1/e)OPT-0.02) = {worst:.4}"),
    )
}

fn stocan_bound(cases: &[Case]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for c in cases {
        let e = c.stocan.estimate;
        ok &= within_below(e.mean, GREEDY / 16.0 * c.opt, e.se());
        worst = worst.min(e.mean - GREEDY / 16.0 * c.opt);
    }
    Outcome::new(
        ok,
        format!("20 instances x 1e5 runs, min stocan-(1-1/e)/16*OPT = {worst:.4}"),
    )
}

fn branch_bounds(cases: &[Case]) -> Outcome {
    let (mut worst_small, mut worst_large) = (f64::INFINITY, f64::INFINITY);
    let mut ok = true;
    for c in cases {
        let (s, l) = (c.small.estimate, c.large.estimate);
        ok &= within_below(s.mean, c.h_small / 8.0, s.se());
        ok &= within_below(l.mean, c.h_large / 8.0, l.se());
        worst_small = worst_small.min(s.mean - c.h_small / 8.0);
        worst_large = worst_large.min(l.mean - c.h_large / 8.0);
    }
    Outcome::new(
        ok,
        format!("min small-H(ys)/8 = {worst_small:.4}, min large-H(yl)/8 = {worst_large:.4}"),
    )
}

fn feasibility(cases: &[Case]) -> Outcome {
    let mut total_runs = 0u64;
    let mut violations = 0u64;
    let mut max_large = 0usize;
    for c in cases {
        let summaries = [&c.small, &c.large, &c.stocan]
            .into_iter()
            .chain(c.orders.iter().map(|(_, s)| s));
        for s in summaries {
            total_runs += s.runs();
            violations += s.budget_violations;
            if s.policy != PolicyKind::Small {
                max_large = max_large.max(s.max_large_selected);
            }
        }
    }
    // Independent replay: recompute every run's spend from the instance.
    let mut replayed = 0u64;
    for (k, c) in cases.iter().enumerate() {
        let policy = ProbingPolicy::new(&c.inst, &c.f, &c.y).unwrap();
        let order = ArrivalOrder::identity(c.inst.items());
        for r in 0..5_000u64 {
            let phi = draw_realization(&c.inst, child_seed(k as u64, Stream::States, r));
            let rec = policy
                .run(
                    PolicyKind::Stocan,
                    &phi,
                    &order,
                    child_seed(k as u64, Stream::Coins, r),
                )
                .unwrap();
            let spend: f64 = rec.selected.iter().map(|&(i, s)| c.inst.cost(i, s)).sum();
            if spend > c.inst.budget() {
                violations += 1;
            }
            if rec.branch == Branch::Large {
                max_large = max_large.max(rec.selected.len());
            }
            replayed += 1;
        }
    }
    total_runs += replayed;
    Outcome::new(
        total_runs >= 1_000_000 && violations == 0 && max_large <= 1,
        format!("{total_runs} runs, {violations} budget violations, max large |G| = {max_large}"),
    )
}

fn online_orders(cases: &[Case]) -> Outcome {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for c in cases {
        for (_, s) in &c.orders {
            let bound = GREEDY / 16.0 * c.opt;
            ok &= within_below(s.estimate.mean, bound, s.estimate.se());
            worst = worst.min(s.estimate.mean - bound);
        }
    }
    Outcome::new(
        ok,
        format!("20 instances x {ORDERS} random orders, min stocan-bound = {worst:.4}"),
    )
}

/// Shapes with `I·S ≤ 12` and a generated objective on each.
fn small_objectives(count: usize, seed: u64) -> Vec<(usize, usize, Objective)> {
    let shapes = [
        (1, 1),
        (2, 1),
        (2, 2),
        (3, 2),
        (2, 3),
        (4, 3),
        (3, 4),
        (6, 2),
        (12, 1),
        (4, 2),
    ];
    (0..count)
        .map(|k| {
            let (items, states) = shapes[k % shapes.len()];
            let (_, f) = common::generated(
                items,
                states,
                stoprobe::harness::FamilyKind::ALL[k % 3],
                seed + k as u64,
            );
            (items, states, f)
        })
        .collect()
}

fn extension_oracles() -> Outcome {
    let mut r = rng(77);
    let mut notes = Vec::new();
    let mut ok = true;

    let mut worst = 0.0f64;
    for (items, states, f) in small_objectives(100, 300) {
        let x = random_point(items, states, &mut r);
        let d = (exact_h_factored(&x, &f).unwrap() - exact_h_bruteforce(&x, &f).unwrap()).abs();
        worst = worst.max(d);
    }
    ok &= worst <= 1e-12;
    notes.push(format!("factored vs bruteforce max {worst:.1e}"));

    let mut misses = 0;
    for (k, (items, states, f)) in small_objectives(50, 500).into_iter().enumerate() {
        let x = random_point(items, states, &mut r);
        let exact = exact_h_bruteforce(&x, &f).unwrap();
        let est = estimate_h(&x, &f, 100_000, 900 + k as u64);
        if (est.mean - exact).abs() > 4.0 * est.se() + 1e-12 {
            misses += 1;
        }
    }
    ok &= misses == 0;
    notes.push(format!("estimate misses {misses}/50"));

    let mut affine = 0.0f64;
    let mut curvature = f64::NEG_INFINITY;
    let mut scaling_ok = true;
    for (items, states, f) in small_objectives(50, 700) {
        let x = random_point(items, states, &mut r);
        let h = |x: &FractionalSolution| exact_h_bruteforce(x, &f).unwrap();
        let (i, s) = (r.gen_range(0..items), r.gen_range(1..=states));
        let (h0, h1) = (h(&x.with_entry(i, s, 0.0)), h(&x.with_entry(i, s, 1.0)));
        for t in [0.1, 0.25, 0.5, 0.9, r.gen::<f64>()] {
            affine = affine.max((h(&x.with_entry(i, s, t)) - ((1.0 - t) * h0 + t * h1)).abs());
        }

        let eps = 0.05;
        let base = FractionalSolution::new(PairMatrix::from_fn(items, states, |_, _| {
            r.gen::<f64>() * 0.9
        }))
        .unwrap();
        let dir = PairMatrix::from_fn(items, states, |i, s| {
            r.gen::<f64>() * ((1.0 - base.get(i, s)) / (2.0 * eps)).min(1.0)
        });
        let at = |t: f64| {
            FractionalSolution::new(PairMatrix::from_fn(items, states, |i, s| {
                (base.get(i, s) + t * dir.get(i, s)).min(1.0)
            }))
            .unwrap()
        };
        curvature = curvature.max(h(&at(2.0 * eps)) - 2.0 * h(&at(eps)) + h(&at(0.0)));

        let hx = h(&x);
        scaling_ok &= h(&x.scaled(0.25)) >= hx / 4.0 - 1e-12;
        scaling_ok &= h(&x.scaled(0.125)) >= hx / 8.0 - 1e-12;
    }
    ok &= affine <= 1e-12 && curvature <= 1e-9 && scaling_ok;
    notes.push(format!(
        "affine dev {affine:.1e}, max second diff {curvature:.1e}, scaling {}",
        if scaling_ok { "ok" } else { "violated" }
    ));
    Outcome::new(ok, notes.join("; "))
}

/// Best LP value over a grid of resolution `1e-3`. The optimum of a box
/// with one knapsack row sits at a vertex, where every coordinate but one is
/// at a bound, so the search fixes all but one coordinate to `{0, cap}` and
/// sweeps the remaining one across the grid.
fn grid_oracle(w: &[f64], caps: &[f64], costs: &[f64], budget: f64) -> f64 {
    let n = w.len();
    let mut best = 0.0f64;
    for free in 0..n {
        for mask in 0u32..(1 << n) {
            if mask & (1 << free) != 0 {
                continue;
            }
            let (mut value, mut spend) = (0.0, 0.0);
            for k in (0..n).filter(|&k| mask & (1 << k) != 0) {
                value += w[k] * caps[k];
                spend += costs[k] * caps[k];
            }
            if spend > budget + 1e-12 {
                continue;
            }
            let steps = (caps[free] * 1000.0).floor() as usize;
            for g in 0..=steps {
                let t = g as f64 * 1e-3;
                if spend + costs[free] * t <= budget + 1e-12 {
                    best = best.max(value + w[free] * t);
                }
            }
        }
    }
    best
}

/// Every point of the full `1e-3` grid, for two coordinates.
fn full_grid(w: &[f64], caps: &[f64], costs: &[f64], budget: f64) -> f64 {
    let mut best = 0.0f64;
    let steps = |k: usize| (caps[k] * 1000.0).floor() as usize;
    for a in 0..=steps(0) {
        for b in 0..=steps(1) {
            let (ta, tb) = (a as f64 * 1e-3, b as f64 * 1e-3);
            if costs[0] * ta + costs[1] * tb <= budget + 1e-12 {
                best = best.max(w[0] * ta + w[1] * tb);
            }
        }
    }
    best
}

fn inner_lp() -> Outcome {
    let mut r = rng(88);
    let mut worst = f64::INFINITY;
    let mut feasible = true;
    for k in 0..200 {
        let shapes = [
            (1, 1),
            (2, 1),
            (1, 2),
            (3, 1),
            (2, 2),
            (3, 2),
            (2, 3),
            (6, 1),
            (1, 6),
            (4, 1),
        ];
        let (items, states) = shapes[k % shapes.len()];
        let probs: Vec<Vec<f64>> = (0..items)
            .map(|_| {
                let raw: Vec<f64> = (0..states).map(|_| r.gen_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let mut p: Vec<f64> = raw.iter().map(|v| v / total).collect();
                p[states - 1] = 1.0 - p[..states - 1].iter().sum::<f64>();
                p
            })
            .collect();
        let costs: Vec<Vec<f64>> = (0..items)
            .map(|_| {
                let mut c = 0.0;
                (0..states)
                    .map(|_| {
                        // occasionally free, to exercise zero-cost pairs
                        c += if r.gen_bool(0.1) {
                            0.0
                        } else {
                            r.gen_range(0.05..1.0)
                        };
                        c
                    })
                    .collect()
            })
            .collect();
        let budget = r.gen_range(0.05..1.5);
        let inst = Instance::new(&probs, &costs, budget).unwrap();
        let w = WeightMatrix(PairMatrix::from_fn(items, states, |_, _| {
            r.gen_range(-0.5..2.0)
        }));
        let lp = solve_inner_lp(&w, &inst).unwrap();

        let flat = |m: &PairMatrix| m.as_slice().to_vec();
        let (wv, caps, cv) = (flat(&w.0), flat(inst.probs()), flat(inst.costs()));
        let mut oracle = grid_oracle(&wv, &caps, &cv, budget);
        if wv.len() == 2 {
            oracle = oracle.max(full_grid(&wv, &caps, &cv, budget));
        }
        worst = worst.min(lp.objective_value - oracle);
        let spend = lp.x.matrix().dot(inst.costs());
        feasible &= spend <= budget + 1e-9;
        feasible &=
            lp.x.matrix()
                .iter()
                .all(|(i, s, v)| v >= 0.0 && v <= inst.prob(i, s) + 1e-9);
    }
    Outcome::new(
        worst >= -1e-2 && feasible,
        format!(
            "200 LPs, min density greedy - grid oracle = {worst:.2e}, constraints {}",
            if feasible { "met" } else { "violated" }
        ),
    )
}

fn unbudgeted_small(cases: &[Case]) -> Outcome {
    let mut ok = true;
    let mut pairs = 0;
    let mut worst = f64::INFINITY;
    for (k, c) in cases.iter().enumerate() {
        let policy = ProbingPolicy::new(&c.inst, &c.f, &c.y)
            .unwrap()
            .without_budget();
        let order = OrderMode::Fixed(ArrivalOrder::identity(c.inst.items()));
        let s = policy
            .simulate(PolicyKind::Small, RUNS, &order, 600 + k as u64)
            .unwrap();
        for i in 0..c.inst.items() {
            for st in 1..=c.inst.states() {
                if c.inst.is_large(i, st) {
                    continue;
                }
                let q = c.y_small.get(i, st) / 4.0;
                let freq = s.inclusion_frequency(i, st);
                let se = (q * (1.0 - q) / s.runs() as f64).sqrt();
                ok &= (freq - q).abs() <= 4.0 * se + 1e-12;
                pairs += 1;
            }
        }
        ok &= within_below(s.estimate.mean, c.h_small / 4.0, s.estimate.se());
        worst = worst.min(s.estimate.mean - c.h_small / 4.0);
    }
    Outcome::new(
        ok,
        format!("{pairs} small pairs at y/4, min E[h(G')]-H(ys)/4 = {worst:.4}"),
    )
}

fn deterministic_reports() -> Outcome {
    let suite = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("suite");
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_stoprobe"))
            .args(["verify", "--seed", "31", "--runs", "20000", "--instance"])
            .arg(&suite)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        (status.status.code(), std::fs::read(out).unwrap())
    };
    let (code_a, a) = run("a.json");
    let (code_b, b) = run("b.json");
    Outcome::new(
        code_a == Some(0) && code_b == Some(0) && a == b,
        format!("two verify runs on the bundled suite: exit {code_a:?}/{code_b:?}, {} bytes, identical: {}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "split subadditivity", split_subadditivity()));
    let cases = build_cases();
    results.push((
        2,
        "continuous greedy vs optimal policy",
        greedy_vs_optimum(&cases),
    ));
    results.push((3, "StoCan approximation bound", stocan_bound(&cases)));
    results.push((4, "small and large policy bounds", branch_bounds(&cases)));
    results.push((5, "budget feasibility", feasibility(&cases)));
    results.push((6, "arrival-order robustness", online_orders(&cases)));
    results.push((7, "extension oracles", extension_oracles()));
    results.push((8, "inner LP vs grid search", inner_lp()));
    results.push((9, "unbudgeted small policy", unbudgeted_small(&cases)));
    results.push((10, "report determinism", deterministic_reports()));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {n}: {name}: {}", o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
