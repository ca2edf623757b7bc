// SPDX-License-Identifier: Apache-2.0

//! The multilinear extension `H(x) = E[h(R)]`, where `R` contains each pair
//! `(i, s)` independently with probability `x_is`.
//!
//! `h(R)` only depends on the per-item maximum state of `R`, and those maxima
//! are independent across items. Item `i`'s maximum is `s ≥ 1` with
//! probability `x_is · Π_{s'>s} (1 − x_is')` and `0` with probability
//! `Π_s (1 − x_is)`, so `H` is an expectation over `(S+1)^I` state vectors
//! rather than `2^{IS}` subsets. [`exact_h_factored`] uses that
//! factorization; [`exact_h_bruteforce`] enumerates subsets and serves as its
//! independent check.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain_size, Error, Result};
use crate::matrix::PairMatrix;
use crate::model::{for_each_state_vector, LatticeFunction};
use crate::rng::{substream, Stream};
use crate::stats::Estimate;

/// Largest `I·S` for subset enumeration.
pub const BRUTEFORCE_PAIR_LIMIT: usize = 20;

/// Largest lattice `(S+1)^I` the factored evaluator will tabulate.
pub const FACTORED_LIMIT: u128 = 1_000_000;

const CHUNK: usize = 4096;

/// Selection probabilities `x_is ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FractionalSolution(PairMatrix);

impl FractionalSolution {
    pub fn new(x: PairMatrix) -> Result<Self> {
        for (i, s, v) in x.iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(
                    format!("x[{i}][{}]", s - 1),
                    format!("{v} is outside [0, 1]"),
                ));
            }
        }
        Ok(Self(x))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = PairMatrix::from_rows(rows)
            .ok_or_else(|| Error::validation("x", "rows have different lengths"))?;
        Self::new(m)
    }

    pub fn zeros(items: usize, states: usize) -> Self {
        Self(PairMatrix::zeros(items, states))
    }

    pub fn items(&self) -> usize {
        self.0.items()
    }

    pub fn states(&self) -> usize {
        self.0.states()
    }

    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.0.get(i, s)
    }

    pub fn matrix(&self) -> &PairMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> PairMatrix {
        self.0
    }

    /// Copy with `x_is` replaced by `value` (clamped to `[0, 1]`).
    pub fn with_entry(&self, i: usize, s: usize, value: f64) -> Self {
        let mut m = self.0.clone();
        m.set(i, s, value.clamp(0.0, 1.0));
        Self(m)
    }

    /// Entrywise `x · factor`, clamped to `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.map(|v| (v * factor).clamp(0.0, 1.0)))
    }

    /// Distribution of item `i`'s maximum selected state, indexed `0..=S`.
    pub fn max_state_distribution(&self, i: usize) -> Vec<f64> {
        let row = self.0.row(i);
        let mut q = vec![0.0; row.len() + 1];
        let mut none_above = 1.0;
        for s in (1..=row.len()).rev() {
            q[s] = row[s - 1] * none_above;
            none_above *= 1.0 - row[s - 1];
        }
        q[0] = none_above;
        q
    }
}

/// Marginal gains `ω_is`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightMatrix(pub PairMatrix);

impl WeightMatrix {
    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.0.get(i, s)
    }
}

/// `H(x)` by enumerating all `2^{IS}` subsets.
pub fn exact_h_bruteforce(x: &FractionalSolution, f: &impl LatticeFunction) -> Result<f64> {
    let (items, states) = (x.items(), x.states());
    let pairs = items * states;
    if pairs > BRUTEFORCE_PAIR_LIMIT {
        return Err(Error::capacity(
            "subset enumeration of H",
            domain_size(2, pairs),
            domain_size(2, BRUTEFORCE_PAIR_LIMIT),
            "use exact_h_factored or estimate_h",
        ));
    }
    let probs = x.matrix().as_slice();
    let mut total = 0.0;
    let mut u = vec![0usize; items];
    for mask in 0u64..(1u64 << pairs) {
        let mut weight = 1.0;
        u.iter_mut().for_each(|v| *v = 0);
        for (k, &p) in probs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                weight *= p;
                let (i, s) = (k / states, k % states + 1);
                u[i] = u[i].max(s);
            } else {
                weight *= 1.0 - p;
            }
        }
        if weight != 0.0 {
            total += weight * f.value(&u);
        }
    }
    Ok(total)
}

/// `H(x)` through the per-item maximum factorization.
pub fn exact_h_factored(x: &FractionalSolution, f: &impl LatticeFunction) -> Result<f64> {
    Ok(ObjectiveTable::new(f, x.items(), x.states())?.expectation(x))
}

/// `f` tabulated over `{0..S}^I` (item 0 varies fastest).
#[derive(Debug, Clone)]
pub struct ObjectiveTable {
    items: usize,
    states: usize,
    values: Vec<f64>,
}

impl ObjectiveTable {
    pub fn new(f: &impl LatticeFunction, items: usize, states: usize) -> Result<Self> {
        let size = domain_size(states + 1, items);
        if size > FACTORED_LIMIT {
            return Err(Error::capacity(
                "tabulating f over the state lattice",
                size,
                FACTORED_LIMIT,
                "use estimate_h or sampled marginals",
            ));
        }
        let mut values = Vec::with_capacity(size as usize);
        for_each_state_vector(items, states, |u| values.push(f.value(u)));
        Ok(Self {
            items,
            states,
            values,
        })
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Contracts every item axis except `keep` against its weight vector.
    /// Returns a vector of length `S+1` (or 1 when `keep` is `None`).
    fn contract(&self, weights: &[Vec<f64>], keep: Option<usize>) -> Vec<f64> {
        let radix = self.states + 1;
        let mut t = self.values.clone();
        // lowest axes first: items 0..keep
        let low_end = keep.unwrap_or(self.items);
        for w in &weights[..low_end] {
            t = t
                .chunks_exact(radix)
                .map(|c| c.iter().zip(w).map(|(v, q)| v * q).sum())
                .collect();
        }
        // then the highest axes down to keep+1
        if let Some(k) = keep {
            for w in weights[k + 1..].iter().rev() {
                let stride = t.len() / radix;
                t = (0..stride)
                    .map(|j| (0..radix).map(|a| t[a * stride + j] * w[a]).sum())
                    .collect();
            }
        }
        t
    }

    pub fn expectation(&self, x: &FractionalSolution) -> f64 {
        debug_assert_eq!((x.items(), x.states()), (self.items, self.states));
        let q: Vec<Vec<f64>> = (0..self.items)
            .map(|i| x.max_state_distribution(i))
            .collect();
        self.contract(&q, None)[0]
    }

    /// `ω_is = H(x ∨ 1_is) − H(x)` for every pair.
    pub fn marginal_weights(&self, x: &FractionalSolution) -> WeightMatrix {
        let q: Vec<Vec<f64>> = (0..self.items)
            .map(|i| x.max_state_distribution(i))
            .collect();
        let mut w = PairMatrix::zeros(self.items, self.states);
        for i in 0..self.items {
            // conditional[a] = E[f | item i's max is a]
            let conditional = self.contract(&q, Some(i));
            let base: f64 = conditional.iter().zip(&q[i]).map(|(v, p)| v * p).sum();
            let row = x.matrix().row(i);
            for s in 1..=self.states {
                // forcing (i, s) in: the max becomes s unless a higher state is drawn
                let mut none_above = 1.0;
                for t in s + 1..=self.states {
                    none_above *= 1.0 - row[t - 1];
                }
                let forced: f64 = conditional[s] * none_above
                    + (s + 1..=self.states)
                        .map(|t| conditional[t] * q[i][t])
                        .sum::<f64>();
                w.set(i, s, forced - base);
            }
        }
        WeightMatrix(w)
    }
}

fn draw_max_states(x: &FractionalSolution, rng: &mut impl Rng, u: &mut [usize]) {
    let states = x.states();
    for (i, slot) in u.iter_mut().enumerate() {
        *slot = 0;
        for (k, &p) in x.matrix().row(i).iter().enumerate() {
            // one uniform per pair, in (i, s) order
            if rng.gen::<f64>() < p {
                *slot = k + 1;
            }
        }
        debug_assert!(*slot <= states);
    }
}

/// Monte Carlo estimate of `H(x)` with its standard error.
pub fn estimate_h<F>(x: &FractionalSolution, f: &F, samples: usize, seed: u64) -> Estimate
where
    F: LatticeFunction + Sync,
{
    assert!(samples >= 1, "estimate_h needs at least one sample");
    let chunks = samples.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let n = CHUNK.min(samples - c * CHUNK);
            let mut rng = substream(seed, Stream::Subsets, c as u64);
            let mut u = vec![0usize; x.items()];
            (0..n)
                .map(|_| {
                    draw_max_states(x, &mut rng, &mut u);
                    f.value(&u)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Estimate::from_values(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalMode {
    Exact,
    /// Common random subsets: each draw is evaluated with and without the pair.
    Sampled {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledMarginals {
    pub weights: WeightMatrix,
    pub stderr: PairMatrix,
}

#[derive(Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Welford) -> Welford {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// Sampled marginal gains using common random subsets.
pub fn sampled_marginals<F>(
    x: &FractionalSolution,
    f: &F,
    samples: usize,
    seed: u64,
) -> SampledMarginals
where
    F: LatticeFunction + Sync,
{
    assert!(samples >= 1, "sampled_marginals needs at least one sample");
    let (items, states) = (x.items(), x.states());
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Vec<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(samples - c * CHUNK);
            let mut rng = substream(seed, Stream::Subsets, c as u64);
            let mut acc = vec![Welford::default(); items * states];
            let mut u = vec![0usize; items];
            for _ in 0..n {
                draw_max_states(x, &mut rng, &mut u);
                let base = f.value(&u);
                for i in 0..items {
                    let saved = u[i];
                    for s in 1..=states {
                        let gain = if s <= saved {
                            0.0
                        } else {
                            u[i] = s;
                            let v = f.value(&u) - base;
                            u[i] = saved;
                            v
                        };
                        acc[i * states + s - 1].push(gain);
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Welford::default(); items * states];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    let weights = PairMatrix::from_fn(items, states, |i, s| total[i * states + s - 1].mean);
    let stderr = PairMatrix::from_fn(items, states, |i, s| {
        let w = total[i * states + s - 1];
        if w.n > 1.0 {
            (w.m2 / (w.n - 1.0) / w.n).max(0.0).sqrt()
        } else {
            0.0
        }
    });
    SampledMarginals {
        weights: WeightMatrix(weights),
        stderr,
    }
}

/// `ω_is = H(x ∨ 1_is) − H(x)`, exactly or by common-random-number sampling.
pub fn marginal_weights<F>(
    x: &FractionalSolution,
    f: &F,
    mode: MarginalMode,
) -> Result<WeightMatrix>
where
    F: LatticeFunction + Sync,
{
    match mode {
        MarginalMode::Exact => {
            Ok(ObjectiveTable::new(f, x.items(), x.states())?.marginal_weights(x))
        }
        MarginalMode::Sampled { samples, seed } => {
            Ok(sampled_marginals(x, f, samples, seed).weights)
        }
    }
}
