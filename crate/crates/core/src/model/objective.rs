// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::LatticeFunction;
use crate::error::{Error, Result};

/// Concave nondecreasing scalar curve with `g(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    /// `g(t) = slope · t`
    Linear { slope: f64 },
    /// `g(t) = min(t, cap)`
    Capped { cap: f64 },
    /// `g(t) = √t`
    Sqrt,
    /// `g(t) = ln(1 + t)`
    Log1p,
    /// Tabulated `g(1), g(2), …` joined linearly through `g(0) = 0` and held
    /// constant past the last point.
    Table { values: Vec<f64> },
}

impl Curve {
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Curve::Linear { slope } => slope * t,
            Curve::Capped { cap } => t.min(*cap),
            Curve::Sqrt => t.sqrt(),
            Curve::Log1p => t.ln_1p(),
            Curve::Table { values } => {
                let at = |k: usize| if k == 0 { 0.0 } else { values[k - 1] };
                let n = values.len();
                if t >= n as f64 {
                    return at(n);
                }
                let k = t.floor() as usize;
                let frac = t - k as f64;
                at(k) + frac * (at(k + 1) - at(k))
            }
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        match self {
            Curve::Linear { slope } if !(slope.is_finite() && *slope >= 0.0) => {
                Err(Error::validation(
                    format!("{path}.slope"),
                    "slope must be finite and nonnegative",
                ))
            }
            Curve::Capped { cap } if !(cap.is_finite() && *cap >= 0.0) => Err(Error::validation(
                format!("{path}.cap"),
                "cap must be finite and nonnegative",
            )),
            Curve::Table { values } => {
                let mut prev = 0.0;
                let mut prev_step = f64::INFINITY;
                for (k, &v) in values.iter().enumerate() {
                    let at = format!("{path}.values[{k}]");
                    if !v.is_finite() {
                        return Err(Error::validation(at, "value must be finite"));
                    }
                    let step = v - prev;
                    if step < 0.0 {
                        return Err(Error::validation(at, "curve must be nondecreasing"));
                    }
                    // second difference ≤ 0
                    if step > prev_step + 1e-12 {
                        return Err(Error::validation(
                            at,
                            format!("curve must be concave: step {step} follows step {prev_step}"),
                        ));
                    }
                    prev = v;
                    prev_step = step;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Declarative objective description, as stored in instance files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `f(u) = Σ_i w_i · g(u(i))`
    SeparableConcave { weights: Vec<f64>, g: Curve },
    /// `f(u) = weight(∪_i C_i(u(i)))`; `covers[i][s-1]` lists `C_i(s)`, which
    /// must grow with `s`. `C_i(0) = ∅`.
    NestedCoverage {
        element_weights: Vec<f64>,
        covers: Vec<Vec<Vec<usize>>>,
    },
    /// `f(u) = g(Σ_i a_i(u(i)))`; `levels[i][s-1] = a_i(s)`, `a_i(0) = 0`.
    ConcaveOverModular { levels: Vec<Vec<f64>>, g: Curve },
}

impl ObjectiveSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ObjectiveSpec::SeparableConcave { .. } => "separable_concave",
            ObjectiveSpec::NestedCoverage { .. } => "nested_coverage",
            ObjectiveSpec::ConcaveOverModular { .. } => "concave_over_modular",
        }
    }
}

/// A validated objective bound to `items x states`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    spec: ObjectiveSpec,
    items: usize,
    states: usize,
    // nested_coverage only: bitset per (i, s), row-major, `words` u64s each.
    cover_bits: Vec<u64>,
    words: usize,
}

impl Objective {
    pub fn new(spec: ObjectiveSpec, items: usize, states: usize) -> Result<Self> {
        let (cover_bits, words) = validate(&spec, items, states)?;
        Ok(Self {
            spec,
            items,
            states,
            cover_bits,
            words,
        })
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn family(&self) -> &'static str {
        self.spec.family()
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn states(&self) -> usize {
        self.states
    }
}

impl LatticeFunction for Objective {
    fn value(&self, u: &[usize]) -> f64 {
        debug_assert_eq!(u.len(), self.items);
        match &self.spec {
            ObjectiveSpec::SeparableConcave { weights, g } => weights
                .iter()
                .zip(u)
                .map(|(w, &s)| w * g.eval(s as f64))
                .sum(),
            ObjectiveSpec::ConcaveOverModular { levels, g } => {
                let t: f64 = levels
                    .iter()
                    .zip(u)
                    .map(|(a, &s)| if s == 0 { 0.0 } else { a[s - 1] })
                    .sum();
                g.eval(t)
            }
            ObjectiveSpec::NestedCoverage {
                element_weights, ..
            } => {
                let mut covered = vec![0u64; self.words];
                for (i, &s) in u.iter().enumerate() {
                    if s == 0 {
                        continue;
                    }
                    let base = (i * self.states + s - 1) * self.words;
                    for (w, bits) in covered
                        .iter_mut()
                        .zip(&self.cover_bits[base..base + self.words])
                    {
                        *w |= bits;
                    }
                }
                let mut total = 0.0;
                for (w, &word) in covered.iter().enumerate() {
                    let mut word = word;
                    while word != 0 {
                        let b = word.trailing_zeros() as usize;
                        total += element_weights[w * 64 + b];
                        word &= word - 1;
                    }
                }
                total
            }
        }
    }
}

fn check_len(path: String, len: usize, expected: usize) -> Result<()> {
    if len != expected {
        return Err(Error::validation(
            path,
            format!("expected {expected} entries, found {len}"),
        ));
    }
    Ok(())
}

fn check_nonneg(path: String, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::validation(
            path,
            format!("{v} must be finite and nonnegative"),
        ));
    }
    Ok(())
}

fn validate(spec: &ObjectiveSpec, items: usize, states: usize) -> Result<(Vec<u64>, usize)> {
    match spec {
        ObjectiveSpec::SeparableConcave { weights, g } => {
            check_len("objective.weights".into(), weights.len(), items)?;
            for (i, &w) in weights.iter().enumerate() {
                check_nonneg(format!("objective.weights[{i}]"), w)?;
            }
            g.validate("objective.g")?;
            Ok((Vec::new(), 0))
        }
        ObjectiveSpec::ConcaveOverModular { levels, g } => {
            check_len("objective.levels".into(), levels.len(), items)?;
            for (i, row) in levels.iter().enumerate() {
                check_len(format!("objective.levels[{i}]"), row.len(), states)?;
                let mut prev = 0.0;
                for (k, &a) in row.iter().enumerate() {
                    let path = format!("objective.levels[{i}][{k}]");
                    check_nonneg(path.clone(), a)?;
                    if a < prev {
                        return Err(Error::validation(
                            path,
                            "levels must be nondecreasing in the state",
                        ));
                    }
                    prev = a;
                }
            }
            g.validate("objective.g")?;
            Ok((Vec::new(), 0))
        }
        ObjectiveSpec::NestedCoverage {
            element_weights,
            covers,
        } => {
            for (e, &w) in element_weights.iter().enumerate() {
                check_nonneg(format!("objective.element_weights[{e}]"), w)?;
            }
            check_len("objective.covers".into(), covers.len(), items)?;
            let elements = element_weights.len();
            let words = elements.div_ceil(64).max(1);
            let mut bits = vec![0u64; items * states * words];
            for (i, per_state) in covers.iter().enumerate() {
                check_len(format!("objective.covers[{i}]"), per_state.len(), states)?;
                for (k, set) in per_state.iter().enumerate() {
                    let base = (i * states + k) * words;
                    for (j, &e) in set.iter().enumerate() {
                        if e >= elements {
                            return Err(Error::validation(
                                format!("objective.covers[{i}][{k}][{j}]"),
                                format!("element {e} does not exist ({elements} elements)"),
                            ));
                        }
                        bits[base + e / 64] |= 1 << (e % 64);
                    }
                    if k > 0 {
                        let prev = base - words;
                        for w in 0..words {
                            if bits[prev + w] & !bits[base + w] != 0 {
                                return Err(Error::validation(
                                    format!("objective.covers[{i}][{k}]"),
                                    format!(
                                        "covers must be nested: state {} of item {i} does not \
                                         contain the cover of state {k}",
                                        k + 1
                                    ),
                                ));
                            }
                        }
                    }
                }
            }
            Ok((bits, words))
        }
    }
}
