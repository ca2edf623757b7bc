// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::file::{InstanceFile, ItemEntry};
use crate::error::{Error, Result};
use crate::model::{Curve, ObjectiveSpec};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    SeparableConcave,
    NestedCoverage,
    ConcaveOverModular,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [
        FamilyKind::SeparableConcave,
        FamilyKind::NestedCoverage,
        FamilyKind::ConcaveOverModular,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "separable_concave" => Ok(Self::SeparableConcave),
            "nested_coverage" => Ok(Self::NestedCoverage),
            "concave_over_modular" => Ok(Self::ConcaveOverModular),
            other => Err(Error::validation(
                "family",
                format!(
                    "unknown family `{other}` (expected separable_concave, nested_coverage or \
                     concave_over_modular)"
                ),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub items: usize,
    pub states: usize,
    pub cost_scale: f64,
    pub family: FamilyKind,
    pub seed: u64,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Random valid instance. Probabilities are normalized positive draws;
/// costs are cumulative positive increments, so they grow with the state.
/// The budget is a fraction of the expected total cost, raised if needed so
/// that every item's lowest state fits.
pub fn generate_instance(params: &GenParams) -> Result<InstanceFile> {
    let GenParams {
        items,
        states,
        cost_scale,
        family,
        seed,
    } = *params;
    if items == 0 {
        return Err(Error::validation("items", "must be positive"));
    }
    if states == 0 {
        return Err(Error::validation("states", "must be positive"));
    }
    if !(cost_scale.is_finite() && cost_scale > 0.0) {
        return Err(Error::validation("cost_scale", "must be positive"));
    }
    let mut rng = substream(seed, Stream::Generator, 0);

    let mut entries = Vec::with_capacity(items);
    let mut expected_cost = 0.0;
    for _ in 0..items {
        let raw: Vec<f64> = (0..states).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|v| round6(v / total)).collect();
        let head: f64 = probs[..states - 1].iter().sum();
        probs[states - 1] = round6(1.0 - head);
        let mut c = 0.0;
        let costs: Vec<f64> = (0..states)
            .map(|_| {
                c += cost_scale * rng.gen_range(0.05..1.0);
                round6(c)
            })
            .collect();
        expected_cost += probs.iter().zip(&costs).map(|(p, c)| p * c).sum::<f64>();
        entries.push(ItemEntry { probs, costs });
    }
    // every item's lowest state stays affordable on its own
    let cheapest = entries.iter().map(|e| e.costs[0]).fold(0.0, f64::max);
    let budget =
        round6((expected_cost * rng.gen_range(0.4..0.9)).max(cheapest * rng.gen_range(1.0..1.3)));

    let objective = match family {
        FamilyKind::SeparableConcave => {
            let weights = (0..items)
                .map(|_| round6(rng.gen_range(0.5..2.0)))
                .collect();
            let mut step = rng.gen_range(0.5..1.5);
            let mut acc = 0.0;
            let values = (0..states)
                .map(|_| {
                    acc += step;
                    step *= rng.gen_range(0.3..1.0);
                    round6(acc)
                })
                .collect();
            ObjectiveSpec::SeparableConcave {
                weights,
                g: Curve::Table { values },
            }
        }
        FamilyKind::NestedCoverage => {
            let elements = 2 * items * states + 2;
            let element_weights = (0..elements)
                .map(|_| round6(rng.gen_range(0.5..2.0)))
                .collect();
            let covers = (0..items)
                .map(|_| {
                    let mut set = vec![false; elements];
                    (0..states)
                        .map(|_| {
                            for slot in set.iter_mut() {
                                if rng.gen_bool(0.2) {
                                    *slot = true;
                                }
                            }
                            // each state covers at least one element
                            set[rng.gen_range(0..elements)] = true;
                            (0..elements).filter(|&e| set[e]).collect()
                        })
                        .collect()
                })
                .collect();
            ObjectiveSpec::NestedCoverage {
                element_weights,
                covers,
            }
        }
        FamilyKind::ConcaveOverModular => {
            let mut top = 0.0;
            let levels: Vec<Vec<f64>> = (0..items)
                .map(|_| {
                    let mut a = 0.0;
                    let row: Vec<f64> = (0..states)
                        .map(|_| {
                            a += rng.gen_range(0.2..1.0);
                            round6(a)
                        })
                        .collect();
                    top += a;
                    row
                })
                .collect();
            ObjectiveSpec::ConcaveOverModular {
                levels,
                g: Curve::Capped {
                    cap: round6(top * rng.gen_range(0.4..0.9)),
                },
            }
        }
    };

    let file = InstanceFile {
        items: entries,
        budget,
        objective,
        generator: Some(*params),
    };
    file.build()?;
    Ok(file)
}

/// Parameters of the bundled 20-instance reference suite (at most 3 items
/// and 2 states, all three families).
pub fn reference_suite() -> Vec<GenParams> {
    (0..20)
        .map(|k: usize| GenParams {
            items: 1 + (k / 2) % 3,
            states: 1 + k % 2,
            cost_scale: 1.0,
            family: FamilyKind::ALL[k % 3],
            seed: 1000 + k as u64,
        })
        .collect()
}
