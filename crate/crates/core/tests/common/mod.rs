// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stoprobe::extension::FractionalSolution;
use stoprobe::harness::{generate_instance, FamilyKind, GenParams};
use stoprobe::matrix::PairMatrix;
use stoprobe::rng::{substream, Stream};
use stoprobe::{Instance, Objective};

pub fn generated(
    items: usize,
    states: usize,
    family: FamilyKind,
    seed: u64,
) -> (Instance, Objective) {
    generate_instance(&GenParams {
        items,
        states,
        cost_scale: 1.0,
        family,
        seed,
    })
    .and_then(|file| file.build())
    .expect("generator output is valid")
}

/// `count` instances cycling through the families, with `items` and
/// `states` cycling through `1..=max_items` and `1..=max_states`.
pub fn instance_batch(
    count: usize,
    max_items: usize,
    max_states: usize,
    seed: u64,
) -> Vec<(Instance, Objective)> {
    (0..count)
        .map(|k| {
            let items = 1 + k % max_items;
            let states = 1 + (k / max_items) % max_states;
            generated(items, states, FamilyKind::ALL[k % 3], seed + k as u64)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    substream(seed, Stream::Checker, 0)
}

/// Uniform point of `[0, 1]^{I×S}`.
pub fn random_point(items: usize, states: usize, rng: &mut impl Rng) -> FractionalSolution {
    FractionalSolution::new(PairMatrix::from_fn(items, states, |_, _| rng.gen::<f64>())).unwrap()
}

/// Four-sigma tolerance check: `value ≥ bound − 4·se`.
pub fn within_below(value: f64, bound: f64, se: f64) -> bool {
    value >= bound - 4.0 * se
}
