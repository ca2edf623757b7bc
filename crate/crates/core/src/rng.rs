// SPDX-License-Identifier: Apache-2.0

//! Named, deterministically derived random substreams.
//!
//! Every consumer of randomness takes a master seed and asks for the stream
//! belonging to a `(purpose, index)` pair. Two consumers that ask for the same
//! pair see the same numbers, which is how different policies get replayed
//! against identical state realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag for a substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Item state realizations, one substream per run.
    States,
    /// Accept/reject coins inside a policy run.
    Coins,
    /// StoCan's branch coin.
    Branch,
    /// Random arrival orders.
    Order,
    /// Monte Carlo subset draws for `H` and marginal weights.
    Subsets,
    /// Instance generation.
    Generator,
    /// Sampled-mode property checkers.
    Checker,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::States => 0x5354_4154_4553,
            Stream::Coins => 0x0043_4f49_4e53,
            Stream::Branch => 0x4252_414e_4348,
            Stream::Order => 0x004f_5244_4552,
            Stream::Subsets => 0x5355_4253_4554,
            Stream::Generator => 0x4745_4e45_5241,
            Stream::Checker => 0x0043_4845_434b,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Substream `index` of `purpose` under `master`.
pub fn substream(master: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let key = splitmix64(master ^ splitmix64(purpose.tag()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Derives a child master seed, e.g. one per round of an outer loop.
pub fn child_seed(master: u64, purpose: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ purpose.tag()).wrapping_add(index))
}
