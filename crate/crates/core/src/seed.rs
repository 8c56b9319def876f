//! Stable seed derivation.
//!
//! Every random task (a split repeat, a CV fold, a forest tree, a loss
//! slot) receives a seed computed from its parent seed and a stable index,
//! so results never depend on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep sibling derivations from colliding when they share an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    SplitRepeat = 1,
    Tree = 2,
    LossSlot = 3,
    VoteMember = 4,
    CvFolds = 5,
    CvModel = 6,
    StackFolds = 7,
    StackFoldModel = 8,
    StackFullModel = 9,
    Tuning = 10,
    Pipeline = 11,
    Node = 12,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(parent, stream, index)`.
pub fn derive(parent: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(parent ^ (stream as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(a ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
