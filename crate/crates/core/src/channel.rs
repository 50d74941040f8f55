//! Counter-based Bernoulli loss channel.
//!
//! Every outcome is a pure function of `(seed, link, slot)`. The uniform
//! variate for a query is the `slot`-th output of a SplitMix64 stream whose
//! state is keyed by the seed and the link, so the ARQ baseline and the
//! cooperative scheme see the same losses in the same slots no matter in
//! which order they query them.

use crate::analytic::LossMatrix;
use crate::ApId;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed ^ 0x5851_f42d_4c95_7f2d).wrapping_add(tag.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Directed link from an AP to one of the two paired receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub from: ApId,
    pub to: ApId,
}

impl Link {
    pub const L11: Link = Link { from: ApId::Ap1, to: ApId::Ap1 };
    pub const L12: Link = Link { from: ApId::Ap1, to: ApId::Ap2 };
    pub const L21: Link = Link { from: ApId::Ap2, to: ApId::Ap1 };
    pub const L22: Link = Link { from: ApId::Ap2, to: ApId::Ap2 };

    pub fn new(from: ApId, to: ApId) -> Self {
        Link { from, to }
    }

    fn salt(self) -> u64 {
        // arbitrary odd constants, one per link
        const SALTS: [u64; 4] = [
            0x243f_6a88_85a3_08d3,
            0x1319_8a2e_0370_7345,
            0xa409_3822_299f_31d1,
            0x082e_fa98_ec4e_6c89,
        ];
        SALTS[self.from.index() * 2 + self.to.index()]
    }
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.from.number(), self.to.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Delivered,
    Lost,
}

impl Outcome {
    pub fn is_delivered(self) -> bool {
        self == Outcome::Delivered
    }
}

/// A seeded realization of the four-link loss process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    seed: u64,
    loss: LossMatrix,
    link_keys: [u64; 4],
}

impl ChannelRealization {
    pub fn new(seed: u64, loss: LossMatrix) -> Self {
        let key = |link: Link| mix64(seed ^ link.salt());
        ChannelRealization {
            seed,
            loss,
            link_keys: [key(Link::L11), key(Link::L12), key(Link::L21), key(Link::L22)],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn loss(&self) -> &LossMatrix {
        &self.loss
    }

    /// Uniform variate in `[0, 1)` attached to `(link, slot)`.
    pub fn uniform(&self, link: Link, slot: u64) -> f64 {
        let key = self.link_keys[link.from.index() * 2 + link.to.index()];
        let bits = mix64(key.wrapping_add(slot.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn link_outcome(&self, link: Link, slot: u64) -> Outcome {
        if self.uniform(link, slot) < self.loss.get(link.from, link.to) {
            Outcome::Lost
        } else {
            Outcome::Delivered
        }
    }
}
