//! Collision-based cooperative retransmission between two interfering
//! access points.
//!
//! Two APs share a channel. Each serves its own receiver, and receivers in
//! the overlap of both coverage disks are paired across APs. A packet that
//! only the partner receiver overheard is not retransmitted right away.
//! The AP waits until the other AP holds a packet in the same situation,
//! and then both retransmit at once. Each receiver knows the other AP's
//! packet already, so it can recover its own packet from the collision with
//! analog network coding.
//!
//! The crate provides:
//!
//! * [`analytic`]: closed-form expected retransmission counts and gains.
//! * [`channel`]: a counter-based Bernoulli loss channel.
//! * [`codes`]: superimposed ACK patterns.
//! * [`embrace`]: outcomes of a cooperative (collided) retransmission.
//! * [`topology`]: receiver placement and cross-AP pairing.
//! * [`simcore`]: the slotted protocol engine and its ARQ baseline.
//! * [`experiments`]: parameter sweeps, CSV/plot output and validation.

pub mod analytic;
pub mod channel;
pub mod codes;
pub mod embrace;
pub mod error;
pub mod experiments;
pub mod simcore;
pub mod topology;

pub use error::{Error, Result};

/// One of the two access points. Receiver `R_i` is the receiver served by `AP_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ApId {
    Ap1,
    Ap2,
}

impl ApId {
    pub const BOTH: [ApId; 2] = [ApId::Ap1, ApId::Ap2];

    /// Zero-based index.
    pub fn index(self) -> usize {
        match self {
            ApId::Ap1 => 0,
            ApId::Ap2 => 1,
        }
    }

    pub fn other(self) -> ApId {
        match self {
            ApId::Ap1 => ApId::Ap2,
            ApId::Ap2 => ApId::Ap1,
        }
    }

    /// One-based number as used in link labels (`1` or `2`).
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl std::fmt::Display for ApId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AP{}", self.number())
    }
}

/// Identifies a data packet: the AP that owns it and its position in the batch.
///
/// A packet of `AP_i` is always destined to `R_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketId {
    pub ap: ApId,
    pub index: u32,
}

impl PacketId {
    pub fn new(ap: ApId, index: u32) -> Self {
        PacketId { ap, index }
    }
}

impl std::fmt::Display for PacketId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c{}#{}", self.ap.number(), self.index)
    }
}
