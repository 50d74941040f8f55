//! Reception of a cooperative retransmission, where both APs transmit at once.
//!
//! Analog network coding is modeled at packet granularity: a receiver that
//! got the collided packet intact and already knows one of the two
//! constituents recovers the other one.

use std::collections::BTreeSet;

use crate::channel::{ChannelRealization, Link};
use crate::{ApId, Error, PacketId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionOutcome {
    /// Both constituents arrived intact.
    Sa,
    /// At least one constituent was corrupted; the collision is undecodable.
    Sb,
}

/// Packets a receiver holds from opportunistic listening.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SideInfo {
    known: BTreeSet<PacketId>,
}

impl SideInfo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: PacketId) -> bool {
        self.known.insert(id)
    }

    pub fn contains(&self, id: PacketId) -> bool {
        self.known.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }
}

impl FromIterator<PacketId> for SideInfo {
    fn from_iter<I: IntoIterator<Item = PacketId>>(iter: I) -> Self {
        SideInfo {
            known: iter.into_iter().collect(),
        }
    }
}

/// What receiver `R_receiver` gets when both APs transmit in `slot`.
///
/// Success needs both the own link `ii` and the interfering link `ji`.
pub fn collision_reception(
    realization: &ChannelRealization,
    receiver: ApId,
    slot: u64,
) -> CollisionOutcome {
    let own = realization.link_outcome(Link::new(receiver, receiver), slot);
    let cross = realization.link_outcome(Link::new(receiver.other(), receiver), slot);
    if own.is_delivered() && cross.is_delivered() {
        CollisionOutcome::Sa
    } else {
        CollisionOutcome::Sb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncDecode {
    Decoded(PacketId),
    Failed,
}

/// ANC decoding at receiver `R_receiver` of the collision of `collided`.
///
/// Exactly one packet of the pair must be known. If both are known (stale
/// side information) the receiver's own packet is returned. Knowing neither
/// means the protocol scheduled an impossible pairing.
pub fn anc_decode(
    outcome: CollisionOutcome,
    side: &SideInfo,
    collided: (PacketId, PacketId),
    receiver: ApId,
) -> Result<AncDecode> {
    let (a, b) = collided;
    if a == b {
        return Err(Error::ProtocolViolation(format!("packet {a} collided with itself")));
    }
    let (knows_a, knows_b) = (side.contains(a), side.contains(b));
    if !knows_a && !knows_b {
        return Err(Error::ProtocolViolation(format!(
            "receiver of {receiver} knows neither {a} nor {b}"
        )));
    }
    if outcome == CollisionOutcome::Sb {
        return Ok(AncDecode::Failed);
    }
    let id = match (knows_a, knows_b) {
        (true, false) => b,
        (false, true) => a,
        _ => {
            if a.ap == receiver {
                a
            } else if b.ap == receiver {
                b
            } else {
                return Err(Error::ProtocolViolation(format!(
                    "neither {a} nor {b} is destined to the receiver of {receiver}"
                )));
            }
        }
    };
    Ok(AncDecode::Decoded(id))
}

#[cfg(test)]
mod tests {
    use crate::analytic::LossMatrix;
    use crate::channel::Outcome;

    use super::*;

    fn c1() -> PacketId {
        PacketId::new(ApId::Ap1, 0)
    }

    fn c2() -> PacketId {
        PacketId::new(ApId::Ap2, 0)
    }

    #[test]
    fn lossless_always_succeeds() {
        let ch = ChannelRealization::new(3, LossMatrix::symmetric(0.0).unwrap());
        assert!((0..1000).all(|s| collision_reception(&ch, ApId::Ap1, s) == CollisionOutcome::Sa));
    }

    #[test]
    fn dead_own_link_always_fails() {
        let loss = LossMatrix { p11: 1.0, p12: 0.0, p21: 0.0, p22: 0.0 };
        let ch = ChannelRealization::new(3, loss);
        assert!((0..1000).all(|s| collision_reception(&ch, ApId::Ap1, s) == CollisionOutcome::Sb));
        assert!((0..1000).all(|s| collision_reception(&ch, ApId::Ap2, s) == CollisionOutcome::Sa));
    }

    #[test]
    fn success_iff_both_links_deliver() {
        let ch = ChannelRealization::new(8, LossMatrix::new(0.3, 0.2, 0.4, 0.1).unwrap());
        for s in 0..20_000 {
            for rx in ApId::BOTH {
                let own = ch.link_outcome(Link::new(rx, rx), s);
                let cross = ch.link_outcome(Link::new(rx.other(), rx), s);
                let expect = own == Outcome::Delivered && cross == Outcome::Delivered;
                assert_eq!(collision_reception(&ch, rx, s) == CollisionOutcome::Sa, expect);
            }
        }
    }

    #[test]
    fn success_rate_at_point_two() {
        let ch = ChannelRealization::new(17, LossMatrix::symmetric(0.2).unwrap());
        let n = 1_000_000u64;
        let hits = (0..n).filter(|&s| collision_reception(&ch, ApId::Ap2, s) == CollisionOutcome::Sa).count();
        assert!((hits as f64 / n as f64 - 0.64).abs() < 0.0015);
    }

    #[test]
    fn decode_cases() {
        let known_c1: SideInfo = [c1()].into_iter().collect();
        let known_c2: SideInfo = [c2()].into_iter().collect();
        assert_eq!(
            anc_decode(CollisionOutcome::Sa, &known_c1, (c1(), c2()), ApId::Ap2).unwrap(),
            AncDecode::Decoded(c2())
        );
        assert_eq!(
            anc_decode(CollisionOutcome::Sa, &known_c2, (c1(), c2()), ApId::Ap1).unwrap(),
            AncDecode::Decoded(c1())
        );
        assert_eq!(
            anc_decode(CollisionOutcome::Sb, &known_c1, (c1(), c2()), ApId::Ap2).unwrap(),
            AncDecode::Failed
        );
        let both: SideInfo = [c1(), c2()].into_iter().collect();
        assert_eq!(
            anc_decode(CollisionOutcome::Sa, &both, (c1(), c2()), ApId::Ap1).unwrap(),
            AncDecode::Decoded(c1())
        );
        assert!(matches!(
            anc_decode(CollisionOutcome::Sa, &SideInfo::new(), (c1(), c2()), ApId::Ap1),
            Err(Error::ProtocolViolation(_))
        ));
        assert!(matches!(
            anc_decode(CollisionOutcome::Sb, &SideInfo::new(), (c1(), c2()), ApId::Ap1),
            Err(Error::ProtocolViolation(_))
        ));
    }

    #[test]
    fn decode_never_invents_packets() {
        let pairs = [(c1(), c2()), (PacketId::new(ApId::Ap1, 7), PacketId::new(ApId::Ap2, 3))];
        for (a, b) in pairs {
            for side in [vec![a], vec![b], vec![a, b], vec![a, c1(), c2()]] {
                let side: SideInfo = side.into_iter().collect();
                for outcome in [CollisionOutcome::Sa, CollisionOutcome::Sb] {
                    for rx in ApId::BOTH {
                        if let AncDecode::Decoded(id) = anc_decode(outcome, &side, (a, b), rx).unwrap() {
                            assert!(id == a || id == b);
                        }
                    }
                }
            }
        }
    }
}
