//! Slotted protocol engine.
//!
//! One slot carries one data transmission on the shared channel, and the two
//! APs take turns. The exception is a cooperative slot: both APs send the
//! head of their defer queue at once, and each receiver decodes its own
//! packet from the collision.
//!
//! Every data transmission is acknowledged with superimposed ACK patterns by
//! whichever of the two paired receivers heard it, and the sender classifies
//! the packet from the decoded ACK set:
//!
//! | own receiver | partner receiver | state |
//! |--------------|------------------|-------|
//! | got it       | missed it        | S1    |
//! | missed it    | got it           | S2    |
//! | got it       | got it           | S3    |
//! | missed it    | missed it        | S4    |
//!
//! S1 and S3 are delivered. S4 is retransmitted ARQ-style until it lands in
//! one of the other states. S2 is deferred until the other AP also holds an
//! S2 packet. Deferred packets that can no longer find a partner are flushed
//! with plain ARQ on the own link.

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;

use crate::analytic::{BatchConfig, LossMatrix};
use crate::channel::{ChannelRealization, Link, Outcome};
use crate::codes::{assign_pattern, decode_ack, superimpose, AckPattern, ReceiverSet};
use crate::embrace::{anc_decode, collision_reception, AncDecode, SideInfo};
use crate::{ApId, Error, PacketId, Result};

/// Slots allowed per batch packet before a run is declared pathological.
pub const SLOT_CAP_PER_PACKET: u64 = 10_000;

/// Joint reception status of one transmission of a packet of `AP_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceptionState {
    /// Own receiver only.
    S1,
    /// Partner receiver only.
    S2,
    /// Both receivers.
    S3,
    /// Neither receiver.
    S4,
}

impl ReceptionState {
    pub const ALL: [ReceptionState; 4] = [
        ReceptionState::S1,
        ReceptionState::S2,
        ReceptionState::S3,
        ReceptionState::S4,
    ];

    pub fn index(self) -> usize {
        match self {
            ReceptionState::S1 => 0,
            ReceptionState::S2 => 1,
            ReceptionState::S3 => 2,
            ReceptionState::S4 => 3,
        }
    }

    /// Whether the destined receiver holds the packet.
    pub fn is_delivered(self) -> bool {
        matches!(self, ReceptionState::S1 | ReceptionState::S3)
    }
}

pub fn classify_reception(own_link: Outcome, cross_link: Outcome) -> ReceptionState {
    match (own_link, cross_link) {
        (Outcome::Delivered, Outcome::Lost) => ReceptionState::S1,
        (Outcome::Lost, Outcome::Delivered) => ReceptionState::S2,
        (Outcome::Delivered, Outcome::Delivered) => ReceptionState::S3,
        (Outcome::Lost, Outcome::Lost) => ReceptionState::S4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub id: PacketId,
    pub destined_receiver: ApId,
}

impl Packet {
    pub fn new(ap: ApId, index: u32) -> Self {
        Packet {
            id: PacketId::new(ap, index),
            destined_receiver: ap,
        }
    }
}

/// Transmission counters of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransmissionLedger {
    pub initial_tx: u64,
    pub arq_retx: u64,
    pub coop_retx_slots: u64,
    /// Reception state of every first transmission, indexed by
    /// [`ReceptionState::index`].
    pub first_tx_states: [u64; 4],
    /// Packets that entered state 2, from a first transmission or an S4
    /// retransmission.
    pub state2_entries: u64,
    pub slots_elapsed: u64,
    pub delivered: u64,
    /// Per-receiver receptions of collided packets.
    pub coop_receptions: u64,
    /// Those receptions that were intact (`Sa`).
    pub coop_successes: u64,
}

impl TransmissionLedger {
    pub fn retx_total(&self) -> u64 {
        self.arq_retx + self.coop_retx_slots
    }

    pub fn merge(&mut self, other: &TransmissionLedger) {
        self.initial_tx += other.initial_tx;
        self.arq_retx += other.arq_retx;
        self.coop_retx_slots += other.coop_retx_slots;
        for (a, b) in self.first_tx_states.iter_mut().zip(other.first_tx_states) {
            *a += b;
        }
        self.state2_entries += other.state2_entries;
        self.slots_elapsed += other.slots_elapsed;
        self.delivered += other.delivered;
        self.coop_receptions += other.coop_receptions;
        self.coop_successes += other.coop_successes;
    }

    /// `key = value` record, one line per counter.
    pub fn to_kv_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TransmissionLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial_tx = {}", self.initial_tx)?;
        writeln!(f, "arq_retx = {}", self.arq_retx)?;
        writeln!(f, "coop_retx_slots = {}", self.coop_retx_slots)?;
        writeln!(f, "retx_total = {}", self.retx_total())?;
        for state in ReceptionState::ALL {
            writeln!(f, "first_tx_{:?} = {}", state, self.first_tx_states[state.index()])?;
        }
        writeln!(f, "state2_entries = {}", self.state2_entries)?;
        writeln!(f, "slots_elapsed = {}", self.slots_elapsed)?;
        writeln!(f, "delivered = {}", self.delivered)?;
        writeln!(f, "coop_receptions = {}", self.coop_receptions)?;
        writeln!(f, "coop_successes = {}", self.coop_successes)
    }
}

fn slot_cap(packets: u64) -> u64 {
    SLOT_CAP_PER_PACKET * packets.max(1)
}

/// Stop-and-wait ARQ for the receivers of `aps`, each AP delivering a full
/// batch over its own link. APs take turns on the channel.
fn run_arq_for(batch: BatchConfig, realization: &ChannelRealization, aps: &[ApId]) -> Result<TransmissionLedger> {
    let b = batch.size();
    let cap = slot_cap(u64::from(b));
    let mut ledger = TransmissionLedger::default();
    // (next packet index, whether it was already sent once)
    let mut progress: Vec<(ApId, u32, bool)> = aps.iter().map(|&ap| (ap, 0, false)).collect();
    let mut turn = 0usize;
    let mut slot = 0u64;
    while progress.iter().any(|&(_, next, _)| next < b) {
        if slot >= cap {
            return Err(Error::SlotCapExceeded {
                cap,
                context: format!("ARQ run, seed {}", realization.seed()),
            });
        }
        while progress[turn].1 >= b {
            turn = (turn + 1) % progress.len();
        }
        let (ap, next, sent_before) = &mut progress[turn];
        if *sent_before {
            ledger.arq_retx += 1;
        } else {
            ledger.initial_tx += 1;
            *sent_before = true;
        }
        if realization.link_outcome(Link::new(*ap, *ap), slot).is_delivered() {
            ledger.delivered += 1;
            *next += 1;
            *sent_before = false;
        }
        turn = (turn + 1) % progress.len();
        slot += 1;
    }
    ledger.slots_elapsed = slot;
    Ok(ledger)
}

/// Both APs deliver `B` packets each with plain stop-and-wait ARQ.
pub fn run_arq(batch: BatchConfig, realization: &ChannelRealization) -> Result<TransmissionLedger> {
    run_arq_for(batch, realization, &ApId::BOTH)
}

/// A single AP delivers `B` packets to an unpaired receiver over link `ii`.
pub fn run_arq_link(batch: BatchConfig, realization: &ChannelRealization, ap: ApId) -> Result<TransmissionLedger> {
    run_arq_for(batch, realization, &[ap])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Pending,
    ArqQueue,
    Deferred,
    Delivered,
}

#[derive(Debug, Clone, Default)]
struct ApState {
    pending_initial: VecDeque<u32>,
    /// S4 packets awaiting ARQ retransmission.
    arq_queue: VecDeque<u32>,
    /// S2 packets awaiting a partner packet.
    defer_queue: VecDeque<u32>,
    /// Occupancy of the other AP's defer queue, learned from overheard ACKs.
    partner_deferred: usize,
}

impl ApState {
    fn can_generate_partners(&self) -> bool {
        !self.pending_initial.is_empty() || !self.arq_queue.is_empty() || !self.defer_queue.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Initial(u32),
    RetransmitLost(u32),
    Flush(u32),
}

/// Cooperative retransmission for one pre-paired receiver pair, advanced
/// one slot at a time.
#[derive(Debug, Clone)]
pub struct CooperativeSimulation {
    realization: ChannelRealization,
    batch: u32,
    aps: [ApState; 2],
    /// Overheard packets at `R_1` and `R_2`.
    side: [SideInfo; 2],
    location: [Vec<Location>; 2],
    delivered_count: [Vec<u32>; 2],
    patterns: [AckPattern; 2],
    ledger: TransmissionLedger,
    slot: u64,
    turn: ApId,
    cap: u64,
}

impl CooperativeSimulation {
    pub fn new(batch: BatchConfig, realization: ChannelRealization) -> Result<Self> {
        let b = batch.size();
        let fresh = || ApState {
            pending_initial: (0..b).collect(),
            ..ApState::default()
        };
        Ok(CooperativeSimulation {
            realization,
            batch: b,
            aps: [fresh(), fresh()],
            side: [SideInfo::new(), SideInfo::new()],
            location: [vec![Location::Pending; b as usize], vec![Location::Pending; b as usize]],
            delivered_count: [vec![0; b as usize], vec![0; b as usize]],
            patterns: [assign_pattern(0, 2)?, assign_pattern(1, 2)?],
            ledger: TransmissionLedger::default(),
            slot: 0,
            turn: ApId::Ap1,
            cap: slot_cap(u64::from(b)),
        })
    }

    pub fn ledger(&self) -> &TransmissionLedger {
        &self.ledger
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn is_done(&self) -> bool {
        self.ledger.delivered == 2 * u64::from(self.batch)
    }

    /// Runs to completion and returns the ledger.
    pub fn run(mut self) -> Result<TransmissionLedger> {
        while self.step()? {}
        Ok(self.ledger)
    }

    /// Advances one slot. Returns `false` once every packet is delivered.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        if self.slot >= self.cap {
            return Err(Error::SlotCapExceeded {
                cap: self.cap,
                context: format!("cooperative run, seed {}", self.realization.seed()),
            });
        }
        let [first, second] = &self.aps;
        let cooperate = !first.defer_queue.is_empty()
            && first.partner_deferred > 0
            && !second.defer_queue.is_empty()
            && second.partner_deferred > 0;
        if cooperate {
            self.cooperative_slot()?;
        } else {
            let order = [self.turn, self.turn.other()];
            let Some((ap, action)) = order.iter().find_map(|&ap| self.next_action(ap).map(|a| (ap, a))) else {
                return Err(Error::ProtocolViolation(format!(
                    "no AP can transmit at slot {} with {} packets undelivered",
                    self.slot,
                    2 * u64::from(self.batch) - self.ledger.delivered
                )));
            };
            self.transmit(ap, action)?;
            self.turn = ap.other();
        }
        self.slot += 1;
        self.ledger.slots_elapsed = self.slot;
        Ok(!self.is_done())
    }

    fn next_action(&self, ap: ApId) -> Option<Action> {
        let state = &self.aps[ap.index()];
        if let Some(&idx) = state.arq_queue.front() {
            return Some(Action::RetransmitLost(idx));
        }
        if let Some(&idx) = state.pending_initial.front() {
            return Some(Action::Initial(idx));
        }
        let partner = &self.aps[ap.other().index()];
        match state.defer_queue.front() {
            Some(&idx) if !partner.can_generate_partners() => Some(Action::Flush(idx)),
            _ => None,
        }
    }

    /// Which of the two receivers acknowledged, as decoded by the APs from
    /// the superimposed ACK word. Silence means no receiver.
    fn decode_acks(&self, truth: [bool; 2]) -> Result<[bool; 2]> {
        let senders: Vec<&AckPattern> = ApId::BOTH
            .iter()
            .filter(|rx| truth[rx.index()])
            .map(|rx| &self.patterns[rx.index()])
            .collect();
        let heard = if senders.is_empty() {
            ReceiverSet::new()
        } else {
            decode_ack(&superimpose(senders)?, 2)?
        };
        let decoded = [heard.contains(0), heard.contains(1)];
        if decoded != truth {
            return Err(Error::ProtocolViolation(format!(
                "ACK decode {decoded:?} disagrees with receptions {truth:?} at slot {}",
                self.slot
            )));
        }
        Ok(decoded)
    }

    fn transmit(&mut self, ap: ApId, action: Action) -> Result<()> {
        let other = ap.other();
        let own = self.realization.link_outcome(Link::new(ap, ap), self.slot);
        let cross = self.realization.link_outcome(Link::new(ap, other), self.slot);
        let mut truth = [false; 2];
        truth[ap.index()] = own.is_delivered();
        truth[other.index()] = cross.is_delivered();
        let acked = self.decode_acks(truth)?;
        let state = classify_reception(
            if acked[ap.index()] { Outcome::Delivered } else { Outcome::Lost },
            if acked[other.index()] { Outcome::Delivered } else { Outcome::Lost },
        );

        match action {
            Action::Initial(idx) => {
                let packet = Packet::new(ap, idx);
                if cross.is_delivered() {
                    self.side[other.index()].insert(packet.id);
                }
                self.aps[ap.index()].pending_initial.pop_front();
                self.ledger.initial_tx += 1;
                self.ledger.first_tx_states[state.index()] += 1;
                match state {
                    ReceptionState::S4 => {
                        self.aps[ap.index()].arq_queue.push_back(idx);
                        self.location[ap.index()][idx as usize] = Location::ArqQueue;
                    }
                    _ => self.route(ap, idx, state)?,
                }
            }
            Action::RetransmitLost(idx) => {
                let packet = Packet::new(ap, idx);
                if cross.is_delivered() {
                    self.side[other.index()].insert(packet.id);
                }
                self.ledger.arq_retx += 1;
                if state != ReceptionState::S4 {
                    self.aps[ap.index()].arq_queue.pop_front();
                    self.route(ap, idx, state)?;
                }
            }
            Action::Flush(idx) => {
                self.ledger.arq_retx += 1;
                if own.is_delivered() {
                    self.aps[ap.index()].defer_queue.pop_front();
                    self.sync_awareness(ap);
                    self.deliver(ap, idx)?;
                }
            }
        }
        Ok(())
    }

    /// Routes a packet that left state 4: delivered, or deferred on S2.
    fn route(&mut self, ap: ApId, idx: u32, state: ReceptionState) -> Result<()> {
        match state {
            ReceptionState::S1 | ReceptionState::S3 => self.deliver(ap, idx),
            ReceptionState::S2 => {
                let id = PacketId::new(ap, idx);
                if !self.side[ap.other().index()].contains(id) {
                    return Err(Error::ProtocolViolation(format!(
                        "deferring {id} although the partner receiver never overheard it"
                    )));
                }
                self.ledger.state2_entries += 1;
                self.aps[ap.index()].defer_queue.push_back(idx);
                self.location[ap.index()][idx as usize] = Location::Deferred;
                self.sync_awareness(ap);
                Ok(())
            }
            ReceptionState::S4 => unreachable!("state-4 packets stay in the ARQ queue"),
        }
    }

    /// The other AP overhears the ACK and learns the new defer-queue size.
    fn sync_awareness(&mut self, ap: ApId) {
        let occupancy = self.aps[ap.index()].defer_queue.len();
        self.aps[ap.other().index()].partner_deferred = occupancy;
    }

    fn deliver(&mut self, ap: ApId, idx: u32) -> Result<()> {
        let count = &mut self.delivered_count[ap.index()][idx as usize];
        *count += 1;
        if *count > 1 {
            return Err(Error::ProtocolViolation(format!(
                "{} delivered twice",
                PacketId::new(ap, idx)
            )));
        }
        self.location[ap.index()][idx as usize] = Location::Delivered;
        self.ledger.delivered += 1;
        Ok(())
    }

    fn cooperative_slot(&mut self) -> Result<()> {
        let heads = [
            self.aps[0].defer_queue.front().copied(),
            self.aps[1].defer_queue.front().copied(),
        ];
        let [Some(first), Some(second)] = heads else {
            return Err(Error::ProtocolViolation("cooperative slot without two deferred packets".into()));
        };
        let collided = (PacketId::new(ApId::Ap1, first), PacketId::new(ApId::Ap2, second));
        self.ledger.coop_retx_slots += 1;

        let mut decoded = [false; 2];
        for rx in ApId::BOTH {
            let outcome = collision_reception(&self.realization, rx, self.slot);
            self.ledger.coop_receptions += 1;
            match anc_decode(outcome, &self.side[rx.index()], collided, rx)? {
                AncDecode::Decoded(id) if id.ap == rx => {
                    self.ledger.coop_successes += 1;
                    decoded[rx.index()] = true;
                }
                AncDecode::Decoded(id) => {
                    return Err(Error::ProtocolViolation(format!(
                        "receiver of {rx} decoded {id}, which is not destined to it"
                    )));
                }
                AncDecode::Failed => {}
            }
        }

        let acked = self.decode_acks(decoded)?;
        for ap in ApId::BOTH {
            if acked[ap.index()] {
                let idx = self.aps[ap.index()]
                    .defer_queue
                    .pop_front()
                    .expect("head checked above");
                self.sync_awareness(ap);
                self.deliver(ap, idx)?;
            }
        }
        Ok(())
    }

    /// Checks queue exclusivity, delivery counts, deferral side information
    /// and AP awareness. Meant to be called between slots.
    pub fn check_invariants(&self) -> Result<()> {
        for ap in ApId::BOTH {
            let i = ap.index();
            let state = &self.aps[i];
            let mut seen = vec![0u8; self.batch as usize];
            let queues = [
                (&state.pending_initial, Location::Pending),
                (&state.arq_queue, Location::ArqQueue),
                (&state.defer_queue, Location::Deferred),
            ];
            for (queue, location) in queues {
                for &idx in queue {
                    seen[idx as usize] += 1;
                    if self.location[i][idx as usize] != location {
                        return Err(Error::ProtocolViolation(format!(
                            "{} queued as {location:?} but recorded as {:?}",
                            PacketId::new(ap, idx),
                            self.location[i][idx as usize]
                        )));
                    }
                }
            }
            for idx in 0..self.batch as usize {
                let delivered = self.location[i][idx] == Location::Delivered;
                let expected_queues = u8::from(!delivered);
                if seen[idx] != expected_queues || self.delivered_count[i][idx] != u32::from(delivered) {
                    return Err(Error::ProtocolViolation(format!(
                        "{} sits in {} queues with {} deliveries",
                        PacketId::new(ap, idx as u32),
                        seen[idx],
                        self.delivered_count[i][idx]
                    )));
                }
            }
            for &idx in &state.defer_queue {
                if !self.side[ap.other().index()].contains(PacketId::new(ap, idx)) {
                    return Err(Error::ProtocolViolation(format!(
                        "deferred {} unknown to the partner receiver",
                        PacketId::new(ap, idx)
                    )));
                }
            }
            if self.aps[ap.other().index()].partner_deferred != state.defer_queue.len() {
                return Err(Error::ProtocolViolation(format!("{} has a stale view of {ap}'s defer queue", ap.other())));
            }
        }
        Ok(())
    }
}

/// Runs the cooperative scheme for one receiver pair to completion.
pub fn run_cooperative(batch: BatchConfig, realization: &ChannelRealization) -> Result<TransmissionLedger> {
    CooperativeSimulation::new(batch, *realization)?.run()
}

/// Ratio of ARQ to cooperative retransmissions of one replication.
///
/// Both zero gives 1.0. A cooperative run that needed no retransmission at
/// all while ARQ did is charged one retransmission so the ratio stays finite.
pub fn gain_ratio(arq_total: u64, coop_total: u64) -> f64 {
    match (arq_total, coop_total) {
        (0, 0) => 1.0,
        (a, c) => a as f64 / c.max(1) as f64,
    }
}

/// Per-seed gains, ordered like `seeds`. ARQ and cooperative runs of the
/// same seed share one channel realization.
pub fn cooperative_gain_samples(batch: BatchConfig, loss: &LossMatrix, seeds: &[u64]) -> Result<Vec<f64>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let realization = ChannelRealization::new(seed, *loss);
            let arq = run_arq(batch, &realization)?;
            let coop = run_cooperative(batch, &realization)?;
            Ok(gain_ratio(arq.retx_total(), coop.retx_total()))
        })
        .collect()
}

/// Mean over seeds of the ARQ-to-cooperative retransmission ratio.
pub fn cooperative_gain(batch: BatchConfig, loss: &LossMatrix, seeds: &[u64]) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::Config("cooperative gain needs at least one seed".into()));
    }
    let samples = cooperative_gain_samples(batch, loss, seeds)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}
