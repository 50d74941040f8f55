//! End-to-end checks of the simulator against the closed forms.
//!
//! Each criterion runs at full size and reports pass or fail with the
//! numbers behind the verdict.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{emit_outputs_bytes, mean_and_se, replication_seeds, sweep_loss, sweep_overlap, sweep_states};
use super::{ExperimentConfig, Mode};
use crate::analytic::{
    expected_arq_retx, expected_state2_retx, expected_state4_retx, overlap_area, retransmission_gain,
    state2_probability, BatchConfig, LossMatrix,
};
use crate::channel::{ChannelRealization, Link};
use crate::codes::{assign_pattern, decode_ack, superimpose, ReceiverSet, MAX_POPULATION};
use crate::embrace::{collision_reception, CollisionOutcome};
use crate::simcore::{
    classify_reception, cooperative_gain_samples, run_arq, run_cooperative, CooperativeSimulation, ReceptionState,
};
use crate::topology::{monte_carlo_overlap_area, Topology};
use crate::{ApId, Result};

/// Gain at `p = 0.2`, evaluated with 30 significant digits.
pub const REFERENCE_GAIN_AT_0_2: f64 = 1.454_545_454_545_454_545_454_545_454_55;
/// Lens area for `d_ap = r_t = 1`, evaluated with 30 significant digits.
pub const REFERENCE_LENS_AREA_1_1: f64 = 1.228_369_698_608_756_845_544_705_751_43;

/// Base seed for every stochastic criterion.
pub const VALIDATION_SEED: u64 = 20_120_901;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>2}. {}: {}", self.id, self.name, self.detail)
    }
}

fn report(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionReport {
    CriterionReport { id, name, passed, detail }
}

/// A criterion: id, short name and the check itself.
pub type Criterion = (u8, &'static str, fn() -> Result<(bool, String)>);

pub const CRITERIA: [Criterion; 12] = [
    (1, "algebraic consistency of the gain", algebraic_consistency),
    (2, "gain bounds below p = 1/2", gain_bounds),
    (3, "point values of gain and lens area", point_values),
    (4, "simulated gain tracks theory at B = 1000", simulation_vs_theory),
    (5, "partner-packet scarcity at small batches", partner_scarcity),
    (6, "reception-state probabilities", state_probabilities),
    (7, "collided-packet reception", collision_outcome),
    (8, "lens geometry", geometry),
    (9, "network gain against AP separation", network_gain_trend),
    (10, "headline retransmission reduction", headline_claim),
    (11, "superimposed ACK round trip", collision_codes),
    (12, "conservation and reproducibility", conservation_and_determinism),
];

/// Runs one criterion; an error counts as a failure.
pub fn run_criterion(criterion: &Criterion) -> CriterionReport {
    let (id, name, check) = *criterion;
    match check() {
        Ok((passed, detail)) => report(id, name, passed, detail),
        Err(e) => report(id, name, false, format!("error: {e}")),
    }
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().map(run_criterion).collect()
}

fn sym(p: f64) -> Result<LossMatrix> {
    LossMatrix::symmetric(p)
}

fn algebraic_consistency() -> Result<(bool, String)> {
    let batch = BatchConfig::new(1000)?;
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let p = 0.9 * f64::from(k) / 50.0;
        let loss = sym(p)?;
        let ratio = expected_arq_retx(&loss, batch)?
            / (expected_state4_retx(&loss, batch)? + expected_state2_retx(&loss, batch)?);
        let g = retransmission_gain(p)?;
        worst = worst.max(((ratio - g) / g).abs());
    }
    Ok((worst < 1e-12, format!("max relative error {worst:.3e} over 50 points (tol 1e-12)")))
}

fn gain_bounds() -> Result<(bool, String)> {
    let gains: Vec<f64> = (1..=49)
        .map(|k| retransmission_gain(f64::from(k) / 100.0))
        .collect::<Result<_>>()?;
    let bounded = gains.iter().all(|&g| g > 1.0 && g < 2.0);
    let decreasing = gains.windows(2).all(|w| w[1] < w[0]);
    Ok((
        bounded && decreasing,
        format!(
            "G(0.01) = {:.6}, G(0.49) = {:.6}, within (1,2): {bounded}, strictly decreasing: {decreasing}",
            gains[0], gains[48]
        ),
    ))
}

fn point_values() -> Result<(bool, String)> {
    let g = retransmission_gain(0.2)?;
    let a = overlap_area(1.0, 1.0)?;
    let (eg, ea) = ((g - REFERENCE_GAIN_AT_0_2).abs(), (a - REFERENCE_LENS_AREA_1_1).abs());
    Ok((
        eg < 1e-9 && ea < 1e-9,
        format!("G_r(0.2) = {g:.12} (err {eg:.1e}), A(1,1) = {a:.12} (err {ea:.1e}); tol 1e-9"),
    ))
}

fn simulation_vs_theory() -> Result<(bool, String)> {
    let batch = BatchConfig::new(1000)?;
    let seeds = replication_seeds(VALIDATION_SEED, 100);
    let mut passed = true;
    let mut parts = Vec::new();
    for k in 3..=9 {
        let p = f64::from(k) * 0.05;
        let samples = cooperative_gain_samples(batch, &sym(p)?, &seeds)?;
        let (mean, _) = mean_and_se(&samples);
        let theory = retransmission_gain(p)?;
        let rel = (mean - theory) / theory;
        passed &= rel.abs() < 0.05;
        parts.push(format!("p={p:.2}: {mean:.4} vs {theory:.4} ({:+.2}%)", 100.0 * rel));
    }
    Ok((passed, parts.join("; ")))
}

fn partner_scarcity() -> Result<(bool, String)> {
    let seeds = replication_seeds(VALIDATION_SEED, 200);
    let small = BatchConfig::new(100)?;
    let large = BatchConfig::new(1000)?;

    let samples = cooperative_gain_samples(small, &sym(0.05)?, &seeds)?;
    let (mean, se) = mean_and_se(&samples);
    let theory = retransmission_gain(0.05)?;
    let below = theory - mean > 2.0 * se;
    let mut passed = below;
    let mut parts = vec![format!(
        "p=0.05 B=100: {mean:.4} ± {se:.4} vs {theory:.4} (gap {:.1} SE)",
        (theory - mean) / se
    )];

    for p in [0.1, 0.2, 0.3] {
        let theory = retransmission_gain(p)?;
        let mad = |batch| -> Result<f64> {
            let samples = cooperative_gain_samples(batch, &sym(p)?, &seeds)?;
            Ok(samples.iter().map(|g| (g - theory).abs()).sum::<f64>() / samples.len() as f64)
        };
        let (mad_small, mad_large) = (mad(small)?, mad(large)?);
        passed &= mad_small >= mad_large;
        parts.push(format!("p={p}: MAD B=100 {mad_small:.4} vs B=1000 {mad_large:.4}"));
    }
    Ok((passed, parts.join("; ")))
}

fn state_probabilities() -> Result<(bool, String)> {
    let mut passed = true;
    let mut parts = Vec::new();

    // first transmissions, straight from the channel
    let trials = 1_000_000u64;
    for (i, p) in [0.1, 0.3, 0.5].into_iter().enumerate() {
        let ch = ChannelRealization::new(VALIDATION_SEED + i as u64, sym(p)?);
        let mut counts = [0u64; 4];
        for slot in 0..trials {
            let state = classify_reception(ch.link_outcome(Link::L11, slot), ch.link_outcome(Link::L12, slot));
            counts[state.index()] += 1;
        }
        let expected = [p * (1.0 - p), p * (1.0 - p), (1.0 - p) * (1.0 - p), p * p];
        let worst = counts
            .iter()
            .zip(expected)
            .map(|(&c, q)| {
                let se = (q * (1.0 - q) / trials as f64).sqrt();
                (c as f64 / trials as f64 - q).abs() / se
            })
            .fold(0.0, f64::max);
        passed &= worst < 3.0;
        parts.push(format!("Table I p={p}: worst {worst:.2} SE"));
    }

    // cumulative state-2 frequency from protocol runs
    let seeds = replication_seeds(VALIDATION_SEED, 100);
    let batch = BatchConfig::new(1000)?;
    for p in [0.1, 0.3, 0.5] {
        let loss = sym(p)?;
        let entries: u64 = seeds
            .par_iter()
            .map(|&s| run_cooperative(batch, &ChannelRealization::new(s, loss)).map(|l| l.state2_entries))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        let packets = 2.0 * 1000.0 * seeds.len() as f64;
        let q = state2_probability(p, p)?;
        let se = (q * (1.0 - q) / packets).sqrt();
        let freq = entries as f64 / packets;
        let z = (freq - q) / se;
        passed &= z.abs() < 3.0;
        parts.push(format!("P_S2 p={p}: {freq:.5} vs {q:.5} ({z:+.2} SE)"));
    }

    // first-transmission state 4 across the default grid
    let mut config = ExperimentConfig::new(Mode::SweepStates);
    config.batches = vec![1000];
    config.seed = VALIDATION_SEED;
    let rows = sweep_states(&config)?;
    let s4: Vec<f64> = rows
        .iter()
        .filter(|r| r.series == "P_S4")
        .map(|r| r.empirical_mean)
        .collect();
    let increasing = s4.windows(2).all(|w| w[1] > w[0]);
    passed &= increasing;
    parts.push(format!("P_S4 strictly increasing over {} grid points: {increasing}", s4.len()));
    Ok((passed, parts.join("; ")))
}

fn collision_outcome() -> Result<(bool, String)> {
    let slots = 100_000u64;
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, p) in [0.1, 0.3, 0.5].into_iter().enumerate() {
        let ch = ChannelRealization::new(VALIDATION_SEED ^ (0xc0 + i as u64), sym(p)?);
        for rx in ApId::BOTH {
            let hits = (0..slots)
                .filter(|&s| collision_reception(&ch, rx, s) == CollisionOutcome::Sa)
                .count();
            let q = (1.0 - p) * (1.0 - p);
            let se = (q * (1.0 - q) / slots as f64).sqrt();
            let z = (hits as f64 / slots as f64 - q) / se;
            passed &= z.abs() < 3.0;
            parts.push(format!("p={p} R{}: {z:+.2} SE", rx.number()));
        }
    }
    Ok((passed, parts.join("; ")))
}

fn geometry() -> Result<(bool, String)> {
    let r_t = 1.0;
    let mut passed = true;
    let mut parts = Vec::new();
    for ratio in [0.2, 1.0, 1.8] {
        let topo = Topology::new(ratio * r_t, r_t, 0)?;
        let mc = monte_carlo_overlap_area(&topo, 1_000_000, VALIDATION_SEED);
        let exact = overlap_area(ratio * r_t, r_t)?;
        let rel = (mc - exact) / exact;
        passed &= rel.abs() < 0.01;
        parts.push(format!("d/r={ratio}: MC {mc:.5} vs {exact:.5} ({:+.3}%)", 100.0 * rel));
    }
    let full = overlap_area(0.0, r_t)?;
    let none = overlap_area(2.0 * r_t, r_t)?;
    let endpoints = full == PI * r_t * r_t && none == 0.0;
    passed &= endpoints;
    parts.push(format!("A(0) = {full}, A(2r) = {none}"));
    Ok((passed, parts.join("; ")))
}

fn network_gain_trend() -> Result<(bool, String)> {
    let mut config = ExperimentConfig::new(Mode::SweepOverlap);
    config.batches = vec![1000];
    config.p = 0.2;
    config.n = 10;
    config.replications = 100;
    config.seed = VALIDATION_SEED;
    let rows = sweep_overlap(&config)?;
    let mut passed = true;
    let mut parts: Vec<String> = rows
        .iter()
        .map(|r| format!("d={}: {:.4}±{:.4}", r.parameter, r.empirical_mean, r.empirical_se))
        .collect();
    for w in rows.windows(2) {
        let slack = 2.0 * (w[0].empirical_se.powi(2) + w[1].empirical_se.powi(2)).sqrt();
        if w[1].empirical_mean > w[0].empirical_mean + slack {
            passed = false;
            parts.push(format!("increase from d={} to d={}", w[0].parameter, w[1].parameter));
        }
    }
    let last = rows.last().expect("default grid is non-empty");
    passed &= last.empirical_mean == 1.0;
    let g_r = retransmission_gain(0.2)?;
    let first = &rows[0];
    let rel = (first.empirical_mean - g_r) / g_r;
    passed &= rel.abs() < 0.05;
    parts.push(format!("d=0 vs G_r {g_r:.4}: {:+.2}%", 100.0 * rel));
    Ok((passed, parts.join("; ")))
}

fn headline_claim() -> Result<(bool, String)> {
    let batch = BatchConfig::new(10_000)?;
    let loss = sym(0.01)?;
    let seeds = replication_seeds(VALIDATION_SEED, 100);
    let totals: Vec<(u64, u64)> = seeds
        .par_iter()
        .map(|&s| {
            let ch = ChannelRealization::new(s, loss);
            Ok((run_arq(batch, &ch)?.retx_total(), run_cooperative(batch, &ch)?.retx_total()))
        })
        .collect::<Result<_>>()?;
    let arq: u64 = totals.iter().map(|t| t.0).sum();
    let coop: u64 = totals.iter().map(|t| t.1).sum();
    let fraction = coop as f64 / arq as f64;
    let gains: Vec<f64> = totals.iter().map(|&(a, c)| crate::simcore::gain_ratio(a, c)).collect();
    let (gain, se) = mean_and_se(&gains);
    Ok((
        fraction < 0.55 && gain > 1.82,
        format!("cooperative/ARQ retransmissions = {:.2}% , mean gain {gain:.4} ± {se:.4}", 100.0 * fraction),
    ))
}

fn collision_codes() -> Result<(bool, String)> {
    let mut checked = 0u64;
    for population in 1..=MAX_POPULATION {
        let patterns = (0..population)
            .map(|id| assign_pattern(id, population))
            .collect::<Result<Vec<_>>>()?;
        for mask in 1u32..(1u32 << population) {
            let subset: Vec<_> = patterns.iter().filter(|p| mask & (1 << p.receiver_id) != 0).collect();
            let word = superimpose(subset.iter().copied())?;
            let expected: ReceiverSet = subset.iter().map(|p| p.receiver_id).collect();
            if decode_ack(&word, population)? != expected {
                return Ok((false, format!("population {population}, subset {mask:b} decoded wrongly")));
            }
            checked += 1;
        }
    }
    Ok((true, format!("{checked} subsets over populations 1..=16 decoded exactly")))
}

fn conservation_and_determinism() -> Result<(bool, String)> {
    let mut passed = true;
    let mut parts = Vec::new();

    // per-slot invariants, including single delivery of each packet
    let mut runs = 0;
    for (i, p) in [0.05, 0.2, 0.5, 0.8].into_iter().enumerate() {
        for b in [1u32, 37, 500] {
            let ch = ChannelRealization::new(VALIDATION_SEED + 31 * i as u64 + u64::from(b), sym(p)?);
            let mut sim = CooperativeSimulation::new(BatchConfig::new(b)?, ch)?;
            sim.check_invariants()?;
            while sim.step()? {
                sim.check_invariants()?;
            }
            let ledger = sim.ledger();
            let first_tx: u64 = ReceptionState::ALL.iter().map(|s| ledger.first_tx_states[s.index()]).sum();
            passed &= ledger.delivered == 2 * u64::from(b) && first_tx == 2 * u64::from(b);
            let arq = run_arq(BatchConfig::new(b)?, &ch)?;
            passed &= arq.delivered == 2 * u64::from(b) && arq.coop_retx_slots == 0;
            runs += 1;
        }
    }
    parts.push(format!("{runs} runs delivered every packet exactly once"));

    // byte-identical CSVs from independent reruns
    let configure = |mode| {
        let mut c = ExperimentConfig::new(mode);
        c.replications = 10;
        c.batches = vec![100, 300];
        c.seed = VALIDATION_SEED;
        c
    };
    let loss_cfg = configure(Mode::SweepLoss);
    let states_cfg = configure(Mode::SweepStates);
    let mut overlap_cfg = configure(Mode::SweepOverlap);
    overlap_cfg.d_ap = Some(vec![0.0, 1.0, 2.0]);
    let render = || -> Result<Vec<Vec<u8>>> {
        Ok(vec![
            emit_outputs_bytes(&sweep_loss(&loss_cfg)?, &loss_cfg, "sweep_loss")?,
            emit_outputs_bytes(&sweep_states(&states_cfg)?, &states_cfg, "sweep_states")?,
            emit_outputs_bytes(&sweep_overlap(&overlap_cfg)?, &overlap_cfg, "sweep_overlap")?,
        ])
    };
    let identical = render()? == render()?;
    passed &= identical;
    parts.push(format!("CSV reruns byte-identical: {identical}"));
    Ok((passed, parts.join("; ")))
}
