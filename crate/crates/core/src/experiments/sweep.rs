use rayon::prelude::*;

use super::{mean_and_se, ExperimentConfig};
use crate::analytic::{retransmission_gain, state2_probability, AnalyticReport, BatchConfig, LossMatrix};
use crate::channel::{derive_seed, ChannelRealization};
use crate::simcore::{cooperative_gain_samples, gain_ratio, run_arq_link, run_cooperative, ReceptionState};
use crate::topology::{pair_receivers, place_receivers, Topology};
use crate::Result;

/// One data point: analytic prediction next to the simulated estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub figure: &'static str,
    pub series: &'static str,
    /// Swept parameter: loss rate `p`, or AP separation `d_ap`.
    pub parameter: f64,
    pub batch: u32,
    pub analytic: f64,
    pub empirical_mean: f64,
    pub empirical_se: f64,
    pub replications: u32,
    pub notes: String,
}

/// Channel seeds of the replications, shared by every parameter point so
/// neighbouring points are compared on common random numbers.
pub fn replication_seeds(base: u64, replications: u32) -> Vec<u64> {
    (0..u64::from(replications)).map(|r| derive_seed(base, r)).collect()
}

/// Retransmission gain against loss rate, one row per `(B, p)`.
pub fn sweep_loss(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let seeds = replication_seeds(config.seed, config.replications);
    let mut rows = Vec::new();
    for &b in &config.batches {
        let batch = BatchConfig::new(b)?;
        for &p in &config.p_grid {
            let point = format!("p = {p}, B = {b}");
            let loss = LossMatrix::symmetric(p)?;
            let samples = cooperative_gain_samples(batch, &loss, &seeds).map_err(|e| e.at(point.clone()))?;
            let (mean, se) = mean_and_se(&samples);
            rows.push(SweepRow {
                figure: "gain_vs_loss",
                series: "G_r",
                parameter: p,
                batch: b,
                analytic: retransmission_gain(p)?,
                empirical_mean: mean,
                empirical_se: se,
                replications: config.replications,
                notes: if p == 0.0 {
                    "degenerate: no retransmissions; empirical gain 1 by convention".into()
                } else {
                    String::new()
                },
            });
        }
    }
    Ok(rows)
}

/// Probability of state 2 (including re-entries after state 4) and
/// first-transmission probability of state 4, against loss rate.
/// Simulated with the largest configured batch size.
pub fn sweep_states(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let seeds = replication_seeds(config.seed, config.replications);
    let b = *config.batches.iter().max().expect("validated non-empty");
    let batch = BatchConfig::new(b)?;
    let packets = 2.0 * f64::from(b);
    let mut rows = Vec::new();
    for &p in &config.p_grid {
        let loss = LossMatrix::symmetric(p)?;
        let ledgers: Vec<_> = seeds
            .par_iter()
            .map(|&seed| run_cooperative(batch, &ChannelRealization::new(seed, loss)))
            .collect::<Result<_>>()
            .map_err(|e| e.at(format!("p = {p}, B = {b}")))?;
        let s2: Vec<f64> = ledgers.iter().map(|l| l.state2_entries as f64 / packets).collect();
        let s4: Vec<f64> = ledgers
            .iter()
            .map(|l| l.first_tx_states[ReceptionState::S4.index()] as f64 / packets)
            .collect();
        for (series, analytic, samples) in [
            ("P_S2", state2_probability(p, p)?, s2),
            ("P_S4", p * p, s4),
        ] {
            let (mean, se) = mean_and_se(&samples);
            rows.push(SweepRow {
                figure: "state_probabilities",
                series,
                parameter: p,
                batch: b,
                analytic,
                empirical_mean: mean,
                empirical_se: se,
                replications: config.replications,
                notes: String::new(),
            });
        }
    }
    Ok(rows)
}

/// Retransmission totals of one network replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkOutcome {
    /// Every receiver served by plain ARQ.
    pub arq_retx: u64,
    /// Paired receivers served cooperatively, all others by ARQ.
    pub mixed_retx: u64,
    pub pairs: usize,
}

impl NetworkOutcome {
    pub fn gain(&self) -> f64 {
        gain_ratio(self.arq_retx, self.mixed_retx)
    }
}

const PAIR_TAG: u64 = 1 << 40;

/// Places receivers, pairs the overlap receivers and delivers a batch to
/// every receiver under both schemes.
///
/// An unpaired receiver sees the same channel realization in both schemes,
/// so a topology without pairs yields identical totals.
pub fn simulate_network(topology: &Topology, loss: &LossMatrix, batch: BatchConfig, seed: u64) -> Result<NetworkOutcome> {
    let placement = place_receivers(topology, derive_seed(seed, 0));
    let pairing = pair_receivers(&placement);
    let arq_of = |id: usize| -> Result<u64> {
        let receiver = &placement.receivers[id];
        let realization = ChannelRealization::new(derive_seed(seed, 1 + id as u64), *loss);
        Ok(run_arq_link(batch, &realization, receiver.ap)?.retx_total())
    };

    let mut arq_retx = 0;
    for receiver in &placement.receivers {
        arq_retx += arq_of(receiver.id)?;
    }
    let mut mixed_retx = 0;
    for &id in &pairing.unpaired {
        mixed_retx += arq_of(id)?;
    }
    for &(a, b) in &pairing.pairs {
        let tag = PAIR_TAG | ((a as u64) << 20) | b as u64;
        let realization = ChannelRealization::new(derive_seed(seed, tag), *loss);
        mixed_retx += run_cooperative(batch, &realization)?.retx_total();
    }
    Ok(NetworkOutcome {
        arq_retx,
        mixed_retx,
        pairs: pairing.pairs.len(),
    })
}

/// Network gain against AP separation at loss rate `config.p`, one row per
/// `(B, d_ap)`.
pub fn sweep_overlap(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let seeds = replication_seeds(config.seed, config.replications);
    let loss = LossMatrix::symmetric(config.p)?;
    let mut rows = Vec::new();
    for &b in &config.batches {
        let batch = BatchConfig::new(b)?;
        for d_ap in config.d_ap_grid() {
            let point = format!("d_ap = {d_ap}, p = {}, B = {b}", config.p);
            let topology = Topology::new(d_ap, config.r_t, config.n)?;
            let outcomes: Vec<NetworkOutcome> = seeds
                .par_iter()
                .map(|&seed| simulate_network(&topology, &loss, batch, seed))
                .collect::<Result<_>>()
                .map_err(|e| e.at(point.clone()))?;
            let gains: Vec<f64> = outcomes.iter().map(NetworkOutcome::gain).collect();
            let (mean, se) = mean_and_se(&gains);
            let mean_pairs = outcomes.iter().map(|o| o.pairs as f64).sum::<f64>() / outcomes.len() as f64;
            let report = AnalyticReport::evaluate(&loss, batch, config.n, d_ap, config.r_t)?;
            rows.push(SweepRow {
                figure: "network_gain",
                series: "G_N",
                parameter: d_ap,
                batch: b,
                analytic: report.g_n,
                empirical_mean: mean,
                empirical_se: se,
                replications: config.replications,
                notes: format!("expected overlap receivers {:.4}; mean realized pairs {mean_pairs:.4}", report.n_a),
            });
        }
    }
    Ok(rows)
}
