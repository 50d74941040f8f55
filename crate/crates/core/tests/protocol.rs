//! Protocol-level behaviour of the cooperative scheme against its baseline.

use coopretx::analytic::{retransmission_gain, BatchConfig, LossMatrix};
use coopretx::channel::ChannelRealization;
use coopretx::experiments::mean_and_se;
use coopretx::simcore::{
    cooperative_gain, cooperative_gain_samples, run_arq, run_cooperative, CooperativeSimulation,
};
use coopretx::topology::{pair_receivers, place_receivers, Topology};

fn batch(b: u32) -> BatchConfig {
    BatchConfig::new(b).unwrap()
}

#[test]
fn small_batch_gain_falls_short_of_theory() {
    let seeds: Vec<u64> = (1000..1200).collect();
    let samples = cooperative_gain_samples(batch(100), &LossMatrix::symmetric(0.05).unwrap(), &seeds).unwrap();
    let (mean, se) = mean_and_se(&samples);
    let theory = retransmission_gain(0.05).unwrap();
    assert!(theory - mean > 2.0 * se, "{mean} ± {se} vs {theory}");
}

#[test]
fn gain_at_point_three() {
    let seeds: Vec<u64> = (0..100).map(|s| s * 7 + 3).collect();
    let g = cooperative_gain(batch(1000), &LossMatrix::symmetric(0.3).unwrap(), &seeds).unwrap();
    let theory = retransmission_gain(0.3).unwrap();
    assert!(((g - theory) / theory).abs() < 0.05, "{g} vs {theory}");
}

#[test]
fn asymmetric_losses_terminate_with_full_delivery() {
    let cases = [
        LossMatrix::new(0.4, 0.1, 0.2, 0.05).unwrap(),
        LossMatrix::new(0.05, 0.6, 0.7, 0.3).unwrap(),
        LossMatrix::new(0.9, 0.9, 0.9, 0.9).unwrap(),
        LossMatrix::new(0.0, 0.5, 0.5, 0.0).unwrap(),
    ];
    for (i, loss) in cases.into_iter().enumerate() {
        let ch = ChannelRealization::new(i as u64, loss);
        let mut sim = CooperativeSimulation::new(batch(150), ch).unwrap();
        while sim.step().unwrap() {
            sim.check_invariants().unwrap();
        }
        assert_eq!(sim.ledger().delivered, 300);
        let arq = run_arq(batch(150), &ch).unwrap();
        assert_eq!(arq.delivered, 300);
    }
}

#[test]
fn ledger_identity() {
    for seed in 0..20 {
        let ch = ChannelRealization::new(seed, LossMatrix::symmetric(0.35).unwrap());
        let coop = run_cooperative(batch(120), &ch).unwrap();
        assert_eq!(coop.retx_total(), coop.arq_retx + coop.coop_retx_slots);
        assert_eq!(coop.initial_tx, 240);
        // one data transmission per slot, two receptions per cooperative slot
        assert_eq!(coop.slots_elapsed, coop.initial_tx + coop.retx_total());
        assert_eq!(coop.coop_receptions, 2 * coop.coop_retx_slots);
        let arq = run_arq(batch(120), &ch).unwrap();
        assert_eq!(arq.coop_retx_slots, 0);
        assert_eq!(arq.slots_elapsed, arq.initial_tx + arq.arq_retx);
    }
}

#[test]
fn collided_success_rate_inside_protocol() {
    let p: f64 = 0.3;
    let (mut receptions, mut successes) = (0u64, 0u64);
    for seed in 0..50 {
        let ledger = run_cooperative(batch(1000), &ChannelRealization::new(seed, LossMatrix::symmetric(p).unwrap())).unwrap();
        receptions += ledger.coop_receptions;
        successes += ledger.coop_successes;
    }
    let q = (1.0 - p).powi(2);
    let se = (q * (1.0 - q) / receptions as f64).sqrt();
    assert!((successes as f64 / receptions as f64 - q).abs() < 3.0 * se);
}

#[test]
fn placement_dump_round_trip() {
    let topo = Topology::new(1.0, 1.0, 10).unwrap();
    let placement = place_receivers(&topo, 12);
    let pairing = pair_receivers(&placement);
    let mut buf = Vec::new();
    placement.write_table(&pairing, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let paired_lines = text.lines().skip(1).filter(|l| !l.ends_with('-')).count();
    assert_eq!(paired_lines, 2 * pairing.pairs.len());
}
