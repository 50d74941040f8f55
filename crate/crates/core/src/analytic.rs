//! Closed-form retransmission counts, gains and coverage geometry.
//!
//! All quantities are expectations for one pair of interfering
//! AP-receiver links, each AP delivering a batch of `B` packets.

use std::f64::consts::PI;

use crate::{ApId, Error, Result};

/// Bernoulli loss probabilities `p_ij` of the link from `AP_i` to `R_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossMatrix {
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
}

impl LossMatrix {
    pub fn new(p11: f64, p12: f64, p21: f64, p22: f64) -> Result<Self> {
        for (name, value) in [("p11", p11), ("p12", p12), ("p21", p21), ("p22", p22)] {
            check_probability(name, value)?;
        }
        Ok(LossMatrix { p11, p12, p21, p22 })
    }

    /// Every link loses packets with the same probability `p`.
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p, p, p)
    }

    pub fn is_symmetric(&self) -> bool {
        self.p11 == self.p12 && self.p11 == self.p21 && self.p11 == self.p22
    }

    /// Loss probability of the link from `from` to the receiver served by `to`.
    pub fn get(&self, from: ApId, to: ApId) -> f64 {
        match (from, to) {
            (ApId::Ap1, ApId::Ap1) => self.p11,
            (ApId::Ap1, ApId::Ap2) => self.p12,
            (ApId::Ap2, ApId::Ap1) => self.p21,
            (ApId::Ap2, ApId::Ap2) => self.p22,
        }
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// Number of data packets each AP must deliver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    batch_size: u32,
}

impl BatchConfig {
    pub fn new(batch_size: u32) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(BatchConfig { batch_size })
    }

    pub fn size(&self) -> u32 {
        self.batch_size
    }

    fn as_f64(&self) -> f64 {
        f64::from(self.batch_size)
    }
}

/// Expected retransmissions of plain stop-and-wait ARQ, summed over both APs.
pub fn expected_arq_retx(loss: &LossMatrix, batch: BatchConfig) -> Result<f64> {
    let b = batch.as_f64();
    ApId::BOTH.iter().try_fold(0.0, |acc, &ap| {
        let p = loss.get(ap, ap);
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain(format!(
                "ARQ expectation diverges for own-link loss {p} at {ap}"
            )));
        }
        Ok(acc + b * p / (1.0 - p))
    })
}

/// Expected retransmissions spent lifting packets out of state 4 (lost at
/// both receivers), summed over both APs.
pub fn expected_state4_retx(loss: &LossMatrix, batch: BatchConfig) -> Result<f64> {
    let b = batch.as_f64();
    ApId::BOTH.iter().try_fold(0.0, |acc, &ap| {
        let both_lost = loss.get(ap, ApId::Ap1) * loss.get(ap, ApId::Ap2);
        if !(0.0..1.0).contains(&both_lost) {
            return Err(Error::domain(format!(
                "state-4 expectation diverges at {ap}: p_i1 * p_i2 = {both_lost}"
            )));
        }
        Ok(acc + b * both_lost / (1.0 - both_lost))
    })
}

/// Probability that a packet of `AP_i` ends up in state 2 (missed by its own
/// receiver, overheard by the partner), counting packets that first land in
/// state 4 and re-enter through ARQ retransmission.
///
/// `p_own` is `p_ii`, `p_cross` is `p_ij`. This is the sum of the geometric
/// series `p_ii (1 - p_ij) (1 + sum_n (p_ii p_ij)^n)`.
pub fn state2_probability(p_own: f64, p_cross: f64) -> Result<f64> {
    let both_lost = p_own * p_cross;
    if !(0.0..1.0).contains(&both_lost) || p_own < 0.0 || p_cross < 0.0 {
        return Err(Error::domain(format!(
            "state-2 series diverges: p_ii = {p_own}, p_ij = {p_cross}"
        )));
    }
    Ok(p_own * (1.0 - p_cross) / (1.0 - both_lost))
}

/// Per-AP cooperative-slot demand `B P_S2,i / ((1 - p_ii)(1 - p_ji))`.
fn state2_demand(loss: &LossMatrix, batch: BatchConfig, ap: ApId) -> Result<f64> {
    let other = ap.other();
    let p_s2 = state2_probability(loss.get(ap, ap), loss.get(ap, other))?;
    let success = (1.0 - loss.get(ap, ap)) * (1.0 - loss.get(other, ap));
    if success <= 0.0 {
        return Err(Error::domain(format!(
            "collided packet can never be decoded at the receiver of {ap}"
        )));
    }
    Ok(batch.as_f64() * p_s2 / success)
}

/// Expected cooperative retransmission slots for state-2 packets.
///
/// One slot serves a deferred packet of each AP, so the two sides are not
/// summed. With asymmetric losses the side with the larger demand dominates
/// and its excess is charged one slot per attempt, hence the maximum.
pub fn expected_state2_retx(loss: &LossMatrix, batch: BatchConfig) -> Result<f64> {
    let first = state2_demand(loss, batch, ApId::Ap1)?;
    let second = state2_demand(loss, batch, ApId::Ap2)?;
    Ok(first.max(second))
}

/// Gain of cooperative retransmission over ARQ at symmetric loss `p`:
/// `2 (1 - p^2) / (2 p (1 - p) + 1)`.
pub fn retransmission_gain(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(2.0 * (1.0 - p * p) / (2.0 * p * (1.0 - p) + 1.0))
}

/// Area of the lens where two coverage disks of radius `r_t` with centres
/// `d_ap` apart intersect.
pub fn overlap_area(d_ap: f64, r_t: f64) -> Result<f64> {
    if !(r_t > 0.0) || !r_t.is_finite() {
        return Err(Error::Geometry(format!(
            "transmission radius must be positive, got {r_t}"
        )));
    }
    if !(d_ap >= 0.0) || d_ap > 2.0 * r_t {
        return Err(Error::Geometry(format!(
            "AP separation {d_ap} outside [0, {}]",
            2.0 * r_t
        )));
    }
    if d_ap == 2.0 * r_t {
        return Ok(0.0);
    }
    let half = d_ap / 2.0;
    let area = 2.0 * r_t * r_t * (half / r_t).acos() - d_ap * (r_t * r_t - half * half).sqrt();
    // rounding can leave a tiny negative residue next to tangency
    Ok(area.max(0.0))
}

/// Expected number of an AP's `n` receivers that fall in the overlap.
pub fn expected_overlap_receivers(n: u32, d_ap: f64, r_t: f64) -> Result<f64> {
    let area = overlap_area(d_ap, r_t)?;
    Ok(f64::from(n) * area / (PI * r_t * r_t))
}

/// Network-wide gain when `n_a` of `n` receivers per AP are paired and the
/// rest use ARQ.
pub fn network_gain(n: f64, n_a: f64, n_arq: f64, n_cr: f64) -> Result<f64> {
    for (name, value) in [("n", n), ("n_a", n_a), ("n_arq", n_arq), ("n_cr", n_cr)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::domain(format!("{name} must be finite and non-negative, got {value}")));
        }
    }
    if n_a > n {
        return Err(Error::domain(format!("n_a = {n_a} exceeds n = {n}")));
    }
    let denominator = n_a * n_cr + (n - n_a) * n_arq;
    if denominator == 0.0 {
        // nothing is ever retransmitted (or there are no receivers)
        return Ok(1.0);
    }
    Ok(n * n_arq / denominator)
}

/// Every closed-form quantity for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticReport {
    pub n_arq: f64,
    pub n_cr_s4: f64,
    pub n_cr_s2: f64,
    pub n_cr: f64,
    /// State-2 probability of `AP_1`'s packets.
    pub p_s2: f64,
    pub g_r: f64,
    pub overlap_area: f64,
    pub n_a: f64,
    pub g_n: f64,
}

impl AnalyticReport {
    pub fn evaluate(
        loss: &LossMatrix,
        batch: BatchConfig,
        n: u32,
        d_ap: f64,
        r_t: f64,
    ) -> Result<Self> {
        let n_arq = expected_arq_retx(loss, batch)?;
        let n_cr_s4 = expected_state4_retx(loss, batch)?;
        let n_cr_s2 = expected_state2_retx(loss, batch)?;
        let n_cr = n_cr_s4 + n_cr_s2;
        let p_s2 = state2_probability(loss.p11, loss.p12)?;
        let g_r = if n_cr == 0.0 { 1.0 } else { n_arq / n_cr };
        let overlap_area = overlap_area(d_ap, r_t)?;
        let n_a = expected_overlap_receivers(n, d_ap, r_t)?;
        let g_n = network_gain(f64::from(n), n_a, n_arq, n_cr)?;
        Ok(AnalyticReport {
            n_arq,
            n_cr_s4,
            n_cr_s2,
            n_cr,
            p_s2,
            g_r,
            overlap_area,
            n_a,
            g_n,
        })
    }

    /// `key = value` lines, one per quantity.
    pub fn to_kv_string(&self) -> String {
        let fields = [
            ("n_arq", self.n_arq),
            ("n_cr_s4", self.n_cr_s4),
            ("n_cr_s2", self.n_cr_s2),
            ("n_cr", self.n_cr),
            ("p_s2", self.p_s2),
            ("g_r", self.g_r),
            ("overlap_area", self.overlap_area),
            ("n_a", self.n_a),
            ("g_n", self.g_n),
        ];
        fields
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn batch(b: u32) -> BatchConfig {
        BatchConfig::new(b).unwrap()
    }

    fn sym(p: f64) -> LossMatrix {
        LossMatrix::symmetric(p).unwrap()
    }

    #[test]
    fn arq_expectation() {
        assert_relative_eq!(expected_arq_retx(&sym(0.2), batch(1000)).unwrap(), 500.0, max_relative = 1e-12);
        assert_eq!(expected_arq_retx(&sym(0.0), batch(1000)).unwrap(), 0.0);
        let loss = LossMatrix::new(0.5, 0.1, 0.3, 0.5).unwrap();
        assert_relative_eq!(expected_arq_retx(&loss, batch(1)).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn arq_rejects_certain_loss() {
        let loss = LossMatrix { p11: 1.0, p12: 0.0, p21: 0.0, p22: 0.0 };
        assert!(matches!(expected_arq_retx(&loss, batch(10)), Err(Error::Domain(_))));
    }

    #[test]
    fn state4_expectation() {
        assert_relative_eq!(
            expected_state4_retx(&sym(0.2), batch(1000)).unwrap(),
            83.333_333_333_333_33,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            expected_state4_retx(&sym(0.5), batch(100)).unwrap(),
            66.666_666_666_666_67,
            max_relative = 1e-12
        );
        let loss = LossMatrix::new(0.4, 0.0, 0.0, 0.7).unwrap();
        assert_eq!(expected_state4_retx(&loss, batch(500)).unwrap(), 0.0);
        let loss = LossMatrix { p11: 1.0, p12: 1.0, p21: 0.0, p22: 0.0 };
        assert!(expected_state4_retx(&loss, batch(1)).is_err());
    }

    #[test]
    fn state2_probability_values() {
        assert_relative_eq!(state2_probability(0.25, 0.25).unwrap(), 0.2, max_relative = 1e-12);
        assert_eq!(state2_probability(0.0, 0.7).unwrap(), 0.0);
        assert_relative_eq!(state2_probability(0.2, 0.2).unwrap(), 1.0 / 6.0, max_relative = 1e-12);
        assert!(state2_probability(1.0, 1.0).is_err());
    }

    #[test]
    fn state2_expectation() {
        assert_relative_eq!(
            expected_state2_retx(&sym(0.2), batch(1000)).unwrap(),
            260.416_666_666_666_67,
            max_relative = 1e-12
        );
        assert_eq!(expected_state2_retx(&sym(0.0), batch(1000)).unwrap(), 0.0);
        assert_relative_eq!(
            expected_state2_retx(&sym(0.25), batch(100)).unwrap(),
            35.555_555_555_555_56,
            max_relative = 1e-12
        );
    }

    #[test]
    fn state2_asymmetric_takes_heavier_side() {
        let loss = LossMatrix::new(0.4, 0.2, 0.1, 0.1).unwrap();
        let b = batch(1000);
        let ap1 = 1000.0 * state2_probability(0.4, 0.2).unwrap() / (0.6 * 0.9);
        let ap2 = 1000.0 * state2_probability(0.1, 0.1).unwrap() / (0.9 * 0.8);
        assert!(ap1 > ap2);
        assert_relative_eq!(expected_state2_retx(&loss, b).unwrap(), ap1, max_relative = 1e-12);
    }

    #[test]
    fn gain_values() {
        // references from 30-digit evaluation of 2(1-p^2)/(2p(1-p)+1)
        assert_eq!(retransmission_gain(0.0).unwrap(), 2.0);
        assert_relative_eq!(retransmission_gain(0.5).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(retransmission_gain(0.2).unwrap(), 1.454_545_454_545_454_5, max_relative = 1e-14);
        assert_relative_eq!(retransmission_gain(0.25).unwrap(), 1.363_636_363_636_363_6, max_relative = 1e-14);
        assert_relative_eq!(retransmission_gain(0.3).unwrap(), 1.281_690_140_845_070_4, max_relative = 1e-14);
        assert!(retransmission_gain(1.0).is_err());
        assert!(retransmission_gain(-0.1).is_err());
    }

    #[test]
    fn gain_matches_ratio_of_counts() {
        let b = batch(1000);
        let ratio = expected_arq_retx(&sym(0.2), b).unwrap()
            / (expected_state4_retx(&sym(0.2), b).unwrap() + expected_state2_retx(&sym(0.2), b).unwrap());
        assert_relative_eq!(ratio, retransmission_gain(0.2).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn overlap_geometry() {
        assert_eq!(overlap_area(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(overlap_area(0.0, 1.0).unwrap(), PI);
        assert_eq!(overlap_area(0.0, 3.0).unwrap(), PI * 9.0);
        assert_eq!(overlap_area(6.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(overlap_area(1.0, 1.0).unwrap(), 1.228_369_698_608_756_8, max_relative = 1e-14);
        assert!(matches!(overlap_area(2.5, 1.0), Err(Error::Geometry(_))));
        assert!(matches!(overlap_area(1.0, 0.0), Err(Error::Geometry(_))));
        assert!(matches!(overlap_area(-0.1, 1.0), Err(Error::Geometry(_))));
    }

    #[test]
    fn overlap_receivers() {
        assert_relative_eq!(expected_overlap_receivers(10, 0.0, 1.0).unwrap(), 10.0, max_relative = 1e-15);
        assert_eq!(expected_overlap_receivers(10, 2.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            expected_overlap_receivers(10, 1.0, 1.0).unwrap(),
            3.910_022_189_557_706_4,
            max_relative = 1e-13
        );
        assert!(expected_overlap_receivers(10, 3.0, 1.0).is_err());
    }

    #[test]
    fn network_gain_values() {
        let g_r = retransmission_gain(0.2).unwrap();
        assert_relative_eq!(network_gain(10.0, 10.0, 500.0, 343.75).unwrap(), g_r, max_relative = 1e-12);
        assert_eq!(network_gain(10.0, 0.0, 500.0, 343.75).unwrap(), 1.0);
        let n_a = expected_overlap_receivers(10, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            network_gain(10.0, n_a, 500.0, 343.75).unwrap(),
            1.139_196_343_120_790_1,
            max_relative = 1e-12
        );
        assert_eq!(network_gain(10.0, 4.0, 0.0, 0.0).unwrap(), 1.0);
        assert!(network_gain(10.0, -1.0, 500.0, 343.75).is_err());
        assert!(network_gain(10.0, 11.0, 500.0, 343.75).is_err());
    }

    #[test]
    fn report_sums_components() {
        let report = AnalyticReport::evaluate(&sym(0.2), batch(1000), 10, 1.0, 1.0).unwrap();
        assert_eq!(report.n_cr, report.n_cr_s4 + report.n_cr_s2);
        assert_relative_eq!(report.g_r, 1.454_545_454_545_454_5, max_relative = 1e-12);
        assert_relative_eq!(report.g_n, 1.139_196_343_120_790_1, max_relative = 1e-12);
        assert!(report.to_kv_string().contains("g_r = "));
    }

    #[test]
    fn loss_matrix_validation() {
        assert!(LossMatrix::new(0.1, 0.2, 0.3, 1.0).is_err());
        assert!(LossMatrix::new(-0.1, 0.2, 0.3, 0.4).is_err());
        assert!(LossMatrix::symmetric(0.3).unwrap().is_symmetric());
        assert!(!LossMatrix::new(0.3, 0.3, 0.3, 0.2).unwrap().is_symmetric());
        assert!(BatchConfig::new(0).is_err());
    }

    /// Partial sum of `p_ii (1 - p_ij) (1 + sum_{n=1}^{terms} (p_ii p_ij)^n)`.
    fn state2_truncated(p_own: f64, p_cross: f64, terms: i32) -> f64 {
        let q = p_own * p_cross;
        let tail: f64 = (1..=terms).map(|n| q.powi(n)).sum();
        p_own * (1.0 - p_cross) * (1.0 + tail)
    }

    proptest! {
        #[test]
        fn gain_equals_count_ratio(p in 0.001f64..=0.9, b in 1u32..5000) {
            let loss = sym(p);
            let bc = batch(b);
            let ratio = expected_arq_retx(&loss, bc).unwrap()
                / (expected_state4_retx(&loss, bc).unwrap() + expected_state2_retx(&loss, bc).unwrap());
            let g = retransmission_gain(p).unwrap();
            prop_assert!(((ratio - g) / g).abs() < 1e-12);
        }

        #[test]
        fn gain_bounded_below_half(p in 0.0001f64..0.4999) {
            let g = retransmission_gain(p).unwrap();
            prop_assert!(g > 1.0 && g < 2.0);
        }

        #[test]
        fn gain_decreasing_below_half(a in 0.0001f64..0.4999, b in 0.0001f64..0.4999) {
            prop_assume!(a < b);
            prop_assert!(retransmission_gain(a).unwrap() > retransmission_gain(b).unwrap());
        }

        #[test]
        fn overlap_decreasing(r in 0.1f64..10.0, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(overlap_area(2.0 * r * lo, r).unwrap() >= overlap_area(2.0 * r * hi, r).unwrap());
        }

        #[test]
        fn state2_series_closed_form(p_own in 0.0f64..=0.8, p_cross in 0.0f64..=0.8) {
            let closed = state2_probability(p_own, p_cross).unwrap();
            prop_assert!((closed - state2_truncated(p_own, p_cross, 60)).abs() < 1e-12);
        }

        // 60 terms leave a tail near 1e-6 at p = 0.9, so the upper range needs more
        #[test]
        fn state2_series_closed_form_high_loss(p_own in 0.8f64..=0.9, p_cross in 0.8f64..=0.9) {
            let closed = state2_probability(p_own, p_cross).unwrap();
            prop_assert!((closed - state2_truncated(p_own, p_cross, 400)).abs() < 1e-12);
        }

        #[test]
        fn symmetric_state2_reduces(p in 0.0f64..0.99) {
            let closed = state2_probability(p, p).unwrap();
            prop_assert!((closed - p / (1.0 + p)).abs() < 1e-14);
        }

        #[test]
        fn network_gain_at_least_one(p in 0.001f64..0.4999, n_a in 0.0f64..=10.0) {
            let bc = batch(1000);
            let loss = sym(p);
            let n_arq = expected_arq_retx(&loss, bc).unwrap();
            let n_cr = expected_state4_retx(&loss, bc).unwrap() + expected_state2_retx(&loss, bc).unwrap();
            prop_assert!(network_gain(10.0, n_a, n_arq, n_cr).unwrap() >= 1.0);
        }
    }
}
