//! Parameter sweeps behind the figures, their CSV/plot output, and the
//! validation checks run by `coopretx validate`.

mod config;
mod output;
mod sweep;
pub mod validation;

pub use config::{ExperimentConfig, Mode};
pub use output::{emit_outputs, emit_outputs_bytes, write_csv, write_plot_script, CSV_COLUMNS};
pub use sweep::{
    replication_seeds, simulate_network, sweep_loss, sweep_overlap, sweep_states, NetworkOutcome, SweepRow,
};

/// Sample mean and standard error (sample standard deviation over
/// `sqrt(n)`). A single sample has zero standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_se(&[7.0]), (7.0, 0.0));
        assert!(mean_and_se(&[]).0.is_nan());
    }
}
