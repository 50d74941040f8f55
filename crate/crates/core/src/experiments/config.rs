use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::check_probability;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    SweepLoss,
    SweepStates,
    SweepOverlap,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::SweepLoss => "sweep-loss",
            Mode::SweepStates => "sweep-states",
            Mode::SweepOverlap => "sweep-overlap",
            Mode::Validate => "validate",
        }
    }
}

/// Settings of one experiment run.
///
/// Values come from defaults, then an optional `key = value` config file,
/// then command-line flags. Keys match the long flag names.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Loss rate for single-point experiments (analytic report, overlap sweep).
    pub p: f64,
    pub p_grid: Vec<f64>,
    pub batches: Vec<u32>,
    pub replications: u32,
    pub seed: u64,
    /// AP separations; `None` selects the mode's default.
    pub d_ap: Option<Vec<f64>>,
    pub r_t: f64,
    pub n: u32,
    pub out: PathBuf,
}

pub const DEFAULT_P: f64 = 0.2;
pub const DEFAULT_BATCHES: [u32; 2] = [100, 1000];
pub const DEFAULT_REPLICATIONS: u32 = 100;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RT: f64 = 1.0;
pub const DEFAULT_N: u32 = 10;
pub const DEFAULT_OUT: &str = "results";

/// `0.05, 0.10, ..., 0.50`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=10).map(|k| f64::from(k) * 5.0 / 100.0).collect()
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            p: DEFAULT_P,
            p_grid: default_p_grid(),
            batches: DEFAULT_BATCHES.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
            d_ap: None,
            r_t: DEFAULT_RT,
            n: DEFAULT_N,
            out: PathBuf::from(DEFAULT_OUT),
        }
    }

    /// AP separations to evaluate. The overlap sweep defaults to
    /// `d_ap / r_t` in `0, 0.25, ..., 2`; other modes default to `d_ap = r_t`.
    pub fn d_ap_grid(&self) -> Vec<f64> {
        match (&self.d_ap, self.mode) {
            (Some(grid), _) => grid.clone(),
            (None, Mode::SweepOverlap) => (0..=8).map(|k| f64::from(k) * 0.25 * self.r_t).collect(),
            (None, _) => vec![self.r_t],
        }
    }

    /// Sets one option from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: cannot parse {value:?} as {what}"));
        match key {
            "p" => self.p = parse_one(value).map_err(|_| bad("a probability"))?,
            "p-grid" => self.p_grid = parse_list(value).map_err(|_| bad("a list of probabilities"))?,
            "batch" => self.batches = parse_list(value).map_err(|_| bad("a list of batch sizes"))?,
            "reps" => self.replications = parse_one(value).map_err(|_| bad("an integer"))?,
            "seed" => self.seed = parse_one(value).map_err(|_| bad("an unsigned integer"))?,
            "d-ap" => self.d_ap = Some(parse_list(value).map_err(|_| bad("a list of distances"))?),
            "rt" => self.r_t = parse_one(value).map_err(|_| bad("a distance"))?,
            "n" => self.n = parse_one(value).map_err(|_| bad("an integer"))?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_kv_text(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p", self.p)?;
        for &p in &self.p_grid {
            check_probability("p-grid entry", p)?;
        }
        if self.p_grid.is_empty() {
            return Err(Error::Config("p-grid is empty".into()));
        }
        if self.batches.is_empty() || self.batches.contains(&0) {
            return Err(Error::Config("batch sizes must be a non-empty list of positive integers".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(self.r_t > 0.0) || !self.r_t.is_finite() {
            return Err(Error::Config(format!("rt must be positive, got {}", self.r_t)));
        }
        for d in self.d_ap_grid() {
            if !(d >= 0.0) || d > 2.0 * self.r_t {
                return Err(Error::Config(format!("d-ap {d} outside [0, 2 rt = {}]", 2.0 * self.r_t)));
            }
        }
        Ok(())
    }

    /// Single-line rendering of every setting, used in CSV provenance.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "mode={} p={} p-grid={} batch={} reps={} seed={} d-ap={} rt={} n={}",
            self.mode.name(),
            self.p,
            join(&self.p_grid),
            join(&self.batches),
            self.replications,
            self.seed,
            join(&self.d_ap_grid()),
            self.r_t,
            self.n
        );
        s
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_one<T: FromStr>(s: &str) -> std::result::Result<T, ()> {
    s.trim().parse().map_err(|_| ())
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, ()> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_one).collect()
}
