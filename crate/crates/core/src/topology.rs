//! Receiver placement around two APs and cross-AP pairing.
//!
//! `AP_1` sits at the origin and `AP_2` at `(d_ap, 0)`.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ApId, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Topology {
    d_ap: f64,
    r_t: f64,
    n_per_ap: u32,
}

impl Topology {
    pub fn new(d_ap: f64, r_t: f64, n_per_ap: u32) -> Result<Self> {
        if !(r_t > 0.0) || !r_t.is_finite() {
            return Err(Error::Geometry(format!("transmission radius must be positive, got {r_t}")));
        }
        if !(d_ap >= 0.0) || !d_ap.is_finite() {
            return Err(Error::Geometry(format!("AP separation must be non-negative, got {d_ap}")));
        }
        Ok(Topology { d_ap, r_t, n_per_ap })
    }

    pub fn d_ap(&self) -> f64 {
        self.d_ap
    }

    pub fn r_t(&self) -> f64 {
        self.r_t
    }

    pub fn n_per_ap(&self) -> u32 {
        self.n_per_ap
    }

    pub fn has_overlap(&self) -> bool {
        self.d_ap < 2.0 * self.r_t
    }

    pub fn ap_position(&self, ap: ApId) -> Point {
        match ap {
            ApId::Ap1 => Point { x: 0.0, y: 0.0 },
            ApId::Ap2 => Point { x: self.d_ap, y: 0.0 },
        }
    }

    pub fn in_range(&self, ap: ApId, p: &Point) -> bool {
        self.ap_position(ap).distance(p) <= self.r_t
    }

    /// Uniform point in the coverage disk of `ap`.
    fn sample_in_disk<R: Rng>(&self, ap: ApId, rng: &mut R) -> Point {
        let centre = self.ap_position(ap);
        let radius = self.r_t * rng.gen::<f64>().sqrt();
        let angle = 2.0 * PI * rng.gen::<f64>();
        Point {
            x: centre.x + radius * angle.cos(),
            y: centre.y + radius * angle.sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub id: usize,
    pub ap: ApId,
    pub position: Point,
    pub in_overlap: bool,
}

/// Receivers of both APs: `AP_1`'s `N` receivers first, then `AP_2`'s.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub topology: Topology,
    pub receivers: Vec<Receiver>,
}

impl Placement {
    pub fn of(&self, ap: ApId) -> impl Iterator<Item = &Receiver> + '_ {
        self.receivers.iter().filter(move |r| r.ap == ap)
    }

    pub fn overlap_count(&self, ap: ApId) -> usize {
        self.of(ap).filter(|r| r.in_overlap).count()
    }

    /// Whitespace-separated table: receiver id, AP id, x, y, in_overlap, pair id
    /// (`-` for unpaired receivers).
    pub fn write_table<W: Write>(&self, pairing: &PairingTable, mut out: W) -> std::io::Result<()> {
        writeln!(out, "receiver ap x y in_overlap pair")?;
        for r in &self.receivers {
            let pair = pairing
                .pair_of(r.id)
                .map_or_else(|| "-".to_string(), |p| p.to_string());
            writeln!(
                out,
                "{} {} {:.6} {:.6} {} {}",
                r.id,
                r.ap.number(),
                r.position.x,
                r.position.y,
                u8::from(r.in_overlap),
                pair
            )?;
        }
        Ok(())
    }
}

/// `N` receivers per AP, i.i.d. uniform over each coverage disk.
pub fn place_receivers(topology: &Topology, seed: u64) -> Placement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = topology.n_per_ap as usize;
    let mut receivers = Vec::with_capacity(2 * n);
    for ap in ApId::BOTH {
        for _ in 0..n {
            let position = topology.sample_in_disk(ap, &mut rng);
            receivers.push(Receiver {
                id: receivers.len(),
                ap,
                position,
                in_overlap: topology.in_range(ap.other(), &position),
            });
        }
    }
    Placement {
        topology: *topology,
        receivers,
    }
}

/// One-to-one pairing of overlap receivers across the two APs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairingTable {
    /// `(receiver of AP_1, receiver of AP_2)`, by receiver id.
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Vec<usize>,
}

impl PairingTable {
    /// Index of the pair containing `receiver`, if any.
    pub fn pair_of(&self, receiver: usize) -> Option<usize> {
        self.pairs
            .iter()
            .position(|&(a, b)| a == receiver || b == receiver)
    }
}

/// Pairs overlap receivers of `AP_1` with those of `AP_2` in placement order
/// until one side runs out.
pub fn pair_receivers(placement: &Placement) -> PairingTable {
    let first: Vec<usize> = placement
        .of(ApId::Ap1)
        .filter(|r| r.in_overlap)
        .map(|r| r.id)
        .collect();
    let second: Vec<usize> = placement
        .of(ApId::Ap2)
        .filter(|r| r.in_overlap)
        .map(|r| r.id)
        .collect();
    let pairs: Vec<(usize, usize)> = first.iter().copied().zip(second.iter().copied()).collect();
    let unpaired = placement
        .receivers
        .iter()
        .map(|r| r.id)
        .filter(|id| !pairs.iter().any(|&(a, b)| a == *id || b == *id))
        .collect();
    PairingTable { pairs, unpaired }
}

/// Monte Carlo estimate of the lens area: the fraction of uniform points in
/// `AP_1`'s disk that also lie in `AP_2`'s disk, times the disk area.
pub fn monte_carlo_overlap_area(topology: &Topology, samples: u64, seed: u64) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let p = topology.sample_in_disk(ApId::Ap1, &mut rng);
            topology.in_range(ApId::Ap2, &p)
        })
        .count();
    hits as f64 / samples as f64 * PI * topology.r_t * topology.r_t
}
