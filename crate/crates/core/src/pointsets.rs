//! Candidate point sets doubling as uniform-weight quadrature rules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::Domain;

/// Ordered distinct points in a domain with uniform weight `|Ω| / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    domain: Domain,
    // Row-major, `dim` coordinates per point.
    coords: Vec<f64>,
    weight: f64,
}

impl QuadratureSet {
    /// Builds a set from flat coordinates, checking membership in the domain.
    pub fn from_coords(domain: Domain, coords: Vec<f64>) -> Result<Self> {
        let dim = domain.dim();
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "need a positive multiple of {dim} coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.chunks(dim).position(|p| !domain.contains(p)) {
            return Err(Error::InvalidParameter(format!(
                "point {bad} lies outside the {domain}"
            )));
        }
        let m = coords.len() / dim;
        Ok(Self {
            domain,
            coords,
            weight: domain.measure() / m as f64,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Equispaced `k × k` grid on `[−1, 1]²` restricted to the closed unit disk.
///
/// `k` is chosen so the retained count is the smallest one `≥ target_count`.
pub fn disk_grid(target_count: usize) -> QuadratureSet {
    let target = target_count.max(1);
    let mut k = 1;
    while disk_count(k) < target {
        k += 1;
    }
    // Retained counts alternate with the parity of k; look a few refinements ahead.
    let best = (k..k + 4)
        .filter(|&c| disk_count(c) >= target)
        .min_by_key(|&c| (disk_count(c), c))
        .unwrap_or(k);
    disk_grid_with_side(best)
}

/// Disk-restricted grid with `k` points per axis (`k = 1` is the origin alone).
pub fn disk_grid_with_side(k: usize) -> QuadratureSet {
    let k = k.max(1);
    let mut coords = Vec::new();
    for iy in 0..k {
        for ix in 0..k {
            if let Some((x, y)) = grid_node(k, ix, iy) {
                coords.push(x);
                coords.push(y);
            }
        }
    }
    QuadratureSet::from_coords(Domain::UnitDisk, coords).expect("grid lies in the disk")
}

fn disk_count(k: usize) -> usize {
    (0..k)
        .flat_map(|iy| (0..k).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| grid_node(k, ix, iy).is_some())
        .count()
}

// Integer offsets keep the membership test exact and the grid symmetric.
fn grid_node(k: usize, ix: usize, iy: usize) -> Option<(f64, f64)> {
    if k == 1 {
        return Some((0.0, 0.0));
    }
    let span = (k - 1) as i64;
    let a = 2 * ix as i64 - span;
    let b = 2 * iy as i64 - span;
    (a * a + b * b <= span * span).then(|| (a as f64 / span as f64, b as f64 / span as f64))
}

/// `count` i.i.d. uniform points in the open interval `(0, 1)`, sorted and distinct.
pub fn random_interval_points(count: usize, seed: u64) -> QuadratureSet {
    let count = count.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<f64> = Vec::with_capacity(count);
    while pts.len() < count {
        while pts.len() < count {
            let u: f64 = rng.random();
            if u > 0.0 {
                pts.push(u);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    }
    QuadratureSet::from_coords(Domain::UnitInterval, pts).expect("points lie in (0, 1)")
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Max over candidates of the distance to the nearest selected point.
pub fn fill_distance<P: AsRef<[f64]>>(selected: &[P], candidates: &QuadratureSet) -> f64 {
    candidates
        .points()
        .map(|c| {
            selected
                .iter()
                .map(|s| distance(s.as_ref(), c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
