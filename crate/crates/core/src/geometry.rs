//! Point processes on a square window with optional wrap-around.
//!
//! Deployments are homogeneous Poisson point processes (HPPP) observed in a
//! finite square. With wrap-around enabled the square is treated as a torus:
//! opposite edges are identified and all distances wrap, which removes window
//! edge effects from interference statistics. The measurement point ("typical
//! UE") sits at the window center; by Slivnyak's theorem conditioning a PPP on
//! an added point leaves the law of the remaining points unchanged.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Square observation window, side in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub side_km: f64,
    /// Treat the window as a torus. Simulations keep this on; turning it off
    /// reintroduces edge effects and is only useful for diagnostics.
    pub wraparound: bool,
}

impl Window {
    pub fn new(side_km: f64) -> Self {
        Self { side_km, wraparound: true }
    }

    pub fn area_km2(&self) -> f64 {
        self.side_km * self.side_km
    }

    pub fn center(&self) -> Point {
        Point { x_km: 0.5 * self.side_km, y_km: 0.5 * self.side_km }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.side_km.is_finite() || self.side_km <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "window side must be positive and finite, got {}",
                self.side_km
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_km: f64,
    pub y_km: f64,
}

/// A realized point pattern together with the intensity that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    pub points: Vec<Point>,
    /// Generating intensity in points per km^2 (not the realized count).
    pub density_km2: f64,
}

impl PointPattern {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sample an HPPP of the given intensity on the window: a Poisson count with
/// mean `density * area`, then positions i.i.d. uniform.
pub fn sample_hppp(
    density_km2: f64,
    window: &Window,
    rng: &mut impl Rng,
) -> Result<PointPattern, Error> {
    window.validate()?;
    if !density_km2.is_finite() || density_km2 < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "point process intensity must be non-negative and finite, got {density_km2}"
        )));
    }
    let mean = density_km2 * window.area_km2();
    let n = if mean > 0.0 {
        let poisson = Poisson::new(mean)
            .map_err(|e| Error::InvalidConfig(format!("bad Poisson mean {mean}: {e}")))?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    let side = window.side_km;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(Point {
            x_km: rng.random_range(0.0..side),
            y_km: rng.random_range(0.0..side),
        });
    }
    Ok(PointPattern { points, density_km2 })
}

/// Planar distance between `a` and `b`; wraps both coordinates when the window
/// is a torus. Wrapping per coordinate equals the minimum over the 3x3
/// periodic images of `b`, so the result is at most `side * sqrt(2) / 2`.
pub fn toroidal_distance_2d(a: Point, b: Point, window: &Window) -> f64 {
    let side = window.side_km;
    let mut dx = (a.x_km - b.x_km).abs();
    let mut dy = (a.y_km - b.y_km).abs();
    if window.wraparound {
        if dx + dx > side {
            dx = side - dx;
        }
        if dy + dy > side {
            dy = side - dy;
        }
    }
    (dx * dx + dy * dy).sqrt()
}

/// Prepend the measurement UE at the window center. The generating intensity
/// of the pattern is unchanged (the added point is a conditioning event, not
/// extra intensity).
pub fn place_typical_ue(mut pattern: PointPattern, window: &Window) -> PointPattern {
    pattern.points.insert(0, window.center());
    pattern
}

/// Prepend `count` measurement UEs (1..=4): the window center plus up to
/// three points displaced by half a side per axis, so on the torus every
/// pair is at least half a side apart and the measurements decorrelate.
pub fn place_measurement_points(
    mut pattern: PointPattern,
    window: &Window,
    count: usize,
) -> Result<PointPattern, Error> {
    if !(1..=4).contains(&count) {
        return Err(Error::InvalidConfig(format!(
            "measurement point count must lie in 1..=4, got {count}"
        )));
    }
    let s = window.side_km;
    let c = window.center();
    let offsets = [(0.0, 0.0), (0.5 * s, 0.0), (0.0, 0.5 * s), (0.5 * s, 0.5 * s)];
    for (i, &(dx, dy)) in offsets.iter().take(count).enumerate() {
        let p = Point { x_km: (c.x_km + dx) % s, y_km: (c.y_km + dy) % s };
        pattern.points.insert(i, p);
    }
    Ok(pattern)
}

/// Uniform bucket grid over the torus, used to enumerate candidate points in
/// rings of increasing distance. The bucket count per axis is odd so that
/// Chebyshev rings of bucket offsets tile the torus exactly once.
pub struct PointGrid {
    n: usize,
    bucket_km: f64,
    side_km: f64,
    /// CSR layout over the flattened `n x n` row-major buckets: bucket `b`
    /// holds `items[starts[b]..starts[b + 1]]`, point indices ascending.
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl PointGrid {
    /// Build a grid sized so a bucket holds a handful of points on average.
    pub fn build(pattern: &PointPattern, window: &Window) -> Self {
        let side = window.side_km;
        let per_axis = (pattern.len() as f64).sqrt().ceil() as usize;
        let mut n = per_axis.clamp(1, 301);
        if n % 2 == 0 {
            n += 1;
        }
        let flat: Vec<u32> = pattern
            .points
            .iter()
            .map(|p| {
                let (bx, by) = Self::bucket_of(p, side, n);
                (by * n + bx) as u32
            })
            .collect();
        let mut starts = vec![0u32; n * n + 1];
        for &b in &flat {
            starts[b as usize + 1] += 1;
        }
        for i in 1..starts.len() {
            starts[i] += starts[i - 1];
        }
        let mut cursor = starts.clone();
        let mut items = vec![0u32; flat.len()];
        for (i, &b) in flat.iter().enumerate() {
            items[cursor[b as usize] as usize] = i as u32;
            cursor[b as usize] += 1;
        }
        PointGrid { n, bucket_km: side / n as f64, side_km: side, starts, items }
    }

    fn bucket(&self, idx: usize) -> &[u32] {
        &self.items[self.starts[idx] as usize..self.starts[idx + 1] as usize]
    }

    fn bucket_of(p: &Point, side: f64, n: usize) -> (usize, usize) {
        let bx = ((p.x_km / side) * n as f64) as usize;
        let by = ((p.y_km / side) * n as f64) as usize;
        (bx.min(n - 1), by.min(n - 1))
    }

    /// Largest meaningful ring index; rings above this are empty.
    pub fn max_ring(&self) -> usize {
        self.n / 2
    }

    /// Lower bound on the planar distance from a query point to any point in
    /// ring `d` of the query's bucket.
    pub fn ring_min_dist_km(&self, d: usize) -> f64 {
        if d <= 1 {
            0.0
        } else {
            (d - 1) as f64 * self.bucket_km
        }
    }

    /// Collect the indices stored in ring `d` around the query point's bucket
    /// (Chebyshev offsets of exactly `d`, wrapped).
    pub fn ring_members(&self, query: &Point, d: usize, out: &mut Vec<u32>) {
        out.clear();
        let n = self.n as isize;
        let (qx, qy) = Self::bucket_of(query, self.side_km, self.n);
        let (qx, qy) = (qx as isize, qy as isize);
        let wrap = |v: isize| -> usize { v.rem_euclid(n) as usize };
        let di = d as isize;
        if d == 0 {
            out.extend_from_slice(self.bucket(qy as usize * self.n + qx as usize));
            return;
        }
        if d > self.max_ring() {
            return;
        }
        // Top and bottom rows of the ring.
        for dy in [-di, di] {
            let row = wrap(qy + dy) * self.n;
            for dx in -di..=di {
                out.extend_from_slice(self.bucket(row + wrap(qx + dx)));
            }
        }
        // Left and right columns, excluding the corners already visited.
        for dx in [-di, di] {
            let col = wrap(qx + dx);
            for dy in (-di + 1)..di {
                out.extend_from_slice(self.bucket(wrap(qy + dy) * self.n + col));
            }
        }
    }
}
