//! The invariant quasicircle sampled along the critical orbit, and its
//! geometry: the corner angle at the critical point, bounded turning,
//! beta numbers, and the scale decay of closest returns.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cfrac::{AngleOracle, ContinuedFraction};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fit;
use crate::maps::OrbitSource;

/// Orbits leaving this annulus count as escaped.
const ESCAPE: (f64, f64) = (1e-12, 1e12);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// Orbit index: the vertex is `f^k(c)`.
    pub k: u64,
    /// `{k theta}`.
    pub angle: f64,
    pub point: Complex64,
}

/// `q_n` orbit samples of the critical point, sorted by `{k theta}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HermanCurve {
    pub vertices: Vec<Vertex>,
    pub theta: ContinuedFraction,
    pub critical_point: Complex64,
    pub criticality: Option<(u32, u32)>,
    pub depth: usize,
    /// `max_k |f(z_k) - z_{k+1}|` relative to the diameter.
    pub dynamics_residual: f64,
    /// Position of orbit index `k` in `vertices`.
    position: Vec<usize>,
}

impl HermanCurve {
    /// Builds a curve from explicit samples, e.g. one read back from CSV.
    pub fn from_vertices(
        mut vertices: Vec<Vertex>,
        theta: ContinuedFraction,
        depth: usize,
        criticality: Option<(u32, u32)>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let oracle = AngleOracle::new(&theta, vertices.len() as u64 + 1)?;
        let mut err = None;
        vertices.sort_by(|a, b| {
            oracle.cmp_frac(a.k as i128, b.k as i128).unwrap_or_else(|e| {
                err = Some(e);
                a.k.cmp(&b.k)
            })
        });
        if let Some(e) = err {
            return Err(e);
        }
        let mut position = vec![usize::MAX; vertices.len()];
        for (i, v) in vertices.iter().enumerate() {
            match position.get_mut(v.k as usize) {
                Some(slot) if *slot == usize::MAX => *slot = i,
                _ => return Err(Error::Invalid(format!("orbit index {} is missing or repeated", v.k))),
            }
        }
        let critical_point = vertices[position[0]].point;
        Ok(HermanCurve {
            vertices,
            theta,
            critical_point,
            criticality,
            depth,
            dynamics_residual: 0.0,
            position,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `f^k(c)`.
    pub fn point(&self, k: u64) -> Complex64 {
        self.vertices[self.position[k as usize]].point
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.vertices.iter().map(|v| v.point).collect()
    }

    pub fn diameter(&self) -> f64 {
        let pts = self.points();
        diameter_of(&pts)
    }

    /// Winding number of the closed polyline about `z`.
    pub fn winding_number(&self, z: Complex64) -> i64 {
        let n = self.vertices.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = self.vertices[i].point - z;
            let b = self.vertices[(i + 1) % n].point - z;
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i64
    }

    /// Level-`m` vertices `f^k(c)`, `k < q_m`, in circular order.
    pub fn level(&self, m: usize) -> Result<Vec<Vertex>> {
        let qm = self.theta.convergents(m)?.q[m] as u64;
        if qm as usize > self.len() {
            return Err(Error::InsufficientDepth(format!("level {m} needs {qm} vertices")));
        }
        Ok(self.vertices.iter().filter(|v| v.k < qm).copied().collect())
    }
}

/// Samples `f^k(c)` for `k < q_n` and orders them by `{k theta}`.
pub fn trace(map: &dyn OrbitSource, theta: &ContinuedFraction, n: usize) -> Result<HermanCurve> {
    if theta.is_rational() {
        return Err(Error::Domain("tracing needs an irrational rotation number".into()));
    }
    let conv = theta.convergents(n)?;
    let qn = conv.q[n] as usize;
    let c = map.critical_point();
    let orbit = map.orbit(c, qn);
    if let Some(step) = orbit
        .iter()
        .position(|z| !(z.norm() > ESCAPE.0 && z.norm() < ESCAPE.1))
    {
        return Err(Error::OrbitEscape { step });
    }
    let oracle = AngleOracle::new(theta, qn as u64 + 1)?;
    let mut vertices = Vec::with_capacity(qn);
    for (k, &point) in orbit.iter().enumerate() {
        vertices.push(Vertex { k: k as u64, angle: oracle.frac(k as i128)?, point });
    }
    let mut curve = HermanCurve::from_vertices(vertices, theta.clone(), n, map.criticality())?;
    let diam = curve.diameter();
    let mut worst: f64 = 0.0;
    for k in 0..qn.saturating_sub(1) {
        worst = worst.max((map.eval(orbit[k]) - orbit[k + 1]).norm());
    }
    curve.dynamics_residual = if diam > 0.0 { worst / diam } else { worst };
    if curve.winding_number(Complex64::new(0.0, 0.0)) != 1 {
        return Err(Error::Invalid("traced curve does not wind once around 0".into()));
    }
    Ok(curve)
}

fn diameter_of(pts: &[Complex64]) -> f64 {
    // rotating calipers over the counter-clockwise hull
    let h = convex_hull(pts);
    let m = h.len();
    match m {
        0 | 1 => return 0.0,
        2 => return (h[0] - h[1]).norm(),
        _ => {}
    }
    let area = |a: Complex64, b: Complex64, c: Complex64| ((b - a).re * (c - a).im - (b - a).im * (c - a).re).abs();
    let mut best: f64 = 0.0;
    let mut j = 1;
    for i in 0..m {
        let ni = (i + 1) % m;
        while area(h[i], h[ni], h[(j + 1) % m]) > area(h[i], h[ni], h[j]) {
            j = (j + 1) % m;
        }
        best = best.max((h[i] - h[j]).norm()).max((h[ni] - h[j]).norm());
    }
    best
}

fn convex_hull(pts: &[Complex64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = pts.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex64>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &z in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], z) <= 0.0 {
                hull.pop();
            }
            hull.push(z);
        }
        hull.pop();
    }
    hull
}

/// Corner angle estimate at the critical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    /// Interior angle on the side of 0, in `(0, 2 pi)`.
    pub angle: f64,
    /// Spread of the per-depth estimates.
    pub dispersion: f64,
    /// `pi (2 d0 - 1) / (d0 + dinf - 1)` when the criticality is known.
    pub expected: Option<f64>,
    pub per_depth: Vec<f64>,
    pub samples: usize,
}

/// Depths pooled into one angle estimate.
const ANGLE_WINDOW: usize = 8;

/// Estimates the interior angle at `c` from the closest returns on both
/// sides. Returns with odd index approach from below in angle, even ones
/// from above; each arm's direction `arg(v - c)` is regressed on `|v - c|`
/// and extrapolated to the corner.
pub fn critical_angle(curve: &HermanCurve) -> Result<AngleEstimate> {
    let n = curve.depth;
    if n < ANGLE_WINDOW + 2 {
        return Err(Error::TooFewSamples { needed: ANGLE_WINDOW + 2, got: n });
    }
    let conv = curve.theta.convergents(n)?;
    let c = curve.critical_point;
    // arms as (distance, direction) pairs; directions unwrapped per arm
    let arm = |parity: usize| -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for k in (n - ANGLE_WINDOW..n).filter(|k| k % 2 == parity) {
            let q = conv.q[k] as u64;
            let v = curve.point(q) - c;
            out.push((v.norm(), v.arg()));
        }
        unwrap_angles(&mut out);
        out
    };
    let outgoing = arm(0);
    let incoming = arm(1);
    let extrapolate = |pts: &[(f64, f64)]| -> Option<f64> {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        fit::polynomial(&x, &y, 2.min(pts.len() - 1)).map(|c| c[0])
    };
    let a_out = extrapolate(&outgoing).ok_or(Error::TooFewSamples { needed: 3, got: outgoing.len() })?;
    let a_in = extrapolate(&incoming).ok_or(Error::TooFewSamples { needed: 3, got: incoming.len() })?;
    let angle = (a_in - a_out).rem_euclid(2.0 * PI);
    // pairwise estimates from consecutive returns
    let per_depth: Vec<f64> = outgoing
        .iter()
        .zip(&incoming)
        .map(|(o, i)| (i.1 - o.1).rem_euclid(2.0 * PI))
        .collect();
    let dispersion = per_depth.iter().map(|a| (a - angle).abs()).fold(0.0, f64::max);
    let expected = curve
        .criticality
        .map(|(d0, dinf)| PI * (2 * d0 - 1) as f64 / (d0 + dinf - 1) as f64);
    Ok(AngleEstimate {
        angle,
        dispersion,
        expected,
        per_depth,
        samples: outgoing.len() + incoming.len(),
    })
}

fn unwrap_angles(pts: &mut [(f64, f64)]) {
    for i in 1..pts.len() {
        let prev = pts[i - 1].1;
        let mut a = pts[i].1;
        while a - prev > PI {
            a -= 2.0 * PI;
        }
        while prev - a > PI {
            a += 2.0 * PI;
        }
        pts[i].1 = a;
    }
}

/// Largest `diam(shorter arc) / |a - b|` over sampled vertex pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurningReport {
    pub value: f64,
    /// Orbit indices of the maximizing pair.
    pub pair: (u64, u64),
    pub samples: usize,
}

/// Vertex subsample size for the quadratic-size geometry scans.
pub const TURNING_SAMPLES: usize = 512;

pub fn bounded_turning(curve: &HermanCurve) -> TurningReport {
    bounded_turning_with(curve, Execution::default())
}

pub fn bounded_turning_with(curve: &HermanCurve, exec: Execution) -> TurningReport {
    let n = curve.len();
    let m = n.min(TURNING_SAMPLES);
    let sample: Vec<Vertex> = (0..m).map(|i| curve.vertices[i * n / m]).collect();
    let pts: Vec<Complex64> = sample.iter().map(|v| v.point).collect();
    // forward[i][s]: diameter of the arc from i through i + s
    let forward: Vec<Vec<f64>> = exec::map_range(exec, m, |i| {
        let mut diam = vec![0.0; m];
        let mut d: f64 = 0.0;
        for s in 1..m {
            let p = pts[(i + s) % m];
            for t in 0..s {
                d = d.max((pts[(i + t) % m] - p).norm());
            }
            diam[s] = d;
        }
        diam
    });
    let mut best = (1.0, (sample[0].k, sample[0].k));
    for i in 0..m {
        for j in i + 1..m {
            let chord = (pts[i] - pts[j]).norm();
            if chord == 0.0 {
                continue;
            }
            let arc = forward[i][j - i].min(forward[j][m - (j - i)]);
            let ratio = arc / chord;
            if ratio > best.0 {
                best = (ratio, (sample[i].k, sample[j].k));
            }
        }
    }
    TurningReport { value: best.0, pair: best.1, samples: m }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    /// Direction of the best line, in `[0, pi)`.
    pub direction: f64,
    pub samples: usize,
}

pub const BETA_MIN_SAMPLES: usize = 20;

/// Half-width, over the samples, of the strip normal to `direction`.
fn strip_halfwidth(pts: &[Complex64], direction: f64) -> f64 {
    let normal = Complex64::new(-direction.sin(), direction.cos());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        let h = p.re * normal.re + p.im * normal.im;
        lo = lo.min(h);
        hi = hi.max(h);
    }
    0.5 * (hi - lo)
}

/// `beta(x, r) = min_L max_{z in D(x, r)} dist(z, L) / r` over the curve
/// samples. The principal axis is the first candidate; the exact minimum
/// is taken over the directions of the convex hull edges.
pub fn beta_number(curve: &HermanCurve, x: Complex64, r: f64) -> Result<BetaEstimate> {
    let pts: Vec<Complex64> = curve
        .vertices
        .iter()
        .map(|v| v.point)
        .filter(|p| (p - x).norm() <= r)
        .collect();
    beta_of_points(&pts, r)
}

pub fn beta_of_points(pts: &[Complex64], r: f64) -> Result<BetaEstimate> {
    if pts.len() < BETA_MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: BETA_MIN_SAMPLES, got: pts.len() });
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let n = pts.len() as f64;
    let mean = pts.iter().sum::<Complex64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let d = p - mean;
        sxx += d.re * d.re;
        syy += d.im * d.im;
        sxy += d.re * d.im;
    }
    let principal = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    // the narrowest strip has a hull edge on its boundary
    let hull = convex_hull(pts);
    let edges = (0..hull.len()).map(|i| (hull[(i + 1) % hull.len()] - hull[i]).arg());
    let (mut best_dir, mut best) = (principal, strip_halfwidth(pts, principal));
    for dir in edges {
        let w = strip_halfwidth(&hull, dir);
        if w < best {
            best = w;
            best_dir = dir;
        }
    }
    Ok(BetaEstimate {
        beta: best / r,
        direction: best_dir.rem_euclid(PI),
        samples: pts.len(),
    })
}

/// Largest diameter ratio between circularly adjacent level-`m` tiles.
pub fn bounded_geometry(curve: &HermanCurve, m: usize) -> Result<f64> {
    let tiling = crate::cfrac::tiling(&curve.theta, m)?;
    let count = tiling.vertices.len();
    if count > curve.len() {
        return Err(Error::InsufficientDepth(format!("level {m} needs {count} vertices")));
    }
    let n = curve.len();
    let pos: Vec<usize> = tiling.vertices.iter().map(|&k| curve.position[k as usize]).collect();
    let diams: Vec<f64> = (0..count)
        .map(|i| {
            let (a, b) = (pos[i], pos[(i + 1) % count]);
            let len = (b + n - a) % n;
            let arc: Vec<Complex64> = (0..=len).map(|t| curve.vertices[(a + t) % n].point).collect();
            diameter_of(&arc)
        })
        .collect();
    let mut worst: f64 = 1.0;
    for i in 0..count {
        let (x, y) = (diams[i], diams[(i + 1) % count]);
        if x == 0.0 || y == 0.0 {
            return Err(Error::InsufficientDepth(format!("degenerate tile at level {m}")));
        }
        worst = worst.max(x / y).max(y / x);
    }
    Ok(worst)
}

/// Exponential fit of `|f^{q_k}(c) - c| / diam` against `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted ratio per level.
    pub rate: f64,
    /// Slowest and fastest per-level ratios relative to the first level.
    pub lower: f64,
    pub upper: f64,
    pub r_squared: f64,
    pub distances: Vec<f64>,
}

pub fn return_decay(curve: &HermanCurve) -> Result<DecayFit> {
    let conv = curve.theta.convergents(curve.depth)?;
    let diam = curve.diameter();
    let c = curve.critical_point;
    let ks: Vec<usize> = (1..curve.depth).filter(|&k| (conv.q[k] as usize) < curve.len()).collect();
    let distances: Vec<f64> = ks.iter().map(|&k| (curve.point(conv.q[k] as u64) - c).norm() / diam).collect();
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let y: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let line = fit::line(&x, &y).ok_or(Error::TooFewSamples { needed: 3, got: ks.len() })?;
    let per_level: Vec<f64> = (1..y.len()).map(|i| ((y[i] - y[0]) / (x[i] - x[0])).exp()).collect();
    Ok(DecayFit {
        rate: line.slope.exp(),
        lower: per_level.iter().copied().fold(f64::INFINITY, f64::min),
        upper: per_level.iter().copied().fold(0.0, f64::max),
        r_squared: line.r_squared,
        distances,
    })
}

/// `f^{q_k}(c)` for the closest returns the curve resolves.
pub fn closest_returns(curve: &HermanCurve) -> Result<Vec<(usize, Complex64)>> {
    let conv = curve.theta.convergents(curve.depth)?;
    Ok((1..=curve.depth)
        .filter(|&k| (conv.q[k] as usize) < curve.len())
        .map(|k| (k, curve.point(conv.q[k] as u64)))
        .collect())
}
