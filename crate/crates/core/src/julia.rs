//! Basin classification of the plane, preimages of the invariant curve,
//! box-counting dimension, porosity profiles and image export.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fit;
use crate::maps::{OrbitSource, RationalMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Basin0 = 0,
    BasinInf = 1,
    Undecided = 2,
}

impl Label {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Label::Basin0),
            1 => Ok(Label::BasinInf),
            2 => Ok(Label::Undecided),
            _ => Err(Error::Invalid(format!("unknown label byte {b}"))),
        }
    }
}

/// Axis-parallel rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid(format!("degenerate window {x0},{y0},{x1},{y1}")));
        }
        Ok(Window { x0, y0, x1, y1 })
    }

    pub fn centered(center: Complex64, half_width: f64) -> Result<Self> {
        Window::new(
            center.re - half_width,
            center.im - half_width,
            center.re + half_width,
            center.im + half_width,
        )
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Trap radii around the superattracting fixed points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Traps {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Traps {
    fn default() -> Self {
        Traps { inner: 1e-6, outer: 1e6 }
    }
}

/// Labels and escape counts of a pixel grid. Row 0 is the top edge
/// (`y = y1`); pixel values are taken at pixel centres.
#[derive(Clone, Debug, PartialEq)]
pub struct GridClassification {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Label>,
    pub iterations: Vec<u32>,
    pub maxiter: u32,
    pub traps: Traps,
}

impl GridClassification {
    pub fn pixel_size(&self) -> (f64, f64) {
        (
            self.window.width() / self.width as f64,
            self.window.height() / self.height as f64,
        )
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Complex64 {
        pixel_center(&self.window, self.width, self.height, i, j)
    }

    /// Pixel containing `z`, if inside the window.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let (dx, dy) = self.pixel_size();
        let fi = ((z.re - self.window.x0) / dx).floor();
        let fj = ((self.window.y1 - z.im) / dy).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.width as f64 || fj >= self.height as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[j * self.width + i]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

fn pixel_center(w: &Window, width: usize, height: usize, i: usize, j: usize) -> Complex64 {
    Complex64::new(
        w.x0 + (i as f64 + 0.5) * w.width() / width as f64,
        w.y1 - (j as f64 + 0.5) * w.height() / height as f64,
    )
}

/// Label and step count of the orbit of `z`.
pub fn classify_point(map: &dyn OrbitSource, z: Complex64, maxiter: u32, traps: Traps) -> (Label, u32) {
    let mut z = z;
    for k in 0..=maxiter {
        if !z.is_finite() || z.norm() > traps.outer {
            return (Label::BasinInf, k);
        }
        if z.norm() < traps.inner {
            return (Label::Basin0, k);
        }
        if k < maxiter {
            z = map.eval(z);
        }
    }
    (Label::Undecided, maxiter)
}

pub fn classify(
    map: &dyn OrbitSource,
    window: Window,
    resolution: (usize, usize),
    maxiter: u32,
    traps: Traps,
) -> Result<GridClassification> {
    classify_with(map, window, resolution, maxiter, traps, Execution::default())
}

/// Row-parallel classification; identical output for either execution.
pub fn classify_with(
    map: &dyn OrbitSource,
    window: Window,
    resolution: (usize, usize),
    maxiter: u32,
    traps: Traps,
    exec: Execution,
) -> Result<GridClassification> {
    let (width, height) = resolution;
    if width == 0 || height == 0 {
        return Err(Error::Invalid("empty resolution".into()));
    }
    if !(traps.inner > 0.0 && traps.inner < traps.outer) {
        return Err(Error::Invalid("traps must satisfy 0 < inner < outer".into()));
    }
    let mut cells = vec![(Label::Undecided, 0u32); width * height];
    exec::for_each_row(exec, &mut cells, width, |j, row| {
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = classify_point(map, pixel_center(&window, width, height, i, j), maxiter, traps);
        }
    });
    let (labels, iterations) = cells.into_iter().unzip();
    Ok(GridClassification { window, width, height, labels, iterations, maxiter, traps })
}

pub const GRID_MAGIC: &[u8; 7] = b"HLGRID1";

/// Writes the binary grid: magic, window (4 x f64), width and height
/// (u32), maxiter (u32), traps (2 x f64), then row-major u8 labels and u32
/// iteration counts. Little-endian throughout.
pub fn write_grid(grid: &GridClassification, mut out: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + grid.labels.len() * 5);
    buf.extend_from_slice(GRID_MAGIC);
    for v in [grid.window.x0, grid.window.y0, grid.window.x1, grid.window.y1] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let w = u32::try_from(grid.width).map_err(|_| Error::Invalid("width exceeds u32".into()))?;
    let h = u32::try_from(grid.height).map_err(|_| Error::Invalid("height exceeds u32".into()))?;
    buf.extend_from_slice(&w.to_le_bytes());
    buf.extend_from_slice(&h.to_le_bytes());
    buf.extend_from_slice(&grid.maxiter.to_le_bytes());
    buf.extend_from_slice(&grid.traps.inner.to_le_bytes());
    buf.extend_from_slice(&grid.traps.outer.to_le_bytes());
    buf.extend(grid.labels.iter().map(|&l| l as u8));
    for it in &grid.iterations {
        buf.extend_from_slice(&it.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_grid(mut input: impl Read) -> Result<GridClassification> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(7)? != GRID_MAGIC {
        return Err(Error::Invalid("not an HLGRID1 file".into()));
    }
    let window = Window::new(cur.f64()?, cur.f64()?, cur.f64()?, cur.f64()?)?;
    let width = cur.u32()? as usize;
    let height = cur.u32()? as usize;
    let maxiter = cur.u32()?;
    let traps = Traps { inner: cur.f64()?, outer: cur.f64()? };
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Invalid("grid size overflows".into()))?;
    let labels = cur.take(n)?.iter().map(|&b| Label::from_byte(b)).collect::<Result<Vec<_>>>()?;
    let iterations = (0..n).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
    if cur.pos != bytes.len() {
        return Err(Error::Invalid("trailing bytes after grid".into()));
    }
    Ok(GridClassification { window, width, height, labels, iterations, maxiter, traps })
}

pub fn save_grid(grid: &GridClassification, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_grid(grid, std::io::BufWriter::new(f))
}

pub fn load_grid(path: &Path) -> Result<GridClassification> {
    read_grid(std::io::BufReader::new(std::fs::File::open(path)?))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Invalid("truncated grid file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// One layer of iterated preimages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageLayer {
    pub points: Vec<Complex64>,
    /// Roots whose residual exceeded the solver tolerance.
    pub degraded: usize,
    pub max_residual: f64,
}

/// Layer `k + 1` holds every preimage of every point of layer `k`; layer 0
/// is the input. Inputs of a layer are thinned to at most `max_points` by a
/// fixed stride before solving.
pub fn preimage_layers(
    map: &RationalMap,
    points: &[Complex64],
    depth: usize,
    max_points: usize,
    exec: Execution,
) -> Result<Vec<PreimageLayer>> {
    if depth == 0 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    let mut layers = vec![PreimageLayer { points: points.to_vec(), degraded: 0, max_residual: 0.0 }];
    for _ in 0..depth {
        let prev = &layers.last().unwrap().points;
        let stride = prev.len().div_ceil(max_points.max(1)).max(1);
        let sources: Vec<Complex64> = prev.iter().step_by(stride).copied().collect();
        let solved = exec::map_slice(exec, &sources, |&w| map.preimages(w));
        let mut layer = PreimageLayer { points: Vec::new(), degraded: 0, max_residual: 0.0 };
        for p in solved {
            layer.degraded += p.degraded;
            layer.max_residual = p.residuals.iter().copied().fold(layer.max_residual, f64::max);
            layer.points.extend(p.roots);
        }
        layers.push(layer);
    }
    Ok(layers)
}

/// Box counts over dyadic scales and the fitted slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub dimension: f64,
    /// Standard error of the fitted slope.
    pub uncertainty: f64,
    pub r_squared: f64,
    /// Spacing used for the fine cutoff.
    pub spacing: f64,
}

/// How samples cover the set being measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Isolated points; the spacing is the 99th percentile of adjacent gaps.
    Points,
    /// Consecutive points joined by segments; the spacing is the median gap.
    Polyline,
    /// A polyline whose last point joins the first.
    ClosedPolyline,
}

impl Sampling {
    fn spacing_quantile(self) -> f64 {
        match self {
            Sampling::Points => 0.99,
            Sampling::Polyline | Sampling::ClosedPolyline => 0.5,
        }
    }
}

pub const MIN_BOX_POINTS: usize = 10_000;
pub const MIN_SCALES: usize = 4;
/// The fit uses at most this many of the finest admissible scales.
pub const MAX_SCALES: usize = 6;

/// Dyadic box-counting dimension of a sampled curve.
///
/// Points are taken in curve order. The fit uses the [`MAX_SCALES`] finest
/// scales `diam / 2^k` between eight times the spacing and `diam / 8`. The
/// grid origin is the lower left corner of the bounding box.
pub fn box_dimension(points: &[Complex64], sampling: Sampling, exec: Execution) -> Result<DimensionReport> {
    if points.len() < MIN_BOX_POINTS {
        return Err(Error::TooFewSamples { needed: MIN_BOX_POINTS, got: points.len() });
    }
    let spacing = gap_quantile(points, sampling.spacing_quantile());
    let diam = bounding_diameter(points);
    let mut scales: Vec<f64> = (3..64)
        .map(|k| diam / 2f64.powi(k))
        .take_while(|&e| e >= 8.0 * spacing)
        .collect();
    scales.drain(..scales.len().saturating_sub(MAX_SCALES));
    box_dimension_at(points, sampling, &scales, spacing, exec)
}

/// Box counting at caller-chosen scales.
pub fn box_dimension_at(
    points: &[Complex64],
    sampling: Sampling,
    scales: &[f64],
    spacing: f64,
    exec: Execution,
) -> Result<DimensionReport> {
    if scales.len() < MIN_SCALES {
        return Err(Error::TooFewSamples { needed: MIN_SCALES, got: scales.len() });
    }
    let counts: Vec<u64> = scales.iter().map(|&eps| box_count(points, sampling, eps, exec)).collect();
    let x: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let line = fit::line(&x, &y).ok_or(Error::TooFewSamples { needed: 2, got: scales.len() })?;
    Ok(DimensionReport {
        scales: scales.to_vec(),
        counts,
        dimension: line.slope,
        uncertainty: line.slope_stderr,
        r_squared: line.r_squared,
        spacing,
    })
}

/// Number of `eps`-boxes met by the samples.
pub fn box_count(points: &[Complex64], sampling: Sampling, eps: f64, exec: Execution) -> u64 {
    if points.is_empty() {
        return 0;
    }
    let x0 = points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let y0 = points.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    // the far edge of the bounding box belongs to the last box
    let last = ((bounding_diameter(points) / eps).ceil() - 1.0).max(0.0) as i64;
    let clamp = |k: i64| k.clamp(0, last);
    let grid = |z: &Complex64| ((z.re - x0) / eps, (z.im - y0) / eps);
    let mut keys: Vec<(i64, i64)> = match sampling {
        Sampling::Points => exec::map_slice(exec, points, |z| {
            let (u, v) = grid(z);
            (clamp(u.floor() as i64), clamp(v.floor() as i64))
        }),
        Sampling::Polyline | Sampling::ClosedPolyline => {
            let n = points.len();
            let segments = if sampling == Sampling::ClosedPolyline { n } else { n - 1 };
            exec::map_range(exec, segments.max(1), |k| {
                let a = grid(&points[k]);
                let b = grid(&points[(k + 1) % n]);
                let mut cells = Vec::new();
                traverse(a, b, &mut cells);
                cells.into_iter().map(|(i, j)| (clamp(i), clamp(j))).collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect()
        }
    };
    exec::sort_dedup(exec, &mut keys);
    keys.len() as u64
}

/// Unit cells crossed by the segment `a -> b`, in order.
fn traverse(a: (f64, f64), b: (f64, f64), out: &mut Vec<(i64, i64)>) {
    let (mut i, mut j) = (a.0.floor() as i64, a.1.floor() as i64);
    let (i1, j1) = (b.0.floor() as i64, b.1.floor() as i64);
    let axis = |p: f64, d: f64, cell: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, (cell as f64 + 1.0 - p) / d, 1.0 / d)
        } else if d < 0.0 {
            (-1, (p - cell as f64) / -d, -1.0 / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (si, mut ti, di) = axis(a.0, b.0 - a.0, i);
    let (sj, mut tj, dj) = axis(a.1, b.1 - a.1, j);
    let steps = (i1 - i).abs() + (j1 - j).abs();
    out.push((i, j));
    for _ in 0..steps {
        if ti < tj {
            i += si;
            ti += di;
        } else {
            j += sj;
            tj += dj;
        }
        out.push((i, j));
    }
}

fn gap_quantile(points: &[Complex64], q: f64) -> f64 {
    let mut gaps: Vec<f64> = points.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    gaps.sort_by(f64::total_cmp);
    let k = ((gaps.len() - 1) as f64 * q).round() as usize;
    gaps[k]
}

fn bounding_diameter(points: &[Complex64]) -> f64 {
    let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for z in points {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    (hi.re - lo.re).max(hi.im - lo.im)
}

/// Koch curve on `[0, 1]` after `level` subdivisions, `4^level + 1` points.
pub fn koch_curve(level: u32) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
    for _ in 0..level {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for w in pts.windows(2) {
            let d = (w[1] - w[0]) / 3.0;
            let a = w[0] + d;
            next.extend([w[0], a, a + d * rot, a + d]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    pts
}

/// Empty-disk ratios around a point of the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PorosityProfile {
    pub center: Complex64,
    pub radii: Vec<f64>,
    /// Largest disk inside `D(center, r)` free of undecided pixels, over `r`.
    pub ratios: Vec<f64>,
    /// Slope of `log ratio` against `log r` over the positive ratios.
    pub exponent: Option<f64>,
    /// Radii dropped as under-resolved, with the reason.
    pub skipped: Vec<(f64, String)>,
}

/// Radii must span at least this many pixels.
pub const MIN_RADIUS_PIXELS: f64 = 8.0;

pub fn porosity_profile(grid: &GridClassification, center: Complex64, radii: &[f64]) -> Result<PorosityProfile> {
    porosity_profile_with(grid, center, radii, Execution::default())
}

pub fn porosity_profile_with(
    grid: &GridClassification,
    center: Complex64,
    radii: &[f64],
    exec: Execution,
) -> Result<PorosityProfile> {
    let (dx, dy) = grid.pixel_size();
    let dist = distance_to_label(grid, Label::Undecided, exec);
    let mut kept = Vec::new();
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Invalid(format!("radius {r} is not positive")));
        }
        if r < MIN_RADIUS_PIXELS * dx.max(dy) {
            skipped.push((r, format!("under {MIN_RADIUS_PIXELS} pixels")));
            continue;
        }
        let w = &grid.window;
        if center.re - r < w.x0 || center.re + r > w.x1 || center.im - r < w.y0 || center.im + r > w.y1 {
            skipped.push((r, "disk leaves the window".into()));
            continue;
        }
        let i0 = ((center.re - r - w.x0) / dx).floor().max(0.0) as usize;
        let i1 = (((center.re + r - w.x0) / dx).ceil() as usize).min(grid.width - 1);
        let j0 = ((w.y1 - center.im - r) / dy).floor().max(0.0) as usize;
        let j1 = (((w.y1 - center.im + r) / dy).ceil() as usize).min(grid.height - 1);
        let mut best: f64 = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let p = grid.pixel_center(i, j);
                let room = r - (p - center).norm();
                if room <= best {
                    continue;
                }
                best = best.max(room.min(dist[j * grid.width + i]));
            }
        }
        kept.push(r);
        ratios.push((best / r).clamp(0.0, 1.0));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = kept
        .iter()
        .zip(&ratios)
        .filter(|(_, &q)| q > 0.0)
        .map(|(r, q)| (r.ln(), q.ln()))
        .unzip();
    let exponent = fit::line(&x, &y).map(|l| l.slope);
    Ok(PorosityProfile { center, radii: kept, ratios, exponent, skipped })
}

/// Exact Euclidean distance from each pixel centre to the nearest centre
/// labelled `target`, in plane units; infinite when there is none.
pub fn distance_to_label(grid: &GridClassification, target: Label, exec: Execution) -> Vec<f64> {
    let (w, h) = (grid.width, grid.height);
    let (dx, dy) = grid.pixel_size();
    let mut f: Vec<f64> = grid
        .labels
        .iter()
        .map(|&l| if l == target { 0.0 } else { f64::INFINITY })
        .collect();
    // squared distance along rows, then along columns
    exec::for_each_row(exec, &mut f, w, |_, row| edt_1d(row, dx));
    let mut cols = transpose(&f, w, h);
    exec::for_each_row(exec, &mut cols, h, |_, col| edt_1d(col, dy));
    transpose(&cols, h, w).into_iter().map(f64::sqrt).collect()
}

fn transpose(v: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for j in 0..h {
        for i in 0..w {
            out[i * h + j] = v[j * w + i];
        }
    }
    out
}

/// Lower envelope of parabolas: `out[p] = min_q f[q] + (step (p - q))^2`.
fn edt_1d(f: &mut [f64], step: f64) {
    let n = f.len();
    let src: Vec<f64> = f.to_vec();
    let finite: Vec<usize> = (0..n).filter(|&q| src[q].is_finite()).collect();
    if finite.is_empty() {
        return;
    }
    let s2 = step * step;
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    let meet = |a: usize, b: usize| {
        ((src[b] / s2 + (b * b) as f64) - (src[a] / s2 + (a * a) as f64)) / (2.0 * (b as f64 - a as f64))
    };
    for &q in &finite {
        while let Some(&last) = v.last() {
            let s = meet(last, q);
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                z.push(s);
                v.push(q);
                break;
            }
        }
        if v.is_empty() {
            v.push(q);
            z.clear();
            z.push(f64::NEG_INFINITY);
        }
    }
    let mut k = 0;
    for (p, out) in f.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < p as f64 {
            k += 1;
        }
        let d = p as f64 - v[k] as f64;
        *out = src[v[k]] + s2 * d * d;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    /// One flat colour per label.
    Flat,
    /// Basins shaded by escape time.
    Shaded,
}

const COLOR_BASIN0: [u8; 3] = [255, 214, 102];
const COLOR_BASIN_INF: [u8; 3] = [66, 133, 244];
const COLOR_UNDECIDED: [u8; 3] = [0, 0, 0];
pub const COLOR_CURVE: [u8; 3] = [255, 0, 0];
pub const COLOR_PREIMAGE: [u8; 3] = [0, 170, 0];

/// Points drawn on top of the basins, one pixel each.
#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub points: Vec<Complex64>,
    pub color: [u8; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("ppm") => Ok(ImageFormat::Ppm),
            Some("png") => Ok(ImageFormat::Png),
            other => Err(Error::Invalid(format!("unsupported image extension {other:?}"))),
        }
    }
}

/// Row-major RGB pixels; overlays are drawn in order.
pub fn rgb_pixels(grid: &GridClassification, overlays: &[Overlay], palette: Palette) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(grid.labels.len() * 3);
    for (l, &it) in grid.labels.iter().zip(&grid.iterations) {
        let base = match l {
            Label::Basin0 => COLOR_BASIN0,
            Label::BasinInf => COLOR_BASIN_INF,
            Label::Undecided => COLOR_UNDECIDED,
        };
        let c = match (palette, l) {
            (Palette::Shaded, Label::Basin0 | Label::BasinInf) => {
                let t = 1.0 - 0.6 * (1.0 + it as f64).ln() / (1.0 + grid.maxiter.max(1) as f64).ln();
                base.map(|v| (v as f64 * t).round() as u8)
            }
            _ => base,
        };
        rgb.extend_from_slice(&c);
    }
    for ov in overlays {
        for &z in &ov.points {
            if let Some((i, j)) = grid.pixel_of(z) {
                let k = 3 * (j * grid.width + i);
                rgb[k..k + 3].copy_from_slice(&ov.color);
            }
        }
    }
    rgb
}

/// Binary PPM: `P6\n{w} {h}\n255\n` then RGB bytes.
pub fn encode_ppm(grid: &GridClassification, overlays: &[Overlay], palette: Palette) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.extend(rgb_pixels(grid, overlays, palette));
    out
}

pub fn render(grid: &GridClassification, overlays: &[Overlay], palette: Palette, path: &Path) -> Result<()> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Ppm => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(&encode_ppm(grid, overlays, palette))?;
        }
        ImageFormat::Png => {
            let w = u32::try_from(grid.width).map_err(|_| Error::Invalid("width exceeds u32".into()))?;
            let h = u32::try_from(grid.height).map_err(|_| Error::Invalid("height exceeds u32".into()))?;
            image::save_buffer(path, &rgb_pixels(grid, overlays, palette), w, h, image::ExtendedColorType::Rgb8)
                .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{blaschke, herman_family};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect()
    }

    fn grid_of(labels: Vec<Label>, w: usize, h: usize) -> GridClassification {
        let n = labels.len();
        GridClassification {
            window: Window::new(0.0, 0.0, w as f64, h as f64).unwrap(),
            width: w,
            height: h,
            labels,
            iterations: vec![0; n],
            maxiter: 10,
            traps: Traps::default(),
        }
    }

    #[test]
    fn trap_examples() {
        let b = blaschke(2, 0.3).unwrap();
        let t = Traps::default();
        assert_eq!(classify_point(&b, Complex64::new(0.0, 0.0), 50, t), (Label::Basin0, 0));
        assert_eq!(classify_point(&b, Complex64::new(1e6 + 1.0, 0.0), 50, t), (Label::BasinInf, 0));
        // the unit circle is invariant
        for k in 0..16 {
            let z = Complex64::from_polar(1.0, k as f64);
            assert_eq!(classify_point(&b, z, 500, t).0, Label::Undecided);
        }
    }

    #[test]
    fn grid_basics_and_paths_agree() {
        let b = blaschke(2, 0.3).unwrap();
        let w = Window::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let g = classify_with(&b, w, (41, 41), 200, Traps::default(), Execution::Parallel).unwrap();
        let s = classify_with(&b, w, (41, 41), 200, Traps::default(), Execution::Sequential).unwrap();
        assert_eq!(g, s);
        let (i, j) = g.pixel_of(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(g.label(i, j), Label::Basin0);
        assert_eq!(g.pixel_center(20, 20), Complex64::new(0.0, 0.0));
        assert!(g.count(Label::Basin0) > 0 && g.count(Label::BasinInf) > 0);
    }

    #[test]
    fn raising_maxiter_only_resolves_undecided() {
        let f = herman_family(3, 2, Complex64::new(-1.144208, -0.964454)).unwrap();
        let w = Window::new(-1.5, -1.5, 2.5, 1.5).unwrap();
        let lo = classify(&f, w, (64, 48), 20, Traps::default()).unwrap();
        let hi = classify(&f, w, (64, 48), 400, Traps::default()).unwrap();
        let mut resolved = 0;
        for (a, b) in lo.labels.iter().zip(&hi.labels) {
            match a {
                Label::Undecided => resolved += (*b != Label::Undecided) as usize,
                _ => assert_eq!(a, b),
            }
        }
        assert!(resolved > 0);
    }

    #[test]
    fn basin0_is_forward_invariant() {
        let f = herman_family(3, 2, Complex64::new(-1.144208, -0.964454)).unwrap();
        let w = Window::new(-1.5, -1.5, 2.5, 1.5).unwrap();
        let g = classify(&f, w, (80, 60), 300, Traps::default()).unwrap();
        let mut checked = 0;
        for j in 2..g.height - 2 {
            for i in 2..g.width - 2 {
                let interior = (0..5).all(|a| (0..5).all(|b| g.label(i + a - 2, j + b - 2) == Label::Basin0));
                if interior {
                    let z = f.eval_fast(g.pixel_center(i, j));
                    assert_eq!(classify_point(&f, z, 300, g.traps).0, Label::Basin0);
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn grid_file_roundtrip() {
        let b = blaschke(2, 0.3).unwrap();
        let g = classify(&b, Window::new(-2.0, -1.0, 2.0, 1.0).unwrap(), (7, 5), 30, Traps::default()).unwrap();
        let mut buf = Vec::new();
        write_grid(&g, &mut buf).unwrap();
        assert_eq!(&buf[..7], GRID_MAGIC);
        assert_eq!(buf.len(), 7 + 32 + 12 + 16 + 35 * 5);
        assert_eq!(read_grid(&buf[..]).unwrap(), g);
        assert!(read_grid(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_grid(&bad[..]).is_err());
    }

    #[test]
    fn box_dimension_examples() {
        let ring = circle(100_000);
        for mode in [Sampling::Points, Sampling::ClosedPolyline] {
            let c = box_dimension(&ring, mode, Execution::Parallel).unwrap();
            assert!((c.dimension - 1.0).abs() < 0.02, "{mode:?} {c:?}");
        }
        let seg: Vec<Complex64> = (0..20_000).map(|k| Complex64::new(k as f64 / 20_000.0, 0.5 * k as f64 / 20_000.0)).collect();
        for mode in [Sampling::Points, Sampling::Polyline] {
            let s = box_dimension(&seg, mode, Execution::Parallel).unwrap();
            assert!((s.dimension - 1.0).abs() < 0.01, "{mode:?} {s:?}");
        }
        let koch = koch_curve(10);
        let k = box_dimension(&koch, Sampling::Polyline, Execution::Parallel).unwrap();
        assert!((k.dimension - 4f64.ln() / 3f64.ln()).abs() < 0.03, "{k:?}");
        assert_eq!(k, box_dimension(&koch, Sampling::Polyline, Execution::Sequential).unwrap());
        assert!(box_dimension(&circle(100), Sampling::Points, Execution::Parallel).is_err());
    }

    #[test]
    fn polyline_counts_cover_points() {
        let pts = circle(2000);
        for eps in [0.3, 0.05, 0.01] {
            let p = box_count(&pts, Sampling::Points, eps, Execution::Parallel);
            let l = box_count(&pts, Sampling::ClosedPolyline, eps, Execution::Parallel);
            assert!(l >= p);
        }
        // a horizontal segment across four cells
        let seg = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.25)];
        assert_eq!(box_count(&seg, Sampling::Polyline, 0.25, Execution::Parallel), 5);
    }

    #[test]
    fn koch_fixture_shape() {
        let k = koch_curve(2);
        assert_eq!(k.len(), 17);
        assert_eq!(k[0], Complex64::new(0.0, 0.0));
        assert_eq!(k[16], Complex64::new(1.0, 0.0));
        let apex = k[8];
        assert!((apex - Complex64::new(0.5, 3f64.sqrt() / 6.0)).norm() < 1e-12);
    }

    #[test]
    fn porosity_extremes() {
        let all_j = grid_of(vec![Label::Undecided; 64 * 64], 64, 64);
        let p = porosity_profile(&all_j, Complex64::new(32.0, 32.0), &[24.0, 16.0, 8.0]).unwrap();
        assert_eq!(p.ratios, vec![0.0; 3]);
        let all_f = grid_of(vec![Label::Basin0; 64 * 64], 64, 64);
        let p = porosity_profile(&all_f, all_f.pixel_center(32, 32), &[24.0, 16.0, 8.0, 4.0]).unwrap();
        assert_eq!(p.radii.len(), 3);
        assert_eq!(p.skipped.len(), 1);
        assert_eq!(p.ratios, vec![1.0; 3]);
        // off a pixel centre the best disk loses at most half a diagonal
        let p = porosity_profile(&all_f, Complex64::new(32.0, 32.0), &[24.0, 16.0, 8.0]).unwrap();
        for (r, q) in p.radii.iter().zip(&p.ratios) {
            assert!(*q >= 1.0 - 0.5f64.sqrt() / r, "{r} {q}");
        }
    }

    #[test]
    fn porosity_of_a_line() {
        // the Julia set is the horizontal line through the centre
        let (w, h) = (129, 129);
        let labels = (0..w * h).map(|k| if k / w == 64 { Label::Undecided } else { Label::Basin0 }).collect();
        let g = grid_of(labels, w, h);
        let c = g.pixel_center(64, 64);
        let p = porosity_profile(&g, c, &[32.0, 16.0]).unwrap();
        for (r, q) in p.radii.iter().zip(&p.ratios) {
            // the largest empty disk in a half disk has radius r/2
            assert!((q - 0.5).abs() < 1.5 / r, "{r} {q}");
        }
    }

    fn brute_distance(g: &GridClassification) -> Vec<f64> {
        let targets: Vec<Complex64> = (0..g.height)
            .flat_map(|j| (0..g.width).map(move |i| (i, j)))
            .filter(|&(i, j)| g.label(i, j) == Label::Undecided)
            .map(|(i, j)| g.pixel_center(i, j))
            .collect();
        (0..g.height)
            .flat_map(|j| (0..g.width).map(move |i| (i, j)))
            .map(|(i, j)| {
                let p = g.pixel_center(i, j);
                targets.iter().map(|t| (t - p).norm()).fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn traversal_matches_dense_sampling(
            ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0,
        ) {
            let mut cells = Vec::new();
            traverse((ax, ay), (bx, by), &mut cells);
            for w in cells.windows(2) {
                prop_assert_eq!((w[1].0 - w[0].0).abs() + (w[1].1 - w[0].1).abs(), 1);
            }
            prop_assert_eq!(*cells.last().unwrap(), (bx.floor() as i64, by.floor() as i64));
            let n = 20_000;
            for k in 0..=n {
                let t = k as f64 / n as f64;
                let c = ((ax + t * (bx - ax)).floor() as i64, (ay + t * (by - ay)).floor() as i64);
                prop_assert!(cells.contains(&c));
            }
        }

        #[test]
        fn distance_transform_is_exact(
            bits in proptest::collection::vec(0u8..12, 9 * 13),
            sx in 0.5f64..2.0,
        ) {
            let labels = bits.iter().map(|&b| if b == 0 { Label::Undecided } else { Label::BasinInf }).collect();
            let mut g = grid_of(labels, 9, 13);
            g.window = Window::new(0.0, 0.0, 9.0 * sx, 13.0).unwrap();
            let fast = distance_to_label(&g, Label::Undecided, Execution::Parallel);
            let slow = brute_distance(&g);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-9 || (a.is_infinite() && b.is_infinite()), "{a} {b}");
            }
        }
    }

    #[test]
    fn ppm_contract() {
        let g = GridClassification {
            window: Window::new(0.0, 0.0, 2.0, 2.0).unwrap(),
            width: 2,
            height: 2,
            labels: vec![Label::Basin0, Label::BasinInf, Label::Undecided, Label::Basin0],
            iterations: vec![1, 2, 3, 4],
            maxiter: 10,
            traps: Traps::default(),
        };
        let ppm = encode_ppm(&g, &[], Palette::Flat);
        let header = b"P6\n2 2\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        let payload = &ppm[header.len()..];
        assert_eq!(payload.len(), 12);
        assert_eq!(payload, [COLOR_BASIN0, COLOR_BASIN_INF, COLOR_UNDECIDED, COLOR_BASIN0].concat());
        let ov = Overlay { points: vec![Complex64::new(1.5, 1.5)], color: COLOR_CURVE };
        let marked = encode_ppm(&g, &[ov], Palette::Flat);
        assert_eq!(&marked[header.len() + 3..header.len() + 6], COLOR_CURVE);
    }

    #[test]
    fn rendering_is_byte_identical() {
        let b = blaschke(2, 0.3).unwrap();
        let g = classify(&b, Window::new(-2.0, -2.0, 2.0, 2.0).unwrap(), (32, 32), 100, Traps::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ov = [Overlay { points: circle(200), color: COLOR_CURVE }];
        for ext in ["ppm", "png"] {
            let a = dir.path().join(format!("a.{ext}"));
            let c = dir.path().join(format!("c.{ext}"));
            render(&g, &ov, Palette::Shaded, &a).unwrap();
            render(&g, &ov, Palette::Shaded, &c).unwrap();
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
        }
        assert!(render(&g, &[], Palette::Flat, &dir.path().join("x.bmp")).is_err());
    }

    #[test]
    fn preimage_layer_examples() {
        let b = blaschke(2, 0.3).unwrap();
        let curve = circle(64);
        let layers = preimage_layers(&b, &curve, 2, 1000, Execution::Parallel).unwrap();
        assert_eq!(layers.len(), 3);
        assert_eq!(layers[1].points.len(), 3 * 64);
        assert_eq!(layers[1].degraded, 0);
        // each circle point has exactly one preimage on the circle
        let on = layers[1].points.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-9).count();
        assert_eq!(on, 64);
        for w in &curve {
            assert!(layers[1].points.iter().any(|z| (b.eval_fast(*z) - w).norm() < 1e-10));
        }
        assert!(layers[2].points.len() <= 3 * layers[1].points.len());
        let thin = preimage_layers(&b, &curve, 1, 16, Execution::Sequential).unwrap();
        assert_eq!(thin[1].points.len(), 3 * 16);
        assert!(preimage_layers(&b, &curve, 0, 16, Execution::Parallel).is_err());
    }
}
