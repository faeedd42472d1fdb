//! Rotation numbers of circle maps and parameter tuning.
//!
//! Rotation numbers are bracketed by Stern–Brocot descent: the sign of
//! `F^q(x) - x - p` decides on which side of `p/q` the rotation number lies.
//! Comparing against an irrational `theta` walks its convergents, which
//! alternate around it.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::{Complex, Complex64};
use num_traits::Float;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::cfrac::{AngleOracle, ContinuedFraction, Convergents};
use crate::error::{Error, Result};
use crate::maps::{self, dd, dd_to_c64, ArnoldLift, DdComplex, HermanFamily, OrbitSource, Precision, RationalMap};
use crate::poly;

/// Largest return time used when comparing a rotation number with `theta`.
const MAX_RETURN: i128 = 4_000_000;
/// Largest denominator visited by the Stern–Brocot descent.
const MAX_DESCENT: i128 = 1_000_000;

type LiftFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Degree-one lift of an orientation preserving circle map.
#[derive(Clone)]
pub struct CircleLift {
    eval: Arc<LiftFn>,
    /// Lift coordinate of the critical point, used as base point.
    pub critical: f64,
    pub source: String,
}

impl std::fmt::Debug for CircleLift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CircleLift")
            .field("source", &self.source)
            .field("critical", &self.critical)
            .finish()
    }
}

impl CircleLift {
    /// Wraps `f`, checking periodicity and monotonicity on a 1e-3 grid.
    pub fn new<F>(source: impl Into<String>, critical: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let lift = CircleLift {
            eval: Arc::new(f),
            critical,
            source: source.into(),
        };
        let mut prev = lift.eval(0.0);
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            let y = lift.eval(x);
            if y < prev - 1e-12 {
                return Err(Error::NonMonotone { at: x });
            }
            let per = lift.eval(x + 1.0) - y - 1.0;
            if per.abs() > 1e-10 {
                return Err(Error::Invalid(format!("lift is not periodic at {x}: {per:e}")));
            }
            prev = y;
        }
        Ok(lift)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// `F + a`, the lift of the map post-composed with a rotation by `a`.
    pub fn shifted(&self, a: f64) -> CircleLift {
        let f = self.eval.clone();
        CircleLift {
            eval: Arc::new(move |x| f(x) + a),
            critical: self.critical,
            source: format!("{} + {a}", self.source),
        }
    }

    /// `F^q(x) - x - p`, keeping integer parts apart to preserve precision.
    pub fn displacement(&self, x: f64, q: i128, p: i128) -> f64 {
        let mut y = x;
        let mut whole: i128 = 0;
        for _ in 0..q {
            let z = self.eval(y);
            let k = z.floor();
            whole += k as i128;
            y = z - k;
        }
        (whole - p) as f64 + (y - x)
    }
}

impl ArnoldLift {
    pub fn circle_lift(&self) -> CircleLift {
        let a = *self;
        CircleLift {
            eval: Arc::new(move |x| a.lift(x)),
            critical: ArnoldLift::CRITICAL,
            source: format!("arnold({})", self.alpha),
        }
    }
}

/// Lift of a rational map preserving the unit circle, with `F(0)` in `[0,1)`.
///
/// Built from the factorization `f(z) = k prod(z - r_i) / prod(z - s_j)`:
/// roots inside the disk contribute `x + Arg(1 - r e^{-2 pi i x}) / 2 pi`,
/// roots outside `arg(-r)/2 pi + Arg(1 - e^{2 pi i x} / r) / 2 pi`.
pub fn circle_lift(map: &RationalMap) -> Result<CircleLift> {
    let mut deviation: f64 = 0.0;
    for i in 0..1000 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 1000.0);
        let w = map.eval_fast(z);
        deviation = deviation.max((w.norm() - 1.0).abs());
    }
    if !(deviation <= 1e-10) {
        return Err(Error::NotCircleInvariant { deviation });
    }
    let num = poly::trim(map.numerator());
    let den = poly::trim(map.denominator());
    let mut constant = (num[num.len() - 1] / den[den.len() - 1]).arg();
    let mut inside: Vec<(Complex64, f64)> = Vec::new();
    let mut outside: Vec<(Complex64, f64)> = Vec::new();
    let mut slope = 0.0;
    for (roots, sign) in [(poly::roots(&num), 1.0), (poly::roots(&den), -1.0)] {
        for r in roots {
            if r.norm() < 1.0 {
                slope += sign;
                inside.push((r, sign));
            } else {
                constant += sign * (-r).arg();
                outside.push((r.inv(), sign));
            }
        }
    }
    if (slope - 1.0).abs() > 0.5 {
        return Err(Error::Invalid(format!("circle degree {slope} is not 1")));
    }
    let raw = move |x: f64| -> f64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * x);
        let zc = z.conj();
        let mut s = constant + 2.0 * PI * x;
        for &(r, sg) in &inside {
            s += sg * (Complex64::new(1.0, 0.0) - r * zc).arg();
        }
        for &(ri, sg) in &outside {
            s += sg * (Complex64::new(1.0, 0.0) - z * ri).arg();
        }
        s / (2.0 * PI)
    };
    let shift = raw(0.0).floor();
    let f = move |x: f64| raw(x) - shift;
    // the lift must reproduce the map on the circle
    for i in 0..200 {
        let x = i as f64 / 200.0 + 0.0013;
        let z = Complex64::from_polar(1.0, 2.0 * PI * x);
        let w = map.eval_fast(z);
        let v = Complex64::from_polar(1.0, 2.0 * PI * f(x));
        if (w - v).norm() > 1e-9 {
            return Err(Error::Invalid("lift does not match the map".into()));
        }
    }
    CircleLift::new("rational map", 0.0, f)
}

/// A bracket `[lo, hi]` for a rotation number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalInterval {
    pub lo: (i128, i128),
    pub hi: (i128, i128),
    /// True when a periodic orbit pins the rotation number to `lo = hi`.
    pub exact: bool,
}

impl RationalInterval {
    pub fn width(&self) -> f64 {
        self.hi.0 as f64 / self.hi.1 as f64 - self.lo.0 as f64 / self.lo.1 as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = (self.lo.0 as f64 / self.lo.1 as f64, self.hi.0 as f64 / self.hi.1 as f64);
        x >= lo - 1e-15 && x <= hi + 1e-15
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.hi.0 as f64 / self.hi.1 as f64 + self.lo.0 as f64 / self.lo.1 as f64)
    }
}

/// Does `F^q(x) - x - p` vanish or change sign somewhere on the circle?
fn has_periodic_orbit(lift: &CircleLift, q: i128, p: i128) -> bool {
    const SAMPLES: usize = 256;
    let mut prev: Option<f64> = None;
    for i in 0..=SAMPLES {
        let x = i as f64 / SAMPLES as f64;
        let g = lift.displacement(x, q, p);
        if g == 0.0 {
            return true;
        }
        if let Some(pg) = prev {
            if pg.signum() != g.signum() {
                return true;
            }
        }
        prev = Some(g);
    }
    false
}

/// Brackets the rotation number by Stern–Brocot descent until `depth + 1`
/// turns of the descent have been resolved.
pub fn rotation_number(lift: &CircleLift, depth: usize) -> Result<RationalInterval> {
    let x0 = lift.critical;
    // monotone on the sampling grid, checked again here for shifted lifts
    let mut prev = lift.eval(0.0);
    for i in 1..=1000 {
        let y = lift.eval(i as f64 / 1000.0);
        if y < prev - 1e-12 {
            return Err(Error::NonMonotone { at: i as f64 / 1000.0 });
        }
        prev = y;
    }
    let n0 = (lift.eval(x0) - x0).floor() as i128;
    let g = lift.shifted(-(n0 as f64));
    let (mut lo, mut hi) = ((0i128, 1i128), (1i128, 1i128));
    let mut last_dir = 0i8;
    let mut turns = 0usize;
    let mut stuck = 0u32;
    let shift = |r: (i128, i128)| (r.0 + n0 * r.1, r.1);
    for _ in 0..1_000_000 {
        let m = (lo.0 + hi.0, lo.1 + hi.1);
        let v = g.displacement(x0, m.1, m.0);
        let dir = if v > 0.0 {
            lo = m;
            1
        } else if v < 0.0 {
            hi = m;
            -1
        } else {
            return Ok(RationalInterval { lo: shift(m), hi: shift(m), exact: true });
        };
        if last_dir != 0 && dir != last_dir {
            turns += 1;
            stuck = 0;
        } else {
            stuck += 1;
        }
        last_dir = dir;
        if turns > depth {
            break;
        }
        // a long one-sided run means the fixed endpoint may be the answer
        if stuck >= 4 && stuck.is_power_of_two() {
            let end = if dir > 0 { hi } else { lo };
            if has_periodic_orbit(&g, end.1, end.0) {
                return Ok(RationalInterval { lo: shift(end), hi: shift(end), exact: true });
            }
        }
        if lo.1 + hi.1 > MAX_DESCENT {
            break;
        }
    }
    Ok(RationalInterval { lo: shift(lo), hi: shift(hi), exact: false })
}

/// Compares the rotation number of `lift` with `theta` using the closest
/// returns of `theta`; `None` when they agree to the deepest return tested.
pub fn compare_rotation(lift: &CircleLift, theta: &ContinuedFraction) -> Result<Option<Ordering>> {
    let x0 = lift.critical;
    let mut y = x0;
    let mut whole: i128 = 0;
    let mut steps: i128 = 0;
    let mut k = 0;
    loop {
        let c = theta.convergents(k)?;
        let (p, q) = (c.p[k], c.q[k]);
        if q > MAX_RETURN {
            return Ok(None);
        }
        while steps < q {
            let z = lift.eval(y);
            let f = z.floor();
            whole += f as i128;
            y = z - f;
            steps += 1;
        }
        let v = (whole - p) as f64 + (y - x0);
        // p_k/q_k lies above theta for odd k, below for even k
        if k % 2 == 1 && v >= 0.0 {
            return Ok(Some(Ordering::Greater));
        }
        if k % 2 == 0 && v <= 0.0 {
            return Ok(Some(Ordering::Less));
        }
        k += 1;
        if theta.available().is_some_and(|a| k > a) {
            return Ok(None);
        }
    }
}

/// Output of the tuners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    /// `exp(2 pi i alpha)` for circle families, `c` otherwise.
    pub parameter: Complex64,
    /// Low-order part when tuned in double-double.
    pub parameter_lo: Complex64,
    pub alpha: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Depth `n` to which the closest returns were checked.
    pub verified_depth: usize,
    /// Accepted residuals at the final depth, in order.
    pub history: Vec<f64>,
    pub precision: Precision,
    /// Aitken limit of the last three level parameters, closer to the
    /// Herman parameter than any single superattracting one.
    #[serde(default)]
    pub limit: Option<Complex64>,
}

impl TuneResult {
    pub fn parameter_dd(&self) -> DdComplex {
        Complex::new(
            TwoFloat::new_add(self.parameter.re, self.parameter_lo.re),
            TwoFloat::new_add(self.parameter.im, self.parameter_lo.im),
        )
    }
}

/// Bisection on `alpha` for the family `F_0 + alpha`.
pub fn tune_lift_family(base: &CircleLift, theta: &ContinuedFraction, tol: f64) -> Result<TuneResult> {
    if theta.is_rational() {
        return Err(Error::Domain("tuning needs an irrational rotation number".into()));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let cmp = |a: f64| compare_rotation(&base.shifted(a), theta);
    if cmp(lo)? == Some(Ordering::Greater) || cmp(hi)? == Some(Ordering::Less) {
        return Err(Error::NonConvergence { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > tol {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NonConvergence { lo, hi });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match cmp(mid)? {
            Some(Ordering::Less) => lo = mid,
            Some(Ordering::Greater) => hi = mid,
            _ => {
                lo = mid;
                hi = mid;
            }
        }
    }
    let alpha = 0.5 * (lo + hi);
    let mut verified = 1;
    let lift = base.shifted(alpha);
    // deepest return time still resolving the rotation number
    loop {
        let k = verified + 1;
        let cv = theta.convergents(k)?;
        if cv.q[k] > MAX_RETURN / 4 {
            break;
        }
        let v = lift.displacement(lift.critical, cv.q[k], cv.p[k]);
        let ok = if k % 2 == 1 { v < 0.0 } else { v > 0.0 };
        if !ok {
            break;
        }
        verified = k;
    }
    Ok(TuneResult {
        parameter: Complex64::from_polar(1.0, 2.0 * PI * alpha),
        parameter_lo: Complex64::new(0.0, 0.0),
        alpha: Some(alpha),
        residual: hi - lo,
        iterations,
        verified_depth: verified,
        history: vec![],
        limit: None,
        precision: Precision::Double,
    })
}

/// Tunes `B_{d,alpha}` to rotation number `theta`.
pub fn tune_blaschke(d: u32, theta: &ContinuedFraction, tol: f64) -> Result<TuneResult> {
    let base = circle_lift(&maps::blaschke(d, 0.0)?)?;
    tune_lift_family(&base, theta, tol)
}

/// Tunes the Arnold family `x + alpha + sin(2 pi x)/(2 pi)`.
pub fn tune_arnold(theta: &ContinuedFraction, tol: f64) -> Result<TuneResult> {
    let base = maps::arnold_lift(0.0).circle_lift();
    tune_lift_family(&base, theta, tol)
}

/// Settings for [`tune_asymmetric`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricOptions {
    /// Target depth `m`: solve `f_c^{q_m}(1) = 1`.
    pub depth: usize,
    pub tol: f64,
    /// First continuation depth; defaults to the smallest `m` with `q_m >= 8`.
    pub start_depth: Option<usize>,
    pub precision: Precision,
    pub max_newton: usize,
}

impl AsymmetricOptions {
    pub fn new(depth: usize, tol: f64) -> Self {
        AsymmetricOptions {
            depth,
            tol,
            start_depth: None,
            precision: Precision::Double,
            max_newton: 40,
        }
    }
}

/// Default tuning depth: smallest `n` with `q_n >= 1000`.
pub fn default_depth(theta: &ContinuedFraction) -> Result<usize> {
    theta.depth_for_denominator(1000)
}

const TRAP: (f64, f64) = (1e-6, 1e6);

struct Level<T> {
    c: Complex<T>,
    residual: f64,
    history: Vec<f64>,
    iterations: usize,
}

fn to_t<T: Float>(z: Complex64) -> Complex<T> {
    Complex::new(T::from(z.re).unwrap(), T::from(z.im).unwrap())
}

fn to_c64<T: Float>(z: Complex<T>) -> Complex64 {
    Complex64::new(z.re.to_f64().unwrap(), z.im.to_f64().unwrap())
}

fn to_dd<T: Float>(z: Complex<T>) -> DdComplex {
    // split into leading and trailing doubles
    let split = |x: T| {
        let hi = x.to_f64().unwrap();
        let lo = (x - T::from(hi).unwrap()).to_f64().unwrap();
        TwoFloat::new_add(hi, lo)
    };
    Complex::new(split(z.re), split(z.im))
}

fn norm<T: Float>(z: Complex<T>) -> f64 {
    to_c64(z).norm()
}

/// Damped Newton on `G(c) = f_c^q(1) - 1` with a finite-difference Jacobian.
fn newton_level<T: Float>(
    fam: &HermanFamily,
    guess: Complex<T>,
    q: usize,
    scale: f64,
    floor: f64,
    tol: f64,
    max_iter: usize,
    depth: usize,
    max_step: Option<f64>,
) -> Result<Level<T>> {
    let g = |c: Complex<T>| fam.return_residual(c, q, TRAP);
    let mut c = guess;
    let mut r = g(c).map_err(|e| Error::NewtonFailure {
        depth,
        reason: format!("initial guess {}: {e}", to_c64(c)),
    })?;
    let mut rn = norm(r);
    let mut history = vec![rn];
    let mut iterations = 0;
    let mut h = (1e-3 * scale).max(floor * to_c64(c).norm());
    while rn > tol && iterations < max_iter {
        iterations += 1;
        let ht = T::from(h).unwrap();
        let jx = match g(c + Complex::new(ht, T::zero())) {
            Ok(v) => (v - r) / ht,
            Err(_) => break,
        };
        let jy = match g(c + Complex::new(T::zero(), ht)) {
            Ok(v) => (v - r) / ht,
            Err(_) => break,
        };
        // [jx.re jy.re; jx.im jy.im] [dx; dy] = -[r.re; r.im]
        let det = jx.re * jy.im - jy.re * jx.im;
        if det == T::zero() || !det.is_finite() {
            break;
        }
        let dx = -(r.re * jy.im - jy.re * r.im) / det;
        let dy = -(jx.re * r.im - r.re * jx.im) / det;
        let mut step = Complex::new(dx, dy);
        if let Some(cap) = max_step {
            let len = norm(step);
            if len > cap {
                step = step * T::from(cap / len).unwrap();
            }
        }
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..=20 {
            let trial = c + step * t;
            if let Ok(v) = g(trial) {
                let vn = norm(v);
                if vn < rn {
                    c = trial;
                    r = v;
                    rn = vn;
                    accepted = true;
                    break;
                }
            }
            t = t / T::from(2.0).unwrap();
        }
        if !accepted {
            break;
        }
        history.push(rn);
        h = (1e-3 * norm(step * t)).max(floor * to_c64(c).norm());
    }
    Ok(Level { c, residual: rn, history, iterations })
}

struct Search<'a, T> {
    fam: &'a HermanFamily,
    theta: &'a ContinuedFraction,
    conv: Convergents,
    seed: Complex<T>,
    opts: &'a AsymmetricOptions,
    floor: f64,
    opts_scale: Option<f64>,
    iterations: usize,
}

/// Levels this close to the start admit several verified roots.
const AMBIGUOUS_LEVELS: usize = 3;
const MAX_BRANCHES: usize = 4;

impl<T: Float> Search<'_, T> {
    fn scale(&self, roots: &[Complex<T>]) -> f64 {
        let n = roots.len();
        match (n, self.opts_scale) {
            (0, Some(s)) => s,
            (0, None) => 1e-2 * norm(self.seed),
            (1, _) => norm(roots[0] - self.seed).max(1e-2 * norm(self.seed)),
            _ => norm(roots[n - 1] - roots[n - 2]),
        }
    }

    /// Verified roots at level `m`, nearest the prediction first.
    fn candidates(&mut self, m: usize, roots: &[Complex<T>]) -> (Vec<Level<T>>, String) {
        let q = self.conv.q[m] as usize;
        let n = roots.len();
        let mut guesses = Vec::new();
        if n >= 3 {
            let d1 = roots[n - 1] - roots[n - 2];
            let d0 = roots[n - 2] - roots[n - 3];
            guesses.push(roots[n - 1] + d1 * d1 / d0);
        }
        if n >= 1 {
            let half = T::from(0.5).unwrap();
            guesses.push(roots[n - 1]);
            guesses.push((roots[n - 1] + self.seed) * half);
        }
        guesses.push(self.seed);
        let target = guesses[0];
        let scale = self.scale(roots);
        let opts = self.opts;
        let tol = if m == opts.depth { opts.tol } else { opts.tol.max(1e-13) };
        let exhaustive = n < AMBIGUOUS_LEVELS;
        let mut found: Vec<Level<T>> = Vec::new();
        let mut failure = String::new();
        let caps = [None, Some(2.0 * scale), Some(0.5 * scale)];
        let attempts = caps.iter().flat_map(|&cap| guesses.iter().map(move |&g| (g, cap)));
        for (guess, cap) in attempts {
            let iters = if cap.is_some() { 4 * opts.max_newton } else { opts.max_newton };
            match newton_level(self.fam, guess, q, scale, self.floor, tol, iters, m, cap) {
                Ok(level) if level.residual < 1e-6 => {
                    self.iterations += level.iterations;
                    if found.iter().any(|f| norm(f.c - level.c) < 1e-3 * scale) {
                        continue;
                    }
                    // the root must carry the combinatorics of p_m / q_m
                    let verified = maps::TunedMap::new(self.fam.clone(), to_dd(level.c), Precision::Double)
                        .and_then(|map| verify_herman(&map, self.theta, m))
                        .map(|r| r.passed());
                    if verified != Ok(true) {
                        failure = format!("root {} has the wrong combinatorics", to_c64(level.c));
                        continue;
                    }
                    found.push(level);
                    if !exhaustive {
                        break;
                    }
                }
                Ok(level) => {
                    self.iterations += level.iterations;
                    failure = format!("stalled at residual {:.3e}", level.residual);
                }
                Err(e) => failure = e.to_string(),
            }
        }
        found.sort_by(|a, b| norm(a.c - target).total_cmp(&norm(b.c - target)));
        found.truncate(MAX_BRANCHES);
        (found, failure)
    }

    /// Depth-first over levels; a branch dies when a later level has no
    /// verified root.
    fn descend(&mut self, m: usize, roots: &mut Vec<Complex<T>>) -> Result<Level<T>> {
        let (found, failure) = self.candidates(m, roots);
        let mut err = Error::NewtonFailure { depth: m, reason: failure };
        for level in found {
            log::debug!("depth {m}: c = {}, residual {:.3e}", to_c64(level.c), level.residual);
            if m == self.opts.depth {
                return Ok(level);
            }
            roots.push(level.c);
            match self.descend(m + 1, roots) {
                Ok(l) => return Ok(l),
                Err(e) => err = e,
            }
            roots.pop();
        }
        Err(err)
    }
}

fn continuation<T: Float>(
    fam: &HermanFamily,
    theta: &ContinuedFraction,
    seed: Complex<T>,
    opts: &AsymmetricOptions,
    floor: f64,
    opts_scale: Option<f64>,
) -> Result<(Level<T>, usize, f64, Vec<Complex64>)> {
    let start = match opts.start_depth {
        Some(s) => s,
        None => theta.depth_for_denominator(8)?,
    }
    .min(opts.depth);
    let mut search = Search {
        fam,
        theta,
        conv: theta.convergents(opts.depth)?,
        seed,
        opts,
        floor,
        opts_scale,
        iterations: 0,
    };
    let mut roots = Vec::new();
    let level = search.descend(start, &mut roots)?;
    roots.push(level.c);
    let scale = search.scale(&roots);
    let roots = roots.into_iter().map(to_c64).collect();
    Ok((level, search.iterations, scale, roots))
}

/// Tunes `F_{d0,dinf,c}` so its critical orbit has rotation number `theta`:
/// continuation over the superattracting parameters `f_c^{q_m}(1) = 1`.
pub fn tune_asymmetric(
    d0: u32,
    dinf: u32,
    theta: &ContinuedFraction,
    seed: Complex64,
    opts: &AsymmetricOptions,
) -> Result<TuneResult> {
    if theta.is_rational() {
        return Err(Error::Domain("tuning needs an irrational rotation number".into()));
    }
    let fam = HermanFamily::new(d0, dinf)?;
    let (c, residual, history, iterations, precision, mut roots) = match opts.precision {
        Precision::Double => {
            let (lv, it, scale, roots) = continuation::<f64>(&fam, theta, to_t(seed), opts, 1e-13, None)?;
            if lv.residual < opts.tol {
                (dd(lv.c), lv.residual, lv.history, it, Precision::Double, roots)
            } else {
                // round-off floor reached; polish in double-double
                log::info!("double precision stalled at {:.3e}; polishing", lv.residual);
                let polish = AsymmetricOptions {
                    start_depth: Some(opts.depth),
                    ..*opts
                };
                let (lv2, it2, _, _) =
                    continuation::<TwoFloat>(&fam, theta, dd(lv.c), &polish, 1e-26, Some(scale))?;
                (lv2.c, lv2.residual, lv2.history, it + it2, Precision::DoubleDouble, roots)
            }
        }
        Precision::DoubleDouble => {
            let (lv, it, _, roots) = continuation::<TwoFloat>(&fam, theta, dd(seed), opts, 1e-26, None)?;
            (lv.c, lv.residual, lv.history, it, Precision::DoubleDouble, roots)
        }
    };
    if let Some(last) = roots.last_mut() {
        *last = dd_to_c64(c);
    }
    let limit = match roots.as_slice() {
        [.., a, b, c] => {
            let (d1, d2) = (b - a, c - b);
            let den = d2 - d1;
            (den.norm() > 0.0).then(|| c - d2 * d2 / den)
        }
        _ => None,
    };
    if !(residual < opts.tol) {
        return Err(Error::NewtonFailure {
            depth: opts.depth,
            reason: format!(
                "residual {residual:.3e} above tolerance at c = {}",
                dd_to_c64(c)
            ),
        });
    }
    let hi = Complex64::new(c.re.hi(), c.im.hi());
    let lo = Complex64::new(c.re.lo(), c.im.lo());
    let map = maps::TunedMap::new(fam, c, precision)?;
    let report = verify_herman(&map, theta, opts.depth)?;
    if !report.passed() {
        return Err(Error::NewtonFailure {
            depth: opts.depth,
            reason: format!("converged to {hi} but the orbit is not a Herman orbit: {report:?}"),
        });
    }
    Ok(TuneResult {
        parameter: hi,
        parameter_lo: lo,
        alpha: None,
        residual,
        iterations,
        verified_depth: opts.depth,
        history,
        precision,
        limit,
    })
}

/// Outcome of the three orbit checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermanReport {
    pub depth: usize,
    pub in_annulus: bool,
    pub cyclic_order: bool,
    pub alternation: bool,
    pub min_radius: f64,
    pub max_radius: f64,
    pub order_violations: usize,
}

impl HermanReport {
    pub fn passed(&self) -> bool {
        self.in_annulus && self.cyclic_order && self.alternation
    }
}

/// Checks that the critical orbit `f^k(c)`, `k < q_n`, stays in the annulus
/// `1e-3 < |z| < 1e3`, that its arguments are in the circular order of
/// `{k theta}` and that the closest returns `f^{q_k}(c)`, `k < n`, alternate
/// sides of `c`.
pub fn verify_herman(map: &dyn OrbitSource, theta: &ContinuedFraction, n: usize) -> Result<HermanReport> {
    let conv = theta.convergents(n)?;
    let qn = conv.q[n] as usize;
    let c = map.critical_point();
    let orbit = map.orbit(c, qn);
    let radii = orbit.iter().map(|z| z.norm());
    let min_radius = radii.clone().fold(f64::INFINITY, f64::min);
    let max_radius = radii.fold(0.0, f64::max);
    let in_annulus = min_radius > 1e-3 && max_radius < 1e3 && orbit.iter().all(|z| z.is_finite());

    let angle = |z: Complex64| -> f64 { ((z / c).arg()).rem_euclid(2.0 * PI) };
    let mut by_arg: Vec<u64> = (0..qn as u64).collect();
    by_arg.sort_by(|&a, &b| angle(orbit[a as usize]).total_cmp(&angle(orbit[b as usize])).then(a.cmp(&b)));
    let oracle = AngleOracle::new(theta, qn as u64 + 1)?;
    let mut exact: Vec<u64> = (0..qn as u64).collect();
    oracle.sort_by_angle(&mut exact)?;
    let order_violations = by_arg.iter().zip(&exact).filter(|(a, b)| a != b).count();
    let cyclic_order = in_annulus && order_violations == 0;

    let mut alternation = in_annulus;
    for k in 1..n {
        let z = orbit[conv.q[k] as usize];
        let s = (z / c).arg();
        let ok = if k % 2 == 1 { s < 0.0 } else { s > 0.0 };
        alternation &= ok;
    }
    Ok(HermanReport {
        depth: n,
        in_annulus,
        cyclic_order,
        alternation,
        min_radius,
        max_radius,
        order_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{blaschke, rigid_rotation};

    #[test]
    fn lift_examples() {
        let theta = ContinuedFraction::golden().value();
        let r = circle_lift(&rigid_rotation(theta)).unwrap();
        for i in 0..50 {
            let x = i as f64 / 50.0;
            assert!((r.eval(x) - x - theta).abs() < 1e-14);
        }
        let b = circle_lift(&blaschke(2, 0.0).unwrap()).unwrap();
        assert!(b.eval(0.0).abs() < 1e-14);
        for i in 0..1000 {
            let x = i as f64 / 1000.0 - 0.3;
            assert!((b.eval(x + 1.0) - b.eval(x) - 1.0).abs() < 1e-10);
            // closed form for d = 2
            let z = Complex64::from_polar(1.0, 2.0 * PI * x);
            let expect = x + (Complex64::new(1.0, 0.0) - z / 3.0).arg() / PI;
            assert!((b.eval(x) - expect).abs() < 1e-12);
        }
        let off = RationalMap::new(
            vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)],
            vec![Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(circle_lift(&off), Err(Error::NotCircleInvariant { .. })));
    }

    #[test]
    fn rotation_examples() {
        let g = ContinuedFraction::golden();
        let r = circle_lift(&rigid_rotation(g.value())).unwrap();
        let iv = rotation_number(&r, 20).unwrap();
        assert!(iv.contains(g.value()));
        assert!(iv.width() < 1e-8);
        let q20 = g.convergents(20).unwrap().q[20] as f64;
        assert!(iv.width() <= 1.0 / (q20 * q20));

        let a = maps::arnold_lift(0.5).circle_lift();
        let iv = rotation_number(&a.clone(), 10).unwrap();
        assert!(iv.exact);
        assert_eq!(iv.lo, (1, 2));
        let b = circle_lift(&blaschke(2, 0.0).unwrap()).unwrap();
        let iv = rotation_number(&b, 10).unwrap();
        assert!(iv.exact);
        assert_eq!(iv.lo.0, 0);
        // a mode-locked Arnold map away from its periodic base point
        let m = maps::arnold_lift(0.02).circle_lift();
        let iv = rotation_number(&m, 10).unwrap();
        assert!(iv.exact && iv.lo.0 == 0);
    }

    #[test]
    fn non_monotone_rejected() {
        let bad = CircleLift::new("bad", 0.0, |x| x + 0.3 * (2.0 * PI * x).sin());
        assert!(matches!(bad, Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn rotation_is_monotone_in_alpha() {
        let base = circle_lift(&blaschke(2, 0.0).unwrap()).unwrap();
        let mut prev = -1.0;
        for i in 0..100 {
            let a = i as f64 / 100.0;
            let iv = rotation_number(&base.shifted(a), 8).unwrap();
            assert!(iv.midpoint() >= prev - 1e-3, "alpha {a}");
            prev = iv.midpoint();
        }
    }

    #[test]
    fn blaschke_golden() {
        let t = tune_blaschke(2, &ContinuedFraction::golden(), 1e-12).unwrap();
        let reference = Complex64::new(-0.755700, -0.654917);
        assert!((t.parameter - reference).norm() < 1e-4);
        assert!(t.verified_depth >= 20);
        assert!(tune_blaschke(2, &ContinuedFraction::from_ratio(2, 3).unwrap(), 1e-10).is_err());
        // deterministic
        let u = tune_blaschke(2, &ContinuedFraction::golden(), 1e-12).unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn verify_examples() {
        let g = ContinuedFraction::golden();
        let b0 = blaschke(2, 0.0).unwrap();
        assert!(!verify_herman(&b0, &g, 8).unwrap().passed());
        let rot = rigid_rotation(g.value());
        assert!(verify_herman(&rot, &g, 12).unwrap().passed());
    }

    #[test]
    fn asymmetric_small_depth() {
        let g = ContinuedFraction::golden();
        let opts = AsymmetricOptions::new(10, 1e-10);
        let t = tune_asymmetric(3, 2, &g, Complex64::new(-1.1, -1.0), &opts);
        let t = t.unwrap_or_else(|e| panic!("{e}"));
        assert!((t.parameter - Complex64::new(-1.144208, -0.964454)).norm() < 1e-3);
        assert!(t.history.windows(2).all(|w| w[1] < w[0]));
    }
}
