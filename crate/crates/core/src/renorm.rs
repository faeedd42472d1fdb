//! Log-coordinate lifts, commuting pairs and their renormalization, and the
//! scaling ratios of closest returns.
//!
//! Ratios are computed in the plane chart centred at the critical point:
//! `c_{q_n} = f^{q_n}(c) - c`. Pairs live in the log chart
//! `z -> c exp(2 pi i z)`, where the critical point sits at 0.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cfrac::ContinuedFraction;
use crate::curve::HermanCurve;
use crate::error::{Error, Result};
use crate::fit;
use crate::maps::OrbitSource;

type Eval = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

const I2PI: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Branch candidates closer than this are ambiguous.
const BRANCH_GAP: f64 = 0.05;

/// Lift `F` of `f` through `z -> c exp(2 pi i z)`: `F(0)` is the critical
/// value and `F(z) ~ z + theta` picks the branch.
#[derive(Clone)]
pub struct LogLift {
    map: Arc<dyn OrbitSource>,
    pub critical_point: Complex64,
    pub theta: f64,
}

impl std::fmt::Debug for LogLift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogLift")
            .field("critical_point", &self.critical_point)
            .field("theta", &self.theta)
            .finish()
    }
}

impl LogLift {
    pub fn new(map: Arc<dyn OrbitSource>, theta: f64) -> Self {
        let critical_point = map.critical_point();
        LogLift { map, critical_point, theta }
    }

    pub fn to_plane(&self, z: Complex64) -> Complex64 {
        self.critical_point * (I2PI * z).exp()
    }

    /// Principal log chart, `Re` in `(-1/2, 1/2]`.
    pub fn from_plane(&self, w: Complex64) -> Complex64 {
        (w / self.critical_point).ln() / I2PI
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let w = self.map.eval(self.to_plane(z));
        let base = self.from_plane(w);
        // integer translate nearest z + theta
        let target = z + self.theta;
        let k = (target.re - base.re).round();
        let best = base + k;
        let miss = (best.re - target.re).abs();
        if 0.5 - miss < BRANCH_GAP {
            return Err(Error::BranchAmbiguity { re: z.re, im: z.im });
        }
        Ok(best)
    }

    /// `T_{-p} F^q`, evaluated by iterating in the plane and taking the
    /// principal log, valid while the result stays near the base.
    pub fn return_map(&self, q: usize, z: Complex64) -> Complex64 {
        let orbit = self.map.orbit(self.to_plane(z), q + 1);
        self.from_plane(orbit[q])
    }
}

/// Lift of `map` in the chart fixed by the traced curve.
pub fn log_lift(map: Arc<dyn OrbitSource>, curve: &HermanCurve) -> Result<LogLift> {
    if (map.critical_point() - curve.critical_point).norm() > 1e-12 {
        return Err(Error::Invalid("curve was traced from another critical point".into()));
    }
    Ok(LogLift::new(map, curve.theta.value()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Linear,
    Antilinear,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Linear => Orientation::Antilinear,
            Orientation::Antilinear => Orientation::Linear,
        }
    }
}

/// `(f_-, f_+)` on `I_- = [f_+(0), 0]` and `I_+ = [0, f_-(0)]`.
#[derive(Clone)]
pub struct CommutingPair {
    f_minus: Eval,
    f_plus: Eval,
    /// `f_+(0)`, the far end of `I_-`.
    pub plus_at_zero: Complex64,
    /// `f_-(0)`, the far end of `I_+`.
    pub minus_at_zero: Complex64,
    pub level: usize,
    /// Criticality `(d0, dinf)` as seen from the current chart.
    pub criticality: Option<(u32, u32)>,
    /// Composite of the chart changes applied so far.
    pub orientation: Orientation,
    /// `chi`, or `None` when no iterate enters `I_+` within [`MAX_CHI`].
    pub chi: Option<u64>,
}

impl std::fmt::Debug for CommutingPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CommutingPair")
            .field("plus_at_zero", &self.plus_at_zero)
            .field("minus_at_zero", &self.minus_at_zero)
            .field("level", &self.level)
            .field("criticality", &self.criticality)
            .field("orientation", &self.orientation)
            .field("chi", &self.chi)
            .finish()
    }
}

pub const MAX_CHI: u64 = 1000;

impl CommutingPair {
    pub fn new(
        f_minus: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        f_plus: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        level: usize,
        criticality: Option<(u32, u32)>,
        orientation: Orientation,
    ) -> Self {
        let f_minus: Eval = Arc::new(f_minus);
        let f_plus: Eval = Arc::new(f_plus);
        let zero = Complex64::new(0.0, 0.0);
        let mut pair = CommutingPair {
            plus_at_zero: f_plus(zero),
            minus_at_zero: f_minus(zero),
            f_minus,
            f_plus,
            level,
            criticality,
            orientation,
            chi: None,
        };
        pair.chi = pair.compute_chi();
        pair
    }

    /// `T_theta = (z + theta on [-1, 0], z - 1 on [0, theta])`.
    pub fn translations(theta: f64) -> Self {
        CommutingPair::new(move |z| z + theta, |z| z - 1.0, 0, None, Orientation::Linear)
    }

    pub fn f_minus(&self, z: Complex64) -> Complex64 {
        (self.f_minus)(z)
    }

    pub fn f_plus(&self, z: Complex64) -> Complex64 {
        (self.f_plus)(z)
    }

    /// `|f_- f_+(0) - f_+ f_-(0)| / |f_-(0)|`.
    pub fn commutation_residual(&self) -> f64 {
        let a = self.f_minus(self.plus_at_zero);
        let b = self.f_plus(self.minus_at_zero);
        (a - b).norm() / self.minus_at_zero.norm()
    }

    /// Whether `w` projects into the interior of `I_+`.
    pub fn in_plus_interval(&self, w: Complex64) -> bool {
        let t = (w / self.minus_at_zero).re;
        t > 0.0 && t < 1.0
    }

    fn compute_chi(&self) -> Option<u64> {
        let mut w = self.plus_at_zero;
        for j in 1..=MAX_CHI + 1 {
            w = self.f_minus(w);
            if !w.is_finite() {
                return None;
            }
            if self.in_plus_interval(w) {
                return Some(j - 1);
            }
        }
        None
    }

    /// Conjugates by `A(w) = -f_+(0) w` or its antilinear version, so the
    /// result has `f_+(0) = -1`.
    pub fn normalize(&self, orientation: Orientation) -> CommutingPair {
        let scale = -self.plus_at_zero;
        let (fm, fp) = (self.f_minus.clone(), self.f_plus.clone());
        let (a, a_inv) = chart(scale, orientation);
        let (a2, a_inv2) = (a.clone(), a_inv.clone());
        let mut pair = CommutingPair::new(
            move |w| a_inv(fm(a(w))),
            move |w| a_inv2(fp(a2(w))),
            self.level,
            match orientation {
                Orientation::Linear => self.criticality,
                Orientation::Antilinear => self.criticality.map(|(a, b)| (b, a)),
            },
            match orientation {
                Orientation::Linear => self.orientation,
                Orientation::Antilinear => self.orientation.flip(),
            },
        );
        pair.plus_at_zero = Complex64::new(-1.0, 0.0);
        pair
    }

    /// `(f_-^chi f_+ on [0, f_-(0)], f_- on [f_-^chi f_+(0), 0])`, which has
    /// the criticalities exchanged.
    pub fn prerenormalize(&self) -> Result<CommutingPair> {
        let chi = self
            .chi
            .ok_or_else(|| Error::NotRenormalizable(format!("no return into I_+ at level {}", self.level)))?;
        let (fm, fp) = (self.f_minus.clone(), self.f_plus.clone());
        let fm2 = fm.clone();
        Ok(CommutingPair::new(
            move |z| {
                let mut w = fp(z);
                for _ in 0..chi {
                    w = fm(w);
                }
                w
            },
            move |z| fm2(z),
            self.level + 1,
            self.criticality.map(|(a, b)| (b, a)),
            self.orientation,
        ))
    }

    /// Pre-renormalization rescaled by the antilinear `z -> -f_-(0) conj(z)`.
    pub fn renormalize(&self) -> Result<CommutingPair> {
        let pre = self.prerenormalize()?;
        Ok(pre.normalize(Orientation::Antilinear))
    }
}

type Chart = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

fn chart(scale: Complex64, orientation: Orientation) -> (Chart, Chart) {
    match orientation {
        Orientation::Linear => (Arc::new(move |w| scale * w), Arc::new(move |u| u / scale)),
        Orientation::Antilinear => (
            Arc::new(move |w: Complex64| scale * w.conj()),
            Arc::new(move |u: Complex64| (u / scale).conj()),
        ),
    }
}

/// The `n`-th pre-renormalization `(T_{-p_n} F^{q_n}, T_{-p_{n-1}} F^{q_{n-1}})`
/// in the log chart.
pub fn commuting_pair(map: Arc<dyn OrbitSource>, theta: &ContinuedFraction, n: usize) -> Result<CommutingPair> {
    if n < 2 {
        return Err(Error::Domain("commuting pairs start at level 2".into()));
    }
    let conv = theta.convergents(n)?;
    let (qn, qn1) = (conv.q[n] as usize, conv.q[n - 1] as usize);
    let criticality = map.criticality();
    let lift = LogLift::new(map, theta.value());
    let lift2 = lift.clone();
    // odd levels put I_- on the positive side, exchanging the half-planes
    let criticality = if n % 2 == 0 { criticality } else { criticality.map(|(a, b)| (b, a)) };
    let pair = CommutingPair::new(
        move |z| lift.return_map(qn, z),
        move |z| lift2.return_map(qn1, z),
        n,
        criticality,
        Orientation::Linear,
    );
    if !(pair.plus_at_zero.is_finite() && pair.minus_at_zero.is_finite()) {
        return Err(Error::OrbitEscape { step: qn });
    }
    Ok(pair)
}

/// Closest-return displacements and their ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Levels `n` for which `s_n` is reported.
    pub levels: Vec<usize>,
    /// `c_{q_n} = f^{q_n}(c) - c` for `n = 0..=levels.last + 1`.
    pub displacements: Vec<Complex64>,
    /// `s_n = c_{q_{n+1}} / c_{q_n}`.
    pub ratios: Vec<Complex64>,
    pub period: usize,
    /// `c_{q_{n+s}} / c_{q_n}` for each `n` with `n + s` in range.
    pub period_ratios: Vec<Complex64>,
    /// `max_n |prod_{i<s} s_{n+i} / (c_{q_{n+s}} / c_{q_n}) - 1|`.
    pub product_residual: f64,
    /// `|r_{n+s} - r_n|` for the period ratios `r`.
    pub cauchy: Vec<f64>,
    pub truncated: Option<String>,
}

impl ScalingReport {
    /// Keeps the first `n` period ratios and everything they depend on.
    pub fn truncated(&self, n: usize) -> ScalingReport {
        let n = n.min(self.period_ratios.len());
        let s = self.period;
        let displacements = self.displacements[..(n + s).min(self.displacements.len())].to_vec();
        let ratios: Vec<Complex64> = displacements.windows(2).map(|w| w[1] / w[0]).collect();
        let period_ratios = self.period_ratios[..n].to_vec();
        let cauchy = self.cauchy[..n.saturating_sub(s).min(self.cauchy.len())].to_vec();
        let mut product_residual: f64 = 0.0;
        for (k, r) in period_ratios.iter().enumerate() {
            let prod: Complex64 = ratios[k..k + s].iter().product();
            product_residual = product_residual.max((prod / r - 1.0).norm());
        }
        ScalingReport {
            levels: (0..ratios.len()).collect(),
            displacements,
            ratios,
            period: s,
            period_ratios,
            product_residual,
            cauchy,
            truncated: Some(format!("kept {n} period ratios")),
        }
    }
}

/// Number of leading period ratios on which two reports agree to `tol`
/// times the local Cauchy difference of `a`. Run on maps at two estimates
/// of the same parameter, ratios past this count measure the parameter
/// error rather than the map.
pub fn agreeing_levels(a: &ScalingReport, b: &ScalingReport, tol: f64) -> usize {
    let s = a.period;
    let n = a.period_ratios.len().min(b.period_ratios.len());
    (0..n)
        .take_while(|&k| {
            let r = &a.period_ratios;
            let scale = if k >= s { (r[k] - r[k - s]).norm() } else { r[k].norm() };
            (r[k] - b.period_ratios[k]).norm() <= tol * scale
        })
        .count()
}

/// Displacements below this multiple of `eps |c|` are not resolved.
const UNDERFLOW: f64 = 1e3;

pub fn scaling_ratios(map: &dyn OrbitSource, theta: &ContinuedFraction, depth: usize) -> Result<ScalingReport> {
    scaling_ratios_with_period(map, theta, depth, 2)
}

pub fn scaling_ratios_with_period(
    map: &dyn OrbitSource,
    theta: &ContinuedFraction,
    depth: usize,
    period: usize,
) -> Result<ScalingReport> {
    if period == 0 {
        return Err(Error::Domain("period must be positive".into()));
    }
    let conv = theta.convergents(depth + 1)?;
    let c = map.critical_point();
    let orbit = map.orbit(c, conv.q[depth + 1] as usize + 1);
    let floor = UNDERFLOW * f64::EPSILON * c.norm();
    let mut displacements = Vec::new();
    let mut truncated = None;
    for k in 0..=depth + 1 {
        let d = orbit[conv.q[k] as usize] - c;
        if !d.is_finite() {
            return Err(Error::OrbitEscape { step: conv.q[k] as usize });
        }
        if d.norm() < floor {
            truncated = Some(format!("c_q{k} below the round-off floor; series truncated at n = {}", k as i64 - 2));
            break;
        }
        displacements.push(d);
    }
    if displacements.len() < 2 {
        return Err(Error::InsufficientDepth("no resolved scaling ratio".into()));
    }
    let ratios: Vec<Complex64> = displacements.windows(2).map(|w| w[1] / w[0]).collect();
    let levels: Vec<usize> = (0..ratios.len()).collect();
    let period_ratios: Vec<Complex64> = (0..displacements.len().saturating_sub(period))
        .map(|n| displacements[n + period] / displacements[n])
        .collect();
    let mut product_residual: f64 = 0.0;
    for (n, r) in period_ratios.iter().enumerate() {
        let prod: Complex64 = ratios[n..n + period].iter().product();
        product_residual = product_residual.max((prod / r - 1.0).norm());
    }
    let cauchy = (0..period_ratios.len().saturating_sub(period))
        .map(|n| (period_ratios[n + period] - period_ratios[n]).norm())
        .collect();
    Ok(ScalingReport {
        levels,
        displacements,
        ratios,
        period,
        period_ratios,
        product_residual,
        cauchy,
        truncated,
    })
}

/// Largest level whose displacement stays above the orbit noise:
/// `q_{n+1} * roundoff < 0.01 l_{n+1}`.
pub fn depth_cap(theta: &ContinuedFraction, roundoff: f64) -> Result<usize> {
    let mut n = 1;
    loop {
        let conv = theta.convergents(n + 2)?;
        let q = conv.q[n + 2] as f64;
        if q * roundoff >= 0.01 * conv.lengths[n + 2] || n >= 60 {
            return Ok(n);
        }
        n += 1;
    }
}

/// Limit `mu` of `c_{q_{n+s}} / c_{q_n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub mu: Complex64,
    /// Distance between the last two accelerated values.
    pub error: f64,
    /// Smallest per-period contraction `D_n / D_{n+s}` of the Cauchy
    /// differences over the last four levels.
    pub cauchy_factor: f64,
    pub report: ScalingReport,
}

/// Aitken-accelerated limit of the period ratios along steps of `s`.
pub fn self_similarity(map: &dyn OrbitSource, theta: &ContinuedFraction, s: usize, depth: usize) -> Result<MuEstimate> {
    if !theta.is_periodic() {
        return Err(Error::Domain("self-similarity needs a quadratic irrational".into()));
    }
    if s % 2 != 0 {
        return Err(Error::Domain(format!("period {s} must be even")));
    }
    let report = scaling_ratios_with_period(map, theta, depth, s)?;
    if report.cauchy.len() < 3 {
        return Err(Error::InsufficientDepth(format!(
            "{} Cauchy differences, need 3",
            report.cauchy.len()
        )));
    }
    // subsequence of the last level's parity, stepping by s
    let r = &report.period_ratios;
    let last = r.len() - 1;
    let seq: Vec<Complex64> = (0..=last / s).rev().map(|j| r[last - j * s]).collect();
    let accelerated: Vec<Complex64> = seq
        .windows(3)
        .filter_map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let den = d2 - d1;
            (den.norm() > 0.0).then(|| w[2] - d2 * d2 / den)
        })
        .collect();
    let (mu, error) = match accelerated.len() {
        0 => (*seq.last().unwrap(), (seq[seq.len() - 1] - seq[seq.len() - 2]).norm()),
        1 => (accelerated[0], (accelerated[0] - seq[seq.len() - 1]).norm()),
        n => (accelerated[n - 1], (accelerated[n - 1] - accelerated[n - 2]).norm()),
    };
    let cauchy_factor = cauchy_factor(&report.cauchy, s, 4);
    Ok(MuEstimate { mu, error, cauchy_factor, report })
}

/// Smallest `D_n / D_{n+step}` among the last `window` differences.
pub fn cauchy_factor(differences: &[f64], step: usize, window: usize) -> f64 {
    let tail = &differences[differences.len().saturating_sub(window)..];
    (0..tail.len().saturating_sub(step))
        .map(|i| tail[i] / tail[i + step])
        .fold(f64::INFINITY, f64::min)
}

/// Fit of `log |s_n(f2) / s_n(f1) - 1|` against `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    pub log_deviation: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// All deviations vanish: the ratios agree exactly.
    pub degenerate: bool,
}

pub const MIN_CONVERGENCE_LEVELS: usize = 5;

pub fn convergence_report(
    map1: &dyn OrbitSource,
    map2: &dyn OrbitSource,
    theta: &ContinuedFraction,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<ConvergenceReport> {
    let top = *levels.end();
    let a = scaling_ratios(map1, theta, top)?;
    let b = scaling_ratios(map2, theta, top)?;
    let mut ns = Vec::new();
    let mut devs = Vec::new();
    let mut all_zero = true;
    for n in levels {
        let (Some(x), Some(y)) = (a.ratios.get(n), b.ratios.get(n)) else { break };
        let d = (y / x - 1.0).norm();
        if d > 0.0 {
            all_zero = false;
            ns.push(n);
            devs.push(d.ln());
        }
    }
    if all_zero {
        return Ok(ConvergenceReport {
            levels: ns,
            log_deviation: devs,
            slope: f64::NEG_INFINITY,
            intercept: f64::NEG_INFINITY,
            r_squared: 1.0,
            degenerate: true,
        });
    }
    if ns.len() < MIN_CONVERGENCE_LEVELS {
        return Err(Error::TooFewSamples { needed: MIN_CONVERGENCE_LEVELS, got: ns.len() });
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let line = fit::line(&x, &devs).ok_or(Error::TooFewSamples { needed: 2, got: ns.len() })?;
    Ok(ConvergenceReport {
        levels: ns,
        log_deviation: devs,
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        degenerate: false,
    })
}
