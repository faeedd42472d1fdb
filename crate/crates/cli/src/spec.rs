//! Textual specifications of rotation numbers and maps, and the presets.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use hermanlab::cfrac::{self, ContinuedFraction};
use hermanlab::maps::{self, HermanFamily, OrbitSource, Precision, RationalMap, TunedMap};
use hermanlab::rotation::{self, AsymmetricOptions, TuneResult};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};

/// Named rotation numbers.
pub const THETA_PRESETS: [(&str, &[u64]); 3] = [("golden", &[1]), ("silver", &[2]), ("bronze-alt", &[1, 2])];

/// A rotation number: a preset name, `[0; a1, a2, (p1, p2)]` with an
/// optional periodic tail, a list of leading quotients, or a decimal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Decimal(f64),
    Quotients(Vec<u64>),
    Text(String),
}

impl FromStr for ThetaSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let spec = match s.parse::<f64>() {
            Ok(x) => ThetaSpec::Decimal(x),
            Err(_) => ThetaSpec::Text(s.to_string()),
        };
        spec.resolve()?;
        Ok(spec)
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::Decimal(x) => write!(f, "{x}"),
            ThetaSpec::Quotients(q) => {
                let parts: Vec<String> = q.iter().map(u64::to_string).collect();
                write!(f, "[0;{}]", parts.join(","))
            }
            ThetaSpec::Text(s) => f.write_str(s),
        }
    }
}

impl ThetaSpec {
    pub fn golden() -> Self {
        ThetaSpec::Text("golden".into())
    }

    /// Preset name, if this is one.
    pub fn name(&self) -> Option<&str> {
        match self {
            ThetaSpec::Text(s) => THETA_PRESETS.iter().find(|(n, _)| n == s).map(|(n, _)| *n),
            _ => None,
        }
    }

    pub fn resolve(&self) -> Result<ContinuedFraction, CliError> {
        let bad = |e: hermanlab::Error| CliError::config(format!("theta {self}: {e}"));
        match self {
            ThetaSpec::Decimal(x) => {
                let x = *x;
                match cfrac::cf_expand(x, 64) {
                    Ok(cf) => Ok(cf),
                    Err(hermanlab::Error::NotEnoughQuotients { available, .. }) if available > 0 => {
                        cfrac::cf_expand(x, available).map_err(bad)
                    }
                    Err(e) => Err(bad(e)),
                }
            }
            ThetaSpec::Quotients(q) => ContinuedFraction::from_prefix(q.clone()).map_err(bad),
            ThetaSpec::Text(s) => {
                if let Some((_, period)) = THETA_PRESETS.iter().find(|(n, _)| n == s) {
                    return ContinuedFraction::periodic(vec![], period.to_vec()).map_err(bad);
                }
                let (pre, period) = parse_bracket(s)?;
                if period.is_empty() {
                    ContinuedFraction::from_prefix(pre).map_err(bad)
                } else {
                    ContinuedFraction::periodic(pre, period).map_err(bad)
                }
            }
        }
    }
}

/// `[0; a1, a2, (p1, p2)]` into preperiod and period.
fn parse_bracket(s: &str) -> Result<(Vec<u64>, Vec<u64>), CliError> {
    let bad = || CliError::config(format!("cannot parse theta {s:?}; expected a preset, a decimal or [0; a1, a2, ...]"));
    let inner = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
    let (head, rest) = inner.split_once(';').ok_or_else(bad)?;
    if head.trim() != "0" {
        return Err(bad());
    }
    let (pre, period) = match rest.split_once('(') {
        Some((a, b)) => (a, b.strip_suffix(')').ok_or_else(bad)?),
        None => (rest, ""),
    };
    let list = |t: &str| -> Result<Vec<u64>, CliError> {
        t.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| x.parse::<u64>().map_err(|_| bad()))
            .collect()
    };
    Ok((list(pre)?, list(period)?))
}

/// `re,im` or `re+imi`-free pairs used on the command line.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::config(format!("expected re,im but got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let re = a.trim().parse::<f64>().map_err(|_| bad())?;
    let im = b.trim().parse::<f64>().map_err(|_| bad())?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// A parameter preset: family, rotation number and tuning seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterPreset {
    pub name: String,
    pub d0: u32,
    pub dinf: u32,
    pub theta: String,
    pub seed: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Presets {
    pub parameters: Vec<ParameterPreset>,
}

impl Presets {
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../presets.json")).expect("bundled presets parse")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read presets {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("presets {}: {e}", path.display())))
    }

    pub fn named(&self, name: &str) -> Option<&ParameterPreset> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Seed for a family and a named rotation number.
    pub fn seed_for(&self, d0: u32, dinf: u32, theta: &ThetaSpec) -> Option<Complex64> {
        let name = theta.name()?;
        self.parameters
            .iter()
            .find(|p| p.d0 == d0 && p.dinf == dinf && p.theta == name)
            .map(|p| Complex64::new(p.seed[0], p.seed[1]))
    }
}

/// Which map to build.
///
/// Syntax: `preset:NAME` (or a bare preset name), `tuned:D0:DINF`,
/// `herman:D0:DINF:RE,IM`, `blaschke:D:ALPHA`, `arnold:ALPHA`,
/// `arnold-tuned`, `rotation`.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    Preset(String),
    Tuned { d0: u32, dinf: u32 },
    Herman { d0: u32, dinf: u32, c: Complex64 },
    Blaschke { d: u32, alpha: f64 },
    Arnold { alpha: Option<f64> },
    Rotation,
}

impl FromStr for MapSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::config(format!("cannot parse map {s:?}"));
        let int = |t: &str| t.parse::<u32>().map_err(|_| bad());
        let real = |t: &str| t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
        let parts: Vec<&str> = s.splitn(4, ':').collect();
        Ok(match parts.as_slice() {
            ["preset", name] => MapSpec::Preset(name.to_string()),
            ["tuned", d0, dinf] => MapSpec::Tuned { d0: int(d0)?, dinf: int(dinf)? },
            ["herman", d0, dinf, c] => MapSpec::Herman { d0: int(d0)?, dinf: int(dinf)?, c: parse_complex(c)? },
            ["blaschke", d, alpha] => MapSpec::Blaschke { d: int(d)?, alpha: real(alpha)? },
            ["arnold", alpha] => MapSpec::Arnold { alpha: Some(real(alpha)?) },
            ["arnold-tuned"] => MapSpec::Arnold { alpha: None },
            ["rotation"] => MapSpec::Rotation,
            [name] if Presets::builtin().named(name).is_some() => MapSpec::Preset(name.to_string()),
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Preset(n) => write!(f, "preset:{n}"),
            MapSpec::Tuned { d0, dinf } => write!(f, "tuned:{d0}:{dinf}"),
            MapSpec::Herman { d0, dinf, c } => write!(f, "herman:{d0}:{dinf}:{},{}", c.re, c.im),
            MapSpec::Blaschke { d, alpha } => write!(f, "blaschke:{d}:{alpha}"),
            MapSpec::Arnold { alpha: Some(a) } => write!(f, "arnold:{a}"),
            MapSpec::Arnold { alpha: None } => f.write_str("arnold-tuned"),
            MapSpec::Rotation => f.write_str("rotation"),
        }
    }
}

/// How tuned maps are tuned.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSettings {
    /// Continuation depth for the asymmetric families.
    pub depth: usize,
    /// Residual tolerance for the asymmetric families.
    pub tol: f64,
    /// Bisection tolerance on `alpha` for circle families.
    pub lift_tol: f64,
    pub precision: Precision,
}

impl Default for TuneSettings {
    fn default() -> Self {
        TuneSettings { depth: 24, tol: 1e-10, lift_tol: 1e-15, precision: Precision::Double }
    }
}

/// A map ready for orbit computations.
#[derive(Clone)]
pub struct ResolvedMap {
    pub label: String,
    pub theta: ContinuedFraction,
    pub source: Arc<dyn OrbitSource>,
    pub rational: Option<RationalMap>,
    pub tune: Option<TuneResult>,
}

impl ResolvedMap {
    pub fn rational(&self) -> Result<&RationalMap, CliError> {
        self.rational
            .as_ref()
            .ok_or_else(|| CliError::config(format!("{} is not a rational map", self.label)))
    }
}

/// Tunes `F_{d0,dinf}` to `theta`: bisection on `alpha` when symmetric,
/// continuation from `seed` otherwise.
pub fn tune_family(
    d0: u32,
    dinf: u32,
    theta: &ContinuedFraction,
    seed: Option<Complex64>,
    settings: &TuneSettings,
) -> Result<TuneResult, CliError> {
    if d0 == dinf {
        return rotation::tune_blaschke(d0, theta, settings.lift_tol).stage("tune");
    }
    let seed = seed.ok_or_else(|| CliError::config(format!("no seed for ({d0},{dinf}); pass --seed re,im")))?;
    let mut opts = AsymmetricOptions::new(settings.depth, settings.tol);
    opts.precision = settings.precision;
    rotation::tune_asymmetric(d0, dinf, theta, seed, &opts).stage("tune")
}

/// Circle families become `F_{d,d}` with `c = exp(2 pi i alpha)`, which keeps
/// the criticality attached.
fn tuned_map(d0: u32, dinf: u32, t: &TuneResult) -> Result<(Arc<dyn OrbitSource>, RationalMap), CliError> {
    let family = HermanFamily::new(d0, dinf).stage("tune")?;
    let m = TunedMap::new(family, t.parameter_dd(), t.precision).stage("tune")?;
    let f = m.rational_map().clone();
    Ok((Arc::new(m), f))
}

/// Builds the map, tuning it when the spec asks for it. `theta` is required
/// except for presets, which carry their own.
pub fn resolve_map(
    spec: &MapSpec,
    theta: Option<&ThetaSpec>,
    presets: &Presets,
    settings: &TuneSettings,
) -> Result<ResolvedMap, CliError> {
    let need_theta = || theta.ok_or_else(|| CliError::config(format!("map {spec} needs --theta")));
    let label = spec.to_string();
    match spec {
        MapSpec::Preset(name) => {
            let p = presets.named(name).ok_or_else(|| CliError::config(format!("unknown preset {name:?}")))?;
            let preset_theta = ThetaSpec::Text(p.theta.clone());
            if let Some(t) = theta {
                if t.resolve()? != preset_theta.resolve()? {
                    return Err(CliError::config(format!("preset {name} is tuned to {}, not {t}", p.theta)));
                }
            }
            let cf = preset_theta.resolve()?;
            let t = tune_family(p.d0, p.dinf, &cf, Some(Complex64::new(p.seed[0], p.seed[1])), settings)?;
            let (source, rational) = tuned_map(p.d0, p.dinf, &t)?;
            Ok(ResolvedMap { label, theta: cf, source, rational: Some(rational), tune: Some(t) })
        }
        MapSpec::Tuned { d0, dinf } => {
            let ts = need_theta()?;
            let cf = ts.resolve()?;
            let t = tune_family(*d0, *dinf, &cf, presets.seed_for(*d0, *dinf, ts), settings)?;
            let (source, rational) = tuned_map(*d0, *dinf, &t)?;
            Ok(ResolvedMap { label, theta: cf, source, rational: Some(rational), tune: Some(t) })
        }
        MapSpec::Herman { d0, dinf, c } => {
            let cf = need_theta()?.resolve()?;
            let family = HermanFamily::new(*d0, *dinf).map_err(|e| CliError::config(e.to_string()))?;
            let m = TunedMap::new(family, maps::dd(*c), settings.precision).map_err(|e| CliError::config(e.to_string()))?;
            let f = m.rational_map().clone();
            Ok(ResolvedMap { label, theta: cf, source: Arc::new(m), rational: Some(f), tune: None })
        }
        MapSpec::Blaschke { d, alpha } => {
            let cf = need_theta()?.resolve()?;
            let f = maps::blaschke(*d, *alpha).map_err(|e| CliError::config(e.to_string()))?;
            Ok(ResolvedMap { label, theta: cf, source: Arc::new(f.clone()), rational: Some(f), tune: None })
        }
        MapSpec::Arnold { alpha } => {
            let cf = need_theta()?.resolve()?;
            let (alpha, tune) = match alpha {
                Some(a) => (*a, None),
                None => {
                    let t = rotation::tune_arnold(&cf, settings.lift_tol).stage("tune")?;
                    (t.alpha.unwrap_or_default(), Some(t))
                }
            };
            Ok(ResolvedMap { label, theta: cf, source: Arc::new(maps::arnold_lift(alpha)), rational: None, tune })
        }
        MapSpec::Rotation => {
            let cf = need_theta()?.resolve()?;
            let f = maps::rigid_rotation(cf.value());
            Ok(ResolvedMap { label, theta: cf, source: Arc::new(f.clone()), rational: Some(f), tune: None })
        }
    }
}
