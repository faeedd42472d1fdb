//! Rational maps of the sphere and the explicit families
//!
//! `F(z) = -c * sum_{j=d0}^{D} C(D,j)(-z)^j / sum_{j<d0} C(D,j)(-z)^j`, with
//! `D = d0 + dinf - 1`, which fix 0 and infinity with local degrees `d0` and
//! `dinf` and send the remaining critical point 1 to `c`; the Blaschke
//! products `B_{d,alpha}` are the members with `d0 = dinf` and `|c| = 1`.

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};
use num_traits::Float;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::poly::{self, Poly};

/// Beyond this modulus evaluation switches to the chart `w = 1/z`.
const INFINITY_CHART: f64 = 1e8;

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }
}

/// `N(z) / D(z)` with ascending complex coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
}

impl RationalMap {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        let num = poly::trim(&num);
        let den = poly::trim(&den);
        if den.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidMap("zero denominator".into()));
        }
        if num.iter().any(|c| !c.is_finite()) || den.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        let map = RationalMap { num, den };
        // a common root would show up as a root of D where N also vanishes
        let scale_n: f64 = map.num.iter().map(|c| c.norm()).sum();
        for r in poly::roots(&map.den) {
            let rn = (1.0 + r.norm()).powi(map.num.len() as i32);
            if poly::eval(&map.num, r).norm() <= 1e-10 * scale_n * rn {
                return Err(Error::InvalidMap(format!(
                    "numerator and denominator share the root {r}"
                )));
            }
        }
        Ok(map)
    }

    pub fn numerator(&self) -> &[Complex64] {
        &self.num
    }

    pub fn denominator(&self) -> &[Complex64] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        (self.num.len() - 1).max(self.den.len() - 1)
    }

    /// Evaluates without chart handling; poles give non-finite values.
    #[inline]
    pub fn eval_fast(&self, z: Complex64) -> Complex64 {
        poly::eval(&self.num, z) / poly::eval(&self.den, z)
    }

    pub fn eval(&self, z: Complex64) -> SpherePoint {
        if z.norm() > INFINITY_CHART {
            return self.eval_near_infinity(z.inv());
        }
        let n = poly::eval(&self.num, z);
        let d = poly::eval(&self.den, z);
        let scale: f64 = self
            .den
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * z.norm().powi(k as i32))
            .sum();
        if d.norm() <= 1e-14 * scale {
            return SpherePoint::Infinity;
        }
        let w = n / d;
        if w.is_finite() {
            SpherePoint::Finite(w)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn eval_sphere(&self, z: SpherePoint) -> SpherePoint {
        match z {
            SpherePoint::Finite(z) => self.eval(z),
            SpherePoint::Infinity => self.eval_near_infinity(Complex64::new(0.0, 0.0)),
        }
    }

    /// `f(1/w)` evaluated through the reversed polynomials.
    fn eval_near_infinity(&self, w: Complex64) -> SpherePoint {
        let dn = self.num.len() - 1;
        let dd = self.den.len() - 1;
        let rn: Poly = self.num.iter().rev().copied().collect();
        let rd: Poly = self.den.iter().rev().copied().collect();
        // f(1/w) = w^(dd - dn) * rn(w) / rd(w)
        let n = poly::eval(&rn, w);
        let d = poly::eval(&rd, w);
        let k = dd as i32 - dn as i32;
        if k > 0 {
            SpherePoint::Finite(w.powi(k) * n / d)
        } else {
            // 1/f = w^(dn - dd) * rd / rn
            let inv = w.powi(-k) * d / n;
            if inv.norm() <= 1.0 / INFINITY_CHART.powi(2) {
                SpherePoint::Infinity
            } else {
                SpherePoint::Finite(inv.inv())
            }
        }
    }

    /// The `order`-th derivative at a finite point via Taylor division.
    pub fn deriv(&self, z: Complex64, order: usize) -> SpherePoint {
        let a = poly::taylor(&self.num, z, order);
        let b = poly::taylor(&self.den, z, order);
        if b[0].norm() == 0.0 {
            return SpherePoint::Infinity;
        }
        // series quotient a / b
        let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
        for k in 0..=order {
            let mut s = a[k];
            for j in 1..=k {
                s -= b[j] * c[k - j];
            }
            c[k] = s / b[0];
        }
        let fact: f64 = (1..=order).map(|i| i as f64).product();
        let v = c[order] * fact;
        if v.is_finite() {
            SpherePoint::Finite(v)
        } else {
            SpherePoint::Infinity
        }
    }

    /// The conjugate `z -> L f(L^{-1} z)` by `L(z) = lambda z`.
    pub fn conjugate_linear(&self, lambda: Complex64) -> Result<RationalMap> {
        let inv = lambda.inv();
        let scale = |p: &Poly| -> Poly {
            p.iter()
                .enumerate()
                .map(|(k, &c)| c * inv.powi(k as i32))
                .collect()
        };
        let num: Poly = scale(&self.num).into_iter().map(|c| c * lambda).collect();
        RationalMap::new(num, scale(&self.den))
    }

    /// Critical points with multiplicities; they sum to `2 deg - 2`.
    pub fn critical_points(&self) -> Vec<(SpherePoint, usize)> {
        let w = poly::trim(&poly::sub(
            &poly::mul(&poly::derivative(&self.num), &self.den),
            &poly::mul(&self.num, &poly::derivative(&self.den)),
        ));
        let d = self.degree();
        let finite = poly::roots(&w);
        let mut out: Vec<(SpherePoint, usize)> = poly::cluster(&finite, 1e-4)
            .into_iter()
            .map(|(z, m)| {
                let z = if z.norm() < 1e-10 { Complex64::new(0.0, 0.0) } else { z };
                (SpherePoint::Finite(z), m)
            })
            .collect();
        let at_inf = (2 * d - 2).saturating_sub(finite.len());
        if at_inf > 0 {
            out.push((SpherePoint::Infinity, at_inf));
        }
        out
    }

    /// Solutions of `f(z) = w` with multiplicity.
    pub fn preimages(&self, w: Complex64) -> Preimages {
        let p = poly::trim(&poly::sub(
            &self.num,
            &self.den.iter().map(|c| c * w).collect::<Poly>(),
        ));
        let roots = poly::roots(&p);
        let missing = self.degree() - roots.len();
        let tol = 1e-8 * (1.0 + w.norm());
        let residuals: Vec<f64> = roots
            .iter()
            .map(|&z| match self.eval(z) {
                SpherePoint::Finite(v) => (v - w).norm(),
                SpherePoint::Infinity => f64::INFINITY,
            })
            .collect();
        let degraded = residuals.iter().filter(|&&r| r > tol).count();
        Preimages {
            roots,
            residuals,
            at_infinity: missing,
            degraded,
        }
    }
}

/// Result of [`RationalMap::preimages`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preimages {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// Preimages lost to a vanishing leading coefficient.
    pub at_infinity: usize,
    /// Roots whose residual exceeds `1e-8 (1 + |w|)`.
    pub degraded: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    HermanFamily,
    Blaschke,
    ArnoldLift,
}

/// A member of one of the supported families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub d0: u32,
    pub dinf: u32,
    pub parameter: Complex64,
    pub kind: FamilyKind,
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FamilyKind::HermanFamily => {
                check_degrees(self.d0, self.dinf)?;
                if self.parameter.norm() == 0.0 {
                    return Err(Error::InvalidMap("parameter must be nonzero".into()));
                }
            }
            FamilyKind::Blaschke => {
                check_degrees(self.d0, self.dinf)?;
                if self.d0 != self.dinf {
                    return Err(Error::InvalidMap("Blaschke products need d0 = dinf".into()));
                }
                if (self.parameter.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidMap("Blaschke parameter must be unimodular".into()));
                }
            }
            FamilyKind::ArnoldLift => {}
        }
        Ok(())
    }

    pub fn rational_map(&self) -> Result<RationalMap> {
        self.validate()?;
        match self.kind {
            FamilyKind::HermanFamily | FamilyKind::Blaschke => {
                herman_family(self.d0, self.dinf, self.parameter)
            }
            FamilyKind::ArnoldLift => Err(Error::InvalidMap(
                "the Arnold family is a circle lift, not a rational map".into(),
            )),
        }
    }
}

fn check_degrees(d0: u32, dinf: u32) -> Result<()> {
    if d0 < 2 || dinf < 2 {
        return Err(Error::InvalidMap("criticalities must be at least 2".into()));
    }
    if d0 + dinf > 60 {
        return Err(Error::Overflow("binomial coefficients"));
    }
    Ok(())
}

/// Integer skeleton of the family: `F = c * num(z) / den(z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermanFamily {
    pub d0: u32,
    pub dinf: u32,
    num: Vec<f64>,
    den: Vec<f64>,
}

impl HermanFamily {
    pub fn new(d0: u32, dinf: u32) -> Result<Self> {
        check_degrees(d0, dinf)?;
        let big = d0 + dinf - 1;
        let binom = binomials(big)?;
        let sign = |j: u32| if j % 2 == 0 { 1.0 } else { -1.0 };
        let mut num = vec![0.0; big as usize + 1];
        for j in d0..=big {
            num[j as usize] = -sign(j) * binom[j as usize];
        }
        let den = (0..d0).map(|j| sign(j) * binom[j as usize]).collect();
        Ok(HermanFamily { d0, dinf, num, den })
    }

    pub fn map(&self, c: Complex64) -> Result<RationalMap> {
        if c.norm() == 0.0 {
            return Err(Error::InvalidMap("parameter must be nonzero".into()));
        }
        let num = self.num.iter().map(|&a| c * a).collect();
        let den = self.den.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        RationalMap::new(num, den)
    }

    /// One step in precision `T`; `None` at a pole.
    #[inline]
    pub fn step<T: Float>(&self, c: Complex<T>, z: Complex<T>) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut n = zero;
        for &a in self.num.iter().rev() {
            n = n * z + Complex::new(T::from(a).unwrap(), T::zero());
        }
        let mut d = zero;
        for &a in self.den.iter().rev() {
            d = d * z + Complex::new(T::from(a).unwrap(), T::zero());
        }
        c * n / d
    }

    /// Orbit `z_0, ..., z_{len-1}` in the requested precision.
    pub fn orbit(&self, c: DdComplex, start: Complex64, len: usize, precision: Precision) -> Vec<Complex64> {
        match precision {
            Precision::Double => self.orbit_in::<f64>(
                Complex::new(c.re.hi(), c.im.hi()),
                start,
                len,
            ),
            Precision::DoubleDouble => self.orbit_in::<TwoFloat>(c, start, len),
        }
    }

    fn orbit_in<T: Float>(&self, c: Complex<T>, start: Complex64, len: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(len);
        let mut z = Complex::new(T::from(start.re).unwrap(), T::from(start.im).unwrap());
        for _ in 0..len {
            out.push(Complex64::new(
                z.re.to_f64().unwrap_or(f64::NAN),
                z.im.to_f64().unwrap_or(f64::NAN),
            ));
            z = self.step(c, z);
        }
        out
    }

    /// `f_c^n(1) - 1` evaluated in precision `T`.
    pub fn return_residual<T: Float>(&self, c: Complex<T>, n: usize, trap: (f64, f64)) -> Result<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        let mut z = one;
        let (lo, hi) = (T::from(trap.0).unwrap(), T::from(trap.1).unwrap());
        for step in 0..n {
            z = self.step(c, z);
            let r = z.norm_sqr().sqrt();
            if !(r > lo && r < hi) {
                return Err(Error::OrbitEscape { step: step + 1 });
            }
        }
        Ok(z - one)
    }
}

fn binomials(n: u32) -> Result<Vec<f64>> {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1]
                .checked_add(row[j])
                .ok_or(Error::Overflow("binomial coefficients"))?;
        }
        row = next;
    }
    Ok(row.into_iter().map(|b| b as f64).collect())
}

/// Working precision for long orbits and tuning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    DoubleDouble,
}

pub type DdComplex = Complex<TwoFloat>;

pub fn dd(z: Complex64) -> DdComplex {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

pub fn dd_to_c64(z: DdComplex) -> Complex64 {
    Complex64::new(z.re.hi() + z.re.lo(), z.im.hi() + z.im.lo())
}

/// `F_{d0,dinf}` with parameter `c`.
pub fn herman_family(d0: u32, dinf: u32, c: Complex64) -> Result<RationalMap> {
    HermanFamily::new(d0, dinf)?.map(c)
}

/// `B_{d,alpha}`, which is `F_{d,d}` with parameter `exp(2 pi i alpha)`.
pub fn blaschke(d: u32, alpha: f64) -> Result<RationalMap> {
    herman_family(d, d, Complex64::from_polar(1.0, 2.0 * PI * alpha))
}

/// `z -> exp(2 pi i theta) z`.
pub fn rigid_rotation(theta: f64) -> RationalMap {
    RationalMap {
        num: vec![Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, 2.0 * PI * theta)],
        den: vec![Complex64::new(1.0, 0.0)],
    }
}

/// `F(x) = x + alpha + sin(2 pi x) / (2 pi)`; critical at `x = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArnoldLift {
    pub alpha: f64,
}

pub fn arnold_lift(alpha: f64) -> ArnoldLift {
    ArnoldLift { alpha }
}

impl ArnoldLift {
    pub const CRITICAL: f64 = 0.5;

    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        x + self.alpha + (2.0 * PI * x).sin() / (2.0 * PI)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        1.0 + (2.0 * PI * x).cos()
    }
}

/// Anything whose forward orbits can be sampled in the plane.
pub trait OrbitSource: Send + Sync {
    fn eval(&self, z: Complex64) -> Complex64;

    /// `z_0 = start, ..., z_{len-1}`.
    fn orbit(&self, start: Complex64, len: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(len);
        let mut z = start;
        for _ in 0..len {
            out.push(z);
            z = self.eval(z);
        }
        out
    }

    /// The critical point carried by the invariant curve.
    fn critical_point(&self) -> Complex64;

    /// Inner and outer criticality `(d0, dinf)` when known.
    fn criticality(&self) -> Option<(u32, u32)> {
        None
    }
}

impl OrbitSource for RationalMap {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_fast(z)
    }

    fn critical_point(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
}

/// A family member evaluated in the chosen precision.
#[derive(Clone, Debug)]
pub struct TunedMap {
    pub family: HermanFamily,
    pub parameter: DdComplex,
    pub precision: Precision,
    map: RationalMap,
}

impl TunedMap {
    pub fn new(family: HermanFamily, parameter: DdComplex, precision: Precision) -> Result<Self> {
        let map = family.map(dd_to_c64(parameter))?;
        Ok(TunedMap { family, parameter, precision, map })
    }

    pub fn rational_map(&self) -> &RationalMap {
        &self.map
    }
}

impl OrbitSource for TunedMap {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.map.eval_fast(z)
    }

    fn orbit(&self, start: Complex64, len: usize) -> Vec<Complex64> {
        self.family.orbit(self.parameter, start, len, self.precision)
    }

    fn critical_point(&self) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn criticality(&self) -> Option<(u32, u32)> {
        Some((self.family.d0, self.family.dinf))
    }
}

/// The Arnold circle map on `z = exp(2 pi i x)`. Its holomorphic extension
/// is `exp(2 pi i alpha) z exp((z - 1/z) / 2)`; orbits of circle points are
/// iterated on the lift.
impl OrbitSource for ArnoldLift {
    fn eval(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.alpha) * z * (0.5 * (z - z.inv())).exp()
    }

    fn orbit(&self, start: Complex64, len: usize) -> Vec<Complex64> {
        let mut x = start.arg() / (2.0 * PI);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(Complex64::from_polar(1.0, 2.0 * PI * x));
            let y = self.lift(x);
            x = y - y.floor();
        }
        out
    }

    fn critical_point(&self) -> Complex64 {
        Complex64::new(-1.0, 0.0)
    }

    fn criticality(&self) -> Option<(u32, u32)> {
        Some((2, 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn family_formulas() {
        let b = c(-1.144208, -0.964454);
        let f = herman_family(3, 2, b).unwrap();
        for z in [c(0.3, 0.1), c(-2.0, 0.7), c(0.01, 1.5)] {
            let expect = b * z.powi(3) * (4.0 - z) / (1.0 - 4.0 * z + 6.0 * z * z);
            assert!(close(f.eval_fast(z), expect, 1e-13));
        }
        let g = herman_family(2, 2, b).unwrap();
        for z in [c(0.3, 0.1), c(-2.0, 0.7)] {
            let expect = b * z * z * (z - 3.0) / (1.0 - 3.0 * z);
            assert!(close(g.eval_fast(z), expect, 1e-13));
        }
        for (d0, dinf) in [(2, 2), (3, 2), (2, 3), (4, 5), (7, 3)] {
            let f = herman_family(d0, dinf, b).unwrap();
            assert!(close(f.eval_fast(c(1.0, 0.0)), b, 1e-12));
            assert_eq!(f.degree(), (d0 + dinf - 1) as usize);
        }
        assert!(herman_family(31, 30, b).is_err());
        assert!(herman_family(3, 2, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn blaschke_is_symmetric_member() {
        let alpha = 0.37;
        let e = Complex64::from_polar(1.0, 2.0 * PI * alpha);
        for d in 2..6 {
            let b = blaschke(d, alpha).unwrap();
            let f = herman_family(d, d, e).unwrap();
            assert_eq!(b.numerator(), f.numerator());
            assert_eq!(b.denominator(), f.denominator());
            for k in 0..1000 {
                let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 1000.0);
                assert!((b.eval_fast(z).norm() - 1.0).abs() < 1e-12);
            }
        }
        let b0 = blaschke(2, 0.0).unwrap();
        assert!(close(b0.eval_fast(c(1.0, 0.0)), c(1.0, 0.0), 1e-15));
        assert_eq!(b0.eval(c(0.0, 0.0)), SpherePoint::Finite(c(0.0, 0.0)));
    }

    #[test]
    fn derivatives_at_critical_point() {
        let f = herman_family(3, 2, c(-1.144208, -0.964454)).unwrap();
        let one = c(1.0, 0.0);
        for k in 1..=3 {
            let d = f.deriv(one, k).finite().unwrap();
            assert!(d.norm() < 1e-10, "order {k}: {d}");
        }
        assert!(f.deriv(one, 4).finite().unwrap().norm() > 1.0);
    }

    #[test]
    fn infinity_chart() {
        let f = herman_family(3, 2, c(0.5, 0.5)).unwrap();
        assert_eq!(f.eval_sphere(SpherePoint::Infinity), SpherePoint::Infinity);
        assert_eq!(f.eval(c(1e9, 0.0)), SpherePoint::Infinity);
        let g = RationalMap::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(g.eval(c(0.0, 0.0)), SpherePoint::Infinity);
        assert_eq!(g.eval_sphere(SpherePoint::Infinity), SpherePoint::Finite(c(0.0, 0.0)));
        // pole of f_{3,2}: 1 - 4z + 6z^2 = 0
        let pole = c(1.0 / 3.0, 2f64.sqrt() / 6.0);
        assert_eq!(f.eval(pole), SpherePoint::Infinity);
    }

    #[test]
    fn common_roots_rejected() {
        let r = RationalMap::new(
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
        );
        assert!(r.is_err());
    }

    fn budget(m: &RationalMap) -> usize {
        m.critical_points().iter().map(|(_, k)| k).sum()
    }

    #[test]
    fn critical_point_examples() {
        let f = herman_family(3, 2, c(-1.144208, -0.964454)).unwrap();
        let cp = f.critical_points();
        assert_eq!(budget(&f), 6);
        let mult = |p: SpherePoint| {
            cp.iter()
                .find(|(z, _)| match (z, p) {
                    (SpherePoint::Finite(a), SpherePoint::Finite(b)) => (a - b).norm() < 1e-4,
                    (SpherePoint::Infinity, SpherePoint::Infinity) => true,
                    _ => false,
                })
                .map(|x| x.1)
        };
        assert_eq!(mult(SpherePoint::Finite(c(0.0, 0.0))), Some(2));
        assert_eq!(mult(SpherePoint::Infinity), Some(1));
        assert_eq!(mult(SpherePoint::Finite(c(1.0, 0.0))), Some(3));

        let b = blaschke(2, 0.2).unwrap();
        assert_eq!(budget(&b), 4);
        let cp = b.critical_points();
        assert!(cp.iter().any(|(z, m)| *m == 2 && z.finite().is_some_and(|z| (z - 1.0).norm() < 1e-4)));

        let sq = RationalMap::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let cp = sq.critical_points();
        assert_eq!(cp.len(), 2);
        assert_eq!(budget(&sq), 2);
    }

    #[test]
    fn preimage_examples() {
        let b = blaschke(2, 0.0).unwrap();
        let mut r: Vec<f64> = b.preimages(c(0.0, 0.0)).roots.iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!(r[0].abs() < 1e-7 && r[1].abs() < 1e-7 && (r[2] - 3.0).abs() < 1e-12);
        let f = herman_family(3, 2, c(1.0, 0.0)).unwrap();
        let p = f.preimages(c(0.0, 0.0));
        assert_eq!(p.roots.len(), 4);
        assert_eq!(p.roots.iter().filter(|z| z.norm() < 1e-5).count(), 3);
        assert!(p.roots.iter().any(|z| (z - 4.0).norm() < 1e-12));
        // w equal to the leading ratio sends a preimage to infinity
        let g = RationalMap::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        let q = g.preimages(c(0.5, 0.0));
        assert_eq!(q.at_infinity, 1);
        assert_eq!(q.roots.len(), 1);
    }

    #[test]
    fn arnold_examples() {
        let f = arnold_lift(0.0);
        assert_eq!(f.lift(0.0), 0.0);
        let h = arnold_lift(0.5);
        assert!((h.lift(0.0) - 0.5).abs() < 1e-15);
        assert!((h.lift(0.5) - 1.0).abs() < 1e-15);
        for k in 0..100 {
            let x = k as f64 / 100.0;
            assert!(f.deriv(x) >= 0.0);
            assert!((h.lift(x + 1.0) - h.lift(x) - 1.0).abs() < 1e-12);
        }
        assert!(f.deriv(0.5).abs() < 1e-15);
        // the holomorphic extension agrees with the lift on the circle
        let g = arnold_lift(0.37);
        for k in 0..100 {
            let x = k as f64 / 100.0;
            let z = Complex64::from_polar(1.0, 2.0 * PI * x);
            let w = Complex64::from_polar(1.0, 2.0 * PI * g.lift(x));
            assert!((g.eval(z) - w).norm() < 1e-13);
        }
        // cubic critical point at -1
        let h = 1e-4;
        let m = c(-1.0, 0.0);
        let d = (g.eval(m + h) - g.eval(m - h)) / (2.0 * h);
        assert!(d.norm() < 1e-7);
    }

    #[test]
    fn double_double_orbit_tracks_double() {
        let fam = HermanFamily::new(3, 2).unwrap();
        let p = c(-1.144208, -0.964454);
        let a = fam.orbit(dd(p), c(1.0, 0.0), 30, Precision::Double);
        let b = fam.orbit(dd(p), c(1.0, 0.0), 30, Precision::DoubleDouble);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9);
        }
        let m = fam.map(p).unwrap();
        assert!((m.eval_fast(a[3]) - a[4]).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn derivative_matches_difference(re in -2.0f64..2.0, im in -2.0f64..2.0,
                                         pr in -1.5f64..1.5, pi in -1.5f64..1.5) {
            prop_assume!(pr.abs() + pi.abs() > 0.1);
            let f = herman_family(3, 2, c(pr, pi)).unwrap();
            let z = c(re, im);
            let den = poly::eval(f.denominator(), z).norm();
            prop_assume!(den > 0.05);
            let h = 1e-6;
            let fd = (f.eval_fast(z + h) - f.eval_fast(z - h)) / (2.0 * h);
            let d = f.deriv(z, 1).finite().unwrap();
            prop_assert!((fd - d).norm() <= 1e-6 * (1.0 + d.norm()));
        }

        #[test]
        fn preimages_round_trip(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let f = herman_family(3, 2, c(-1.144208, -0.964454)).unwrap();
            let w = c(re, im);
            let p = f.preimages(w);
            prop_assert_eq!(p.roots.len() + p.at_infinity, 4);
            prop_assert_eq!(p.degraded, 0);
        }

        #[test]
        fn multiplicity_budget(d0 in 2u32..5, dinf in 2u32..5, t in 0.0f64..1.0) {
            let f = herman_family(d0, dinf, Complex64::from_polar(1.3, 2.0 * PI * t)).unwrap();
            prop_assert_eq!(budget(&f), 2 * f.degree() - 2);
        }
    }
}
