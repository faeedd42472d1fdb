//! Continued fractions, convergents, the Gauss map and exact angle order.
//!
//! Quadratic irrationals are stored symbolically as `(preperiod, period)`, so
//! quotients are available to any depth. Float inputs are expanded with a
//! running error budget and truncated where the digits stop being trustworthy.
//!
//! [`AngleOracle`] decides the sign of `x*theta - y` for integers `x, y` by
//! comparing against a convergent, which gives exact circular order of the
//! points `{k*theta}` and exact floors `floor(k*theta)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of tail terms used to evaluate an infinite expansion in `f64`.
const TAIL_TERMS: usize = 64;

/// How partial quotients are generated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quotients {
    /// Exact rational `[0; a_1, ..., a_n]`.
    Finite(Vec<u64>),
    /// First quotients of an irrational; deeper terms are unknown.
    Prefix(Vec<u64>),
    /// Eventually periodic: `preperiod` then `period` repeated forever.
    Periodic { preperiod: Vec<u64>, period: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    quotients: Quotients,
    value: f64,
}

impl ContinuedFraction {
    /// The golden mean `[0; 1, 1, 1, ...]`.
    pub fn golden() -> Self {
        Self::periodic(vec![], vec![1]).expect("valid")
    }

    /// `[0; 2, 2, 2, ...] = sqrt(2) - 1`.
    pub fn silver() -> Self {
        Self::periodic(vec![], vec![2]).expect("valid")
    }

    pub fn periodic(preperiod: Vec<u64>, period: Vec<u64>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Invalid("empty period".into()));
        }
        check_positive(&preperiod)?;
        check_positive(&period)?;
        let mut cf = ContinuedFraction {
            quotients: Quotients::Periodic { preperiod, period },
            value: 0.0,
        };
        cf.value = cf.tail_value(0);
        Ok(cf)
    }

    /// Trusted leading quotients of an irrational number.
    pub fn from_prefix(quotients: Vec<u64>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::Invalid("empty quotient list".into()));
        }
        check_positive(&quotients)?;
        let mut cf = ContinuedFraction {
            quotients: Quotients::Prefix(quotients),
            value: 0.0,
        };
        cf.value = cf.tail_value(0);
        Ok(cf)
    }

    /// Exact expansion of `p / q` with `0 < p < q`.
    pub fn from_ratio(p: u64, q: u64) -> Result<Self> {
        if p == 0 || p >= q {
            return Err(Error::Domain(format!("{p}/{q} is not in (0,1)")));
        }
        let (mut a, mut b) = (q, p);
        let mut out = Vec::new();
        while b != 0 {
            out.push(a / b);
            let r = a % b;
            a = b;
            b = r;
        }
        Ok(ContinuedFraction {
            quotients: Quotients::Finite(out),
            value: p as f64 / q as f64,
        })
    }

    pub fn quotients(&self) -> &Quotients {
        &self.quotients
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.quotients, Quotients::Finite(_))
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.quotients, Quotients::Periodic { .. })
    }

    /// Number of known quotients; `None` when unlimited.
    pub fn available(&self) -> Option<usize> {
        match &self.quotients {
            Quotients::Finite(v) | Quotients::Prefix(v) => Some(v.len()),
            Quotients::Periodic { .. } => None,
        }
    }

    /// The quotient `a_i`, 1-based.
    pub fn quotient(&self, i: usize) -> Option<u64> {
        if i == 0 {
            return None;
        }
        match &self.quotients {
            Quotients::Finite(v) | Quotients::Prefix(v) => v.get(i - 1).copied(),
            Quotients::Periodic { preperiod, period } => {
                if i <= preperiod.len() {
                    Some(preperiod[i - 1])
                } else {
                    Some(period[(i - preperiod.len() - 1) % period.len()])
                }
            }
        }
    }

    /// First `n` quotients.
    pub fn take(&self, n: usize) -> Result<Vec<u64>> {
        (1..=n)
            .map(|i| {
                self.quotient(i).ok_or(Error::NotEnoughQuotients {
                    needed: n,
                    available: self.available().unwrap_or(usize::MAX),
                })
            })
            .collect()
    }

    /// `[0; a_{i+1}, a_{i+2}, ...]`, the `i`-th Gauss iterate.
    pub fn tail_value(&self, i: usize) -> f64 {
        let end = match self.available() {
            Some(len) => len,
            None => i + TAIL_TERMS,
        };
        if i >= end {
            return 0.0;
        }
        let mut x = 0.0;
        for k in (i + 1..=end).rev() {
            x = 1.0 / (self.quotient(k).expect("in range") as f64 + x);
        }
        x
    }

    /// The Gauss map on the expansion: drops `a_1`.
    pub fn shift(&self) -> Result<Self> {
        let q = match &self.quotients {
            Quotients::Finite(v) => {
                if v.len() <= 1 {
                    return Err(Error::Domain("Gauss map of 1/a is 0".into()));
                }
                let mut w = v[1..].to_vec();
                // keep the canonical form: a trailing 1 folds into its neighbour
                if w.len() > 1 && *w.last().unwrap() == 1 {
                    w.pop();
                    *w.last_mut().unwrap() += 1;
                }
                Quotients::Finite(w)
            }
            Quotients::Prefix(v) => {
                if v.len() <= 1 {
                    return Err(Error::NotEnoughQuotients { needed: 2, available: v.len() });
                }
                Quotients::Prefix(v[1..].to_vec())
            }
            Quotients::Periodic { preperiod, period } => {
                if preperiod.is_empty() {
                    let mut p = period.clone();
                    p.rotate_left(1);
                    Quotients::Periodic { preperiod: vec![], period: p }
                } else {
                    Quotients::Periodic {
                        preperiod: preperiod[1..].to_vec(),
                        period: period.clone(),
                    }
                }
            }
        };
        let mut cf = ContinuedFraction { quotients: q, value: 0.0 };
        cf.value = cf.tail_value(0);
        Ok(cf)
    }

    /// Shifts by `n` Gauss steps.
    pub fn shift_by(&self, n: usize) -> Result<Self> {
        let mut cf = self.clone();
        for _ in 0..n {
            cf = cf.shift()?;
        }
        Ok(cf)
    }

    /// Largest quotient among the first `depth` and the depth actually checked.
    pub fn bound(&self, depth: usize) -> (u64, usize) {
        let checked = self.available().map_or(depth, |a| a.min(depth));
        let max = (1..=checked).filter_map(|i| self.quotient(i)).max().unwrap_or(0);
        (max, checked)
    }

    /// Convergents `(p_k, q_k)` for `k = 0..=n` and lengths `l_k`.
    pub fn convergents(&self, n: usize) -> Result<Convergents> {
        let a = self.take(n)?;
        let mut p = Vec::with_capacity(n + 1);
        let mut q = Vec::with_capacity(n + 1);
        let (mut p2, mut q2) = (1i128, 0i128); // index -1
        let (mut p1, mut q1) = (0i128, 1i128); // index 0
        p.push(p1);
        q.push(q1);
        for &ak in &a {
            let ak = ak as i128;
            let pk = ak
                .checked_mul(p1)
                .and_then(|v| v.checked_add(p2))
                .ok_or(Error::Overflow("convergent numerator"))?;
            let qk = ak
                .checked_mul(q1)
                .and_then(|v| v.checked_add(q2))
                .ok_or(Error::Overflow("convergent denominator"))?;
            p.push(pk);
            q.push(qk);
            p2 = p1;
            q2 = q1;
            p1 = pk;
            q1 = qk;
        }
        let lengths = match self.quotients {
            // the tail of a truncated expansion is unknown; use the value
            Quotients::Prefix(_) => (0..=n)
                .map(|k| (q[k] as f64).mul_add(-self.value, p[k] as f64).abs())
                .collect(),
            _ => (0..=n).map(|k| self.length_unchecked(k)).collect(),
        };
        Ok(Convergents { p, q, lengths })
    }

    /// `l_n = |p_n - q_n theta|`, evaluated as a product of Gauss iterates.
    pub fn comb_length(&self, n: usize) -> Result<f64> {
        if matches!(self.quotients, Quotients::Prefix(_)) {
            return Ok(self.convergents(n)?.lengths[n]);
        }
        self.take(n)?;
        Ok(self.length_unchecked(n))
    }

    fn length_unchecked(&self, n: usize) -> f64 {
        (0..=n).map(|i| self.tail_value(i)).product()
    }

    /// Largest `l_k / l_{k+1}` for `k < depth`; bounded by `N + 2` for type `N`.
    pub fn length_ratio_bound(&self, depth: usize) -> Result<f64> {
        let c = self.convergents(depth)?;
        Ok(c.lengths
            .windows(2)
            .map(|w| w[0] / w[1])
            .fold(0.0, f64::max))
    }

    /// Smallest index `n` with `q_n >= target`.
    pub fn depth_for_denominator(&self, target: u64) -> Result<usize> {
        let mut n = 0;
        loop {
            let c = self.convergents(n)?;
            if c.q[n] >= target as i128 {
                return Ok(n);
            }
            n += 1;
        }
    }
}

fn check_positive(v: &[u64]) -> Result<()> {
    if v.iter().any(|&a| a == 0) {
        return Err(Error::Invalid("partial quotients must be >= 1".into()));
    }
    Ok(())
}

/// `p_k`, `q_k` and `l_k` for `k = 0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergents {
    pub p: Vec<i128>,
    pub q: Vec<i128>,
    pub lengths: Vec<f64>,
}

impl Convergents {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Expands a float in `(0,1)` into its first `n` trustworthy quotients.
///
/// Each step carries the error budget `64 * eps * q_k^2`. A remainder inside
/// that budget of 0 or 1 means the input is numerically rational; once the
/// budget itself reaches order one the digits are exhausted.
pub fn cf_expand(theta: f64, n: usize) -> Result<ContinuedFraction> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta = {theta} is not in (0,1)")));
    }
    if n == 0 {
        return Err(Error::Invalid("depth must be >= 1".into()));
    }
    let (mut q1, mut q2) = (1f64, 0f64);
    let mut x = theta;
    let mut out = Vec::with_capacity(n);
    loop {
        let y = 1.0 / x;
        if !y.is_finite() || y >= u64::MAX as f64 {
            return Err(Error::RationalInput { prefix: out });
        }
        let mut a = y.floor();
        x = y - a;
        let q = a * q1 + q2;
        let tol = 64.0 * f64::EPSILON * q * q;
        if x > 1.0 - tol {
            a += 1.0;
            x = 0.0;
        }
        let q = a * q1 + q2;
        q2 = q1;
        q1 = q;
        out.push(a as u64);
        if out.len() == n {
            break;
        }
        let tol = 64.0 * f64::EPSILON * q1 * q1;
        if x < tol {
            if tol < 1e-3 {
                return Err(Error::RationalInput { prefix: out });
            }
            return Err(Error::NotEnoughQuotients {
                needed: n,
                available: out.len(),
            });
        }
    }
    Ok(ContinuedFraction {
        quotients: Quotients::Prefix(out),
        value: theta,
    })
}

/// `G(x) = {1/x}`.
pub fn gauss(theta: f64) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::Domain("Gauss map undefined at 0".into()));
    }
    let y = 1.0 / theta;
    Ok(y - y.floor())
}

/// Exact arithmetic on the points `{k theta}` of the circle.
#[derive(Clone, Debug)]
pub struct AngleOracle {
    exact: Option<(i128, i128)>,
    conv: Convergents,
    value: f64,
}

impl AngleOracle {
    /// Oracle valid for multipliers `|x| < max_multiplier`.
    pub fn new(cf: &ContinuedFraction, max_multiplier: u64) -> Result<Self> {
        if let Quotients::Finite(v) = cf.quotients() {
            let c = cf.convergents(v.len())?;
            return Ok(AngleOracle {
                exact: Some((c.p[v.len()], c.q[v.len()])),
                conv: c,
                value: cf.value(),
            });
        }
        let mut n = 1;
        loop {
            let c = cf.convergents(n)?;
            if c.q[n - 1] > max_multiplier as i128 {
                return Ok(AngleOracle {
                    exact: None,
                    conv: c,
                    value: cf.value(),
                });
            }
            n += 1;
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Sign of `x theta - y`.
    pub fn sign(&self, x: i128, y: i128) -> Result<Ordering> {
        if x == 0 {
            return Ok(0.cmp(&y));
        }
        if let Some((p, q)) = self.exact {
            let lhs = x.checked_mul(p).ok_or(Error::Overflow("angle test"))?;
            let rhs = y.checked_mul(q).ok_or(Error::Overflow("angle test"))?;
            return Ok(lhs.cmp(&rhs));
        }
        // |x theta - y| >= l_{m-1} for 0 < |x| < q_m, and |x| l_m / q_m < l_m,
        // so x p_m / q_m - y has the same sign.
        let ax = x.abs();
        let m = (1..self.conv.len())
            .find(|&m| self.conv.q[m] > ax)
            .ok_or(Error::InsufficientDepth(format!("multiplier {x} exceeds oracle range")))?;
        let lhs = x
            .checked_mul(self.conv.p[m])
            .ok_or(Error::Overflow("angle test"))?;
        let rhs = y
            .checked_mul(self.conv.q[m])
            .ok_or(Error::Overflow("angle test"))?;
        Ok(lhs.cmp(&rhs))
    }

    /// `floor(k theta)`.
    pub fn floor(&self, k: i128) -> Result<i128> {
        let mut y = (k as f64 * self.value).floor() as i128;
        while self.sign(k, y)? == Ordering::Less {
            y -= 1;
        }
        while self.sign(k, y + 1)? != Ordering::Less {
            y += 1;
        }
        Ok(y)
    }

    /// `{k theta}` in `f64`.
    pub fn frac(&self, k: i128) -> Result<f64> {
        let f = self.floor(k)?;
        let x = (k as f64).mul_add(self.value, -(f as f64));
        Ok(x.clamp(0.0, 1.0 - f64::EPSILON / 2.0))
    }

    /// Compares `{i theta}` with `{j theta}`.
    pub fn cmp_frac(&self, i: i128, j: i128) -> Result<Ordering> {
        let fi = self.floor(i)?;
        let fj = self.floor(j)?;
        self.sign(i - j, fi - fj)
    }

    /// Sorts orbit indices by the angle `{k theta}`.
    pub fn sort_by_angle(&self, idx: &mut [u64]) -> Result<()> {
        let floors: std::collections::HashMap<u64, i128> = idx
            .iter()
            .map(|&k| self.floor(k as i128).map(|f| (k, f)))
            .collect::<Result<_>>()?;
        let mut err = None;
        idx.sort_by(|&a, &b| {
            match self.sign(a as i128 - b as i128, floors[&a] - floors[&b]) {
                Ok(o) => o.then(a.cmp(&b)),
                Err(e) => {
                    err.get_or_insert(e);
                    Ordering::Equal
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// One closest return `R^{q_k}(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Return {
    pub k: usize,
    pub q: i128,
    /// Signed displacement `q_k theta - p_k`, of modulus `l_k`.
    pub offset: f64,
    /// `x + offset` reduced mod 1.
    pub angle: f64,
}

/// Closest returns of `x` under the rotation for `k = 1..=n`, listed in
/// circular order around `x`: `q_1, q_3, ..., x, ..., q_4, q_2`.
///
/// Sides and the shrinking of `l_k` are checked with exact sign tests.
pub fn return_ordering(cf: &ContinuedFraction, n: usize, x: f64) -> Result<Vec<Return>> {
    if n < 2 {
        return Err(Error::Invalid("return ordering needs n >= 2".into()));
    }
    let c = cf.convergents(n + 1)?;
    let oracle = AngleOracle::new(cf, (c.q[n] * 2) as u64 + 1)?;
    let mut below = Vec::new();
    let mut above = Vec::new();
    for k in 1..=n {
        let side = oracle.sign(c.q[k], c.p[k])?;
        let expected = if k % 2 == 1 { Ordering::Less } else { Ordering::Greater };
        if side != expected {
            return Err(Error::Invalid(format!("return q_{k} on the wrong side")));
        }
        if k >= 2 {
            // l_{k-1} > l_k  <=>  |q_{k-1} theta - p_{k-1}| > |q_k theta - p_k|;
            // the two displacements have opposite signs, so compare their sum
            let s = oracle.sign(c.q[k - 1] + c.q[k], c.p[k - 1] + c.p[k])?;
            if s != oracle.sign(c.q[k - 1], c.p[k - 1])? {
                return Err(Error::Invalid(format!("l_{k} does not shrink")));
            }
        }
        let mag = c.lengths[k];
        let offset = if side == Ordering::Less { -mag } else { mag };
        let angle = (x + offset).rem_euclid(1.0);
        let r = Return { k, q: c.q[k], offset, angle };
        if k % 2 == 1 {
            below.push(r);
        } else {
            above.push(r);
        }
    }
    above.reverse();
    below.extend(above);
    Ok(below)
}

/// The combinatorial tiling at level `n` with the marked point at angle 0:
/// tiles `[i, q_n + i]` for `i < q_{n+1}` and `[q_{n+1} + j, j]` for `j < q_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    pub n: usize,
    /// Orbit indices in increasing angle, starting at 0.
    pub vertices: Vec<u64>,
    /// Tiles as `(start, end)` orbit indices.
    pub tiles: Vec<(u64, u64)>,
}

impl Tiling {
    /// Every tile lies inside a tile of `coarse` and the vertex sets nest.
    pub fn refines(&self, coarse: &Tiling) -> bool {
        let fine: std::collections::HashMap<u64, usize> =
            self.vertices.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut pos = Vec::with_capacity(coarse.vertices.len());
        for k in &coarse.vertices {
            match fine.get(k) {
                Some(&i) => pos.push(i),
                None => return false,
            }
        }
        // coarse vertices appear in the same cyclic order inside the fine list
        pos.windows(2).all(|w| w[0] < w[1])
    }
}

/// Builds the level-`n` tiling and checks exactly that it partitions the circle.
pub fn tiling(cf: &ContinuedFraction, n: usize) -> Result<Tiling> {
    let c = cf.convergents(n + 1)?;
    let (qn, qn1) = (c.q[n] as u64, c.q[n + 1] as u64);
    let count = qn + qn1;
    let oracle = AngleOracle::new(cf, count + 1)?;
    let mut vertices: Vec<u64> = (0..count).collect();
    oracle.sort_by_angle(&mut vertices)?;
    let mut tiles: Vec<(u64, u64)> = (0..qn1).map(|i| (i, qn + i)).collect();
    tiles.extend((0..qn).map(|j| (qn1 + j, j)));

    // tiles must be exactly the arcs between cyclically adjacent vertices
    let m = vertices.len();
    let mut adjacent: std::collections::HashSet<(u64, u64)> = std::collections::HashSet::new();
    for i in 0..m {
        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
        adjacent.insert((a.min(b), a.max(b)));
    }
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in &tiles {
        let key = (a.min(b), a.max(b));
        if !adjacent.contains(&key) || !seen.insert(key) {
            return Err(Error::Invalid(format!("tile [{a}, {b}] is not a gap of level {n}")));
        }
    }
    if seen.len() != m {
        return Err(Error::Invalid("tiles do not cover the circle".into()));
    }
    Ok(Tiling { n, vertices, tiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn expand_examples() {
        let g = cf_expand((5f64.sqrt() - 1.0) / 2.0, 20).unwrap();
        assert_eq!(g.take(20).unwrap(), vec![1; 20]);
        let s = cf_expand(2f64.sqrt() - 1.0, 15).unwrap();
        assert_eq!(s.take(15).unwrap(), vec![2; 15]);
        let r = cf_expand(0.3, 2).unwrap();
        assert_eq!(r.take(2).unwrap(), vec![3, 3]);
        assert!(matches!(cf_expand(0.3, 5), Err(Error::RationalInput { .. })));
        assert!(matches!(cf_expand(0.0, 3), Err(Error::Domain(_))));
        assert!(matches!(cf_expand(1.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn float_precision_runs_out() {
        let e = cf_expand(GOLDEN, 60).unwrap_err();
        match e {
            Error::NotEnoughQuotients { available, .. } => assert!(available > 25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convergent_examples() {
        let g = ContinuedFraction::golden().convergents(6).unwrap();
        assert_eq!(g.q, vec![1, 1, 2, 3, 5, 8, 13]);
        let s = ContinuedFraction::silver().convergents(4).unwrap();
        assert_eq!(s.q, vec![1, 2, 5, 12, 29]);
        let r = ContinuedFraction::from_ratio(3, 10).unwrap();
        assert_eq!(r.take(2).unwrap(), vec![3, 3]);
        let c = r.convergents(2).unwrap();
        assert_eq!((c.p[2], c.q[2]), (3, 10));
    }

    #[test]
    fn gauss_examples() {
        let g = ContinuedFraction::golden();
        assert!((gauss(g.value()).unwrap() - g.value()).abs() < 1e-15);
        assert!((gauss(0.3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(gauss(0.0).is_err());
        let cf = ContinuedFraction::periodic(vec![2], vec![1]).unwrap();
        assert_eq!(cf.shift().unwrap(), ContinuedFraction::golden());
        assert_eq!(
            ContinuedFraction::from_ratio(3, 10).unwrap().shift().unwrap(),
            ContinuedFraction::from_ratio(1, 3).unwrap()
        );
    }

    #[test]
    fn golden_lengths() {
        let g = ContinuedFraction::golden();
        assert!((g.comb_length(0).unwrap() - 0.618_033_988_7).abs() < 1e-10);
        assert!((g.comb_length(1).unwrap() - 0.381_966_011_3).abs() < 1e-10);
        for n in 0..40 {
            let l = g.comb_length(n).unwrap();
            let expect = GOLDEN.powi(n as i32 + 1);
            assert!((l / expect - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn lengths_match_direct_formula() {
        let s = ContinuedFraction::silver();
        let c = s.convergents(12).unwrap();
        for k in 0..=12 {
            let direct = (c.p[k] as f64 - c.q[k] as f64 * s.value()).abs();
            assert!((direct - c.lengths[k]).abs() < 4.0 * f64::EPSILON * c.q[k] as f64);
        }
    }

    #[test]
    fn length_ratio_bounded_by_type() {
        let mut prev = 0.0;
        for n in 1..6u64 {
            let cf = ContinuedFraction::periodic(vec![], vec![n]).unwrap();
            let c = cf.length_ratio_bound(30).unwrap();
            assert!(c <= n as f64 + 2.0 && c > prev);
            prev = c;
        }
    }

    #[test]
    fn overflow_is_reported() {
        let cf = ContinuedFraction::periodic(vec![], vec![1000]).unwrap();
        assert!(matches!(cf.convergents(40), Err(Error::Overflow(_))));
    }

    #[test]
    fn oracle_floor_is_exact() {
        let g = ContinuedFraction::golden();
        let o = AngleOracle::new(&g, 100_000).unwrap();
        for k in [1i128, 2, 3, 5, 8, 13, 987, 1597, 75025, 99_999] {
            let f = o.floor(k).unwrap();
            assert_eq!(f, (k as f64 * GOLDEN).floor() as i128);
        }
        // near-integer products: q_n theta is within l_n of p_n
        let c = g.convergents(24).unwrap();
        for n in 2..24 {
            let f = o.floor(c.q[n]).unwrap();
            let want = if n % 2 == 1 { c.p[n] - 1 } else { c.p[n] };
            assert_eq!(f, want, "n={n}");
        }
    }

    #[test]
    fn return_order_alternates() {
        for cf in [ContinuedFraction::golden(), ContinuedFraction::silver()] {
            let r = return_ordering(&cf, 8, 0.0).unwrap();
            let ks: Vec<usize> = r.iter().map(|x| x.k).collect();
            assert_eq!(ks, vec![1, 3, 5, 7, 8, 6, 4, 2]);
            let c = cf.convergents(8).unwrap();
            for x in &r {
                assert!((x.offset.abs() - c.lengths[x.k]).abs() < 1e-14);
            }
        }
        let r = return_ordering(&ContinuedFraction::silver(), 6, 0.5).unwrap();
        assert!(r[0].angle < 0.5 && r[r.len() - 1].angle > 0.5);
    }

    #[test]
    fn tilings_refine() {
        for cf in [ContinuedFraction::golden(), ContinuedFraction::silver()] {
            let mut prev = tiling(&cf, 2).unwrap();
            for n in 3..=9 {
                let t = tiling(&cf, n).unwrap();
                assert!(t.refines(&prev));
                assert!(!prev.refines(&t));
                prev = t;
            }
        }
    }

    proptest! {
        #[test]
        fn recurrence_holds(pre in proptest::collection::vec(1u64..6, 0..3),
                            per in proptest::collection::vec(1u64..6, 1..4)) {
            let cf = ContinuedFraction::periodic(pre, per).unwrap();
            let c = cf.convergents(20).unwrap();
            for n in 1..=20 {
                let a = cf.quotient(n).unwrap() as i128;
                let (pm2, qm2) = if n >= 2 { (c.p[n - 2], c.q[n - 2]) } else { (1, 0) };
                prop_assert_eq!(c.q[n], a * c.q[n - 1] + qm2);
                prop_assert_eq!(c.p[n], a * c.p[n - 1] + pm2);
                // determinant identity implies gcd(p_n, q_n) = 1
                let det = c.p[n] * c.q[n - 1] - c.p[n - 1] * c.q[n];
                prop_assert_eq!(det.abs(), 1);
                prop_assert!(c.lengths[n] < c.lengths[n - 1]);
                let err = (cf.value() - c.p[n] as f64 / c.q[n] as f64).abs();
                prop_assert!(err < 1.0 / (c.q[n] as f64).powi(2) + 1e-15);
            }
        }

        #[test]
        fn gauss_commutes_with_shift(a in proptest::collection::vec(1u64..5, 12)) {
            let theta = ContinuedFraction::from_prefix(a.clone()).unwrap().value();
            let g = gauss(theta).unwrap();
            if let (Ok(x), Ok(y)) = (cf_expand(g, 6), cf_expand(theta, 7)) {
                prop_assert_eq!(x.take(6).unwrap(), y.take(7).unwrap()[1..].to_vec());
            }
        }

        #[test]
        fn reconstruction_within_length(a in proptest::collection::vec(1u64..8, 10)) {
            let theta = ContinuedFraction::from_prefix(a).unwrap().value();
            let cf = cf_expand(theta, 6).unwrap();
            let c = cf.convergents(6).unwrap();
            let approx = c.p[6] as f64 / c.q[6] as f64;
            prop_assert!((approx - theta).abs() <= c.lengths[6]);
        }

        #[test]
        fn oracle_agrees_with_floats(k in 1i128..5000, j in 1i128..5000) {
            let g = ContinuedFraction::golden();
            let o = AngleOracle::new(&g, 10_000).unwrap();
            let fk = (k as f64 * GOLDEN).fract();
            let fj = (j as f64 * GOLDEN).fract();
            if (fk - fj).abs() > 1e-9 {
                prop_assert_eq!(o.cmp_frac(k, j).unwrap(), fk.partial_cmp(&fj).unwrap());
            }
        }
    }
}
