//! Dense complex polynomials with ascending coefficients and an Aberth root
//! solver.

use num_complex::Complex64;

pub type Poly = Vec<Complex64>;

/// Drops leading coefficients below `1e-14` of the largest one.
pub fn trim(p: &[Complex64]) -> Poly {
    let scale = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut v = p.to_vec();
    while v.len() > 1 && v.last().unwrap().norm() <= 1e-14 * scale {
        v.pop();
    }
    if v.is_empty() {
        v.push(Complex64::new(0.0, 0.0));
    }
    v
}

pub fn degree(p: &[Complex64]) -> usize {
    trim(p).len() - 1
}

pub fn eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Value and first derivative.
pub fn eval_d(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let mut v = zero;
    let mut d = zero;
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

pub fn derivative(p: &[Complex64]) -> Poly {
    if p.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Poly {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            a.get(i).copied().unwrap_or_default() - b.get(i).copied().unwrap_or_default()
        })
        .collect()
}

/// Coefficients of `p(z + h)` as a polynomial in `h`, up to order `k`.
pub fn taylor(p: &[Complex64], z: Complex64, k: usize) -> Poly {
    let mut c = p.to_vec();
    let mut out = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        if c.is_empty() {
            out.push(Complex64::new(0.0, 0.0));
            continue;
        }
        // synthetic division by (x - z): remainder is the next coefficient
        let n = c.len();
        let mut q = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (0..n).rev() {
            acc = acc * z + c[i];
            if i > 0 {
                q[i - 1] = acc;
            }
        }
        out.push(acc);
        c = q;
    }
    out
}

/// All roots of `p`, with multiplicity, by Aberth–Ehrlich iteration followed
/// by a Newton polish.
pub fn roots(p: &[Complex64]) -> Vec<Complex64> {
    let p = trim(p);
    let n = p.len() - 1;
    if n == 0 {
        return vec![];
    }
    // zero roots are split off exactly
    let lead_zeros = p.iter().take_while(|c| c.norm() == 0.0).count();
    if lead_zeros > 0 {
        let mut r = vec![Complex64::new(0.0, 0.0); lead_zeros];
        r.extend(roots(&p[lead_zeros..]));
        return r;
    }
    let lead = p[n];
    let monic: Vec<Complex64> = p.iter().map(|c| c / lead).collect();
    if n == 1 {
        return vec![-monic[0]];
    }
    let dp = derivative(&monic);
    // initial guesses on a circle of the geometric-mean root radius
    let radius = monic[0].norm().powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(radius, t)
        })
        .collect();
    let mut done = vec![false; n];
    for _ in 0..800 {
        let mut moved = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let pv = eval(&monic, z[i]);
            if pv.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = pv / eval(&dp, z[i]);
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !step.is_finite() {
                done[i] = true;
                continue;
            }
            z[i] -= step;
            if step.norm() <= 1e-16 * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    z
}

/// Groups roots closer than `tol * (1 + |z|)`; returns centres with counts.
pub fn cluster(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<(Complex64, usize, Complex64)> = Vec::new();
    for &r in roots {
        match groups
            .iter_mut()
            .find(|(c, _, _)| (c - r).norm() <= tol * (1.0 + r.norm()))
        {
            Some(g) => {
                g.1 += 1;
                g.2 += r;
                g.0 = g.2 / g.1 as f64;
            }
            None => groups.push((r, 1, r)),
        }
    }
    groups.into_iter().map(|(c, m, _)| (c, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(r: &[Complex64]) -> Poly {
        r.iter()
            .fold(vec![c(1.0, 0.0)], |acc, &x| mul(&acc, &[-x, c(1.0, 0.0)]))
    }

    #[test]
    fn simple_roots() {
        let r = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0), c(0.25, -0.1)];
        let mut got = roots(&from_roots(&r));
        assert_eq!(got.len(), 4);
        for x in r {
            let (i, d) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - x).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < 1e-12);
            got.remove(i);
        }
    }

    #[test]
    fn multiple_roots_cluster() {
        // z^3 (4 - z)
        let p = vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(4.0, 0.0), c(-1.0, 0.0)];
        let cl = cluster(&roots(&p), 1e-6);
        assert_eq!(cl.len(), 2);
        let m0 = cl.iter().find(|(z, _)| z.norm() < 1e-6).unwrap().1;
        assert_eq!(m0, 3);
        // (z - 1)^3 (z + 2)
        let q = from_roots(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)]);
        let cl = cluster(&roots(&q), 1e-4);
        let one = cl.iter().find(|(z, _)| (z - 1.0).norm() < 1e-4).unwrap();
        assert_eq!(one.1, 3);
    }

    #[test]
    fn taylor_matches_derivatives() {
        let p = vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, -3.0), c(0.5, 0.0)];
        let z = c(0.3, -0.7);
        let t = taylor(&p, z, 3);
        assert!((t[0] - eval(&p, z)).norm() < 1e-14);
        assert!((t[1] - eval(&derivative(&p), z)).norm() < 1e-14);
        assert!((t[2] * 2.0 - eval(&derivative(&derivative(&p)), z)).norm() < 1e-13);
        assert!((t[3] - p[3]).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn residuals_small(coef in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..9)) {
            let mut p: Poly = coef.iter().map(|&(a, b)| c(a, b)).collect();
            if p.last().unwrap().norm() < 0.1 {
                *p.last_mut().unwrap() = c(1.0, 0.0);
            }
            let r = roots(&p);
            prop_assert_eq!(r.len(), p.len() - 1);
            let scale: f64 = p.iter().map(|x| x.norm()).sum();
            for z in r {
                let (v, d) = eval_d(&p, z);
                // backward error relative to the coefficient size
                let tol = 1e-10 * scale * (1.0 + z.norm()).powi(p.len() as i32 - 1);
                prop_assert!(v.norm() <= tol || v.norm() <= 1e-6 * d.norm().max(1e-300) * (1.0 + z.norm()));
            }
        }
    }
}
