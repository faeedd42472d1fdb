//! Ordinary least squares helpers.

use serde::{Deserialize, Serialize};

/// Straight-line fit `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Fits a line through `(x, y)`. Returns `None` for fewer than two points or
/// a degenerate abscissa.
pub fn line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n)
        .map(|i| {
            let r = y[i] - intercept - slope * x[i];
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        n,
    })
}

/// Least-squares polynomial of the given degree; coefficients lowest first.
pub fn polynomial(x: &[f64], y: &[f64], degree: usize) -> Option<Vec<f64>> {
    let n = x.len().min(y.len());
    let m = degree + 1;
    if n < m {
        return None;
    }
    let x0 = x[..n].iter().sum::<f64>() / n as f64;
    let scale = x[..n]
        .iter()
        .map(|v| (v - x0).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    // normal equations on a centred, scaled abscissa
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..n {
        let t = (x[i] - x0) / scale;
        let mut pw = vec![1.0; m];
        for k in 1..m {
            pw[k] = pw[k - 1] * t;
        }
        for r in 0..m {
            for c in 0..m {
                a[r][c] += pw[r] * pw[c];
            }
            a[r][m] += pw[r] * y[i];
        }
    }
    let c = solve(a)?;
    // expand back to powers of x
    let mut out = vec![0.0; m];
    for (k, ck) in c.iter().enumerate() {
        // ck * ((x - x0)/scale)^k
        let f = ck / scale.powi(k as i32);
        for j in 0..=k {
            out[j] += f * binom(k, j) * (-x0).powi((k - j) as i32);
        }
    }
    Some(out)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn exact_quadratic() {
        let x: Vec<f64> = (0..6).map(|i| 0.1 + i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 3.0 * t + 0.5 * t * t).collect();
        let c = polynomial(&x, &y, 2).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-9);
        assert!((c[1] + 3.0).abs() < 1e-8);
        assert!((c[2] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn degenerate() {
        assert!(line(&[1.0], &[2.0]).is_none());
        assert!(line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
