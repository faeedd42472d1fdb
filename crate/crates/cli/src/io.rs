//! CSV and JSON artifacts.

use std::io::Write;
use std::path::Path;

use hermanlab::cfrac::ContinuedFraction;
use hermanlab::curve::{HermanCurve, Vertex};
use hermanlab::renorm::ScalingReport;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};

#[derive(Serialize, Deserialize)]
struct CurveRow {
    k: u64,
    angle: f64,
    re: f64,
    im: f64,
}

/// One row per vertex in angle order: `k,angle,re,im`.
pub fn write_curve(curve: &HermanCurve, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for v in &curve.vertices {
        w.serialize(CurveRow { k: v.k, angle: v.angle, re: v.point.re, im: v.point.im }).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vertices(path: &Path) -> Result<Vec<Vertex>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| input_err(path, e))?;
    r.deserialize::<CurveRow>()
        .map(|row| {
            let row = row.map_err(|e| input_err(path, e))?;
            Ok(Vertex { k: row.k, angle: row.angle, point: Complex64::new(row.re, row.im) })
        })
        .collect()
}

/// Rebuilds a curve from its CSV; the depth is the level whose denominator
/// equals the number of rows.
pub fn read_curve(
    path: &Path,
    theta: &ContinuedFraction,
    criticality: Option<(u32, u32)>,
) -> Result<HermanCurve, CliError> {
    let vertices = read_vertices(path)?;
    let n = vertices.len() as u64;
    let depth = theta
        .depth_for_denominator(n)
        .ok()
        .filter(|&d| theta.convergents(d).map(|c| c.q[d] == n as i128).unwrap_or(false))
        .ok_or_else(|| CliError::config(format!("{}: {n} rows is not a denominator of theta", path.display())))?;
    HermanCurve::from_vertices(vertices, theta.clone(), depth, criticality).map_err(|e| CliError::config(e.to_string()))
}

#[derive(Deserialize)]
struct PointRow {
    re: f64,
    im: f64,
}

/// Points from any CSV with `re` and `im` columns, in file order.
pub fn read_points(path: &Path) -> Result<Vec<Complex64>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| input_err(path, e))?;
    r.deserialize::<PointRow>()
        .map(|row| row.map(|p| Complex64::new(p.re, p.im)).map_err(|e| input_err(path, e)))
        .collect()
}

#[derive(Serialize)]
struct RatioRow {
    n: usize,
    re: f64,
    im: f64,
    abs: f64,
    ratio_product: Option<f64>,
}

/// `n, re s_n, im s_n, |s_n|, ratio_product`, where the last column is
/// `|c_{q_{n+s}} / c_{q_n}|` for the report's period `s` when defined.
pub fn write_ratios(report: &ScalingReport, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (i, (&n, s)) in report.levels.iter().zip(&report.ratios).enumerate() {
        let ratio_product = report.period_ratios.get(i).map(|r| r.norm());
        w.serialize(RatioRow { n, re: s.re, im: s.im, abs: s.norm(), ratio_product }).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    print_text(&format!("{text}\n"))
}

/// Writes to stdout; a closed pipe is not an error.
pub fn print_text(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn load_grid(path: &Path) -> Result<hermanlab::julia::GridClassification, CliError> {
    if !path.exists() {
        return Err(CliError::config(format!("{} does not exist", path.display())));
    }
    hermanlab::julia::load_grid(path).stage("grid")
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

fn input_err(path: &Path, e: csv::Error) -> CliError {
    CliError::config(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hermanlab::curve::trace;
    use hermanlab::maps::rigid_rotation;

    #[test]
    fn curve_csv_round_trip() {
        let theta = ContinuedFraction::golden();
        let f = rigid_rotation(theta.value());
        let curve = trace(&f, &theta, 10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve(&curve, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,angle,re,im\n0,0.0,1.0,0.0\n"));
        let back = read_curve(&path, &theta, None).unwrap();
        assert_eq!(back.depth, 10);
        assert_eq!(back.vertices, curve.vertices);
        assert_eq!(read_points(&path).unwrap(), curve.points());
    }

    #[test]
    fn wrong_row_count_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "k,angle,re,im\n0,0,1,0\n1,0.6,0,1\n2,0.2,1,1\n3,0.8,0,0\n").unwrap();
        let e = read_curve(&path, &ContinuedFraction::golden(), None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
