//! tune → verify → trace → scaling → geometry → render, with a JSON report.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hermanlab::curve::{self, HermanCurve};
use hermanlab::julia::{self, GridClassification, Label, Overlay, Sampling, Traps, Window};
use hermanlab::renorm;
use hermanlab::rotation;
use hermanlab::Execution;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Stage};
use crate::io;
use crate::spec::{self, ResolvedMap};

pub const REPORT_SCHEMA: &str = "hermanlab.report/1";

#[derive(Clone, Debug, Serialize)]
pub struct StageOutcome {
    pub stage: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub data: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub config: RunConfig,
    pub passed: bool,
    pub stages: Vec<StageOutcome>,
    /// File names inside the output directory.
    pub artifacts: Vec<String>,
}

/// Draws the basins with preimage layers in green and the curve in red.
pub struct Figure {
    pub grid: GridClassification,
    pub overlays: Vec<Overlay>,
    pub preimages: Vec<julia::PreimageLayer>,
}

pub struct FigureSpec {
    pub window: Window,
    pub resolution: usize,
    pub maxiter: u32,
    pub traps: Traps,
    pub preimage_depth: usize,
    pub preimage_points: usize,
}

pub fn figure(map: &ResolvedMap, curve: Option<&[Complex64]>, spec: &FigureSpec) -> Result<Figure, CliError> {
    let exec = Execution::default();
    let grid = julia::classify_with(
        map.source.as_ref(),
        spec.window,
        (spec.resolution, spec.resolution),
        spec.maxiter,
        spec.traps,
        exec,
    )
    .stage("render")?;
    let mut overlays = Vec::new();
    let mut preimages = Vec::new();
    if let Some(points) = curve {
        if spec.preimage_depth > 0 {
            let f = map.rational()?;
            let layers = julia::preimage_layers(f, points, spec.preimage_depth, spec.preimage_points, exec)
                .stage("preimages")?;
            for layer in layers.iter().skip(1) {
                overlays.push(Overlay { points: layer.points.clone(), color: julia::COLOR_PREIMAGE });
            }
            preimages = layers.into_iter().skip(1).collect();
        }
        overlays.push(Overlay { points: points.to_vec(), color: julia::COLOR_CURVE });
    }
    Ok(Figure { grid, overlays, preimages })
}

/// Label counts and preimage diagnostics.
pub fn figure_summary(fig: &Figure) -> Value {
    let g = &fig.grid;
    json!({
        "width": g.width,
        "height": g.height,
        "window": g.window,
        "maxiter": g.maxiter,
        "basin0": g.count(Label::Basin0),
        "basin_inf": g.count(Label::BasinInf),
        "undecided": g.count(Label::Undecided),
        "preimage_layers": fig.preimages.iter().map(|l| json!({
            "points": l.points.len(),
            "degraded": l.degraded,
            "max_residual": l.max_residual,
        })).collect::<Vec<_>>(),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

struct Run<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    stages: Vec<StageOutcome>,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn record(&mut self, stage: &str, passed: bool, data: Value) {
        if !passed {
            log::warn!("stage {stage} did not pass its checks");
        }
        self.stages.push(StageOutcome { stage: stage.into(), passed, error: None, data });
    }

    fn artifact(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.into());
        self.dir.join(name)
    }

    fn report(&self) -> Report {
        Report {
            schema: REPORT_SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: self.config.digest(),
            config: self.config.clone(),
            passed: self.stages.iter().all(|s| s.passed),
            stages: self.stages.clone(),
            artifacts: self.artifacts.clone(),
        }
    }

    fn stages(&mut self) -> Result<(), CliError> {
        let c = self.config;
        let symmetric = c.family.d0 == c.family.dinf;

        let map = spec::resolve_map(&c.map_spec(), Some(&c.theta), &c.presets(), &c.tune)?;
        let tune = map.tune.clone().expect("tuned map");
        let tune_ok = tune.residual.is_finite() && (symmetric || tune.residual <= c.tune.tol);
        self.record("tune", tune_ok, to_value(&tune));

        let theta = &map.theta;
        let check = rotation::verify_herman(map.source.as_ref(), theta, c.depths.trace).stage("verify")?;
        self.record("verify", check.passed(), to_value(&check));

        let curve = curve::trace(map.source.as_ref(), theta, c.depths.trace).stage("trace")?;
        io::write_curve(&curve, &self.artifact("curve.csv"))?;
        let circle = symmetric.then(|| {
            curve.vertices.iter().map(|v| (v.point.norm() - 1.0).abs()).fold(0.0, f64::max)
        });
        let trace_ok = curve.dynamics_residual.is_finite() && circle.is_none_or(|d| d < c.tolerances.circle);
        self.record(
            "trace",
            trace_ok,
            json!({
                "depth": curve.depth,
                "points": curve.len(),
                "diameter": curve.diameter(),
                "dynamics_residual": curve.dynamics_residual,
                "circle_deviation": circle,
            }),
        );

        self.scaling(&map)?;
        self.geometry(&curve)?;

        if let Some(r) = &c.render {
            let spec = FigureSpec {
                window: r.window()?,
                resolution: r.resolution,
                maxiter: r.maxiter,
                traps: r.traps,
                preimage_depth: r.preimage_depth,
                preimage_points: r.preimage_points,
            };
            let fig = figure(&map, Some(&curve.points()), &spec)?;
            julia::save_grid(&fig.grid, &self.artifact("grid.bin")).stage("render")?;
            let name = format!("figure.{}", r.format.extension());
            julia::render(&fig.grid, &fig.overlays, r.palette, &self.artifact(&name)).stage("render")?;
            let summary = figure_summary(&fig);
            self.record("render", true, summary);
        }
        Ok(())
    }

    fn scaling(&mut self, map: &ResolvedMap) -> Result<(), CliError> {
        let c = self.config;
        let (s, depth) = (c.depths.period, c.depths.ratios);
        let src = map.source.as_ref();
        let report = renorm::scaling_ratios_with_period(src, &map.theta, depth, s).stage("scaling")?;
        io::write_ratios(&report, &self.artifact("ratios.csv"))?;
        let mu = if map.theta.is_periodic() {
            Some(renorm::self_similarity(src, &map.theta, s, depth).stage("scaling")?)
        } else {
            None
        };
        let passed = report.product_residual < c.tolerances.product
            && mu.as_ref().is_none_or(|m| m.mu.norm() > 0.0 && m.mu.norm() < 1.0);
        let data = json!({
            "levels": report.levels,
            "ratios": report.ratios,
            "period": report.period,
            "product_residual": report.product_residual,
            "cauchy": report.cauchy,
            "truncated": report.truncated,
            "mu": mu.as_ref().map(|m| json!({
                "value": m.mu,
                "abs": m.mu.norm(),
                "error": m.error,
                "cauchy_factor": m.cauchy_factor,
            })),
        });
        self.record("scaling", passed, data);
        Ok(())
    }

    fn geometry(&mut self, curve: &HermanCurve) -> Result<(), CliError> {
        let c = self.config;
        let data = geometry_report(curve)?;
        let angle_ok = match (data.angle.as_ref(), data.angle.as_ref().and_then(|a| a.expected)) {
            (Some(a), Some(e)) => (a.angle - e).abs() <= c.tolerances.angle,
            (Some(_), None) => true,
            (None, _) => false,
        };
        self.record("geometry", angle_ok, to_value(&data));
        Ok(())
    }
}

/// Curve geometry: corner angle, turning, decay of returns, a beta number
/// at the critical point and the box dimension when sampled densely enough.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub points: usize,
    pub depth: usize,
    pub diameter: f64,
    pub angle: Option<curve::AngleEstimate>,
    pub angle_degrees: Option<f64>,
    pub turning: curve::TurningReport,
    pub return_decay: Option<curve::DecayFit>,
    pub beta_at_critical_point: Option<curve::BetaEstimate>,
    pub bounded_geometry: Option<f64>,
    pub dimension: Option<julia::DimensionReport>,
    pub notes: Vec<String>,
}

fn keep<T>(notes: &mut Vec<String>, name: &str, r: hermanlab::Result<T>) -> Option<T> {
    r.map_err(|e| notes.push(format!("{name}: {e}"))).ok()
}

pub fn geometry_report(curve: &HermanCurve) -> Result<GeometryReport, CliError> {
    let mut notes = Vec::new();
    let angle = keep(&mut notes, "angle", curve::critical_angle(curve));
    let return_decay = keep(&mut notes, "return_decay", curve::return_decay(curve));
    let diameter = curve.diameter();
    let beta = keep(&mut notes, "beta", curve::beta_number(curve, curve.critical_point, diameter / 8.0));
    let level = curve.depth.saturating_sub(4).max(1);
    let bounded_geometry = keep(&mut notes, "bounded_geometry", curve::bounded_geometry(curve, level));
    let dimension = keep(
        &mut notes,
        "dimension",
        julia::box_dimension(&curve.points(), Sampling::ClosedPolyline, Execution::default()),
    );
    Ok(GeometryReport {
        points: curve.len(),
        depth: curve.depth,
        diameter,
        angle_degrees: angle.as_ref().map(|a: &curve::AngleEstimate| a.angle * 180.0 / PI),
        angle,
        turning: curve::bounded_turning(curve),
        return_decay,
        beta_at_critical_point: beta,
        bounded_geometry,
        dimension,
        notes,
    })
}

/// Runs the pipeline into `dir`. The report is written even when a stage
/// fails; the error is returned afterwards.
pub fn run(config: &RunConfig, dir: &Path) -> Result<Report, CliError> {
    config.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut run = Run { config, dir: dir.to_path_buf(), stages: Vec::new(), artifacts: Vec::new() };
    let outcome = run.stages();
    if let Err(e) = &outcome {
        let stage = match e {
            CliError::Numeric { stage, .. } => stage.clone(),
            _ => "pipeline".into(),
        };
        run.stages.push(StageOutcome { stage, passed: false, error: Some(e.to_string()), data: Value::Null });
    }
    let path = run.artifact("report.json");
    let report = run.report();
    io::write_json(&report, &path)?;
    outcome?;
    Ok(report)
}
