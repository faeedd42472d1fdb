//! Command-line front end for `hermanlab`.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hermanlab::cfrac;
use hermanlab::curve;
use hermanlab::julia::{self, Palette, Sampling, Traps, Window};
use hermanlab::maps::{HermanFamily, Precision};
use hermanlab::renorm;
use hermanlab::Execution;
use num_complex::Complex64;
use serde_json::json;

pub use error::CliError;
use error::Stage;
use spec::{MapSpec, Presets, ThetaSpec, TuneSettings};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "HERMANLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hermanlab", version, about = "Herman curves of critical quasicircle maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continued fractions.
    #[command(subcommand)]
    Cfrac(CfracCommand),
    /// Rational families.
    #[command(subcommand)]
    Maps(MapsCommand),
    /// Tune a family to a rotation number and print the result as JSON.
    Tune(TuneArgs),
    /// Sample the invariant curve along the critical orbit.
    Trace(TraceArgs),
    /// Measure a traced curve.
    Geometry(GeometryArgs),
    /// Scaling ratios, commuting pairs and universality.
    #[command(subcommand)]
    Renorm(RenormCommand),
    /// Classify a pixel grid into basins and render it.
    Render(RenderArgs),
    /// Box-counting dimension of sampled points.
    Dims(DimsArgs),
    /// Empty-disk ratios around a point of a classified grid.
    Porosity(PorosityArgs),
    /// Run every stage from a configuration and write a report.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum CfracCommand {
    /// Partial quotients and convergents.
    Expand {
        #[arg(long, value_parser = parse_theta)]
        theta: ThetaSpec,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// The level-`n` tiling and the closest-return ordering.
    Tiling {
        #[arg(long, value_parser = parse_theta)]
        theta: ThetaSpec,
        #[arg(long)]
        level: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum MapsCommand {
    /// Coefficients and critical points of `F_{d0,dinf}` at a parameter.
    Show {
        #[arg(long)]
        d0: u32,
        #[arg(long)]
        dinf: u32,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        param: Complex64,
    },
}

/// How maps given by `--map` are tuned.
#[derive(Debug, Args, Clone)]
pub struct TuneFlags {
    /// Continuation depth of the asymmetric tuner.
    #[arg(long, default_value_t = 24)]
    pub tune_depth: usize,
    /// Residual tolerance of the asymmetric tuner.
    #[arg(long, default_value_t = 1e-10)]
    pub tune_tol: f64,
    /// Bisection tolerance on alpha for circle families.
    #[arg(long, default_value_t = 1e-15)]
    pub lift_tol: f64,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    /// Parameter presets file replacing the bundled table.
    #[arg(long)]
    pub presets: Option<PathBuf>,
}

impl TuneFlags {
    fn settings(&self) -> Result<TuneSettings, CliError> {
        if !(self.tune_tol > 0.0 && self.lift_tol > 0.0) || self.tune_depth < 2 {
            return Err(CliError::config("tolerances must be positive and the depth at least 2"));
        }
        Ok(TuneSettings {
            depth: self.tune_depth,
            tol: self.tune_tol,
            lift_tol: self.lift_tol,
            precision: self.precision.into(),
        })
    }

    fn presets(&self) -> Result<Presets, CliError> {
        match &self.presets {
            Some(p) => Presets::load(p),
            None => Ok(Presets::builtin()),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    Double,
    DoubleDouble,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::DoubleDouble => Precision::DoubleDouble,
        }
    }
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub d0: u32,
    #[arg(long)]
    pub dinf: u32,
    #[arg(long, value_parser = parse_theta)]
    pub theta: ThetaSpec,
    /// Target residual; for circle families the tolerance on alpha.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// `preset` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// Continuation depth; defaults to the depth resolving the tolerance.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    #[arg(long)]
    pub presets: Option<PathBuf>,
    /// Also write the JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// preset:NAME, tuned:D0:DINF, herman:D0:DINF:RE,IM, blaschke:D:ALPHA,
    /// arnold:ALPHA, arnold-tuned or rotation.
    #[arg(long, value_parser = parse_map, allow_hyphen_values = true)]
    pub map: MapSpec,
    #[arg(long, value_parser = parse_theta)]
    pub theta: Option<ThetaSpec>,
    #[command(flatten)]
    pub tune: TuneFlags,
}

impl MapArgs {
    fn resolve(&self) -> Result<spec::ResolvedMap, CliError> {
        let settings = self.tune.settings()?;
        let presets = self.tune.presets()?;
        spec::resolve_map(&self.map, self.theta.as_ref(), &presets, &settings)
    }

    /// Fails before any computation when the arguments cannot work.
    fn precheck(&self) -> Result<(), CliError> {
        self.tune.settings()?;
        if let Some(t) = &self.theta {
            t.resolve()?;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Level `n`; the curve has `q_n` points.
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, value_parser = parse_theta)]
    pub theta: ThetaSpec,
    /// `d0,dinf`, enabling the expected corner angle.
    #[arg(long, value_parser = parse_pair)]
    pub criticality: Option<(u32, u32)>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RenormCommand {
    /// Scaling ratios `s_n` as CSV.
    Ratios {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 16)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        period: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Limit of `c_{q_{n+s}} / c_{q_n}`.
    Mu {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2)]
        period: usize,
        #[arg(long, default_value_t = 16)]
        depth: usize,
    },
    /// Commuting pairs: height, commutation residual and chart per level.
    Pairs {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2)]
        from: usize,
        #[arg(long, default_value_t = 10)]
        to: usize,
    },
    /// Convergence of the scaling ratios of two maps.
    Universality {
        #[arg(long, value_parser = parse_map, allow_hyphen_values = true)]
        map1: MapSpec,
        #[arg(long, value_parser = parse_map, allow_hyphen_values = true)]
        map2: MapSpec,
        #[arg(long, value_parser = parse_theta)]
        theta: ThetaSpec,
        #[arg(long, default_value_t = 4)]
        from: usize,
        #[arg(long, default_value_t = 14)]
        to: usize,
        #[command(flatten)]
        tune: TuneFlags,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PaletteArg {
    Flat,
    Shaded,
}

impl From<PaletteArg> for Palette {
    fn from(p: PaletteArg) -> Self {
        match p {
            PaletteArg::Flat => Palette::Flat,
            PaletteArg::Shaded => Palette::Shaded,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SamplingArg {
    Points,
    Polyline,
    ClosedPolyline,
}

impl From<SamplingArg> for Sampling {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Points => Sampling::Points,
            SamplingArg::Polyline => Sampling::Polyline,
            SamplingArg::ClosedPolyline => Sampling::ClosedPolyline,
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// `x0,y0,x1,y1`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-2.5,-2.5,2.5,2.5")]
    pub window: Window,
    #[arg(long, default_value_t = 1024)]
    pub res: usize,
    #[arg(long, default_value_t = 2000)]
    pub maxiter: u32,
    #[arg(long, default_value_t = 1e-6)]
    pub inner_trap: f64,
    #[arg(long, default_value_t = 1e6)]
    pub outer_trap: f64,
    /// Curve CSV drawn in red.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Layers of preimages of the overlay drawn in green.
    #[arg(long, default_value_t = 0)]
    pub preimages: usize,
    #[arg(long, default_value_t = 2000)]
    pub preimage_points: usize,
    #[arg(long, value_enum, default_value_t = PaletteArg::Flat)]
    pub palette: PaletteArg,
    /// `.ppm` or `.png`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also save the classification.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimsArgs {
    /// CSV with `re` and `im` columns, in curve order.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, value_enum, default_value_t = SamplingArg::ClosedPolyline)]
    pub sampling: SamplingArg,
}

#[derive(Debug, Args)]
pub struct PorosityArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// Orbit index `k` of a curve vertex (needs `--curve`) or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub center: String,
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', required = true)]
    pub radii: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Parameter preset used with default settings.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

fn parse_theta(s: &str) -> Result<ThetaSpec, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_map(s: &str) -> Result<MapSpec, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    spec::parse_complex(s).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected d0,dinf")?;
    Ok((a.trim().parse().map_err(|_| "bad d0")?, b.trim().parse().map_err(|_| "bad dinf")?))
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        &[x0, y0, x1, y1] => Window::new(x0, y0, x1, y1).map_err(|e| e.to_string()),
        _ => Err("expected x0,y0,x1,y1".into()),
    }
}

/// Builds the global rayon pool from [`THREADS_ENV`] when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cfrac(c) => cfrac_command(c),
        Command::Maps(MapsCommand::Show { d0, dinf, param }) => {
            let family = HermanFamily::new(d0, dinf).map_err(|e| CliError::config(e.to_string()))?;
            let f = family.map(param).map_err(|e| CliError::config(e.to_string()))?;
            let critical: Vec<_> = f
                .critical_points()
                .into_iter()
                .map(|(p, m)| json!({ "point": p.finite(), "infinity": p.is_infinity(), "multiplicity": m }))
                .collect();
            io::print_json(&json!({
                "d0": d0,
                "dinf": dinf,
                "parameter": param,
                "degree": f.degree(),
                "numerator": f.numerator(),
                "denominator": f.denominator(),
                "critical_points": critical,
            }))
        }
        Command::Tune(a) => tune_command(a),
        Command::Trace(a) => {
            a.map.precheck()?;
            let m = a.map.resolve()?;
            let c = curve::trace(m.source.as_ref(), &m.theta, a.depth).stage("trace")?;
            io::write_curve(&c, &a.out)?;
            io::print_json(&json!({
                "map": m.label,
                "depth": c.depth,
                "points": c.len(),
                "diameter": c.diameter(),
                "dynamics_residual": c.dynamics_residual,
                "out": a.out,
            }))
        }
        Command::Geometry(a) => {
            let theta = a.theta.resolve()?;
            let c = io::read_curve(&a.curve, &theta, a.criticality)?;
            let report = pipeline::geometry_report(&c)?;
            if let Some(p) = &a.report {
                io::write_json(&report, p)?;
            }
            io::print_json(&report)
        }
        Command::Renorm(r) => renorm_command(r),
        Command::Render(a) => render_command(a),
        Command::Dims(a) => {
            let pts = io::read_points(&a.points)?;
            let r = julia::box_dimension(&pts, a.sampling.into(), Execution::default()).stage("dims")?;
            io::print_json(&r)
        }
        Command::Porosity(a) => porosity_command(a),
        Command::Pipeline(a) => pipeline_command(a),
    }
}

fn cfrac_command(c: CfracCommand) -> Result<(), CliError> {
    match c {
        CfracCommand::Expand { theta, depth } => {
            let cf = theta.resolve()?;
            let conv = cf.convergents(depth).map_err(|e| CliError::config(e.to_string()))?;
            io::print_json(&json!({
                "theta": cf.value(),
                "quotients": cf.quotients(),
                "depth": depth,
                "partial_quotients": cf.take(depth).map_err(|e| CliError::config(e.to_string()))?,
                "p": conv.p,
                "q": conv.q,
                "lengths": conv.lengths,
            }))
        }
        CfracCommand::Tiling { theta, level } => {
            let cf = theta.resolve()?;
            let t = cfrac::tiling(&cf, level).map_err(|e| CliError::config(e.to_string()))?;
            let returns = cfrac::return_ordering(&cf, level, 0.0).map_err(|e| CliError::config(e.to_string()))?;
            io::print_json(&json!({ "tiling": t, "returns": returns }))
        }
    }
}

fn tune_command(a: TuneArgs) -> Result<(), CliError> {
    let theta = a.theta.resolve()?;
    if !(a.tol > 0.0) {
        return Err(CliError::config("--tol must be positive"));
    }
    let presets = match &a.presets {
        Some(p) => Presets::load(p)?,
        None => Presets::builtin(),
    };
    let seed = match a.seed.as_deref() {
        None | Some("preset") => presets.seed_for(a.d0, a.dinf, &a.theta),
        Some(s) => Some(spec::parse_complex(s)?),
    };
    if a.d0 != a.dinf && seed.is_none() {
        return Err(CliError::config(format!("no preset seed for ({},{}) at {}", a.d0, a.dinf, a.theta)));
    }
    let depth = match a.depth {
        Some(d) => d,
        None => hermanlab::rotation::default_depth(&theta).map_err(|e| CliError::config(e.to_string()))?,
    };
    let settings = TuneSettings { depth, tol: a.tol, lift_tol: a.tol, precision: a.precision.into() };
    let t = spec::tune_family(a.d0, a.dinf, &theta, seed, &settings)?;
    if let Some(p) = &a.out {
        io::write_json(&t, p)?;
    }
    io::print_json(&t)
}

fn renorm_command(r: RenormCommand) -> Result<(), CliError> {
    match r {
        RenormCommand::Ratios { map, depth, period, out } => {
            map.precheck()?;
            let m = map.resolve()?;
            let report = renorm::scaling_ratios_with_period(m.source.as_ref(), &m.theta, depth, period).stage("scaling")?;
            io::write_ratios(&report, &out)?;
            io::print_json(&json!({
                "map": m.label,
                "levels": report.levels.len(),
                "product_residual": report.product_residual,
                "truncated": report.truncated,
                "out": out,
            }))
        }
        RenormCommand::Mu { map, period, depth } => {
            map.precheck()?;
            let m = map.resolve()?;
            let mu = renorm::self_similarity(m.source.as_ref(), &m.theta, period, depth).stage("mu")?;
            io::print_json(&mu)
        }
        RenormCommand::Pairs { map, from, to } => {
            map.precheck()?;
            let m = map.resolve()?;
            let mut rows = Vec::new();
            for n in from..=to {
                let p = renorm::commuting_pair(m.source.clone(), &m.theta, n).stage("pairs")?;
                rows.push(json!({
                    "level": n,
                    "chi": p.chi,
                    "expected_chi": m.theta.quotient(n + 1),
                    "commutation": p.commutation_residual(),
                    "plus_at_zero": p.plus_at_zero,
                    "minus_at_zero": p.minus_at_zero,
                    "criticality": p.criticality,
                    "orientation": format!("{:?}", p.orientation),
                }));
            }
            io::print_json(&json!({ "map": m.label, "pairs": rows }))
        }
        RenormCommand::Universality { map1, map2, theta, from, to, tune } => {
            let settings = tune.settings()?;
            let presets = tune.presets()?;
            if from >= to {
                return Err(CliError::config("--from must be below --to"));
            }
            let a = spec::resolve_map(&map1, Some(&theta), &presets, &settings)?;
            let b = spec::resolve_map(&map2, Some(&theta), &presets, &settings)?;
            let r = renorm::convergence_report(a.source.as_ref(), b.source.as_ref(), &a.theta, from..=to)
                .stage("universality")?;
            io::print_json(&r)
        }
    }
}

fn render_command(a: RenderArgs) -> Result<(), CliError> {
    a.map.precheck()?;
    julia::ImageFormat::from_path(&a.out).map_err(|e| CliError::config(e.to_string()))?;
    if a.res == 0 || a.maxiter == 0 {
        return Err(CliError::config("--res and --maxiter must be positive"));
    }
    let traps = Traps { inner: a.inner_trap, outer: a.outer_trap };
    if !(traps.inner > 0.0 && traps.inner < traps.outer) {
        return Err(CliError::config("traps must satisfy 0 < inner < outer"));
    }
    let curve = a.overlay.as_deref().map(io::read_points).transpose()?;
    if a.preimages > 0 && curve.is_none() {
        return Err(CliError::config("--preimages needs --overlay"));
    }
    let m = a.map.resolve()?;
    let spec = pipeline::FigureSpec {
        window: a.window,
        resolution: a.res,
        maxiter: a.maxiter,
        traps,
        preimage_depth: a.preimages,
        preimage_points: a.preimage_points,
    };
    let fig = pipeline::figure(&m, curve.as_deref(), &spec)?;
    julia::render(&fig.grid, &fig.overlays, a.palette.into(), &a.out).stage("render")?;
    if let Some(g) = &a.grid {
        julia::save_grid(&fig.grid, g).stage("render")?;
    }
    io::print_json(&pipeline::figure_summary(&fig))
}

fn porosity_command(a: PorosityArgs) -> Result<(), CliError> {
    let center = match a.center.parse::<u64>() {
        Ok(k) => {
            let path = a.curve.as_ref().ok_or_else(|| CliError::config("--center k needs --curve"))?;
            let v = io::read_vertices(path)?;
            v.iter()
                .find(|v| v.k == k)
                .map(|v| v.point)
                .ok_or_else(|| CliError::config(format!("orbit index {k} is not in {}", path.display())))?
        }
        Err(_) => spec::parse_complex(&a.center)?,
    };
    if a.radii.is_empty() || a.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::config("radii must be positive"));
    }
    let grid = io::load_grid(&a.grid)?;
    let p = julia::porosity_profile(&grid, center, &a.radii).stage("porosity")?;
    io::print_json(&p)
}

fn pipeline_command(a: PipelineArgs) -> Result<(), CliError> {
    let mut config = match (&a.config, &a.preset) {
        (Some(path), _) => config::RunConfig::load(path)?,
        (None, Some(name)) => {
            let presets = Presets::builtin();
            let p = presets.named(name).ok_or_else(|| CliError::config(format!("unknown preset {name:?}")))?;
            config::RunConfig::from_preset(p)
        }
        (None, None) => return Err(CliError::config("pass --config or --preset")),
    };
    if let Some(out) = &a.out {
        config.outputs = out.to_string_lossy().into_owned();
    }
    config.validate()?;
    if a.print_config {
        return io::print_text(&config.to_json());
    }
    let dir = PathBuf::from(&config.outputs);
    let report = pipeline::run(&config, &dir)?;
    for s in &report.stages {
        eprintln!("{:<10} {}", s.stage, if s.passed { "pass" } else { "FAIL" });
    }
    if !report.passed {
        let failed: Vec<&str> = report.stages.iter().filter(|s| !s.passed).map(|s| s.stage.as_str()).collect();
        return Err(CliError::Checks(failed.join(", ")));
    }
    Ok(())
}
