//! Pipeline configuration.

use std::path::Path;

use hermanlab::julia::{Palette, Traps, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::spec::{MapSpec, ParameterPreset, Presets, ThetaSpec, TuneSettings};

pub const SCHEMA: &str = "hermanlab.run/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub d0: u32,
    pub dinf: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Depths {
    /// Level `n` of the traced curve (`q_n` samples) and of the orbit checks.
    pub trace: usize,
    /// Deepest scaling ratio.
    pub ratios: usize,
    /// Step `s` of the self-similarity ratios.
    pub period: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `|angle - expected|` in radians.
    pub angle: f64,
    /// Allowed relative defect of the product identity.
    pub product: f64,
    /// Allowed `||z| - 1|` when the curve is the unit circle.
    pub circle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Ppm,
    Png,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Ppm => "ppm",
            Format::Png => "png",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub window: [f64; 4],
    pub resolution: usize,
    pub maxiter: u32,
    pub traps: Traps,
    pub palette: Palette,
    /// Layers of preimages of the curve drawn in green; 0 draws none.
    pub preimage_depth: usize,
    /// Curve points fed into each preimage layer.
    pub preimage_points: usize,
    pub format: Format,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            window: [-2.5, -2.5, 2.5, 2.5],
            resolution: 512,
            maxiter: 1000,
            traps: Traps::default(),
            palette: Palette::Flat,
            preimage_depth: 2,
            preimage_points: 2000,
            format: Format::Ppm,
        }
    }
}

impl RenderConfig {
    pub fn window(&self) -> Result<Window, CliError> {
        let [x0, y0, x1, y1] = self.window;
        Window::new(x0, y0, x1, y1).map_err(|e| CliError::config(e.to_string()))
    }
}

/// Everything a pipeline run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub family: Family,
    pub theta: ThetaSpec,
    /// Starting parameter of the asymmetric tuner.
    pub seed: Option<[f64; 2]>,
    pub tune: TuneSettings,
    pub depths: Depths,
    pub tolerances: Tolerances,
    /// `None` skips the rendering stage.
    pub render: Option<RenderConfig>,
    /// Output directory, relative to the working directory.
    pub outputs: String,
}

impl RunConfig {
    pub fn new(d0: u32, dinf: u32, theta: ThetaSpec, seed: Option<[f64; 2]>) -> Self {
        RunConfig {
            schema: SCHEMA.into(),
            family: Family { d0, dinf },
            theta,
            seed,
            tune: TuneSettings::default(),
            depths: Depths { trace: 20, ratios: 16, period: 2 },
            tolerances: Tolerances { angle: 0.0524, product: 1e-10, circle: 1e-9 },
            render: Some(RenderConfig::default()),
            outputs: "out".into(),
        }
    }

    pub fn from_preset(p: &ParameterPreset) -> Self {
        RunConfig::new(p.d0, p.dinf, ThetaSpec::Text(p.theta.clone()), Some(p.seed))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn map_spec(&self) -> MapSpec {
        MapSpec::Tuned { d0: self.family.d0, dinf: self.family.dinf }
    }

    /// Presets seeded from the config's own seed, so runs do not depend on
    /// the bundled table.
    pub fn presets(&self) -> Presets {
        let mut presets = Presets::builtin();
        if let (Some(seed), Some(name)) = (self.seed, self.theta.name()) {
            presets.parameters.retain(|p| !(p.d0 == self.family.d0 && p.dinf == self.family.dinf));
            presets.parameters.push(ParameterPreset {
                name: "config".into(),
                d0: self.family.d0,
                dinf: self.family.dinf,
                theta: name.into(),
                seed,
            });
        }
        presets
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::config(format!("schema {:?}, expected {SCHEMA:?}", self.schema)));
        }
        let Family { d0, dinf } = self.family;
        if d0 < 2 || dinf < 2 || d0 + dinf > 60 {
            return Err(CliError::config(format!("unsupported family ({d0},{dinf})")));
        }
        let theta = self.theta.resolve()?;
        if d0 != dinf && self.seed.is_none() {
            return Err(CliError::config("asymmetric families need a seed"));
        }
        if self.seed.is_some_and(|s| !s.iter().all(|v| v.is_finite())) {
            return Err(CliError::config("seed must be finite"));
        }
        let t = &self.tune;
        if t.depth < 2 || !(t.tol > 0.0) || !(t.lift_tol > 0.0) {
            return Err(CliError::config("tune depth must be at least 2 and tolerances positive"));
        }
        let d = &self.depths;
        if d.trace < 2 || d.ratios < 2 || d.period == 0 || d.period % 2 != 0 {
            return Err(CliError::config("depths must be at least 2 and the period even"));
        }
        if let Some(n) = theta.available() {
            let need = d.trace.max(d.ratios + d.period + 1).max(t.depth) + 1;
            if n < need {
                return Err(CliError::config(format!("theta has {n} quotients, the depths need {need}")));
            }
        }
        let tol = &self.tolerances;
        if ![tol.angle, tol.product, tol.circle].iter().all(|v| *v > 0.0) {
            return Err(CliError::config("tolerances must be positive"));
        }
        if let Some(r) = &self.render {
            r.window()?;
            if r.resolution == 0 || r.resolution > 16384 || r.maxiter == 0 {
                return Err(CliError::config("resolution must be in 1..=16384 and maxiter positive"));
            }
            if !(r.traps.inner > 0.0 && r.traps.inner < r.traps.outer) {
                return Err(CliError::config("traps must satisfy 0 < inner < outer"));
            }
            if r.preimage_depth > 0 && r.preimage_points == 0 {
                return Err(CliError::config("preimage_points must be positive"));
            }
        }
        if self.outputs.is_empty() {
            return Err(CliError::config("outputs must name a directory"));
        }
        Ok(())
    }
}
