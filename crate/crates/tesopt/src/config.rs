//! Scenario configuration: a single TOML file describing geometry,
//! conductivities, electrodes, target, optimizer parameters and outputs.
//! Config files use mm and degrees; everything is converted to SI on
//! ingestion. Exact key names are documented in `docs/config.md`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::admm::{AdmmParams, StateConstraint};
use crate::error::{Error, Result};
use crate::geometry::ConductivitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Mode {
    #[serde(rename = "L2R")]
    L2r,
    #[serde(rename = "L1R")]
    L1r,
    #[serde(rename = "elastic")]
    Elastic,
    #[serde(rename = "M2E-from-L1R")]
    M2eFromL1r,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::L2r => "L2R",
            Mode::L1r => "L1R",
            Mode::Elastic => "elastic",
            Mode::M2eFromL1r => "M2E-from-L1R",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub geometry: GeometryConfig,
    /// Label -> scalar S/m or row-major tensor.
    pub conductivities: BTreeMap<String, ConductivityEntry>,
    pub electrodes: ElectrodeConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub m2e: M2eConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    /// Target element size (disk).
    #[serde(default)]
    pub h_mm: Option<f64>,
    /// Dirichlet arc [start, end] in degrees CCW from +x (disk); default is
    /// a 10-degree patch at the disk bottom.
    #[serde(default = "default_dirichlet_arc")]
    pub dirichlet_arc_deg: [f64; 2],
    /// Concentric layers inside-out (disk).
    #[serde(default)]
    pub layers: Vec<LayerConfig>,
    /// Box extent per axis (box).
    #[serde(default)]
    pub extent_mm: Vec<f64>,
    /// Elements per axis (box).
    #[serde(default)]
    pub divisions: Vec<usize>,
    /// Grounded face (box): x-/x+/y-/y+/z-/z+.
    #[serde(default = "default_dirichlet_face")]
    pub dirichlet_face: String,
    /// Compartment label of the whole box (box).
    #[serde(default = "default_box_label")]
    pub label: String,
    /// Whether the box compartment counts as brain (box).
    #[serde(default = "default_true")]
    pub brain: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Disk,
    Box,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub radius_mm: f64,
    pub label: String,
    #[serde(default)]
    pub brain: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ConductivityEntry {
    Scalar(f64),
    Tensor(Vec<Vec<f64>>),
}

impl ConductivityEntry {
    pub fn to_spec(&self) -> ConductivitySpec {
        match self {
            ConductivityEntry::Scalar(s) => ConductivitySpec::Scalar(*s),
            ConductivityEntry::Tensor(rows) => ConductivitySpec::Tensor(rows.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeConfig {
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Target center in mm (2 or 3 coordinates to match the geometry).
    pub center_mm: Vec<f64>,
    /// Diameter of the spherical selection region in mm.
    pub extent_mm: f64,
    pub orientation: Orientation,
    /// Required for `orientation = "explicit"`, normalized on ingestion.
    #[serde(default)]
    pub vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Tangential,
    Radial,
    Explicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub omega_low: f64,
    /// `vector` (per-element Euclidean ball) or `component` (scalar clip).
    pub state_constraint: String,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            alpha: 0.01,
            beta: 0.001,
            epsilon: 0.001,
            mu1: 1.0,
            mu2: 1.0,
            tol: 1e-6,
            max_iter: 10_000,
            omega_low: crate::transfer::OMEGA_LOW_DEFAULT,
            state_constraint: "vector".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Subset of csv, vtk, log.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            formats: vec!["csv".into(), "vtk".into(), "log".into()],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct M2eConfig {
    /// Current through each of the two kept electrodes, mA.
    pub total_ma: f64,
}

impl Default for M2eConfig {
    fn default() -> Self {
        M2eConfig { total_ma: 1.0 }
    }
}

fn default_dirichlet_arc() -> [f64; 2] {
    [265.0, 275.0]
}

fn default_dirichlet_face() -> String {
    "x-".into()
}

fn default_box_label() -> String {
    "domain".into()
}

fn default_true() -> bool {
    true
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config {
            key: "<toml>".into(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match self.geometry.kind {
            GeometryKind::Disk => {
                if self.geometry.layers.is_empty() {
                    return Err(Error::config(
                        "geometry.layers",
                        "disk geometry needs at least one layer",
                    ));
                }
                let mut prev = 0.0;
                for (i, layer) in self.geometry.layers.iter().enumerate() {
                    if !(layer.radius_mm > prev) {
                        return Err(Error::config(
                            format!("geometry.layers[{i}].radius_mm"),
                            "layer radii must be positive and strictly increasing",
                        ));
                    }
                    prev = layer.radius_mm;
                }
                let h = self.geometry.h_mm.ok_or_else(|| {
                    Error::config("geometry.h_mm", "disk geometry needs an element size")
                })?;
                if !(h > 0.0) {
                    return Err(Error::config(
                        "geometry.h_mm",
                        "element size must be positive",
                    ));
                }
                let [a, b] = self.geometry.dirichlet_arc_deg;
                if a == b {
                    return Err(Error::config(
                        "geometry.dirichlet_arc_deg",
                        "arc must have nonzero width",
                    ));
                }
            }
            GeometryKind::Box => {
                let d = self.geometry.extent_mm.len();
                if d != 2 && d != 3 {
                    return Err(Error::config("geometry.extent_mm", "need 2 or 3 axes"));
                }
                if self.geometry.divisions.len() != d {
                    return Err(Error::config(
                        "geometry.divisions",
                        "must match extent_mm in length",
                    ));
                }
                if self.geometry.extent_mm.iter().any(|&e| !(e > 0.0)) {
                    return Err(Error::config(
                        "geometry.extent_mm",
                        "extents must be positive",
                    ));
                }
                if self.geometry.divisions.iter().any(|&n| n == 0) {
                    return Err(Error::config(
                        "geometry.divisions",
                        "divisions must be >= 1",
                    ));
                }
                crate::geometry::AxisFace::parse(&self.geometry.dirichlet_face)
                    .map_err(|e| Error::config("geometry.dirichlet_face", e.to_string()))?;
            }
        }

        // Every declared compartment needs a conductivity.
        let labels: Vec<&str> = match self.geometry.kind {
            GeometryKind::Disk => self
                .geometry
                .layers
                .iter()
                .map(|l| l.label.as_str())
                .collect(),
            GeometryKind::Box => vec![self.geometry.label.as_str()],
        };
        for label in labels {
            if !self.conductivities.contains_key(label) {
                return Err(Error::config(
                    format!("conductivities.{label}"),
                    format!("missing conductivity for compartment `{label}`"),
                ));
            }
        }
        for (label, entry) in &self.conductivities {
            if let ConductivityEntry::Scalar(s) = entry {
                if !(*s > 0.0) {
                    return Err(Error::config(
                        format!("conductivities.{label}"),
                        "scalar conductivity must be positive",
                    ));
                }
            }
        }

        if self.electrodes.count < 2 {
            return Err(Error::config(
                "electrodes.count",
                "need at least 2 electrodes",
            ));
        }

        let d = match self.geometry.kind {
            GeometryKind::Disk => 2,
            GeometryKind::Box => self.geometry.extent_mm.len(),
        };
        if self.target.center_mm.len() != d {
            return Err(Error::config(
                "target.center_mm",
                format!("need {d} coordinates for this geometry"),
            ));
        }
        if !(self.target.extent_mm > 0.0) {
            return Err(Error::config("target.extent_mm", "extent must be positive"));
        }
        if self.target.orientation == Orientation::Explicit {
            let v = self.target.vector.as_ref().ok_or_else(|| {
                Error::config("target.vector", "explicit orientation needs a vector")
            })?;
            if v.len() != d || v.iter().map(|x| x * x).sum::<f64>() == 0.0 {
                return Err(Error::config(
                    "target.vector",
                    format!("need a nonzero vector with {d} components"),
                ));
            }
        }

        let opt = &self.optimizer;
        for (key, value, positive) in [
            ("optimizer.alpha", opt.alpha, false),
            ("optimizer.beta", opt.beta, false),
            ("optimizer.epsilon", opt.epsilon, true),
            ("optimizer.mu1", opt.mu1, true),
            ("optimizer.mu2", opt.mu2, true),
            ("optimizer.tol", opt.tol, true),
        ] {
            if positive && !(value > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
            if !positive && value < 0.0 {
                return Err(Error::config(key, "must be nonnegative"));
            }
        }
        if !(opt.omega_low > 0.0 && opt.omega_low < 1.0) {
            return Err(Error::config("optimizer.omega_low", "must lie in (0, 1)"));
        }
        if opt.max_iter == 0 {
            return Err(Error::config("optimizer.max_iter", "must be at least 1"));
        }
        self.state_constraint()?;

        for fmt in &self.outputs.formats {
            if !matches!(fmt.as_str(), "csv" | "vtk" | "log") {
                return Err(Error::config(
                    "outputs.formats",
                    format!("unknown format `{fmt}` (expected csv, vtk, log)"),
                ));
            }
        }
        if !(self.m2e.total_ma > 0.0) {
            return Err(Error::config("m2e.total_ma", "must be positive"));
        }
        Ok(())
    }

    pub fn state_constraint(&self) -> Result<StateConstraint> {
        match self.optimizer.state_constraint.as_str() {
            "vector" => Ok(StateConstraint::Vector),
            "component" => Ok(StateConstraint::Component),
            other => Err(Error::config(
                "optimizer.state_constraint",
                format!("unknown mode `{other}` (expected vector or component)"),
            )),
        }
    }

    /// ADMM parameters with the mode applied: L2R forces beta = 0, L1R (and
    /// the M2E baseline derived from it) forces alpha = 0, elastic keeps
    /// both.
    pub fn admm_params(&self) -> Result<AdmmParams> {
        let opt = &self.optimizer;
        let (alpha, beta) = match self.mode {
            Mode::L2r => (opt.alpha, 0.0),
            Mode::L1r | Mode::M2eFromL1r => (0.0, opt.beta),
            Mode::Elastic => (opt.alpha, opt.beta),
        };
        Ok(AdmmParams {
            mu1: opt.mu1,
            mu2: opt.mu2,
            alpha,
            beta,
            epsilon: opt.epsilon,
            tol: opt.tol,
            max_iter: opt.max_iter,
            state_constraint: self.state_constraint()?,
        })
    }

    pub fn wants_format(&self, fmt: &str) -> bool {
        self.outputs.formats.iter().any(|f| f == fmt)
    }
}
