//! Experiment configuration: a TOML document with dotted keys, overridable
//! from the command line with `--set key=value`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// 1 or 2.
    pub dimension: usize,
    /// Flux coefficients, lowest degree first.
    pub flux: Vec<f64>,
    /// Second flux component in 2-D; defaults to `flux`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux_y: Option<Vec<f64>>,
    pub scheme: String,
    pub cfl_ratio: f64,
    pub t_end: f64,
    pub observer_stride: usize,
    pub grid: GridConfig,
    pub far_field: FarField,
    pub data: DataConfig,
    /// Any of `monotone`, `interval`, `l1ball`, `l2ball`,
    /// `relative_entropy`, `ball_entropy`.
    pub targets: Vec<String>,
    pub target: TargetParams,
    /// Entropies for the entropy functionals: `s2`, `s4`, ..., `cosh`.
    pub entropies: Vec<String>,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
    pub riemann: RiemannConfig,
    pub convergence: ConvergenceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_left: f64,
    pub x_right: f64,
    /// Cells per direction.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarField {
    pub u_minus: f64,
    pub u_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// `step`, `riemann`, `random_bv` or `from_file`.
    pub kind: String,
    pub seed: u64,
    pub amplitude: f64,
    pub support: [f64; 2],
    /// Jump location for `step`.
    pub at: f64,
    /// CSV with columns `x_center,u` for `from_file`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Rescale to this L1 norm (zero far field only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetParams {
    pub interval: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannConfig {
    pub v_minus: f64,
    pub v_plus: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub case: String,
    pub mesh_sizes: Vec<f64>,
    pub t_end: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            flux: vec![0.0, 0.0, 0.5],
            flux_y: None,
            scheme: "godunov".into(),
            cfl_ratio: 0.45,
            t_end: 1.0,
            observer_stride: 1,
            grid: GridConfig::default(),
            far_field: FarField::default(),
            data: DataConfig::default(),
            targets: vec!["monotone".into()],
            target: TargetParams::default(),
            entropies: vec!["s2".into()],
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
            riemann: RiemannConfig::default(),
            convergence: ConvergenceConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_left: -5.0, x_right: 5.0, n: 400 }
    }
}

impl Default for FarField {
    fn default() -> Self {
        Self { u_minus: -1.0, u_plus: 1.0 }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { kind: "riemann".into(), seed: 0, amplitude: 2.0, support: [-5.0, 5.0], at: 0.0, path: None, l1_norm: None }
    }
}

impl Default for TargetParams {
    fn default() -> Self {
        Self { interval: [-1.0, 1.0], radius: 1.0 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: conslaw_core::lyapunov::TOL_ABS, rel: conslaw_core::lyapunov::TOL_REL }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

impl Default for RiemannConfig {
    fn default() -> Self {
        Self { v_minus: -1.0, v_plus: 1.0, xi_min: -2.0, xi_max: 4.0, samples: 601 }
    }
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            case: "burgers_rarefaction".into(),
            mesh_sizes: vec![1.0 / 50.0, 1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0, 1.0 / 800.0],
            t_end: 1.0,
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `key=value`; the value is read as TOML, falling back to a bare
/// string.
fn parse_override(assignment: &str) -> Result<toml::Table, CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    toml::from_str(&format!("{key} = {value}"))
        .or_else(|_| toml::from_str(&format!("{key} = {}", toml::Value::String(value.to_string()))))
        .map_err(|e| CliError::Config(format!("override {assignment:?}: {e}")))
}

impl ExperimentConfig {
    /// Loads an optional file and applies overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            merge(&mut table, parse_override(o)?);
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !matches!(self.dimension, 1 | 2) {
            return bad(format!("dimension must be 1 or 2, got {}", self.dimension));
        }
        if !(self.cfl_ratio > 0.0 && self.cfl_ratio < 0.5) {
            return bad(format!("cfl_ratio must lie in (0, 0.5), got {}", self.cfl_ratio));
        }
        if !(self.grid.x_right > self.grid.x_left) || self.grid.n == 0 {
            return bad("grid needs x_left < x_right and n > 0".into());
        }
        if !matches!(self.data.kind.as_str(), "step" | "riemann" | "random_bv" | "from_file") {
            return bad(format!("unknown data preset {:?}", self.data.kind));
        }
        if self.data.kind == "from_file" && self.data.path.is_none() {
            return bad("data.kind = \"from_file\" needs data.path".into());
        }
        const TARGETS: [&str; 6] = ["monotone", "interval", "l1ball", "l2ball", "relative_entropy", "ball_entropy"];
        if let Some(t) = self.targets.iter().find(|t| !TARGETS.contains(&t.as_str())) {
            return bad(format!("unknown target {t:?}"));
        }
        Ok(())
    }

    /// The resolved configuration as TOML, for the run manifest.
    pub fn to_manifest(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
