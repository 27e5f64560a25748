//! JSON run configuration with named presets.
//!
//! A config may name a `"preset"`; its keys are then deep-merged over the
//! preset's values, so `{"preset": "kite-offset", "measurement": {"noise": 0.01}}`
//! changes only the noise level.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::forward::{is_nonconstant, INVERSION_NODES, SYNTHESIS_NODES};
use crate::geometry::{Curve2D, CurveSpec, SceneGeometry, DEFAULT_QUAD_ORDERS};
use crate::probes::{build_basis, BasisConfig};
use crate::reconstruction::SweepConfig;

/// Environment variable overriding `measurement.seed`.
pub const SEED_ENV: &str = "NRT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub outer: CurveSpec,
    /// Ground truth; read only by synthesis and metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
}

/// Boundary data `f(t) = Σ cos[m]·cos(mt) + sin[m]·sin(mt)` in the curve
/// parameter, or a named preset (`"cos"`, `"sin"`, `"cos+sin"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryData {
    Named(String),
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl BoundaryData {
    pub fn coefficients(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            BoundaryData::Named(name) => match name.as_str() {
                "cos" => Ok((vec![0.0, 1.0], vec![])),
                "sin" => Ok((vec![], vec![0.0, 1.0])),
                "cos+sin" => Ok((vec![0.0, 1.0], vec![0.0, 1.0])),
                other => Err(Error::Invalid(format!("unknown boundary data preset {other:?} (expected cos, sin or cos+sin)"))),
            },
            BoundaryData::Fourier { cos, sin } => Ok((cos.clone(), sin.clone())),
        }
    }

    /// Samples at curve parameters `ts`.
    pub fn sample(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = self.coefficients()?;
        Ok(ts
            .iter()
            .map(|&t| {
                let ca: f64 = a.iter().enumerate().map(|(m, c)| c * (m as f64 * t).cos()).sum();
                let sb: f64 = b.iter().enumerate().map(|(m, c)| c * (m as f64 * t).sin()).sum();
                ca + sb
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub f: BoundaryData,
    #[serde(default = "default_synthesis_nodes")]
    pub synthesis_nodes: usize,
    #[serde(default = "default_inversion_nodes")]
    pub inversion_nodes: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_synthesis_nodes() -> usize {
    SYNTHESIS_NODES
}

fn default_inversion_nodes() -> usize {
    INVERSION_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub nx: usize,
    pub ny: usize,
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default = "default_quad_radial")]
    pub quad_radial: usize,
    #[serde(default = "default_quad_angular")]
    pub quad_angular: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
}

fn default_quad_radial() -> usize {
    DEFAULT_QUAD_ORDERS.0
}

fn default_quad_angular() -> usize {
    DEFAULT_QUAD_ORDERS.1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cauchy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicators: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub scene: SceneConfig,
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    pub sweep: SweepBlock,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Preset names accepted by `"preset"`.
pub const PRESETS: [&str; 3] = ["concentric", "concentric-small", "kite-offset"];

pub fn preset(name: &str) -> Option<Value> {
    let circle = |r: f64, n: usize| json!({"kind": "circle", "params": {"radius": r}, "nodes": n});
    let basis = json!({"max_poly_degree": 12, "n_sources": 16, "r_ext_factor": 1.5, "dipoles": true});
    match name {
        // unit disk with a concentric disk cavity of radius 0.5
        "concentric" => Some(json!({
            "scene": {"outer": circle(1.0, 512), "cavity": circle(0.5, 512)},
            "measurement": {"f": "cos", "synthesis_nodes": 512, "inversion_nodes": 256, "noise": 0.0, "seed": 0},
            "basis": basis,
            "sweep": {"nx": 16, "ny": 16, "radii": [0.55, 0.7]}
        })),
        // small concentric cavity leaving room for disjoint test disks
        "concentric-small" => Some(json!({
            "scene": {"outer": circle(1.0, 512), "cavity": circle(0.2, 512)},
            "measurement": {"f": "cos", "synthesis_nodes": 512, "inversion_nodes": 256, "noise": 0.0, "seed": 0},
            "basis": basis,
            "sweep": {"nx": 16, "ny": 16, "radii": [0.3]}
        })),
        "kite-offset" => Some(json!({
            "scene": {
                "outer": circle(1.0, 512),
                "cavity": {"kind": "kite", "params": {"scale": 0.2, "center": [0.1, 0.1]}, "nodes": 256}
            },
            "measurement": {"f": "cos", "synthesis_nodes": 512, "inversion_nodes": 256, "noise": 0.0, "seed": 0},
            "basis": basis,
            "sweep": {"nx": 16, "ny": 16, "radii": [0.3, 0.4, 0.5]}
        })),
        _ => None,
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn keyed<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Invalid(m) => Error::Invalid(format!("{key}: {m}")),
        other => Error::Invalid(format!("{key}: {other}")),
    })
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        let value = match value.get("preset").and_then(Value::as_str) {
            Some(name) => {
                let mut base = preset(name).ok_or_else(|| {
                    Error::Invalid(format!("preset: unknown preset {name:?} (expected one of {PRESETS:?})"))
                })?;
                merge(&mut base, value);
                base
            }
            None => value,
        };
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.measurement.seed = seed
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("{SEED_ENV}: expected an unsigned integer, got {seed:?}")))?;
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// ∂Ω at `nodes` nodes.
    pub fn outer(&self, nodes: usize) -> Result<Curve2D> {
        keyed("scene.outer", CurveSpec { nodes, ..self.scene.outer.clone() }.build())
    }

    /// ∂Ω at the inversion node count.
    pub fn inversion_outer(&self) -> Result<Curve2D> {
        self.outer(self.measurement.inversion_nodes)
    }

    /// ∂D as configured (ground truth).
    pub fn cavity(&self) -> Result<Curve2D> {
        let spec = self
            .scene
            .cavity
            .as_ref()
            .ok_or_else(|| Error::Invalid("scene.cavity: required for synthesis and metrics".into()))?;
        keyed("scene.cavity", spec.build())
    }

    /// Scene at synthesis resolution (outer at `synthesis_nodes`).
    pub fn synthesis_scene(&self) -> Result<SceneGeometry> {
        let outer = self.outer(self.measurement.synthesis_nodes)?;
        keyed("scene", SceneGeometry::new(outer, self.cavity()?, self.scene.clearance))
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let s = &self.sweep;
        SweepConfig {
            nx: s.nx,
            ny: s.ny,
            radii: s.radii.clone(),
            basis: self.basis.clone(),
            truncation: s.truncation,
            quad_radial: s.quad_radial,
            quad_angular: s.quad_angular,
            clearance: s.clearance.or(self.scene.clearance),
        }
    }

    /// Checks the measurement and inversion blocks (everything except the
    /// cavity).
    pub fn validate_inversion(&self) -> Result<()> {
        let m = &self.measurement;
        for (key, n) in [("measurement.synthesis_nodes", m.synthesis_nodes), ("measurement.inversion_nodes", m.inversion_nodes)] {
            if n < 16 || n % 2 != 0 {
                return Err(Error::Invalid(format!("{key}: must be even and ≥ 16, got {n}")));
            }
        }
        if !(m.noise >= 0.0 && m.noise.is_finite()) {
            return Err(Error::Invalid(format!("measurement.noise: must be ≥ 0, got {}", m.noise)));
        }
        let outer = self.inversion_outer()?;
        keyed("measurement.f", m.f.coefficients().map(|_| ()))?;
        keyed("basis", build_basis(&self.basis, &outer).map(|_| ()))?;
        let sweep = self.sweep_config();
        keyed("sweep", sweep.validate())?;
        if sweep.domains(&outer).map(|d| d.is_empty()).unwrap_or(true) {
            return Err(Error::Invalid("sweep: no disk of the family fits inside the domain".into()));
        }
        Ok(())
    }

    /// Full validation before synthesis.
    pub fn validate(&self) -> Result<()> {
        self.validate_inversion()?;
        let scene = self.synthesis_scene()?;
        let f = keyed("measurement.f", self.measurement.f.sample(scene.outer.params()))?;
        if !is_nonconstant(&f) {
            return Err(Error::Invalid(
                "measurement.f: boundary data must be a non-constant function (a constant f produces no response)".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let cfg = RunConfig::from_value(json!({"preset": name})).unwrap();
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn override_merges_into_preset() {
        let cfg = RunConfig::from_value(json!({"preset": "kite-offset", "measurement": {"noise": 0.01}})).unwrap();
        assert_eq!(cfg.measurement.noise, 0.01);
        assert_eq!(cfg.measurement.synthesis_nodes, 512);
        assert_eq!(cfg.sweep.radii, vec![0.3, 0.4, 0.5]);
    }

    #[test]
    fn constant_f_names_key() {
        let cfg = RunConfig::from_value(json!({"preset": "concentric", "measurement": {"f": {"cos": [1.0]}}})).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("measurement.f") && err.contains("non-constant"), "{err}");
    }

    #[test]
    fn bad_keys_are_named() {
        let err = RunConfig::from_value(json!({"preset": "concentric", "sweep": {"radii": [0.5, 0.4]}}))
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("invalid input: sweep"), "{err}");
        let err = RunConfig::from_value(json!({"preset": "nope"})).unwrap_err().to_string();
        assert!(err.contains("preset"));
        let err = RunConfig::from_value(json!({"preset": "concentric", "scene": {"outer": {"params": {"radius": -1.0}}}}))
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("scene.outer"), "{err}");
    }

    #[test]
    fn boundary_data_samples() {
        let f = BoundaryData::Fourier { cos: vec![0.5, 0.0, 2.0], sin: vec![0.0, 1.0] };
        let v = f.sample(&[0.3]).unwrap();
        assert!((v[0] - (0.5 + 2.0 * 0.6f64.cos() + 0.3f64.sin())).abs() < 1e-15);
        assert!(BoundaryData::Named("square".into()).coefficients().is_err());
    }
}
