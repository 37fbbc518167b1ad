//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "two_bar_monotone",
//!   "mesh": { "lx": 1.0, "ly": 1.0, "nx": 1, "ny": 2 },
//!   "law": { "kind": "capped_linear", "kappa": 0.5, "scale": 1.0 },
//!   "load": { "breakpoints": [[0.0, 0.0], [2.0, 2.0]] },
//!   "time": { "T": 2.0, "steps": 2000 },
//!   "initial": { "V0": 0.0, "z0": 0.0 },
//!   "solver": { "tol": 1e-10, "max_sweeps": 10000 },
//!   "output": { "dir": "out/two_bar_monotone" }
//! }
//! ```
//!
//! Unknown keys are rejected. Validation errors name the offending key.

use std::path::{Path, PathBuf};

use cohesive_core::law::{CohesiveLaw, LawField, LawKind};
use cohesive_core::{DomainSpec, InitialState, LoadProgram, StepOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mesh: MeshConfig,
    pub law: LawConfig,
    pub load: LoadConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKindConfig {
    CappedLinear,
    Exponential,
}

impl From<LawKindConfig> for LawKind {
    fn from(k: LawKindConfig) -> Self {
        match k {
            LawKindConfig::CappedLinear => LawKind::CappedLinear,
            LawKindConfig::Exponential => LawKind::Exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub kind: LawKindConfig,
    pub kappa: f64,
    /// `θ` for the capped-linear law, `δ` for the exponential one.
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<LawOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawOverride {
    pub node: usize,
    #[serde(default)]
    pub kind: Option<LawKindConfig>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangle_wave: Option<TriangleWave>,
}

/// `0 → A → 0 → −A → 0` repeated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleWave {
    pub amplitude: f64,
    pub period: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeValues {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Default for NodeValues {
    fn default() -> Self {
        NodeValues::Uniform(0.0)
    }
}

impl NodeValues {
    fn expand(&self, m: usize, key: &str) -> Result<Vec<f64>, CliError> {
        match self {
            NodeValues::Uniform(x) => Ok(vec![*x; m]),
            NodeValues::PerNode(v) if v.len() == m => Ok(v.clone()),
            NodeValues::PerNode(v) => Err(CliError::config(
                key,
                format!("expected {m} values, got {}", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(rename = "V0", default)]
    pub v0: NodeValues,
    #[serde(default)]
    pub z0: NodeValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_tol() -> f64 {
    StepOptions::default().tol
}

fn default_max_sweeps() -> usize {
    StepOptions::default().max_sweeps
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_sweeps: default_max_sweeps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub domain: DomainSpec,
    pub laws: LawField,
    pub load: LoadProgram,
    pub initial: InitialState,
    pub opts: StepOptions,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config {
            key: None,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn load_program(&self) -> Result<LoadProgram, CliError> {
        match (&self.load.breakpoints, &self.load.triangle_wave) {
            (Some(points), None) => LoadProgram::new(points.iter().map(|p| (p[0], p[1])).collect())
                .map_err(|e| CliError::config("load.breakpoints", e.to_string())),
            (None, Some(w)) => LoadProgram::triangle_wave(w.amplitude, w.period, w.cycles)
                .map_err(|e| CliError::config("load.triangle_wave", e.to_string())),
            _ => Err(CliError::config(
                "load",
                "exactly one of `breakpoints` or `triangle_wave` is required",
            )),
        }
    }

    /// Schema-level checks and construction of the core inputs.
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        let m = &self.mesh;
        for (key, v) in [("mesh.lx", m.lx), ("mesh.ly", m.ly)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(
                    key,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if m.nx == 0 {
            return Err(CliError::config("mesh.nx", "must be at least 1"));
        }
        if m.ny < 2 || !m.ny.is_multiple_of(2) {
            return Err(CliError::config(
                "mesh.ny",
                format!("must be even and at least 2, got {}", m.ny),
            ));
        }
        let domain = DomainSpec::new(m.lx, m.ly, m.nx, m.ny)
            .map_err(|e| CliError::config("mesh", e.to_string()))?;
        let nodes = domain.interface_nodes();

        let base = self.law_for(self.law.kind, self.law.kappa, self.law.scale, "law")?;
        let mut laws = vec![base; nodes];
        for (i, o) in self.law.overrides.iter().enumerate() {
            let key = format!("law.overrides[{i}]");
            if o.node >= nodes {
                return Err(CliError::config(
                    &format!("{key}.node"),
                    format!("node {} outside 0..{nodes}", o.node),
                ));
            }
            laws[o.node] = self.law_for(
                o.kind.unwrap_or(self.law.kind),
                o.kappa.unwrap_or(self.law.kappa),
                o.scale.unwrap_or(self.law.scale),
                &key,
            )?;
        }
        let laws =
            LawField::from_nodes(laws).map_err(|e| CliError::config("law", e.to_string()))?;

        let load = self.load_program()?;
        let t = self.time;
        if !(t.horizon > 0.0) {
            return Err(CliError::config(
                "time.T",
                format!("must be positive, got {}", t.horizon),
            ));
        }
        if (load.horizon() - t.horizon).abs() > 1e-12 * t.horizon {
            return Err(CliError::config(
                "time.T",
                format!(
                    "load program ends at {}, expected {}",
                    load.horizon(),
                    t.horizon
                ),
            ));
        }
        if t.steps == 0 {
            return Err(CliError::config("time.steps", "must be at least 1"));
        }

        let z0 = self.initial.z0.expand(nodes, "initial.z0")?;
        let v0 = self.initial.v0.expand(nodes, "initial.V0")?;
        if let Some(e) = v0.iter().position(|v| !(*v >= 0.0)) {
            return Err(CliError::config(
                "initial.V0",
                format!("node {e} is negative"),
            ));
        }
        let initial =
            InitialState::new(z0, v0).map_err(|e| CliError::config("initial", e.to_string()))?;

        let s = self.solver;
        if !(s.tol > 0.0) {
            return Err(CliError::config(
                "solver.tol",
                format!("must be positive, got {}", s.tol),
            ));
        }
        if s.max_sweeps == 0 {
            return Err(CliError::config("solver.max_sweeps", "must be at least 1"));
        }
        Ok(Prepared {
            scenario: self.clone(),
            domain,
            laws,
            load,
            initial,
            opts: StepOptions {
                tol: s.tol,
                max_sweeps: s.max_sweeps,
            },
        })
    }

    fn law_for(
        &self,
        kind: LawKindConfig,
        kappa: f64,
        scale: f64,
        key: &str,
    ) -> Result<CohesiveLaw, CliError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(CliError::config(
                &format!("{key}.kappa"),
                format!("must be positive and finite, got {kappa}"),
            ));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CliError::config(
                &format!("{key}.scale"),
                format!("must be positive and finite, got {scale}"),
            ));
        }
        CohesiveLaw::new(kind.into(), kappa, scale)
            .map_err(|e| CliError::config(key, e.to_string()))
    }

    /// Output directory: `COHESIVE_OUT` if set, else `output.dir`, else
    /// `out/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = std::env::var_os("COHESIVE_OUT") {
            return PathBuf::from(dir);
        }
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name))
    }

    /// Same scenario with a different step count.
    pub fn with_steps(&self, steps: usize) -> Self {
        let mut s = self.clone();
        s.time.steps = steps;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "mesh": { "lx": 1.0, "ly": 1.0, "nx": 1, "ny": 2 },
        "law": { "kind": "capped_linear", "kappa": 0.5, "scale": 1.0 },
        "load": { "breakpoints": [[0.0, 0.0], [2.0, 2.0]] },
        "time": { "T": 2.0, "steps": 20 }
    }"#;

    fn with(key: &str, value: serde_json::Value) -> String {
        let mut doc: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let mut cur = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for p in &parts[..parts.len() - 1] {
            cur = cur.get_mut(*p).unwrap();
        }
        cur[parts[parts.len() - 1]] = value;
        doc.to_string()
    }

    #[test]
    fn minimal_scenario_prepares() {
        let p = Scenario::from_json(MINIMAL).unwrap().prepare().unwrap();
        assert_eq!(p.laws.len(), 2);
        assert_eq!(p.initial, InitialState::zero(2));
        assert_eq!(p.opts, StepOptions::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::from_json(&with("law.kapa", 0.5.into())).unwrap_err();
        assert!(err.to_string().contains("kapa"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn validation_names_the_key() {
        let err = Scenario::from_json(&with("law.kappa", (-1.0).into()))
            .unwrap()
            .prepare()
            .unwrap_err();
        assert!(err.to_string().contains("law.kappa"), "{err}");
        let err = Scenario::from_json(&with("time.T", 3.0.into()))
            .unwrap()
            .prepare()
            .unwrap_err();
        assert!(err.to_string().contains("time.T"), "{err}");
        let err = Scenario::from_json(&with("mesh.ny", 3.into()))
            .unwrap()
            .prepare()
            .unwrap_err();
        assert!(err.to_string().contains("mesh.ny"), "{err}");
        let err = Scenario::from_json(&with("initial", serde_json::json!({"V0": [0.0, 0.0, 0.0]})))
            .unwrap()
            .prepare()
            .unwrap_err();
        assert!(err.to_string().contains("initial.V0"), "{err}");
    }

    #[test]
    fn overrides_apply_per_node() {
        let doc = with(
            "law.overrides",
            serde_json::json!([{ "node": 1, "kind": "exponential", "scale": 2.0 }]),
        );
        let p = Scenario::from_json(&doc).unwrap().prepare().unwrap();
        assert_eq!(p.laws[0].kind, LawKind::CappedLinear);
        assert_eq!(p.laws[1].kind, LawKind::Exponential);
        assert_eq!(p.laws[1].scale, 2.0);
        assert_eq!(p.laws[1].kappa, 0.5);
        let bad = with("law.overrides", serde_json::json!([{ "node": 7 }]));
        assert!(Scenario::from_json(&bad)
            .unwrap()
            .prepare()
            .unwrap_err()
            .to_string()
            .contains("law.overrides[0].node"));
    }

    #[test]
    fn load_needs_exactly_one_form() {
        let both = with(
            "load.triangle_wave",
            serde_json::json!({"amplitude": 0.3, "period": 1.0, "cycles": 2}),
        );
        assert!(Scenario::from_json(&both).unwrap().prepare().is_err());
    }
}
