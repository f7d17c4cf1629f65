//! Versioned JSON run configuration.

use std::path::Path;

use cmera::acceptance::AcceptanceConfig;
use cmera::scheme::mapping::MapperOptions;
use serde::{ Deserialize, Serialize };

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem, always tied to a field path.
#[derive(Debug, thiserror::Error)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { field: field.into(), reason: reason.into() }
    }
}

/// Named scenario: the subcommand that runs it and the criteria it covers.
pub struct Scenario {
    pub name: &'static str,
    pub command: &'static str,
    pub criteria: &'static [u8],
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario { name: "default", command: "*", criteria: &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10] },
    Scenario { name: "chern_quantization", command: "chern", criteria: &[1] },
    Scenario { name: "flow_invariance", command: "chern", criteria: &[2] },
    Scenario { name: "fixed_point", command: "flow", criteria: &[3] },
    Scenario { name: "boundary_identity", command: "flow", criteria: &[4] },
    Scenario { name: "angle_endpoints", command: "flow", criteria: &[5] },
    Scenario { name: "partial_fractions", command: "flow", criteria: &[6] },
    Scenario { name: "kernel_decay", command: "kernel", criteria: &[7] },
    Scenario { name: "selection_rule", command: "scheme", criteria: &[8] },
    Scenario { name: "pipeline", command: "scheme", criteria: &[9] },
    Scenario { name: "addressing", command: "irprep", criteria: &[10] },
];

pub fn scenario(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub chern: ChernSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub irprep: IrPrepSection,
    #[serde(default)]
    pub acceptance: AcceptanceConfig,
}

fn default_scenario() -> String {
    "default".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: default_scenario(),
            seed: AcceptanceConfig::default().seed,
            model: ModelSection::default(),
            flow: FlowSection::default(),
            chern: ChernSection::default(),
            kernel: KernelSection::default(),
            scheme: SchemeSection::default(),
            irprep: IrPrepSection::default(),
            acceptance: AcceptanceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { m: 3.0 / 16.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub u_start: f64,
    pub u_end: f64,
    pub points: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub theta: f64,
    /// Rk4 step size.
    pub step: f64,
    pub fidelity_tolerance: f64,
    pub norm_tolerance: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            u_start: -5.0,
            u_end: 0.0,
            points: 64,
            k_min: 0.01,
            k_max: 10.0,
            theta: 0.4,
            step: 1e-3,
            fidelity_tolerance: 1e-8,
            norm_tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChernSection {
    pub u_values: Vec<f64>,
    pub plaquette_grid: usize,
    /// Plaquette window half-width in units of the state's momentum scale.
    pub plaquette_extent: f64,
    pub radial_tolerance: f64,
    pub plaquette_tolerance: f64,
}

impl Default for ChernSection {
    fn default() -> Self {
        Self {
            u_values: vec![0.0, -1.0, -2.0, -3.0, -4.0],
            plaquette_grid: 256,
            plaquette_extent: 20.0,
            radial_tolerance: 1e-4,
            plaquette_tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub u_values: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    /// Fit window at `u = 0`; scaled by `e^{−u}` at other scales.
    pub fit_window: [f64; 2],
    pub fit_points: usize,
    /// Relative tolerance of the numerical transform against the Bessel form.
    pub hankel_tolerance: f64,
    /// Relative tolerance of `ξ(u) e^{u}` against its value at the first scale.
    pub scaling_tolerance: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            u_values: vec![0.0, -0.5, -1.0],
            r_min: 1.0,
            r_max: 40.0,
            r_points: 40,
            fit_window: [20.0, 40.0],
            fit_points: 21,
            hankel_tolerance: 1e-6,
            scaling_tolerance: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub k_soc: f64,
    pub mass: f64,
    pub amplitude_budget: f64,
    pub u_values: Vec<f64>,
    pub sweep_scales: Vec<f64>,
    pub sweep_k: f64,
    pub mapper: MapperOptions,
    pub reproduction_tolerance: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            k_soc: 0.3,
            mass: 1.0,
            amplitude_budget: 100.0,
            u_values: vec![0.0, -0.5],
            sweep_scales: vec![2.0, 1.0, 0.5, 0.25],
            sweep_k: 0.5,
            mapper: MapperOptions::default(),
            reproduction_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrPrepSection {
    pub n: usize,
    pub u0: f64,
    pub threshold: f64,
    pub selection_n_max: usize,
    pub fidelity_tolerance: f64,
}

impl Default for IrPrepSection {
    fn default() -> Self {
        Self { n: 32, u0: -4.0, threshold: 1e-3, selection_n_max: 8, fidelity_tolerance: 1e-4 }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 { Ok(()) } else { Err(ConfigError::new(field, format!("must be positive and finite, got {v}"))) }
}

fn scale(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && (cmera::flow::DEFAULT_U_MIN..=0.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("scale must lie in [{}, 0], got {v}", cmera::flow::DEFAULT_U_MIN)))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min { Ok(()) } else { Err(ConfigError::new(field, format!("must be at least {min}, got {v}"))) }
}

fn non_empty<T>(field: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() { Err(ConfigError::new(field, "must not be empty")) } else { Ok(()) }
}

impl RunConfig {
    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." { field_from_message(&inner.to_string()) } else { path };
            ConfigError::new(field, inner.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if scenario(&self.scenario).is_none() {
            let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
            return Err(ConfigError::new("scenario", format!("unknown scenario `{}`; known: {}", self.scenario, names.join(", "))));
        }
        positive("model.m", self.model.m)?;

        let f = &self.flow;
        scale("flow.u_start", f.u_start)?;
        scale("flow.u_end", f.u_end)?;
        at_least("flow.points", f.points, 1)?;
        positive("flow.k_min", f.k_min)?;
        positive("flow.k_max", f.k_max)?;
        if f.k_max < f.k_min {
            return Err(ConfigError::new("flow.k_max", "must not be below flow.k_min"));
        }
        if !f.theta.is_finite() {
            return Err(ConfigError::new("flow.theta", "must be finite"));
        }
        positive("flow.step", f.step)?;
        positive("flow.fidelity_tolerance", f.fidelity_tolerance)?;
        positive("flow.norm_tolerance", f.norm_tolerance)?;

        let c = &self.chern;
        non_empty("chern.u_values", &c.u_values)?;
        for (i, &u) in c.u_values.iter().enumerate() {
            scale(&format!("chern.u_values[{i}]"), u)?;
        }
        at_least("chern.plaquette_grid", c.plaquette_grid, 16)?;
        positive("chern.plaquette_extent", c.plaquette_extent)?;
        positive("chern.radial_tolerance", c.radial_tolerance)?;
        positive("chern.plaquette_tolerance", c.plaquette_tolerance)?;

        let k = &self.kernel;
        non_empty("kernel.u_values", &k.u_values)?;
        for (i, &u) in k.u_values.iter().enumerate() {
            scale(&format!("kernel.u_values[{i}]"), u)?;
        }
        positive("kernel.r_min", k.r_min)?;
        positive("kernel.r_max", k.r_max)?;
        at_least("kernel.r_points", k.r_points, 2)?;
        positive("kernel.fit_window[0]", k.fit_window[0])?;
        if !(k.fit_window[1] > k.fit_window[0]) {
            return Err(ConfigError::new("kernel.fit_window[1]", "must exceed the window start"));
        }
        at_least("kernel.fit_points", k.fit_points, 3)?;
        positive("kernel.hankel_tolerance", k.hankel_tolerance)?;
        positive("kernel.scaling_tolerance", k.scaling_tolerance)?;

        let s = &self.scheme;
        positive("scheme.k_soc", s.k_soc)?;
        positive("scheme.mass", s.mass)?;
        positive("scheme.amplitude_budget", s.amplitude_budget)?;
        non_empty("scheme.u_values", &s.u_values)?;
        for (i, &u) in s.u_values.iter().enumerate() {
            scale(&format!("scheme.u_values[{i}]"), u)?;
        }
        at_least("scheme.sweep_scales", s.sweep_scales.len(), 2)?;
        for (i, &v) in s.sweep_scales.iter().enumerate() {
            positive(&format!("scheme.sweep_scales[{i}]"), v)?;
        }
        positive("scheme.sweep_k", s.sweep_k)?;
        positive("scheme.mapper.target_margin", s.mapper.target_margin)?;
        positive("scheme.mapper.bounds.threshold", s.mapper.bounds.threshold)?;
        positive("scheme.mapper.bounds.hyperfine_splitting", s.mapper.bounds.hyperfine_splitting)?;
        positive("scheme.mapper.bounds.lattice_constant", s.mapper.bounds.lattice_constant)?;
        positive("scheme.reproduction_tolerance", s.reproduction_tolerance)?;

        let p = &self.irprep;
        at_least("irprep.n", p.n, 2)?;
        scale("irprep.u0", p.u0)?;
        if !(p.threshold > 0.0 && p.threshold < 1.0) {
            return Err(ConfigError::new("irprep.threshold", "must lie in (0, 1)"));
        }
        at_least("irprep.selection_n_max", p.selection_n_max, 2)?;
        positive("irprep.fidelity_tolerance", p.fidelity_tolerance)?;

        let a = &self.acceptance;
        at_least("acceptance.draws", a.draws, 1)?;
        at_least("acceptance.plaquette_grid", a.plaquette_grid, 16)?;
        at_least("acceptance.flow_points", a.flow_points, 1)?;
        at_least("acceptance.sweep_scales", a.sweep_scales.len(), 2)?;
        at_least("acceptance.lattice_n", a.lattice_n, 2)?;
        scale("acceptance.preparation_u0", a.preparation_u0)?;
        Ok(())
    }
}

/// Extracts the field name from messages such as "missing field `x`" that
/// carry no path of their own.
fn field_from_message(msg: &str) -> String {
    msg.split('`').nth(1).map_or_else(|| "(root)".to_string(), str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), RunConfig::default());
        assert!(RunConfig::from_json(r#"{"schema_version": 1}"#).is_ok());
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"schema_version": 1, "flow": {"points": "many"}}"#, "flow.points"),
            (r#"{"schema_version": 1, "model": {"m": -1}}"#, "model.m"),
            (r#"{"schema_version": 2}"#, "schema_version"),
            (r#"{}"#, "schema_version"),
            (r#"{"schema_version": 1, "kernel": {"bogus": 1}}"#, "kernel.bogus"),
            (r#"{"schema_version": 1, "scenario": "nope"}"#, "scenario"),
            (r#"{"schema_version": 1, "chern": {"u_values": [0, 3]}}"#, "chern.u_values[1]"),
        ];
        for (text, field) in cases {
            let err = RunConfig::from_json(text).unwrap_err();
            assert_eq!(err.field, field, "{text}: {err}");
        }
    }
}
