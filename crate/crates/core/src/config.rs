//! Run configuration: a TOML document selecting one experiment and its
//! inputs. Unknown keys are rejected; defaults are filled on parse so that
//! [`RunConfig::emit`] echoes the complete effective configuration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cocycle::{LyapunovParams, MIN_STEPS};
use crate::dynamics::{Transformation, GOLDEN_MEAN};
use crate::error::{Error, Result};
use crate::measure::{GridSpec, Threshold};
use crate::potentials::SamplingFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LyapunovScan,
    MFunction,
    Measure,
    CouplingSweep,
    Approximation,
    ScWeight,
    HarmonicCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::LyapunovScan,
        ExperimentKind::MFunction,
        ExperimentKind::Measure,
        ExperimentKind::CouplingSweep,
        ExperimentKind::Approximation,
        ExperimentKind::ScWeight,
        ExperimentKind::HarmonicCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LyapunovScan => "lyapunov-scan",
            ExperimentKind::MFunction => "m-function",
            ExperimentKind::Measure => "measure",
            ExperimentKind::CouplingSweep => "coupling-sweep",
            ExperimentKind::Approximation => "approximation",
            ExperimentKind::ScWeight => "sc-weight",
            ExperimentKind::HarmonicCheck => "harmonic-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `delta_gamma = "auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaGamma {
    Fixed(f64),
    Named(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl Default for DeltaGamma {
    fn default() -> Self {
        DeltaGamma::Named(AutoKeyword::Auto)
    }
}

impl DeltaGamma {
    pub fn threshold(self) -> Threshold {
        match self {
            DeltaGamma::Fixed(d) => Threshold::Fixed(d),
            DeltaGamma::Named(AutoKeyword::Auto) => Threshold::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

fn default_dir() -> String {
    ".".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_dir(), prefix: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformationSpec {
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
}

fn default_alpha() -> Vec<f64> {
    vec![GOLDEN_MEAN]
}

impl Default for TransformationSpec {
    fn default() -> Self {
        TransformationSpec { alpha: default_alpha() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_orbits")]
    pub orbits: usize,
}

fn default_steps() -> usize {
    100_000
}

fn default_orbits() -> usize {
    8
}

impl Default for LyapunovSpec {
    fn default() -> Self {
        LyapunovSpec { steps: default_steps(), orbits: default_orbits() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Extension beyond `[−(2+C), 2+C]` on each side.
    #[serde(default)]
    pub margin: f64,
}

fn default_cells() -> usize {
    400
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { cells: default_cells(), margin: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub e_min: f64,
    pub e_max: f64,
    pub count: usize,
    /// Imaginary part shared by all scanned energies.
    #[serde(default)]
    pub imag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MFunctionSpec {
    /// `[re, im]`.
    pub energy: [f64; 2],
    #[serde(default = "default_omegas")]
    pub omegas: Vec<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_omegas() -> Vec<f64> {
    vec![0.0]
}

fn default_max_iter() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub lambda_max: f64,
    pub lambda_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximationSpec {
    /// Number of step-function arcs; required unless the function is
    /// already a step function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub schedule: Vec<u32>,
    /// Defaults to the smallest legal value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<u32>,
    #[serde(default = "default_l1_resolution")]
    pub l1_resolution: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_l1_resolution() -> usize {
    100_000
}

fn default_horizon() -> usize {
    crate::measure::DEFAULT_NONPERIODIC_HORIZON
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScWeightSpec {
    /// Sup bound `C`; defaults to the configured function's bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default = "default_weight_count")]
    pub count: usize,
}

fn default_weight_count() -> usize {
    201
}

impl Default for ScWeightSpec {
    fn default() -> Self {
        ScWeightSpec { bound: None, count: default_weight_count() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    /// `[re, im]`.
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_points() -> usize {
    64
}

fn default_samples() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default)]
    pub delta_gamma: DeltaGamma,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub transformation: TransformationSpec,
    #[serde(default)]
    pub lyapunov: LyapunovSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<SamplingFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_function: Option<MFunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approximation: Option<ApproximationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_weight: Option<ScWeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<HarmonicSpec>,
}

/// Parses and validates a configuration, filling every default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(&e))?;
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

fn toml_error(e: &toml::de::Error) -> Error {
    let message = e.message().to_string();
    let field = if let Some(rest) = message.strip_prefix("unknown field `") {
        rest.split('`').next().unwrap_or_default().to_string()
    } else if let Some(rest) = message.strip_prefix("missing field `") {
        rest.split('`').next().unwrap_or_default().to_string()
    } else {
        String::new()
    };
    let message = match e.span() {
        Some(span) => format!("{message} (at bytes {}..{})", span.start, span.end),
        None => message,
    };
    Error::Config { field, message }
}

fn require<T>(field: &str, value: &Option<T>) -> Result<()> {
    if value.is_none() {
        return Err(Error::config(field, "required for this experiment"));
    }
    Ok(())
}

impl RunConfig {
    fn fill_defaults(&mut self) {
        if self.output.prefix.is_none() {
            self.output.prefix = Some(self.experiment.name().to_string());
        }
        if self.experiment == ExperimentKind::ScWeight && self.sc_weight.is_none() {
            self.sc_weight = Some(ScWeightSpec::default());
        }
    }

    /// Checks the fields the selected experiment needs, naming the first
    /// offending field.
    pub fn validate(&self) -> Result<()> {
        Transformation::new(self.transformation.alpha.clone())
            .map_err(|e| Error::config("transformation.alpha", e.to_string()))?;
        if self.lyapunov.steps < MIN_STEPS {
            return Err(Error::config("lyapunov.steps", format!("must be >= {MIN_STEPS}")));
        }
        if self.lyapunov.orbits < 2 {
            return Err(Error::config("lyapunov.orbits", "must be >= 2"));
        }
        if self.grid.cells == 0 {
            return Err(Error::config("grid.cells", "must be >= 1"));
        }
        if !(self.grid.margin >= 0.0 && self.grid.margin <= crate::measure::MAX_GRID_MARGIN) {
            return Err(Error::config(
                "grid.margin",
                format!("must lie in [0, {}]", crate::measure::MAX_GRID_MARGIN),
            ));
        }
        if let DeltaGamma::Fixed(d) = self.delta_gamma {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config("delta_gamma", "must be a positive number or \"auto\""));
            }
        }
        if let Some(f) = &self.function {
            f.validate().map_err(|e| Error::config("function", e.to_string()))?;
            if f.dims() != self.transformation.alpha.len() {
                return Err(Error::config(
                    "function",
                    format!(
                        "function has {} dimensions, transformation has {}",
                        f.dims(),
                        self.transformation.alpha.len()
                    ),
                ));
            }
        }
        match self.experiment {
            ExperimentKind::LyapunovScan => {
                require("function", &self.function)?;
                require("scan", &self.scan)?;
                let s = self.scan.as_ref().expect("checked");
                if !(s.e_min <= s.e_max) {
                    return Err(Error::config("scan.e_max", "must be >= scan.e_min"));
                }
                if s.count == 0 {
                    return Err(Error::config("scan.count", "must be >= 1"));
                }
                if s.count > 1 && s.e_min == s.e_max {
                    return Err(Error::config("scan.count", "must be 1 when e_min == e_max"));
                }
            }
            ExperimentKind::MFunction => {
                require("function", &self.function)?;
                require("m_function", &self.m_function)?;
                let m = self.m_function.as_ref().expect("checked");
                if !(m.energy[1] >= crate::halfplane::M_FUNCTION_MIN_IM) {
                    return Err(Error::config(
                        "m_function.energy",
                        format!("imaginary part must be >= {}", crate::halfplane::M_FUNCTION_MIN_IM),
                    ));
                }
                if m.omegas.is_empty() {
                    return Err(Error::config("m_function.omegas", "must not be empty"));
                }
                if m.max_iter == 0 {
                    return Err(Error::config("m_function.max_iter", "must be >= 1"));
                }
                if !(m.tol > 0.0) {
                    return Err(Error::config("m_function.tol", "must be > 0"));
                }
            }
            ExperimentKind::Measure => require("function", &self.function)?,
            ExperimentKind::CouplingSweep => {
                require("function", &self.function)?;
                require("coupling", &self.coupling)?;
                let c = self.coupling.as_ref().expect("checked");
                if !(c.lambda_max > 0.0 && c.lambda_max.is_finite()) {
                    return Err(Error::config("coupling.lambda_max", "must be > 0"));
                }
                if c.lambda_count < 2 {
                    return Err(Error::config("coupling.lambda_count", "must be >= 2"));
                }
            }
            ExperimentKind::Approximation => {
                require("function", &self.function)?;
                require("approximation", &self.approximation)?;
                let a = self.approximation.as_ref().expect("checked");
                let f = self.function.as_ref().expect("checked");
                if a.schedule.is_empty() || a.schedule.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::config("approximation.schedule", "must be non-empty and increasing"));
                }
                match f {
                    SamplingFunction::Step(_) => {}
                    _ if f.is_continuous() => {
                        if a.k.is_none() {
                            return Err(Error::config("approximation.k", "required for a continuous function"));
                        }
                    }
                    _ => {
                        return Err(Error::config(
                            "function",
                            "approximation needs a continuous or step function",
                        ))
                    }
                }
                if a.l1_resolution < 100 {
                    return Err(Error::config("approximation.l1_resolution", "must be >= 100"));
                }
                if a.horizon < 2 {
                    return Err(Error::config("approximation.horizon", "must be >= 2"));
                }
            }
            ExperimentKind::ScWeight => {
                let s = self.sc_weight.as_ref();
                if s.and_then(|s| s.bound).is_none() {
                    require("function", &self.function)?;
                }
                if let Some(b) = s.and_then(|s| s.bound) {
                    if !(b >= 0.0 && b.is_finite()) {
                        return Err(Error::config("sc_weight.bound", "must be >= 0"));
                    }
                }
                if s.map_or(0, |s| s.count) < 2 {
                    return Err(Error::config("sc_weight.count", "must be >= 2"));
                }
            }
            ExperimentKind::HarmonicCheck => {
                require("function", &self.function)?;
                require("harmonic", &self.harmonic)?;
                let h = self.harmonic.as_ref().expect("checked");
                if !(h.radius > 0.0) {
                    return Err(Error::config("harmonic.radius", "must be > 0"));
                }
                if h.center[1] - h.radius < crate::halfplane::HALFPLANE_FLOOR {
                    return Err(Error::config(
                        "harmonic.radius",
                        format!("disk must stay in Im z >= {}", crate::halfplane::HALFPLANE_FLOOR),
                    ));
                }
                if h.points < 3 {
                    return Err(Error::config("harmonic.points", "must be >= 3"));
                }
                if h.samples < 2 {
                    return Err(Error::config("harmonic.samples", "must be >= 2"));
                }
            }
        }
        Ok(())
    }

    /// TOML text that parses back to an equal configuration.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn transformation(&self) -> Result<Transformation> {
        Transformation::new(self.transformation.alpha.clone())
    }

    pub fn lyapunov_params(&self) -> LyapunovParams {
        LyapunovParams::new(self.lyapunov.steps, self.lyapunov.orbits, self.seed)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { cells: self.grid.cells, margin: self.grid.margin }
    }

    pub fn prefix(&self) -> &str {
        self.output.prefix.as_deref().unwrap_or(self.experiment.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_SCAN: &str = r#"
experiment = "lyapunov-scan"

[function]
variant = "trig"
constant = 0.0

[scan]
e_min = -3.0
e_max = 3.0
count = 61
"#;

    #[test]
    fn minimal_scan_fills_defaults() {
        let cfg = parse_config(MINIMAL_SCAN).unwrap();
        assert_eq!(cfg.lyapunov.steps, 100_000);
        assert_eq!(cfg.lyapunov.orbits, 8);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.transformation.alpha, vec![GOLDEN_MEAN]);
        assert_eq!(cfg.prefix(), "lyapunov-scan");
        assert_eq!(cfg.delta_gamma, DeltaGamma::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("lyapnov_N = 5\n{MINIMAL_SCAN}");
        match parse_config(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "lyapnov_N"),
            other => panic!("unexpected {other:?}"),
        }
        let nested = MINIMAL_SCAN.replace("count = 61", "count = 61\ncuont = 2");
        match parse_config(&nested) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "cuont"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn emit_round_trips() {
        let cfg = parse_config(MINIMAL_SCAN).unwrap();
        let again = parse_config(&cfg.emit()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.emit(), cfg.emit());
    }

    #[test]
    fn missing_section_is_named() {
        let text = "experiment = \"coupling-sweep\"\n[function]\nvariant = \"trig\"\nconstant = 0.0\n";
        match parse_config(text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "coupling"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_values_are_named() {
        let bad_steps = format!("{MINIMAL_SCAN}\n[lyapunov]\nsteps = 10\n");
        match parse_config(&bad_steps) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "lyapunov.steps"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_delta = format!("delta_gamma = -1.0\n{MINIMAL_SCAN}");
        match parse_config(&bad_delta) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "delta_gamma"),
            other => panic!("unexpected {other:?}"),
        }
        let rational = format!("{MINIMAL_SCAN}\n[transformation]\nalpha = [0.5]\n");
        match parse_config(&rational) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "transformation.alpha"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn delta_gamma_forms() {
        let fixed = parse_config(&format!("delta_gamma = 0.05\n{MINIMAL_SCAN}")).unwrap();
        assert_eq!(fixed.delta_gamma.threshold(), Threshold::Fixed(0.05));
        let auto = parse_config(&format!("delta_gamma = \"auto\"\n{MINIMAL_SCAN}")).unwrap();
        assert_eq!(auto.delta_gamma.threshold(), Threshold::Auto);
        assert!(parse_config(&format!("delta_gamma = \"sometimes\"\n{MINIMAL_SCAN}")).is_err());
    }

    #[test]
    fn nested_functions_round_trip() {
        let text = r#"
experiment = "approximation"
delta_gamma = 0.05

[function]
variant = "scaled"
factor = 2.0

[function.inner]
variant = "trig"
cos = [[1.0]]

[approximation]
k = 64
schedule = [16, 64, 256, 1024]
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
        let step = r#"
experiment = "approximation"

[function]
variant = "step"
breakpoints = [0.0, 0.5]
values = [0.0, 1.5]

[approximation]
schedule = [16, 64]
"#;
        let cfg = parse_config(step).unwrap();
        assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
        let no_k = text.replace("k = 64\n", "");
        match parse_config(&no_k) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "approximation.k"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
