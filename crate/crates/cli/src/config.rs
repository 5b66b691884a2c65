//! Scenario configuration files.
//!
//! A config is a TOML document with a few top-level keys and the tables
//! `[integrator]`, `[model]`, `[noise]` (optional) and `[analysis]`
//! (optional). The shape of `[model]` depends on `scenario`. Unknown keys
//! are rejected everywhere.

use std::path::PathBuf;

use nlse_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCENARIOS: [&str; 6] = [
    "one_spin_fixed_point",
    "thermalization",
    "disentangle",
    "butterfly",
    "driven_lc",
    "custom",
];

/// A complex amplitude written as `[re, im]`.
pub type Amp = [f64; 2];

fn c64(a: &Amp) -> C64 {
    C64::new(a[0], a[1])
}

pub fn amplitudes<const N: usize>(amps: &[Amp], key: &str) -> Result<[C64; N], CliError> {
    if amps.len() != N {
        return Err(CliError::config(format!("`{key}` needs {N} amplitudes, got {}", amps.len())));
    }
    Ok(std::array::from_fn(|i| c64(&amps[i])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default = "default_guard_eps")]
    pub guard_eps: f64,
}

fn default_true() -> bool {
    true
}

fn default_guard_eps() -> f64 {
    nlse_core::DEFAULT_GUARD_EPS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCoupling {
    Both,
    Spin1,
    Spin2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub omega_s_sq: f64,
    pub tau_s: f64,
    /// Two-spin runs only; defaults to both spins.
    #[serde(default)]
    pub coupling: Option<NoiseCoupling>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Leading fraction of the samples excluded from time averages and the
    /// limit-cycle test.
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
    #[serde(default = "default_floor")]
    pub amplitude_floor: f64,
    #[serde(default = "default_amp_tol")]
    pub amplitude_tolerance: f64,
}

fn default_transient() -> f64 {
    0.5
}

fn default_floor() -> f64 {
    0.05
}

fn default_amp_tol() -> f64 {
    0.2
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            transient_fraction: default_transient(),
            amplitude_floor: default_floor(),
            amplitude_tolerance: default_amp_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneSpinModel {
    pub omega: [f64; 3],
    pub s_hat: [f64; 3],
    pub gamma_d: f64,
    /// Initial Bloch vector (unit length).
    #[serde(default = "default_initial_k")]
    pub initial: [f64; 3],
}

fn default_initial_k() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalModel {
    pub omega_0: f64,
    pub gamma_d: f64,
    #[serde(default = "default_z")]
    pub s_hat: [f64; 3],
    #[serde(default = "default_initial_thermal")]
    pub initial: [f64; 3],
}

fn default_z() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_initial_thermal() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisentangleModel {
    pub gamma_d: f64,
    /// Draw a random start with this `|ad − bc|`.
    #[serde(default)]
    pub entanglement: Option<f64>,
    /// Explicit start `[[re, im]; 4]`.
    #[serde(default)]
    pub initial: Option<Vec<Amp>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseState {
    Singlet,
    Triplet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ButterflyModel {
    pub gamma_d: f64,
    pub epsilon: f64,
    pub base: BaseState,
    pub psi_p: Vec<Amp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenModel {
    pub omega_a: f64,
    pub omega_1: f64,
    pub delta: f64,
    pub g: f64,
    pub gamma_d: f64,
    /// Size of the perturbation added to `|−−⟩`.
    pub epsilon: f64,
    #[serde(default = "default_perturbation")]
    pub perturbation: Vec<Amp>,
}

fn default_perturbation() -> Vec<Amp> {
    vec![[0.5, 0.0]; 4]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    /// `"spin_flip"`
    Rule(String),
    Fixed(Vec<Amp>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub dimension: usize,
    /// Rows of `[re, im]` entries; must be Hermitian.
    pub hamiltonian: Vec<Vec<Amp>>,
    pub target: TargetSpec,
    pub initial: Vec<Amp>,
    pub gamma_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    OneSpinFixedPoint(OneSpinModel),
    Thermalization(ThermalModel),
    Disentangle(DisentangleModel),
    Butterfly(ButterflyModel),
    DrivenLc(DrivenModel),
    Custom(CustomModel),
}

impl Model {
    pub fn is_two_spin(&self) -> bool {
        match self {
            Model::OneSpinFixedPoint(_) | Model::Thermalization(_) => false,
            Model::Custom(c) => c.dimension == 4,
            _ => true,
        }
    }

    /// Whether a run needs random numbers besides noise.
    fn draws_initial_state(&self) -> bool {
        matches!(self, Model::Disentangle(d) if d.entanglement.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub seed: Option<u64>,
    pub ensemble_size: usize,
    pub sample_stride: usize,
    pub output: Option<PathBuf>,
    pub integrator: IntegratorConfig,
    pub model: Model,
    pub noise: Option<NoiseConfig>,
    pub analysis: AnalysisConfig,
}

impl ScenarioConfig {
    pub fn is_stochastic(&self) -> bool {
        self.noise.is_some() || self.model.draws_initial_state()
    }

    /// Checks every cross-field invariant. Run again after CLI overrides.
    pub fn validate(&self) -> Result<(), CliError> {
        let i = &self.integrator;
        if !(i.dt > 0.0 && i.dt.is_finite()) {
            return Err(CliError::config(format!("`integrator.dt` must be positive, got {}", i.dt)));
        }
        if !(i.t_final > 0.0 && i.t_final.is_finite()) {
            return Err(CliError::config(format!(
                "`integrator.t_final` must be positive, got {}",
                i.t_final
            )));
        }
        if !(i.guard_eps > 0.0 && i.guard_eps < 1.0) {
            return Err(CliError::config("`integrator.guard_eps` must lie in (0, 1)"));
        }
        if self.ensemble_size == 0 {
            return Err(CliError::config("`ensemble_size` must be at least 1"));
        }
        if self.sample_stride == 0 {
            return Err(CliError::config("`sample_stride` must be at least 1"));
        }
        if self.is_stochastic() && self.seed.is_none() {
            return Err(CliError::config("`seed` is required when noise or a random initial state is used"));
        }
        if self.ensemble_size > 1 && !self.is_stochastic() {
            return Err(CliError::config(
                "`ensemble_size` > 1 needs noise or a random initial state; members would be identical",
            ));
        }
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.transient_fraction) {
            return Err(CliError::config("`analysis.transient_fraction` must lie in [0, 1)"));
        }
        if let Some(n) = &self.noise {
            if !(n.omega_s_sq > 0.0) || !(n.tau_s > 0.0) {
                return Err(CliError::config("`noise.omega_s_sq` and `noise.tau_s` must be positive"));
            }
            if n.coupling.is_some() && !self.model.is_two_spin() {
                return Err(CliError::config("`noise.coupling` applies to two-spin scenarios only"));
            }
        }
        match &self.model {
            Model::Thermalization(_) if self.noise.is_none() => {
                Err(CliError::config("scenario `thermalization` requires a `[noise]` table"))
            }
            Model::Disentangle(d) => match (&d.entanglement, &d.initial) {
                (Some(e), None) if (0.0..=0.5).contains(e) => Ok(()),
                (Some(e), None) => Err(CliError::config(format!(
                    "`model.entanglement` must lie in [0, 0.5], got {e}"
                ))),
                (None, Some(_)) => Ok(()),
                _ => Err(CliError::config(
                    "set exactly one of `model.entanglement` and `model.initial`",
                )),
            },
            Model::Custom(c) if !matches!(c.dimension, 2 | 4) => Err(CliError::config(format!(
                "`model.dimension` must be 2 or 4, got {}",
                c.dimension
            ))),
            Model::Custom(c) => match &c.target {
                TargetSpec::Rule(r) if r == "spin_flip" && c.dimension == 4 => Ok(()),
                TargetSpec::Rule(r) => Err(CliError::config(format!(
                    "`model.target` must be \"spin_flip\" (dimension 4) or a list of amplitudes, got \"{r}\""
                ))),
                TargetSpec::Fixed(_) => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Deserialize)]
struct Head {
    scenario: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<M> {
    #[allow(dead_code)]
    scenario: String,
    seed: Option<u64>,
    ensemble_size: Option<usize>,
    sample_stride: Option<usize>,
    output: Option<PathBuf>,
    integrator: IntegratorConfig,
    model: M,
    noise: Option<NoiseConfig>,
    analysis: Option<AnalysisConfig>,
}

fn parse_as<M: serde::de::DeserializeOwned>(
    text: &str,
    scenario: String,
    wrap: impl FnOnce(M) -> Model,
) -> Result<ScenarioConfig, CliError> {
    let doc: Document<M> = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    Ok(ScenarioConfig {
        scenario,
        seed: doc.seed,
        ensemble_size: doc.ensemble_size.unwrap_or(1),
        sample_stride: doc.sample_stride.unwrap_or(1),
        output: doc.output,
        integrator: doc.integrator,
        model: wrap(doc.model),
        noise: doc.noise,
        analysis: doc.analysis.unwrap_or_default(),
    })
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let cfg = parse_unvalidated(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Schema checks only. Callers that apply overrides (such as a seed from
/// the command line) must call [`ScenarioConfig::validate`] afterwards.
pub fn parse_unvalidated(text: &str) -> Result<ScenarioConfig, CliError> {
    let head: Head = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    let scenario = head.scenario;
    let cfg = match scenario.as_str() {
        "one_spin_fixed_point" => parse_as(text, scenario, Model::OneSpinFixedPoint)?,
        "thermalization" => parse_as(text, scenario, Model::Thermalization)?,
        "disentangle" => parse_as(text, scenario, Model::Disentangle)?,
        "butterfly" => parse_as(text, scenario, Model::Butterfly)?,
        "driven_lc" => parse_as(text, scenario, Model::DrivenLc)?,
        "custom" => parse_as(text, scenario, Model::Custom)?,
        other => {
            return Err(CliError::config(format!(
                "unknown scenario \"{other}\"; expected one of {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "one_spin_fixed_point"

[integrator]
dt = 1e-3
t_final = 10.0

[model]
omega = [0.0, 0.0, 1.0]
s_hat = [0.8660254037844386, 0.0, -0.5]
gamma_d = 0.25
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.ensemble_size, 1);
        assert_eq!(cfg.sample_stride, 1);
        assert!(cfg.integrator.renormalize);
        assert_eq!(cfg.integrator.guard_eps, 1e-12);
        assert_eq!(cfg.analysis, AnalysisConfig::default());
        let Model::OneSpinFixedPoint(m) = &cfg.model else { panic!() };
        assert_eq!(m.gamma_d, 0.25);
        assert_eq!(m.initial, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn noise_requires_seed() {
        let text = format!("{MINIMAL}\n[noise]\nomega_s_sq = 1.0\ntau_s = 0.5\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
        let seeded = text.replacen("[integrator]", "seed = 3\n\n[integrator]", 1);
        assert!(parse_config(&seeded).is_ok());
    }

    #[test]
    fn duplicate_key_reports_position() {
        let text = MINIMAL.replace("gamma_d = 0.25", "gamma_d = 0.25\ngamma_d = 0.5");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("line"), "{err}");
        assert!(err.contains("gamma_d") || err.contains("duplicate"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_config(&MINIMAL.replace("gamma_d = 0.25", "gamma_d = 0.25\ngama = 1")).unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
        let err = parse_config(&format!("colour = 1\n{MINIMAL}")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn wrong_type_names_key() {
        let err = parse_config(&MINIMAL.replace("gamma_d = 0.25", "gamma_d = \"fast\"")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma_d") && msg.contains("f64"), "{msg}");
    }

    #[test]
    fn unknown_scenario() {
        let err = parse_config(&MINIMAL.replace("one_spin_fixed_point", "three_spin")).unwrap_err();
        assert!(err.to_string().contains("three_spin"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn range_checks() {
        assert!(parse_config(&MINIMAL.replace("dt = 1e-3", "dt = -1.0")).is_err());
        assert!(parse_config(&format!("ensemble_size = 3\n{MINIMAL}")).is_err());
        assert!(parse_config(&format!("sample_stride = 0\n{MINIMAL}")).is_err());
    }

    #[test]
    fn disentangle_start_is_exclusive() {
        let base = r#"
scenario = "disentangle"
seed = 1
[integrator]
dt = 1e-3
t_final = 1.0
[model]
gamma_d = 1.0
"#;
        assert!(parse_config(&format!("{base}entanglement = 0.3\n")).is_ok());
        assert!(parse_config(&format!("{base}entanglement = 0.7\n")).is_err());
        assert!(parse_config(base).is_err());
        let both = format!("{base}entanglement = 0.3\ninitial = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]\n");
        assert!(parse_config(&both).is_err());
    }
}
