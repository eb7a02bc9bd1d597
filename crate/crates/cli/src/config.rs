//! Strict experiment configs.
//!
//! A config file is parsed to a JSON value, `--override key=value` edits are
//! applied to that value, and the result is deserialized into typed structs
//! that reject unknown keys. Defaults that depend on the model (reference
//! frequency, sampling interval) are filled in by [`ExperimentConfig::load`]
//! so the resolved echo shows the numbers actually used.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dynpictures::chaos::LyapunovConfig;
use dynpictures::numerics::Numerics;
use dynpictures::par::Execution;
use dynpictures::phase::{Hamiltonian, IntegratorConfig, Model, ModelDescriptor, ModelKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{validation, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PicturesEquivalence,
    ConstantForce,
    Lyapunov,
    QuantumSensitivity,
    CompareChaos,
}

/// Initial state. Which kinds an experiment accepts is checked on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDescriptor {
    /// Independent Gaussian in `q` and `p` (one degree of freedom).
    Gaussian { q: f64, p: f64, sigma_q: f64, sigma_p: f64 },
    /// Gaussian q-profile on the sheet `p = p0`.
    MomentumSheet {
        mean: f64,
        sigma: f64,
        p0: f64,
        #[serde(default = "sheet_nodes")]
        nodes: usize,
    },
    Point { q: Vec<f64>, p: Vec<f64> },
    /// Coherent state of the reference oscillator; its centre is the
    /// classical initial point.
    Coherent { q: f64, p: f64 },
    Number { n: usize },
}

fn sheet_nodes() -> usize {
    80
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    model: ModelDescriptor,
    state: StateDescriptor,
    #[serde(default)]
    numerics: Option<Value>,
    output: PathBuf,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicturesNumerics {
    pub t_final: f64,
    pub samples: usize,
    pub schrodinger_nodes: usize,
    pub heisenberg_nodes: usize,
    pub interaction_nodes: usize,
    /// Largest allowed `|a − b| / max(|a|, |b|, 1)` between pictures.
    pub threshold: f64,
    pub integrator: IntegratorConfig,
    pub parallel: bool,
}

impl Default for PicturesNumerics {
    fn default() -> Self {
        PicturesNumerics {
            t_final: 10.0,
            samples: 21,
            schrodinger_nodes: 120,
            heisenberg_nodes: 100,
            interaction_nodes: 110,
            threshold: 1e-6,
            integrator: IntegratorConfig::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantForceNumerics {
    pub t_final: f64,
    pub samples: usize,
    /// Points of the q grid on which marginals are compared.
    pub q_points: usize,
    /// Half-width of the q grid in units of the profile width.
    pub span_sigmas: f64,
    pub marginal_tolerance: f64,
    pub moment_tolerance: f64,
    pub integrator: IntegratorConfig,
    pub parallel: bool,
}

impl Default for ConstantForceNumerics {
    fn default() -> Self {
        ConstantForceNumerics {
            t_final: 4.0,
            samples: 9,
            q_points: 401,
            span_sigmas: 8.0,
            marginal_tolerance: 1e-8,
            moment_tolerance: 1e-10,
            integrator: IntegratorConfig::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovNumerics {
    pub spectrum: LyapunovConfig,
    /// Relative band around the independent oracle (kicked maps only).
    #[serde(default = "oracle_band")]
    pub oracle_band: f64,
    #[serde(default = "det_tolerance")]
    pub det_tolerance: f64,
    #[serde(default = "pairing_tolerance")]
    pub pairing_tolerance: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn oracle_band() -> f64 {
    0.1
}

fn det_tolerance() -> f64 {
    1e-8
}

fn pairing_tolerance() -> f64 {
    5e-2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumNumerics {
    pub dim: usize,
    pub hbar: f64,
    /// Frequency of the oscillator basis. Defaults to the model's natural
    /// (well) frequency.
    pub omega_ref: Option<f64>,
    /// Spacing of the sampled times. Defaults to one drive period for
    /// driven models and a sixteenth of the reference period otherwise.
    pub interval: Option<f64>,
    /// Defaults to 200 periods worth of samples.
    pub samples: Option<usize>,
    /// Midpoint substeps per interval.
    pub steps: usize,
    /// Second truncation for the convergence gate; `0` disables it.
    /// Defaults to `2·dim` for driven models.
    pub gate_dim: Option<usize>,
    pub gate_tolerance: f64,
    /// Tolerance of the state-independent comparison with the classical
    /// sensitivity matrix on linear models.
    pub classical_tolerance: f64,
    pub integrator: IntegratorConfig,
    pub parallel: bool,
}

impl Default for QuantumNumerics {
    fn default() -> Self {
        QuantumNumerics {
            dim: 128,
            hbar: 1.0,
            omega_ref: None,
            interval: None,
            samples: None,
            steps: 128,
            gate_dim: None,
            gate_tolerance: 1e-4,
            classical_tolerance: 1e-8,
            integrator: IntegratorConfig::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareNumerics {
    pub quantum: QuantumNumerics,
    /// Renormalizations per sampling interval in the Lyapunov run.
    pub renorm_per_interval: usize,
    /// Burn-in of the Lyapunov run, in sampling intervals.
    pub transient_intervals: usize,
    /// Fit window as fractions of the total time.
    pub window: [f64; 2],
    /// Allowed relative deviation of the classical slope from `λ₁`.
    pub classical_band: f64,
    /// The quantum slope must stay below this multiple of `λ₁`.
    pub quantum_fraction: f64,
}

impl Default for CompareNumerics {
    fn default() -> Self {
        CompareNumerics {
            quantum: QuantumNumerics { gate_dim: Some(0), ..QuantumNumerics::default() },
            renorm_per_interval: 8,
            transient_intervals: 10,
            window: [0.5, 1.0],
            classical_band: 0.2,
            quantum_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentNumerics {
    Pictures(PicturesNumerics),
    ConstantForce(ConstantForceNumerics),
    Lyapunov(LyapunovNumerics),
    Quantum(QuantumNumerics),
    Compare(CompareNumerics),
}

/// A validated config with every default resolved.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelDescriptor,
    pub state: StateDescriptor,
    pub numerics: ExperimentNumerics,
    pub output: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Reads, overrides, parses and resolves a config file.
    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ExperimentConfig::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("line {} column {}: {e}", e.line(), e.column())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let raw: RawConfig = if overrides.is_empty() {
            // Straight from the text so errors carry positions.
            let de = &mut serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let inner = e.inner();
                CliError::Validation(format!("line {} column {}: {}: {inner}", inner.line(), inner.column(), e.path()))
            })?
        } else {
            typed(value.clone(), "")?
        };
        let model = raw.model.build().map_err(validation)?;
        let numerics = raw.numerics.unwrap_or_else(|| Value::Object(Default::default()));
        let numerics = match raw.experiment {
            ExperimentKind::PicturesEquivalence => ExperimentNumerics::Pictures(typed(numerics, "numerics.")?),
            ExperimentKind::ConstantForce => ExperimentNumerics::ConstantForce(typed(numerics, "numerics.")?),
            ExperimentKind::Lyapunov => ExperimentNumerics::Lyapunov(typed(numerics, "numerics.")?),
            ExperimentKind::QuantumSensitivity => {
                let q: QuantumNumerics = typed(numerics, "numerics.")?;
                ExperimentNumerics::Quantum(resolve_quantum(q, &model, false)?)
            }
            ExperimentKind::CompareChaos => {
                let mut c: CompareNumerics = typed(numerics, "numerics.")?;
                c.quantum = resolve_quantum(c.quantum, &model, true)?;
                ExperimentNumerics::Compare(c)
            }
        };
        let cfg = ExperimentConfig {
            experiment: raw.experiment,
            model: raw.model,
            state: raw.state,
            numerics,
            output: raw.output,
            seed: raw.seed,
        };
        cfg.check(&model)?;
        Ok(cfg)
    }

    pub fn build_model(&self) -> CliResult<Model> {
        self.model.build().map_err(validation)
    }

    /// Cross-field checks that need the model.
    fn check(&self, model: &Model) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        let state_kind = match &self.state {
            StateDescriptor::Gaussian { .. } => "gaussian",
            StateDescriptor::MomentumSheet { .. } => "momentum_sheet",
            StateDescriptor::Point { .. } => "point",
            StateDescriptor::Coherent { .. } => "coherent",
            StateDescriptor::Number { .. } => "number",
        };
        let allowed: &[&str] = match self.experiment {
            ExperimentKind::PicturesEquivalence => &["gaussian"],
            ExperimentKind::ConstantForce => &["momentum_sheet"],
            ExperimentKind::Lyapunov => &["point"],
            ExperimentKind::QuantumSensitivity => &["coherent", "number"],
            ExperimentKind::CompareChaos => &["coherent"],
        };
        if !allowed.contains(&state_kind) {
            return bad(format!("state.kind: {state_kind} is not accepted by this experiment (expected {})", allowed.join(" or ")));
        }
        let one_dof = model.dof() == 1;
        match (&self.numerics, &self.state) {
            (ExperimentNumerics::Pictures(n), StateDescriptor::Gaussian { sigma_q, sigma_p, .. }) => {
                if !one_dof {
                    return bad("model: the interaction picture needs one degree of freedom".into());
                }
                positive("state.sigma_q", *sigma_q)?;
                positive("state.sigma_p", *sigma_p)?;
                positive("numerics.t_final", n.t_final)?;
                positive("numerics.threshold", n.threshold)?;
                at_least("numerics.samples", n.samples, 2)?;
                for (name, k) in [
                    ("schrodinger_nodes", n.schrodinger_nodes),
                    ("heisenberg_nodes", n.heisenberg_nodes),
                    ("interaction_nodes", n.interaction_nodes),
                ] {
                    at_least(&format!("numerics.{name}"), k, 1)?;
                }
                n.integrator.validate().map_err(validation)?;
            }
            (ExperimentNumerics::ConstantForce(n), StateDescriptor::MomentumSheet { sigma, nodes, .. }) => {
                if !matches!(model.kind(), ModelKind::ConstantForce { .. }) {
                    return bad("model.kind: constant-force needs the constant_force model".into());
                }
                positive("state.sigma", *sigma)?;
                at_least("state.nodes", *nodes, 1)?;
                positive("numerics.t_final", n.t_final)?;
                positive("numerics.span_sigmas", n.span_sigmas)?;
                at_least("numerics.samples", n.samples, 2)?;
                at_least("numerics.q_points", n.q_points, 2)?;
                n.integrator.validate().map_err(validation)?;
            }
            (ExperimentNumerics::Lyapunov(n), StateDescriptor::Point { q, p }) => {
                if q.len() != model.dof() || p.len() != model.dof() {
                    return bad(format!("state: the model has {} degrees of freedom", model.dof()));
                }
                n.spectrum.validate().map_err(validation)?;
                positive("numerics.oracle_band", n.oracle_band)?;
                n.integrator.validate().map_err(validation)?;
            }
            (ExperimentNumerics::Quantum(n), StateDescriptor::Number { n: level }) if *level >= n.dim => {
                return bad(format!("state.n: must be below numerics.dim = {}", n.dim));
            }
            (ExperimentNumerics::Quantum(n), _) => n.integrator.validate().map_err(validation)?,
            (ExperimentNumerics::Compare(c), _) => {
                let [lo, hi] = c.window;
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return bad("numerics.window: needs 0 ≤ lo < hi ≤ 1".into());
                }
                at_least("numerics.renorm_per_interval", c.renorm_per_interval, 1)?;
                c.quantum.integrator.validate().map_err(validation)?;
            }
            _ => unreachable!("state kinds were checked above"),
        }
        Ok(())
    }
}

/// Quantization settings with the model-dependent defaults filled in.
fn resolve_quantum(mut q: QuantumNumerics, model: &Model, compare: bool) -> CliResult<QuantumNumerics> {
    if !matches!(
        model.kind(),
        ModelKind::Free { .. }
            | ModelKind::Harmonic { .. }
            | ModelKind::InvertedOscillator { .. }
            | ModelKind::ConstantForce { .. }
            | ModelKind::Quartic { .. }
            | ModelKind::DoubleWellDriven { .. }
    ) {
        return Err(CliError::Validation("model.kind: no quantization for this model".into()));
    }
    let m = model.mass();
    let omega = q.omega_ref.unwrap_or(match model.kind() {
        ModelKind::Harmonic { k, .. } => (k / m).sqrt(),
        // Frequency at the bottom of either well of −a q² + b q⁴.
        ModelKind::DoubleWellDriven { a, .. } if a > 0.0 => (4.0 * a / m).sqrt(),
        _ => 1.0,
    });
    positive("numerics.omega_ref", omega)?;
    positive("numerics.hbar", q.hbar)?;
    at_least("numerics.dim", q.dim, 8)?;
    at_least("numerics.steps", q.steps, 1)?;
    let drive_period = match model.kind() {
        ModelKind::DoubleWellDriven { epsilon, omega, .. } if epsilon != 0.0 && omega != 0.0 => {
            Some(2.0 * PI / omega.abs())
        }
        _ => None,
    };
    // 200 drive periods, or 200 reference periods sampled sixteen times each.
    let period = drive_period.unwrap_or(2.0 * PI / omega);
    let interval = q.interval.unwrap_or(if drive_period.is_some() { period } else { period / 16.0 });
    positive("numerics.interval", interval)?;
    q.omega_ref = Some(omega);
    q.interval = Some(interval);
    q.samples = Some(q.samples.unwrap_or((200.0 * period / interval).round().max(1.0) as usize));
    at_least("numerics.samples", q.samples.unwrap_or(0), 1)?;
    q.gate_dim = Some(q.gate_dim.unwrap_or(if drive_period.is_some() && !compare { 2 * q.dim } else { 0 }));
    if let Some(g) = q.gate_dim.filter(|&g| g != 0) {
        if g <= q.dim {
            return Err(CliError::Validation("numerics.gate_dim: must exceed numerics.dim (or be 0)".into()));
        }
    }
    Ok(q)
}

pub fn numerics_for(integrator: &IntegratorConfig, parallel: bool) -> Numerics {
    Numerics {
        integrator: integrator.clone(),
        exec: if parallel { Execution::default() } else { Execution::Sequential },
    }
}

fn typed<T: DeserializeOwned>(value: Value, prefix: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Validation(format!("{prefix}{}: {}", e.path(), e.inner())))
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name}: must be positive and finite, got {x}")))
    }
}

fn at_least(name: &str, n: usize, min: usize) -> CliResult<()> {
    if n >= min {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name}: must be at least {min}, got {n}")))
    }
}

/// Sets a dotted path such as `numerics.samples=11`. The value is parsed as
/// JSON and kept as a string if that fails. Intermediate objects are created
/// as needed.
pub fn apply_override(root: &mut Value, spec: &str) -> CliResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {spec:?}: expected key=value")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Validation(format!("override {spec:?}: empty key segment")));
    }
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            return Err(CliError::Validation(format!("override {key}: {} is not an object", parts[..i].join("."))));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), new);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("the key has at least one segment")
}
