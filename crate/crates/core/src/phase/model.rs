//! Hamiltonian models.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative step for central differences: `ε^(1/3)`.
pub(crate) fn fd_step(x: f64, scale: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(scale)
}

/// A Hamiltonian `H(q, p, t)` with `dof` canonical pairs.
///
/// Models are immutable and shared read-only across workers. Gradients default
/// to central differences of [`Hamiltonian::value`]; built-in models override
/// them with closed forms.
pub trait Hamiltonian: Send + Sync {
    fn dof(&self) -> usize;

    fn value(&self, q: &[f64], p: &[f64], t: f64) -> f64;

    /// ∂H/∂q
    fn grad_q(&self, q: &[f64], p: &[f64], t: f64, out: &mut [f64]) {
        let mut qq = q.to_vec();
        for i in 0..q.len() {
            let h = fd_step(q[i], self.length_scale());
            qq[i] = q[i] + h;
            let up = self.value(&qq, p, t);
            qq[i] = q[i] - h;
            let dn = self.value(&qq, p, t);
            qq[i] = q[i];
            out[i] = (up - dn) / (2.0 * h);
        }
    }

    /// ∂H/∂p
    fn grad_p(&self, q: &[f64], p: &[f64], t: f64, out: &mut [f64]) {
        let mut pp = p.to_vec();
        for i in 0..p.len() {
            let h = fd_step(p[i], self.length_scale());
            pp[i] = p[i] + h;
            let up = self.value(q, &pp, t);
            pp[i] = p[i] - h;
            let dn = self.value(q, &pp, t);
            pp[i] = p[i];
            out[i] = (up - dn) / (2.0 * h);
        }
    }

    /// Hessian of `H` in packed `(q, p)` order, row-major `2N × 2N`.
    /// Defaults to central differences of the gradients.
    fn hessian(&self, q: &[f64], p: &[f64], t: f64, out: &mut [f64]) {
        fd_hessian(self, q, p, t, out);
    }

    /// `Some(masses)` when `H = Σ pᵢ²/2mᵢ + V(q, t)`.
    fn kinetic_masses(&self) -> Option<&[f64]> {
        None
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    /// Exact stroboscopic update for kicked systems.
    fn kicked(&self) -> Option<&dyn KickedMap> {
        None
    }

    /// Free/interaction decomposition for 1D kinetic-plus-potential models.
    fn split(&self) -> Option<OperatorSplit> {
        None
    }

    /// Typical coordinate magnitude, used for finite-difference steps.
    fn length_scale(&self) -> f64 {
        1.0
    }
}

pub(crate) fn fd_hessian<M: Hamiltonian + ?Sized>(
    model: &M,
    q: &[f64],
    p: &[f64],
    t: f64,
    out: &mut [f64],
) {
    let n = q.len();
    let d = 2 * n;
    let mut z: Vec<f64> = q.iter().chain(p).copied().collect();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    let grad = |z: &[f64], g: &mut [f64]| {
        let (gq, gpp) = g.split_at_mut(n);
        model.grad_q(&z[..n], &z[n..], t, gq);
        model.grad_p(&z[..n], &z[n..], t, gpp);
    };
    for j in 0..d {
        let x = z[j];
        let h = fd_step(x, model.length_scale());
        z[j] = x + h;
        grad(&z, &mut gp);
        z[j] = x - h;
        grad(&z, &mut gm);
        z[j] = x;
        for i in 0..d {
            out[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    // Symmetrize.
    for i in 0..d {
        for j in (i + 1)..d {
            let s = 0.5 * (out[i * d + j] + out[j * d + i]);
            out[i * d + j] = s;
            out[j * d + i] = s;
        }
    }
}

/// One-period stroboscopic map of a kicked system, acting on the unreduced lift.
pub trait KickedMap: Send + Sync {
    fn period(&self) -> f64;
    fn step(&self, q: &mut [f64], p: &mut [f64]);
    fn step_back(&self, q: &mut [f64], p: &mut [f64]);
    /// Jacobian of [`KickedMap::step`] at the pre-step point, packed row-major.
    fn jacobian(&self, q: &[f64], p: &[f64], out: &mut [f64]);
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `H = p²/2m + V(q)` in one dimension, split into free and interaction parts.
#[derive(Clone)]
pub struct OperatorSplit {
    pub mass: f64,
    potential: ScalarFn,
    v_prime: ScalarFn,
}

impl fmt::Debug for OperatorSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSplit").field("mass", &self.mass).finish_non_exhaustive()
    }
}

impl OperatorSplit {
    pub fn new(
        mass: f64,
        potential: impl Fn(f64) -> f64 + Send + Sync + 'static,
        v_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("m", "mass must be positive"));
        }
        Ok(OperatorSplit { mass, potential: Arc::new(potential), v_prime: Arc::new(v_prime) })
    }

    pub fn free_energy(&self, p: f64) -> f64 {
        p * p / (2.0 * self.mass)
    }

    pub fn potential(&self, q: f64) -> f64 {
        (self.potential)(q)
    }

    pub fn v_prime(&self, q: f64) -> f64 {
        (self.v_prime)(q)
    }

    /// Free flow `(q, p) ↦ (q + p t/m, p)`.
    pub fn free_flow(&self, q: f64, p: f64, t: f64) -> (f64, f64) {
        (q + p * t / self.mass, p)
    }

    /// Largest `|H₀ + V − H|` over the given points.
    pub fn consistency_error<M: Hamiltonian + ?Sized>(&self, model: &M, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|&(q, p)| {
                (self.free_energy(p) + self.potential(q) - model.value(&[q], &[p], 0.0)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// JSON model descriptor: `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDescriptor {
    Free(FreeParams),
    Harmonic(HarmonicParams),
    InvertedOscillator(HarmonicParams),
    ConstantForce(ConstantForceParams),
    Quartic(QuarticParams),
    DoubleWellDriven(DoubleWellParams),
    StandardMap(StandardMapParams),
    HenonHeiles(HenonHeilesParams),
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParams {
    #[serde(default = "one")]
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicParams {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantForceParams {
    #[serde(default = "one")]
    pub m: f64,
    /// Force `F = −V'(q)`.
    #[serde(default = "one")]
    pub f: f64,
}

/// `V = λ q⁴ / 4`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarticParams {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

/// `V = −a q² + b q⁴ + ε q cos Ωt`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleWellParams {
    #[serde(default = "one")]
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub omega: f64,
}

/// `p' = p + K sin q, q' = q + p'`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardMapParams {
    #[serde(rename = "K")]
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HenonHeilesParams {}

fn positive(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(name, format!("must be positive and finite, got {x}")))
    }
}

fn finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(name, "must be finite"))
    }
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<Model> {
        let kind = match self {
            ModelDescriptor::Free(p) => ModelKind::Free { m: positive("m", p.m)? },
            ModelDescriptor::Harmonic(p) => {
                ModelKind::Harmonic { m: positive("m", p.m)?, k: positive("k", p.k)? }
            }
            ModelDescriptor::InvertedOscillator(p) => {
                ModelKind::InvertedOscillator { m: positive("m", p.m)?, k: positive("k", p.k)? }
            }
            ModelDescriptor::ConstantForce(p) => {
                ModelKind::ConstantForce { m: positive("m", p.m)?, f: finite("f", p.f)? }
            }
            ModelDescriptor::Quartic(p) => {
                ModelKind::Quartic { m: positive("m", p.m)?, lambda: positive("lambda", p.lambda)? }
            }
            ModelDescriptor::DoubleWellDriven(p) => ModelKind::DoubleWellDriven {
                m: positive("m", p.m)?,
                a: finite("a", p.a)?,
                b: positive("b", p.b)?,
                epsilon: finite("epsilon", p.epsilon)?,
                omega: finite("omega", p.omega)?,
            },
            ModelDescriptor::StandardMap(p) => ModelKind::StandardMap { k: finite("K", p.k)? },
            ModelDescriptor::HenonHeiles(_) => ModelKind::HenonHeiles,
        };
        Ok(Model::from_kind(kind))
    }
}

/// Built-in model family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Free { m: f64 },
    Harmonic { m: f64, k: f64 },
    InvertedOscillator { m: f64, k: f64 },
    ConstantForce { m: f64, f: f64 },
    Quartic { m: f64, lambda: f64 },
    DoubleWellDriven { m: f64, a: f64, b: f64, epsilon: f64, omega: f64 },
    StandardMap { k: f64 },
    HenonHeiles,
}

/// A built-in Hamiltonian with closed-form gradients and Hessians.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: ModelKind,
    masses: [f64; 2],
    dof: usize,
}

impl Model {
    fn from_kind(kind: ModelKind) -> Self {
        let (m, dof) = match kind {
            ModelKind::Free { m }
            | ModelKind::Harmonic { m, .. }
            | ModelKind::InvertedOscillator { m, .. }
            | ModelKind::ConstantForce { m, .. }
            | ModelKind::Quartic { m, .. }
            | ModelKind::DoubleWellDriven { m, .. } => (m, 1),
            ModelKind::StandardMap { .. } => (1.0, 1),
            ModelKind::HenonHeiles => (1.0, 2),
        };
        Model { kind, masses: [m, m], dof }
    }

    pub fn free(m: f64) -> Self {
        ModelDescriptor::Free(FreeParams { m }).build().expect("valid free model")
    }
    pub fn harmonic(m: f64, k: f64) -> Self {
        ModelDescriptor::Harmonic(HarmonicParams { m, k }).build().expect("valid harmonic model")
    }
    pub fn inverted_oscillator(m: f64, k: f64) -> Self {
        ModelDescriptor::InvertedOscillator(HarmonicParams { m, k })
            .build()
            .expect("valid inverted oscillator")
    }
    pub fn constant_force(m: f64, f: f64) -> Self {
        ModelDescriptor::ConstantForce(ConstantForceParams { m, f })
            .build()
            .expect("valid constant-force model")
    }
    pub fn quartic(m: f64, lambda: f64) -> Self {
        ModelDescriptor::Quartic(QuarticParams { m, lambda }).build().expect("valid quartic model")
    }
    pub fn double_well_driven(m: f64, a: f64, b: f64, epsilon: f64, omega: f64) -> Self {
        ModelDescriptor::DoubleWellDriven(DoubleWellParams { m, a, b, epsilon, omega })
            .build()
            .expect("valid double well")
    }
    pub fn standard_map(k: f64) -> Self {
        ModelDescriptor::StandardMap(StandardMapParams { k }).build().expect("valid standard map")
    }
    pub fn henon_heiles() -> Self {
        Model::from_kind(ModelKind::HenonHeiles)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn mass(&self) -> f64 {
        self.masses[0]
    }

    /// Potential part `V(q, t)` for 1D models.
    pub fn potential_1d(&self, q: f64, t: f64) -> f64 {
        match self.kind {
            ModelKind::Free { .. } => 0.0,
            ModelKind::Harmonic { k, .. } => 0.5 * k * q * q,
            ModelKind::InvertedOscillator { k, .. } => -0.5 * k * q * q,
            ModelKind::ConstantForce { f, .. } => -f * q,
            ModelKind::Quartic { lambda, .. } => 0.25 * lambda * q.powi(4),
            ModelKind::DoubleWellDriven { a, b, epsilon, omega, .. } => {
                -a * q * q + b * q.powi(4) + epsilon * q * (omega * t).cos()
            }
            ModelKind::StandardMap { .. } | ModelKind::HenonHeiles => 0.0,
        }
    }

    fn v_prime_1d(&self, q: f64, t: f64) -> f64 {
        match self.kind {
            ModelKind::Free { .. } => 0.0,
            ModelKind::Harmonic { k, .. } => k * q,
            ModelKind::InvertedOscillator { k, .. } => -k * q,
            ModelKind::ConstantForce { f, .. } => -f,
            ModelKind::Quartic { lambda, .. } => lambda * q.powi(3),
            ModelKind::DoubleWellDriven { a, b, epsilon, omega, .. } => {
                -2.0 * a * q + 4.0 * b * q.powi(3) + epsilon * (omega * t).cos()
            }
            ModelKind::StandardMap { .. } | ModelKind::HenonHeiles => 0.0,
        }
    }

    fn v_second_1d(&self, q: f64) -> f64 {
        match self.kind {
            ModelKind::Free { .. } | ModelKind::ConstantForce { .. } => 0.0,
            ModelKind::Harmonic { k, .. } => k,
            ModelKind::InvertedOscillator { k, .. } => -k,
            ModelKind::Quartic { lambda, .. } => 3.0 * lambda * q * q,
            ModelKind::DoubleWellDriven { a, b, .. } => -2.0 * a + 12.0 * b * q * q,
            ModelKind::StandardMap { .. } | ModelKind::HenonHeiles => 0.0,
        }
    }
}

impl Hamiltonian for Model {
    fn dof(&self) -> usize {
        self.dof
    }

    fn value(&self, q: &[f64], p: &[f64], t: f64) -> f64 {
        match self.kind {
            ModelKind::HenonHeiles => {
                let (x, y) = (q[0], q[1]);
                0.5 * (p[0] * p[0] + p[1] * p[1])
                    + 0.5 * (x * x + y * y)
                    + x * x * y
                    - y * y * y / 3.0
            }
            // Between kicks only the kinetic term is pointwise defined.
            ModelKind::StandardMap { .. } => 0.5 * p[0] * p[0],
            _ => p[0] * p[0] / (2.0 * self.masses[0]) + self.potential_1d(q[0], t),
        }
    }

    fn grad_q(&self, q: &[f64], _p: &[f64], t: f64, out: &mut [f64]) {
        match self.kind {
            ModelKind::HenonHeiles => {
                let (x, y) = (q[0], q[1]);
                out[0] = x + 2.0 * x * y;
                out[1] = y + x * x - y * y;
            }
            _ => out[0] = self.v_prime_1d(q[0], t),
        }
    }

    fn grad_p(&self, _q: &[f64], p: &[f64], _t: f64, out: &mut [f64]) {
        for i in 0..self.dof {
            out[i] = p[i] / self.masses[i];
        }
    }

    fn hessian(&self, q: &[f64], _p: &[f64], _t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        match self.kind {
            ModelKind::HenonHeiles => {
                let (x, y) = (q[0], q[1]);
                // rows/cols: x, y, px, py
                out[0] = 1.0 + 2.0 * y;
                out[1] = 2.0 * x;
                out[4] = 2.0 * x;
                out[5] = 1.0 - 2.0 * y;
                out[10] = 1.0;
                out[15] = 1.0;
            }
            _ => {
                out[0] = self.v_second_1d(q[0]);
                out[3] = 1.0 / self.masses[0];
            }
        }
    }

    fn kinetic_masses(&self) -> Option<&[f64]> {
        Some(&self.masses[..self.dof])
    }

    fn is_autonomous(&self) -> bool {
        !matches!(self.kind, ModelKind::DoubleWellDriven { .. })
    }

    fn kicked(&self) -> Option<&dyn KickedMap> {
        match self.kind {
            ModelKind::StandardMap { .. } => Some(self),
            _ => None,
        }
    }

    fn split(&self) -> Option<OperatorSplit> {
        let m = self.masses[0];
        let s = match self.kind {
            ModelKind::Free { .. } => OperatorSplit::new(m, |_| 0.0, |_| 0.0),
            ModelKind::Harmonic { k, .. } => {
                OperatorSplit::new(m, move |q| 0.5 * k * q * q, move |q| k * q)
            }
            ModelKind::InvertedOscillator { k, .. } => {
                OperatorSplit::new(m, move |q| -0.5 * k * q * q, move |q| -k * q)
            }
            ModelKind::ConstantForce { f, .. } => OperatorSplit::new(m, move |q| -f * q, move |_| -f),
            ModelKind::Quartic { lambda, .. } => {
                OperatorSplit::new(m, move |q| 0.25 * lambda * q.powi(4), move |q| lambda * q.powi(3))
            }
            _ => return None,
        };
        s.ok()
    }
}

impl KickedMap for Model {
    fn period(&self) -> f64 {
        1.0
    }

    fn step(&self, q: &mut [f64], p: &mut [f64]) {
        if let ModelKind::StandardMap { k } = self.kind {
            p[0] += k * q[0].sin();
            q[0] += p[0];
        }
    }

    fn step_back(&self, q: &mut [f64], p: &mut [f64]) {
        if let ModelKind::StandardMap { k } = self.kind {
            q[0] -= p[0];
            p[0] -= k * q[0].sin();
        }
    }

    fn jacobian(&self, q: &[f64], _p: &[f64], out: &mut [f64]) {
        if let ModelKind::StandardMap { k } = self.kind {
            let kc = k * q[0].cos();
            out[0] = 1.0 + kc;
            out[1] = 1.0;
            out[2] = kc;
            out[3] = 1.0;
        }
    }
}

type ValueFn = Arc<dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync>;

/// A model assembled from user closures. Gradients not supplied fall back to
/// central differences.
#[derive(Clone)]
pub struct ClosureModel {
    dof: usize,
    value: ValueFn,
    grad_q: Option<GradFn>,
    grad_p: Option<GradFn>,
    autonomous: bool,
    scale: f64,
}

impl fmt::Debug for ClosureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureModel").field("dof", &self.dof).finish_non_exhaustive()
    }
}

impl ClosureModel {
    pub fn new(dof: usize, value: impl Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if dof == 0 {
            return Err(invalid("dof", "must be positive"));
        }
        Ok(ClosureModel {
            dof,
            value: Arc::new(value),
            grad_q: None,
            grad_p: None,
            autonomous: true,
            scale: 1.0,
        })
    }

    pub fn with_gradients(
        mut self,
        grad_q: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        grad_p: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.grad_q = Some(Arc::new(grad_q));
        self.grad_p = Some(Arc::new(grad_p));
        self
    }

    pub fn time_dependent(mut self) -> Self {
        self.autonomous = false;
        self
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

impl Hamiltonian for ClosureModel {
    fn dof(&self) -> usize {
        self.dof
    }

    fn value(&self, q: &[f64], p: &[f64], t: f64) -> f64 {
        (self.value)(q, p, t)
    }

    fn grad_q(&self, q: &[f64], p: &[f64], t: f64, out: &mut [f64]) {
        match &self.grad_q {
            Some(g) => g(q, p, t, out),
            None => fd_gradient(|qq| (self.value)(qq, p, t), q, self.scale, out),
        }
    }

    fn grad_p(&self, q: &[f64], p: &[f64], t: f64, out: &mut [f64]) {
        match &self.grad_p {
            Some(g) => g(q, p, t, out),
            None => fd_gradient(|pp| (self.value)(q, pp, t), p, self.scale, out),
        }
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    fn length_scale(&self) -> f64 {
        self.scale
    }
}

fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], scale: f64, out: &mut [f64]) {
    let mut xx = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i], scale);
        xx[i] = x[i] + h;
        let up = f(&xx);
        xx[i] = x[i] - h;
        let dn = f(&xx);
        xx[i] = x[i];
        out[i] = (up - dn) / (2.0 * h);
    }
}

/// Largest relative disagreement between the supplied gradients and central
/// differences of the value, over the given points.
pub fn gradient_consistency<M: Hamiltonian + ?Sized>(
    model: &M,
    points: &[(Vec<f64>, Vec<f64>)],
    t: f64,
) -> Result<f64> {
    let n = model.dof();
    let mut worst: f64 = 0.0;
    let mut g = vec![0.0; n];
    let mut fd = vec![0.0; n];
    for (q, p) in points {
        if q.len() != n || p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.len() });
        }
        let scale = model.length_scale();
        model.grad_q(q, p, t, &mut g);
        fd_gradient(|qq| model.value(qq, p, t), q, scale, &mut fd);
        for i in 0..n {
            worst = worst.max(rel_err(g[i], fd[i]));
        }
        model.grad_p(q, p, t, &mut g);
        fd_gradient(|pp| model.value(q, pp, t), p, scale, &mut fd);
        for i in 0..n {
            worst = worst.max(rel_err(g[i], fd[i]));
        }
    }
    if worst.is_finite() {
        Ok(worst)
    } else {
        Err(Error::NumericDerivative("non-finite gradient estimate".into()))
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
