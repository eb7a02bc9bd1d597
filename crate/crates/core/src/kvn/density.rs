//! Phase-space probability densities.

use std::fmt;
use std::sync::Arc;

use super::grid::GridSpec;
use super::observable::Observable;
use super::state::KvnWaveFunction;
use crate::error::{invalid, Error, Result};
use crate::numerics::Numerics;
use crate::par::{self, compensated_sum};
use crate::phase::PhasePoint;
use crate::quadrature::normal_rule;

/// Density evaluated on packed `[q..., p...]` coordinates.
pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDensity {
    pub points: Vec<PhasePoint>,
    /// Phase-space measure carried by each point.
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl EnsembleDensity {
    pub fn new(points: Vec<PhasePoint>, weights: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: values.len() });
        }
        if points.is_empty() {
            return Err(invalid("ensemble", "needs at least one point"));
        }
        if values.iter().chain(&weights).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("ensemble", "weights and values must be finite and non-negative"));
        }
        Ok(EnsembleDensity { points, weights, values })
    }

    /// Probability mass carried by each point.
    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v)
    }
}

/// Density sampled on a grid, optionally with the analytic function it was
/// sampled from so that pullbacks can avoid interpolation.
#[derive(Clone)]
pub struct GridDensity {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub source: Option<DensityFn>,
}

impl fmt::Debug for GridDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridDensity")
            .field("grid", &self.grid)
            .field("analytic", &self.source.is_some())
            .finish_non_exhaustive()
    }
}

impl GridDensity {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("grid density", "values must be finite and non-negative"));
        }
        Ok(GridDensity { grid, values, source: None })
    }

    /// Samples an analytic density and remembers it.
    pub fn from_fn(grid: GridSpec, f: DensityFn, num: &Numerics) -> Result<Self> {
        let values = par::map_range(num.exec, grid.len(), |i| {
            let mut z = vec![0.0; grid.dims()];
            grid.point(i, &mut z);
            f(&z)
        });
        let mut d = GridDensity::new(grid, values)?;
        d.source = Some(f);
        Ok(d)
    }

    /// Value at an arbitrary point: analytic source if known, else cubic
    /// interpolation (negative overshoot clipped).
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        match &self.source {
            Some(f) => f(z),
            None => self.grid.interpolate(&self.values, z).max(0.0),
        }
    }

    pub fn total(&self) -> f64 {
        self.grid.cell_volume() * compensated_sum(self.values.iter().copied())
    }

    /// Marginal over momentum for a one-degree-of-freedom grid, one value per q node.
    pub fn q_marginal(&self) -> Result<Vec<f64>> {
        if self.grid.dims() != 2 {
            return Err(Error::Unsupported("q marginal needs a 2D phase-space grid".into()));
        }
        let [nq, np] = [self.grid.shape()[0], self.grid.shape()[1]];
        let hp = self.grid.spacing(1);
        Ok((0..nq).map(|i| hp * compensated_sum(self.values[i * np..(i + 1) * np].iter().copied())).collect())
    }

    /// Marginal over position for a one-degree-of-freedom grid, one value per p node.
    pub fn p_marginal(&self) -> Result<Vec<f64>> {
        if self.grid.dims() != 2 {
            return Err(Error::Unsupported("p marginal needs a 2D phase-space grid".into()));
        }
        let [nq, np] = [self.grid.shape()[0], self.grid.shape()[1]];
        let hq = self.grid.spacing(0);
        Ok((0..np).map(|j| hq * compensated_sum((0..nq).map(|i| self.values[i * np + j]))).collect())
    }
}

/// `f(q − shift) δ(p − p_support)` in one degree of freedom.
///
/// The momentum support is a single stored number, so a constant-force update
/// moves it exactly. Expectations use a quadrature rule for the initial
/// profile, translated by `shift`.
#[derive(Clone)]
pub struct MomentumSheet {
    p_support: f64,
    shift: f64,
    profile: ProfileFn,
    nodes: Vec<f64>,
    masses: Vec<f64>,
}

impl fmt::Debug for MomentumSheet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentumSheet")
            .field("p_support", &self.p_support)
            .field("shift", &self.shift)
            .field("nodes", &self.nodes.len())
            .finish_non_exhaustive()
    }
}

impl MomentumSheet {
    /// `profile` is the initial q-density; `rule` is a quadrature rule
    /// `(nodes, probability masses)` for it.
    pub fn new(
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rule: (Vec<f64>, Vec<f64>),
        p_support: f64,
    ) -> Result<Self> {
        let (nodes, masses) = rule;
        if nodes.len() != masses.len() || nodes.is_empty() {
            return Err(invalid("rule", "nodes and masses must be non-empty and equal length"));
        }
        if !p_support.is_finite() {
            return Err(Error::NonFinite("momentum support"));
        }
        Ok(MomentumSheet { p_support, shift: 0.0, profile: Arc::new(profile), nodes, masses })
    }

    /// Gaussian profile `N(mean, sigma²)` on `p = p_support`, Gauss-Hermite rule with `nodes` points.
    pub fn gaussian(mean: f64, sigma: f64, p_support: f64, nodes: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
            return Err(invalid("sigma", "must be positive and finite"));
        }
        let rule = normal_rule(nodes, mean, sigma)?;
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        MomentumSheet::new(move |q| norm * (-0.5 * ((q - mean) / sigma).powi(2)).exp(), rule, p_support)
    }

    pub fn p_support(&self) -> f64 {
        self.p_support
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Same profile translated by `shift` with momentum support `p_support`.
    pub fn moved(&self, shift: f64, p_support: f64) -> Self {
        MomentumSheet { p_support, shift, ..self.clone() }
    }

    /// `f(q − shift)`.
    pub fn q_marginal(&self, q: f64) -> f64 {
        (self.profile)(q - self.shift)
    }

    pub fn initial_profile(&self, q0: f64) -> f64 {
        (self.profile)(q0)
    }

    pub fn support_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().zip(&self.masses).map(move |(q, m)| (q + self.shift, *m))
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    /// Point masses on the support: unit values, weights carry the mass.
    pub fn to_ensemble(&self) -> EnsembleDensity {
        let points = self.support_points().map(|(q, _)| PhasePoint::one(q, self.p_support)).collect();
        EnsembleDensity { points, weights: self.masses.clone(), values: vec![1.0; self.masses.len()] }
    }
}

#[derive(Debug, Clone)]
pub enum PhaseSpaceDensity {
    Ensemble(EnsembleDensity),
    Grid(GridDensity),
    Sheet(MomentumSheet),
}

impl PhaseSpaceDensity {
    pub fn total(&self) -> f64 {
        match self {
            PhaseSpaceDensity::Ensemble(e) => compensated_sum(e.masses()),
            PhaseSpaceDensity::Grid(g) => g.total(),
            PhaseSpaceDensity::Sheet(s) => s.total(),
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            PhaseSpaceDensity::Ensemble(e) => e.points[0].dof(),
            PhaseSpaceDensity::Grid(g) => g.grid.dof(),
            PhaseSpaceDensity::Sheet(_) => 1,
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Rescales to unit total mass. Used at construction only.
    pub fn normalized(mut self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized { total });
        }
        match &mut self {
            PhaseSpaceDensity::Ensemble(e) => e.values.iter_mut().for_each(|v| *v /= total),
            PhaseSpaceDensity::Grid(g) => {
                g.values.iter_mut().for_each(|v| *v /= total);
                if let Some(f) = g.source.take() {
                    g.source = Some(Arc::new(move |z| f(z) / total));
                }
            }
            PhaseSpaceDensity::Sheet(s) => s.masses.iter_mut().for_each(|m| *m /= total),
        }
        Ok(self)
    }
}

/// `ρ = |φ|²` in the same representation.
pub fn density_of(phi: &KvnWaveFunction) -> PhaseSpaceDensity {
    match phi {
        KvnWaveFunction::Ensemble(e) => PhaseSpaceDensity::Ensemble(EnsembleDensity {
            points: e.points().to_vec(),
            weights: e.weights().to_vec(),
            values: e.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
        }),
        KvnWaveFunction::Grid(g) => PhaseSpaceDensity::Grid(GridDensity {
            grid: g.grid().clone(),
            values: g.values().iter().map(|a| a.norm_sqr()).collect(),
            source: None,
        }),
    }
}

/// `∫ A ρ dq dp` using the state's own quadrature; `rho` must be normalized.
pub fn expectation(obs: &Observable, rho: &PhaseSpaceDensity) -> Result<f64> {
    let total = rho.total();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { total });
    }
    Ok(expectation_raw(obs, rho))
}

/// `∫ A ρ dq dp` without the normalization check.
pub fn expectation_raw(obs: &Observable, rho: &PhaseSpaceDensity) -> f64 {
    match rho {
        PhaseSpaceDensity::Ensemble(e) => compensated_sum(
            e.points.iter().zip(e.masses()).map(|(z, m)| if m == 0.0 { 0.0 } else { m * obs.eval(z.q(), z.p()) }),
        ),
        PhaseSpaceDensity::Grid(g) => {
            let mut z = vec![0.0; g.grid.dims()];
            let sum = compensated_sum(g.values.iter().enumerate().map(|(i, v)| {
                if *v == 0.0 {
                    return 0.0;
                }
                g.grid.point(i, &mut z);
                v * obs.eval_packed(&z)
            }));
            g.grid.cell_volume() * sum
        }
        PhaseSpaceDensity::Sheet(s) => {
            let p = [s.p_support];
            compensated_sum(s.support_points().map(|(q, m)| m * obs.eval(&[q], &p)))
        }
    }
}
