//! KvN wavefunctions in weighted-ensemble and grid form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{invalid, Error, Result};
use crate::numerics::Numerics;
use crate::par::{self, compensated_sum};
use crate::phase::{Hamiltonian, PhasePoint};
use crate::quadrature::gauss_hermite;

/// Independent Gaussian density in every canonical coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianState {
    pub mean_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub sigma_q: Vec<f64>,
    pub sigma_p: Vec<f64>,
}

impl GaussianState {
    pub fn one(mean_q: f64, mean_p: f64, sigma_q: f64, sigma_p: f64) -> Self {
        GaussianState { mean_q: vec![mean_q], mean_p: vec![mean_p], sigma_q: vec![sigma_q], sigma_p: vec![sigma_p] }
    }

    pub fn dof(&self) -> usize {
        self.mean_q.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mean_q.len();
        for len in [self.mean_p.len(), self.sigma_q.len(), self.sigma_p.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if n == 0 {
            return Err(invalid("gaussian", "needs at least one degree of freedom"));
        }
        if !self.sigma_q.iter().chain(&self.sigma_p).all(|s| *s > 0.0 && s.is_finite()) {
            return Err(invalid("sigma", "widths must be positive"));
        }
        if !self.mean_q.iter().chain(&self.mean_p).all(|m| m.is_finite()) {
            return Err(invalid("mean", "means must be finite"));
        }
        Ok(())
    }

    /// Means in packed order.
    pub fn mean(&self) -> Vec<f64> {
        self.mean_q.iter().chain(&self.mean_p).copied().collect()
    }

    /// Widths in packed order.
    pub fn sigma(&self) -> Vec<f64> {
        self.sigma_q.iter().chain(&self.sigma_p).copied().collect()
    }

    pub fn log_density(&self, z: &[f64]) -> f64 {
        let mean = self.mean();
        let sigma = self.sigma();
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        z.iter()
            .zip(mean.iter().zip(&sigma))
            .map(|(x, (m, s))| {
                let u = (x - m) / s;
                -0.5 * u * u - s.ln() - 0.5 * ln2pi
            })
            .sum()
    }

    pub fn density(&self, z: &[f64]) -> f64 {
        self.log_density(z).exp()
    }

    /// Real, non-negative KvN amplitude `√ρ`.
    pub fn amplitude(&self, z: &[f64]) -> f64 {
        (0.5 * self.log_density(z)).exp()
    }

    /// Tensor Gauss-Hermite ensemble with `nodes` points per axis.
    pub fn ensemble(&self, nodes: usize) -> Result<EnsembleWave> {
        self.validate()?;
        let (x, w) = gauss_hermite(nodes)?;
        let mean = self.mean();
        let sigma = self.sigma();
        let d = mean.len();
        let total = nodes.checked_pow(d as u32).ok_or_else(|| invalid("nodes", "ensemble too large"))?;
        let ln_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
        let mut points = Vec::with_capacity(total);
        let mut amplitudes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        let mut z = vec![0.0; d];
        for _ in 0..total {
            let mut ln_mass = 0.0;
            for k in 0..d {
                z[k] = mean[k] + std::f64::consts::SQRT_2 * sigma[k] * x[idx[k]];
                ln_mass += w[idx[k]].ln() - ln_sqrt_pi;
            }
            let ln_rho = self.log_density(&z);
            points.push(PhasePoint::from_packed(&z)?);
            amplitudes.push(Complex64::new((0.5 * ln_rho).exp(), 0.0));
            // Measure weight = probability mass / density at the node.
            weights.push((ln_mass - ln_rho).exp());
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < nodes {
                    break;
                }
                idx[k] = 0;
            }
        }
        EnsembleWave::new(points, amplitudes, weights)
    }

    /// Box covering `±width·σ` around the mean.
    pub fn bounding_grid(&self, width: f64, n: usize) -> Result<GridSpec> {
        let mean = self.mean();
        let sigma = self.sigma();
        GridSpec::new(
            mean.iter().zip(&sigma).map(|(m, s)| m - width * s).collect(),
            mean.iter().zip(&sigma).map(|(m, s)| m + width * s).collect(),
            vec![n; mean.len()],
        )
    }
}

/// Weighted ensemble: support points carried by the flow, with amplitudes and
/// phase-space measure weights that the flow leaves untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWave {
    points: Vec<PhasePoint>,
    amplitudes: Vec<Complex64>,
    weights: Vec<f64>,
}

impl EnsembleWave {
    pub fn new(points: Vec<PhasePoint>, amplitudes: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != amplitudes.len() || points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        let Some(first) = points.first() else {
            return Err(invalid("ensemble", "needs at least one point"));
        };
        let dof = first.dof();
        for z in &points {
            z.ensure_dof(dof)?;
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "must be finite and non-negative"));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("amplitude"));
        }
        let wave = EnsembleWave { points, amplitudes, weights };
        let norm = wave.norm_squared();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("ensemble", format!("norm² must be positive, got {norm}")));
        }
        Ok(wave)
    }

    /// A single point carrying unit probability.
    pub fn point_mass(z: PhasePoint) -> Self {
        EnsembleWave { points: vec![z], amplitudes: vec![Complex64::new(1.0, 0.0)], weights: vec![1.0] }
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.points[0].dof()
    }

    pub fn norm_squared(&self) -> f64 {
        compensated_sum(self.amplitudes.iter().zip(&self.weights).map(|(a, w)| w * a.norm_sqr()))
    }

    /// Multiplies amplitudes by `exp(iθ(z))`.
    pub fn with_phase(mut self, theta: impl Fn(&[f64]) -> f64) -> Self {
        for (a, z) in self.amplitudes.iter_mut().zip(&self.points) {
            *a *= Complex64::from_polar(1.0, theta(&z.packed()));
        }
        self
    }

    /// Probes for step-size selection: first point and the highest-energy
    /// point that carries non-negligible mass.
    pub(crate) fn probes<M: Hamiltonian + ?Sized>(&self, model: &M) -> Vec<PhasePoint> {
        let mut best = 0;
        let mut best_h = f64::NEG_INFINITY;
        for (i, z) in self.points.iter().enumerate() {
            if self.weights[i] * self.amplitudes[i].norm_sqr() < 1e-14 {
                continue;
            }
            let h = model.value(z.q(), z.p(), 0.0);
            if h > best_h {
                best_h = h;
                best = i;
            }
        }
        vec![self.points[0].clone(), self.points[best].clone()]
    }

    /// Carries every support point from `t0` to `t1`.
    pub fn transported<M: Hamiltonian + ?Sized>(&self, model: &M, t0: f64, t1: f64, num: &Numerics) -> Result<Self> {
        self.points[0].ensure_dof(model.dof())?;
        let stepper = num.stepper_for(model, &self.probes(model), t0)?;
        let moved = par::try_map_range(num.exec, self.points.len(), |i| {
            let mut z = self.points[i].clone();
            let (q, p) = z.parts_mut();
            stepper.advance(model, q, p, t0, t1)?;
            z.check_finite()?;
            Ok::<_, Error>(z)
        })?;
        Ok(EnsembleWave { points: moved, amplitudes: self.amplitudes.clone(), weights: self.weights.clone() })
    }
}

/// Complex wavefunction sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWave {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl GridWave {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid wavefunction"));
        }
        let wave = GridWave { grid, values };
        let norm = wave.norm_squared();
        if !(norm > 0.0) {
            return Err(invalid("grid", "norm² must be positive"));
        }
        Ok(wave)
    }

    pub fn sample(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync + Send, num: &Numerics) -> Result<Self> {
        let values = par::map_range(num.exec, grid.len(), |i| {
            let mut z = vec![0.0; grid.dims()];
            grid.point(i, &mut z);
            f(&z)
        });
        GridWave::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_squared(&self) -> f64 {
        self.grid.cell_volume() * compensated_sum(self.values.iter().map(|v| v.norm_sqr()))
    }

    pub fn interpolate(&self, z: &[f64]) -> Complex64 {
        self.grid.interpolate(&self.values, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KvnWaveFunction {
    Ensemble(EnsembleWave),
    Grid(GridWave),
}

impl KvnWaveFunction {
    pub fn norm_squared(&self) -> f64 {
        match self {
            KvnWaveFunction::Ensemble(e) => e.norm_squared(),
            KvnWaveFunction::Grid(g) => g.norm_squared(),
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            KvnWaveFunction::Ensemble(e) => e.dof(),
            KvnWaveFunction::Grid(g) => g.grid.dof(),
        }
    }
}

/// Solves `i ∂φ/∂t = L̂ φ` by characteristics, `φ_t(z) = φ₀(Φ₋ₜ(z))`.
///
/// Ensembles carry their support points forward with unchanged amplitudes and
/// weights. Grid states are pulled back through the inverse flow and read off
/// the initial grid by cubic interpolation.
pub fn evolve_wavefunction<M: Hamiltonian + ?Sized>(
    phi0: &KvnWaveFunction,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<KvnWaveFunction> {
    if phi0.dof() != model.dof() {
        return Err(Error::DimensionMismatch { expected: model.dof(), got: phi0.dof() });
    }
    match phi0 {
        KvnWaveFunction::Ensemble(e) => Ok(KvnWaveFunction::Ensemble(e.transported(model, 0.0, t, num)?)),
        KvnWaveFunction::Grid(g) => {
            let values = pull_back_values(&g.grid, model, t, num, |z0| g.interpolate(z0))?;
            Ok(KvnWaveFunction::Grid(GridWave { grid: g.grid.clone(), values }))
        }
    }
}

/// Samples `f(Φ₋ₜ(z))` at every node of `grid`.
pub(crate) fn pull_back_values<M, T, F>(grid: &GridSpec, model: &M, t: f64, num: &Numerics, f: F) -> Result<Vec<T>>
where
    M: Hamiltonian + ?Sized,
    T: Send,
    F: Fn(&[f64]) -> T + Sync + Send,
{
    let n = model.dof();
    if grid.dof() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grid.dof() });
    }
    let mut centre = vec![0.0; grid.dims()];
    grid.point(grid.len() / 2, &mut centre);
    let mut corner = vec![0.0; grid.dims()];
    grid.point(grid.len() - 1, &mut corner);
    let probes = [PhasePoint::from_packed(&centre)?, PhasePoint::from_packed(&corner)?];
    let stepper = num.stepper_for(model, &probes, t)?;
    par::try_map_range(num.exec, grid.len(), |i| {
        let mut z = vec![0.0; 2 * n];
        grid.point(i, &mut z);
        let (q, p) = z.split_at_mut(n);
        stepper.advance(model, q, p, t, 0.0)?;
        Ok(f(&z))
    })
}

/// Evolves an analytic initial wavefunction and samples it on `grid`.
pub fn evolve_analytic<M, F>(grid: &GridSpec, model: &M, t: f64, num: &Numerics, phi0: F) -> Result<GridWave>
where
    M: Hamiltonian + ?Sized,
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    let values = pull_back_values(grid, model, t, num, phi0)?;
    GridWave::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::Model;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_ensemble_is_normalized() {
        let g = GaussianState::one(0.5, -0.2, 0.7, 1.3);
        let e = g.ensemble(40).unwrap();
        assert_eq!(e.len(), 1600);
        assert!((e.norm_squared() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn free_translation_of_a_point() {
        let wave = KvnWaveFunction::Ensemble(EnsembleWave::point_mass(PhasePoint::one(0.0, 1.0)));
        let out = evolve_wavefunction(&wave, &Model::free(1.0), 2.0, &Numerics::default()).unwrap();
        let KvnWaveFunction::Ensemble(e) = out else { panic!() };
        assert!(e.points()[0].distance(&PhasePoint::one(2.0, 1.0)) < 1e-12);
        assert_eq!(e.amplitudes()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_time_identity() {
        let g = GaussianState::one(0.0, 0.0, 1.0, 1.0);
        let wave = KvnWaveFunction::Ensemble(g.ensemble(6).unwrap());
        let out = evolve_wavefunction(&wave, &Model::quartic(1.0, 1.0), 0.0, &Numerics::default()).unwrap();
        assert_eq!(out, wave);
    }

    #[test]
    fn harmonic_period_returns_state() {
        let g = GaussianState::one(1.0, 0.0, 0.5, 0.5);
        let wave = KvnWaveFunction::Ensemble(g.ensemble(8).unwrap().with_phase(|z| z[0]));
        let out = evolve_wavefunction(&wave, &Model::harmonic(1.0, 1.0), 2.0 * PI, &Numerics::default()).unwrap();
        let (KvnWaveFunction::Ensemble(a), KvnWaveFunction::Ensemble(b)) = (&wave, &out) else { panic!() };
        for (x, y) in a.points().iter().zip(b.points()) {
            assert!(x.distance(y) < 1e-8);
        }
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn grid_characteristics_agree_with_analytic_pullback() {
        let g = GaussianState::one(0.5, 0.0, 0.6, 0.6);
        let grid = g.bounding_grid(7.0, 81).unwrap();
        let num = Numerics::default();
        let phi0 = GridWave::sample(grid.clone(), |z| Complex64::new(g.amplitude(z), 0.0), &num).unwrap();
        let model = Model::harmonic(1.0, 1.0);
        let KvnWaveFunction::Grid(interp) =
            evolve_wavefunction(&KvnWaveFunction::Grid(phi0), &model, 0.7, &num).unwrap()
        else {
            panic!()
        };
        let exact = evolve_analytic(&grid, &model, 0.7, &num, |z| Complex64::new(g.amplitude(z), 0.0)).unwrap();
        let err = interp.values().iter().zip(exact.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 2e-4, "interpolation error {err}");
    }
}
