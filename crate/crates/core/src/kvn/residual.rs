//! Discrete residual of the Liouville equation on a grid time series.

use super::density::{GridDensity, PhaseSpaceDensity};
use super::grid::GridSpec;
use crate::error::{invalid, Error, Result};
use crate::par::compensated_sum;
use crate::phase::Hamiltonian;

/// Densities on one grid at uniformly spaced times.
#[derive(Debug, Clone)]
pub struct DensitySeries {
    grid: GridSpec,
    t0: f64,
    dt: f64,
    slices: Vec<Vec<f64>>,
}

impl DensitySeries {
    pub fn new(grid: GridSpec, times: &[f64], slices: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != slices.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: slices.len() });
        }
        if times.len() < 3 {
            return Err(Error::TooFewPoints { got: times.len(), need: 3 });
        }
        if let Some(s) = slices.iter().find(|s| s.len() != grid.len()) {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: s.len() });
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("times", "must be finite and increasing"));
        }
        for (k, t) in times.iter().enumerate() {
            if (t - (times[0] + k as f64 * dt)).abs() > 1e-9 * dt.max(t.abs()) {
                return Err(invalid("times", "spacing must be uniform"));
            }
        }
        Ok(DensitySeries { grid, t0: times[0], dt, slices })
    }

    /// Builds a series from grid densities, all on the same grid.
    pub fn from_densities(times: &[f64], densities: Vec<PhaseSpaceDensity>) -> Result<Self> {
        let mut grid: Option<GridSpec> = None;
        let mut slices = Vec::with_capacity(densities.len());
        for d in densities {
            let PhaseSpaceDensity::Grid(GridDensity { grid: g, values, .. }) = d else {
                return Err(Error::Unsupported("residual needs grid densities".into()));
            };
            match &grid {
                Some(g0) if *g0 != g => return Err(invalid("series", "all slices must share one grid")),
                Some(_) => {}
                None => grid = Some(g),
            }
            slices.push(values);
        }
        let grid = grid.ok_or(Error::TooFewPoints { got: 0, need: 3 })?;
        DensitySeries::new(grid, times, slices)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Residual norm together with the size of `∂ρ/∂t` it is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub norm: f64,
    pub reference: f64,
}

impl ResidualReport {
    pub fn relative(&self) -> f64 {
        if self.reference > 0.0 {
            self.norm / self.reference
        } else {
            self.norm
        }
    }
}

/// RMS of `∂ρ/∂t − Σ (∂H/∂q ∂ρ/∂p − ∂H/∂p ∂ρ/∂q)` over interior cells and
/// interior time slices, using second-order central differences.
pub fn liouville_residual<M: Hamiltonian + ?Sized>(series: &DensitySeries, model: &M) -> Result<f64> {
    Ok(liouville_residual_report(series, model)?.norm)
}

pub fn liouville_residual_report<M: Hamiltonian + ?Sized>(series: &DensitySeries, model: &M) -> Result<ResidualReport> {
    let grid = &series.grid;
    let n = model.dof();
    if grid.dof() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grid.dof() });
    }
    let dims = grid.dims();
    let strides: Vec<usize> = (0..dims).map(|a| grid.stride(a)).collect();
    let inv_2h: Vec<f64> = (0..dims).map(|a| 0.5 / grid.spacing(a)).collect();
    let inv_2dt = 0.5 / series.dt;

    let mut idx = vec![0usize; dims];
    let mut z = vec![0.0; dims];
    let mut gq = vec![0.0; n];
    let mut gp = vec![0.0; n];
    let mut res = Vec::new();
    let mut rate = Vec::new();
    for k in 1..series.len() - 1 {
        let t = series.time(k);
        let (prev, cur, next) = (&series.slices[k - 1], &series.slices[k], &series.slices[k + 1]);
        for i in 0..grid.len() {
            grid.multi_index(i, &mut idx);
            if idx.iter().zip(grid.shape()).any(|(&j, &m)| j == 0 || j + 1 == m) {
                continue;
            }
            grid.point(i, &mut z);
            let (q, p) = z.split_at(n);
            model.grad_q(q, p, t, &mut gq);
            model.grad_p(q, p, t, &mut gp);
            let d = |a: usize| (cur[i + strides[a]] - cur[i - strides[a]]) * inv_2h[a];
            let l: f64 = (0..n).map(|j| gq[j] * d(n + j) - gp[j] * d(j)).sum();
            let dt = (next[i] - prev[i]) * inv_2dt;
            res.push((dt - l) * (dt - l));
            rate.push(dt * dt);
        }
    }
    if res.is_empty() {
        return Err(Error::TooFewPoints { got: 0, need: 1 });
    }
    let count = res.len() as f64;
    let norm = (compensated_sum(res) / count).sqrt();
    let reference = (compensated_sum(rate) / count).sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite("liouville residual"));
    }
    Ok(ResidualReport { norm, reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kvn::state::GaussianState;
    use crate::phase::Model;

    fn rotating(n: usize, steps: usize, dt: f64, shift: f64) -> DensitySeries {
        // exact harmonic solution: Gaussian rotated rigidly in phase space
        let g = GaussianState::one(1.0, 0.0, 0.4, 0.4);
        let grid = GridSpec::plane((-3.0, 3.0), (-3.0, 3.0), n, n).unwrap();
        let times: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
        let slices = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let dq = if k == steps / 2 { shift } else { 0.0 };
                let (c, s) = (t.cos(), t.sin());
                grid.points().iter().map(|z| g.density(&[c * z[0] - s * z[1] - dq, s * z[0] + c * z[1]])).collect()
            })
            .collect();
        DensitySeries::new(grid, &times, slices).unwrap()
    }

    #[test]
    fn second_order_under_refinement() {
        let m = Model::harmonic(1.0, 1.0);
        let coarse = liouville_residual(&rotating(41, 3, 0.02, 0.0), &m).unwrap();
        let fine = liouville_residual(&rotating(81, 3, 0.01, 0.0), &m).unwrap();
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() < 0.25, "observed order {order}");
    }

    #[test]
    fn stationary_density_is_a_solution() {
        let m = Model::quartic(1.0, 0.5);
        let grid = GridSpec::plane((-3.0, 3.0), (-3.0, 3.0), 61, 61).unwrap();
        let slice: Vec<f64> = grid.points().iter().map(|z| (-m.value(&z[..1], &z[1..], 0.0)).exp()).collect();
        let s = DensitySeries::new(grid, &[0.0, 0.1, 0.2], vec![slice.clone(), slice.clone(), slice]).unwrap();
        let r = liouville_residual_report(&s, &m).unwrap();
        assert!(r.norm < 1e-2 && r.reference == 0.0);
    }

    #[test]
    fn shifted_slice_is_detected() {
        let m = Model::harmonic(1.0, 1.0);
        let good = liouville_residual(&rotating(61, 5, 0.02, 0.0), &m).unwrap();
        let bad = liouville_residual(&rotating(61, 5, 0.02, 0.1), &m).unwrap();
        assert!(bad > 50.0 * good, "{bad} vs {good}");
    }

    #[test]
    fn rejects_non_uniform_times() {
        let grid = GridSpec::plane((-1.0, 1.0), (-1.0, 1.0), 5, 5).unwrap();
        let s = vec![vec![0.0; 25]; 3];
        assert!(DensitySeries::new(grid.clone(), &[0.0, 0.1, 0.3], s.clone()).is_err());
        assert!(DensitySeries::new(grid, &[0.0, 0.1], s[..2].to_vec()).is_err());
    }
}
