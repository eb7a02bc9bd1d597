//! Expectation values in the Schrödinger, Heisenberg and interaction pictures.
//!
//! All three integrate against a normalized initial density `ρ₀`:
//!
//! * Schrödinger: `∫ A(z) ρ₀(Φ₋ₜ(z)) dz`, the density moved to time `t`.
//! * Heisenberg: `∫ A(Φₜ(z)) ρ₀(z) dz`, the observable moved instead.
//! * Interaction: `∫ A(Φ⁰ₜ(w)) ρ_I(w) dw` with `ρ_I = ρₜ ∘ Φ⁰ₜ`, where `Φ⁰` is
//!   the free flow of the kinetic part.
//!
//! Grid densities are evaluated on grids that follow the support, each picture
//! on its own grid, so agreement between pictures is a real check.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::support::{boundary_nodes, tracking_grid};
use crate::error::{Error, Result};
use crate::kvn::{expectation_raw, EnsembleDensity, GridDensity, GridSpec, Observable, PhaseSpaceDensity};
use crate::numerics::Numerics;
use crate::par::{self, compensated_sum};
use crate::phase::{dopri5, Hamiltonian, OperatorSplit, PhasePoint, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PictureTag {
    Schrodinger,
    Heisenberg,
    Interaction,
}

impl PictureTag {
    pub const ALL: [PictureTag; 3] = [PictureTag::Schrodinger, PictureTag::Heisenberg, PictureTag::Interaction];

    pub fn name(self) -> &'static str {
        match self {
            PictureTag::Schrodinger => "schrodinger",
            PictureTag::Heisenberg => "heisenberg",
            PictureTag::Interaction => "interaction",
        }
    }
}

impl fmt::Display for PictureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `|a − b| / max(|a|, |b|, 1)`.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn check(rho: &PhaseSpaceDensity, dof: usize) -> Result<()> {
    if rho.dof() != dof {
        return Err(Error::DimensionMismatch { expected: dof, got: rho.dof() });
    }
    let total = rho.total();
    if !rho.is_normalized() {
        return Err(Error::NotNormalized { total });
    }
    Ok(())
}

fn point_form(rho: &PhaseSpaceDensity) -> Option<EnsembleDensity> {
    match rho {
        PhaseSpaceDensity::Ensemble(e) => Some(e.clone()),
        PhaseSpaceDensity::Sheet(s) => Some(s.to_ensemble()),
        PhaseSpaceDensity::Grid(_) => None,
    }
}

/// Step selection probes: the first point and the most energetic point with mass.
fn ensemble_probes<M: Hamiltonian + ?Sized>(model: &M, e: &EnsembleDensity) -> Vec<PhasePoint> {
    let mut best = 0;
    let mut best_h = f64::NEG_INFINITY;
    for (i, (z, m)) in e.points.iter().zip(e.masses()).enumerate() {
        let h = model.value(z.q(), z.p(), 0.0);
        if m > 1e-14 && h > best_h {
            best_h = h;
            best = i;
        }
    }
    vec![e.points[0].clone(), e.points[best].clone()]
}

fn grid_probes(grid: &GridSpec) -> Result<Vec<PhasePoint>> {
    let mut z = vec![0.0; grid.dims()];
    [grid.len() / 2, 0, grid.len() - 1]
        .iter()
        .map(|&i| {
            grid.point(i, &mut z);
            PhasePoint::from_packed(&z)
        })
        .collect()
}

fn moved<M: Hamiltonian + ?Sized>(model: &M, stepper: &Stepper, z: &PhasePoint, t0: f64, t1: f64) -> Result<PhasePoint> {
    let mut out = z.clone();
    let (q, p) = out.parts_mut();
    stepper.advance(model, q, p, t0, t1)?;
    out.check_finite()?;
    Ok(out)
}

fn transport_points<M: Hamiltonian + ?Sized>(model: &M, e: &EnsembleDensity, t: f64, num: &Numerics) -> Result<Vec<PhasePoint>> {
    let stepper = num.stepper_for(model, &ensemble_probes(model, e), 0.0)?;
    par::try_map_range(num.exec, e.points.len(), |i| moved(model, &stepper, &e.points[i], 0.0, t))
}

/// Images of the grid boundary under `map`.
fn boundary_image<F>(grid: &GridSpec, num: &Numerics, map: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut [f64]) -> Result<()> + Sync + Send,
{
    let nodes = boundary_nodes(grid);
    par::try_map_range(num.exec, nodes.len(), |k| {
        let mut z = vec![0.0; grid.dims()];
        grid.point(nodes[k], &mut z);
        map(&mut z)?;
        Ok(z)
    })
}

fn flow_packed<M: Hamiltonian + ?Sized>(model: &M, stepper: &Stepper, z: &mut [f64], t0: f64, t1: f64) -> Result<()> {
    let n = z.len() / 2;
    let (q, p) = z.split_at_mut(n);
    stepper.advance(model, q, p, t0, t1)?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("flow"));
    }
    Ok(())
}

/// `ρₜ = ρ₀ ∘ Φ₋ₜ`.
///
/// Ensembles (and momentum sheets, as point masses) move their support points
/// forward. Grids are resampled on a grid of the same spacing that covers the
/// image of the original box.
pub fn pullback_density<M: Hamiltonian + ?Sized>(
    rho0: &PhaseSpaceDensity,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<PhaseSpaceDensity> {
    check(rho0, model.dof())?;
    if let Some(e) = point_form(rho0) {
        let points = transport_points(model, &e, t, num)?;
        return Ok(PhaseSpaceDensity::Ensemble(EnsembleDensity { points, ..e }));
    }
    let PhaseSpaceDensity::Grid(g) = rho0 else { unreachable!() };
    let stepper = num.stepper_for(model, &grid_probes(&g.grid)?, 0.0)?;
    let image = boundary_image(&g.grid, num, |z| flow_packed(model, &stepper, z, 0.0, t))?;
    let target = tracking_grid(&g.grid, &image)?;
    let values = par::try_map_range(num.exec, target.len(), |i| {
        let mut z = vec![0.0; target.dims()];
        target.point(i, &mut z);
        flow_packed(model, &stepper, &mut z, t, 0.0)?;
        Ok::<_, Error>(g.evaluate(&z))
    })?;
    Ok(PhaseSpaceDensity::Grid(GridDensity::new(target, values)?))
}

/// Schrödinger picture: the state carries the time dependence.
pub fn expectation_schrodinger<M: Hamiltonian + ?Sized>(
    obs: &Observable,
    rho0: &PhaseSpaceDensity,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<f64> {
    Ok(expectation_raw(obs, &pullback_density(rho0, model, t, num)?))
}

/// Heisenberg picture: `A ∘ Φₜ` integrated against the initial density.
pub fn expectation_heisenberg<M: Hamiltonian + ?Sized>(
    obs: &Observable,
    rho0: &PhaseSpaceDensity,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<f64> {
    check(rho0, model.dof())?;
    if let Some(e) = point_form(rho0) {
        let points = transport_points(model, &e, t, num)?;
        return Ok(compensated_sum(points.iter().zip(e.masses()).map(|(z, m)| m * obs.eval(z.q(), z.p()))));
    }
    let PhaseSpaceDensity::Grid(g) = rho0 else { unreachable!() };
    let stepper = num.stepper_for(model, &grid_probes(&g.grid)?, 0.0)?;
    let terms = par::try_map_range(num.exec, g.grid.len(), |i| {
        let rho = g.values[i];
        if rho == 0.0 {
            return Ok(0.0);
        }
        let mut z = vec![0.0; g.grid.dims()];
        g.grid.point(i, &mut z);
        flow_packed(model, &stepper, &mut z, 0.0, t)?;
        Ok::<_, Error>(rho * obs.eval_packed(&z))
    })?;
    Ok(g.grid.cell_volume() * compensated_sum(terms))
}

/// `A ∘ Φₜ` as an observable. Flow failures evaluate to NaN.
pub fn heisenberg_observable<M>(obs: &Observable, model: &M, t: f64, num: &Numerics) -> Result<Observable>
where
    M: Hamiltonian + Clone + 'static,
{
    let n = model.dof();
    let s = model.length_scale();
    let probe = PhasePoint::new(vec![s; n], vec![s; n])?;
    let stepper = num.stepper_for(model, &[probe], 0.0)?;
    let (model, a) = (model.clone(), obs.clone());
    Ok(Observable::new(format!("{}(t={t})", obs.name()), move |q, p| {
        let (mut q, mut p) = (q.to_vec(), p.to_vec());
        match stepper.advance(&model, &mut q, &mut p, 0.0, t) {
            Ok(_) => a.eval(&q, &p),
            Err(_) => f64::NAN,
        }
    }))
}

fn split_of<M: Hamiltonian + ?Sized>(model: &M) -> Result<OperatorSplit> {
    if model.dof() != 1 {
        return Err(Error::Unsupported("interaction picture needs one degree of freedom".into()));
    }
    model
        .split()
        .ok_or_else(|| Error::Unsupported("model has no kinetic-plus-potential split".into()))
}

fn free_packed(split: &OperatorSplit, z: &mut [f64], t: f64) {
    let (q, p) = split.free_flow(z[0], z[1], t);
    z[0] = q;
    z[1] = p;
}

/// `ρ_I(t) = ρₜ ∘ Φ⁰ₜ`.
///
/// Ensembles move their points with the interaction-picture equations of
/// motion (see [`interaction_transport`]). Grids are sampled as
/// `ρ₀ ∘ Φ₋ₜ ∘ Φ⁰ₜ` on a grid that follows the support.
pub fn interaction_density<M: Hamiltonian + ?Sized>(
    rho0: &PhaseSpaceDensity,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<PhaseSpaceDensity> {
    let split = split_of(model)?;
    check(rho0, 1)?;
    if let Some(e) = point_form(rho0) {
        let points = interaction_transport(&e.points, &split, 0.0, t, num)?;
        return Ok(PhaseSpaceDensity::Ensemble(EnsembleDensity { points, ..e }));
    }
    let PhaseSpaceDensity::Grid(g) = rho0 else { unreachable!() };
    let stepper = num.stepper_for(model, &grid_probes(&g.grid)?, 0.0)?;
    let image = boundary_image(&g.grid, num, |z| {
        flow_packed(model, &stepper, z, 0.0, t)?;
        free_packed(&split, z, -t);
        Ok(())
    })?;
    let target = tracking_grid(&g.grid, &image)?;
    let values = par::try_map_range(num.exec, target.len(), |i| {
        let mut z = [0.0; 2];
        target.point(i, &mut z);
        free_packed(&split, &mut z, t);
        flow_packed(model, &stepper, &mut z, t, 0.0)?;
        Ok::<_, Error>(g.evaluate(&z))
    })?;
    Ok(PhaseSpaceDensity::Grid(GridDensity::new(target, values)?))
}

/// Moves interaction-picture points from `t0` to `t1` along
/// `dq/dt = (t/m) V'(q + pt/m)`, `dp/dt = −V'(q + pt/m)`, the characteristics
/// of the interaction Liouvillian, with adaptive Dormand-Prince at the
/// integrator tolerance.
pub fn interaction_transport(
    points: &[PhasePoint],
    split: &OperatorSplit,
    t0: f64,
    t1: f64,
    num: &Numerics,
) -> Result<Vec<PhasePoint>> {
    let tol = num.integrator.tolerance;
    let max_steps = num.integrator.max_steps;
    let m = split.mass;
    par::try_map_range(num.exec, points.len(), |i| {
        let z = &points[i];
        if z.dof() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: z.dof() });
        }
        let mut y = [z.q()[0], z.p()[0]];
        dopri5(
            |t, y: &[f64], dy: &mut [f64]| {
                let f = split.v_prime(y[0] + y[1] * t / m);
                dy[0] = t / m * f;
                dy[1] = -f;
            },
            &mut y,
            t0,
            t1,
            tol,
            tol,
            max_steps,
        )?;
        let out = PhasePoint::one(y[0], y[1]);
        out.check_finite()?;
        Ok(out)
    })
}

/// `∫ A(Φ⁰ₜ(w)) ρ_I(w) dw`: the observable carries only the free motion.
pub fn interaction_expectation(obs: &Observable, rho_i: &PhaseSpaceDensity, split: &OperatorSplit, t: f64) -> f64 {
    let a_i = |q: f64, p: f64| {
        let (q, p) = split.free_flow(q, p, t);
        obs.eval(&[q], &[p])
    };
    match rho_i {
        PhaseSpaceDensity::Ensemble(e) => {
            compensated_sum(e.points.iter().zip(e.masses()).map(|(z, m)| m * a_i(z.q()[0], z.p()[0])))
        }
        PhaseSpaceDensity::Sheet(s) => {
            compensated_sum(s.support_points().map(|(q, m)| m * a_i(q, s.p_support())))
        }
        PhaseSpaceDensity::Grid(g) => {
            let mut z = [0.0; 2];
            let sum = compensated_sum(g.values.iter().enumerate().map(|(i, &v)| {
                if v == 0.0 {
                    return 0.0;
                }
                g.grid.point(i, &mut z);
                v * a_i(z[0], z[1])
            }));
            g.grid.cell_volume() * sum
        }
    }
}

/// Interaction picture: state under the interaction part, observable under the free part.
pub fn expectation_interaction<M: Hamiltonian + ?Sized>(
    obs: &Observable,
    rho0: &PhaseSpaceDensity,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<f64> {
    let split = split_of(model)?;
    let rho_i = interaction_density(rho0, model, t, num)?;
    Ok(interaction_expectation(obs, &rho_i, &split, t))
}

/// Dispatches on `tag`.
pub fn expectation_in<M: Hamiltonian + ?Sized>(
    tag: PictureTag,
    obs: &Observable,
    rho0: &PhaseSpaceDensity,
    model: &M,
    t: f64,
    num: &Numerics,
) -> Result<f64> {
    match tag {
        PictureTag::Schrodinger => expectation_schrodinger(obs, rho0, model, t, num),
        PictureTag::Heisenberg => expectation_heisenberg(obs, rho0, model, t, num),
        PictureTag::Interaction => expectation_interaction(obs, rho0, model, t, num),
    }
}

/// `⟨A⟩(t)` for every observable at every time, indexed `[time][observable]`.
///
/// For point ensembles the Schrödinger state and the interaction-picture
/// state are carried incrementally from one sample time to the next, while
/// Heisenberg observables are evaluated by flowing from time zero at each
/// sample. Grid densities are recomputed at every time.
pub fn expectation_series<M: Hamiltonian + ?Sized>(
    tag: PictureTag,
    observables: &[Observable],
    rho0: &PhaseSpaceDensity,
    model: &M,
    times: &[f64],
    num: &Numerics,
) -> Result<Vec<Vec<f64>>> {
    check(rho0, model.dof())?;
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(crate::error::invalid("times", "must be non-decreasing"));
    }
    let Some(e) = point_form(rho0) else {
        return times
            .iter()
            .map(|&t| match tag {
                PictureTag::Schrodinger => {
                    let rho_t = pullback_density(rho0, model, t, num)?;
                    Ok(observables.iter().map(|a| expectation_raw(a, &rho_t)).collect())
                }
                PictureTag::Heisenberg => observables.iter().map(|a| expectation_heisenberg(a, rho0, model, t, num)).collect(),
                PictureTag::Interaction => {
                    let split = split_of(model)?;
                    let rho_i = interaction_density(rho0, model, t, num)?;
                    Ok(observables.iter().map(|a| interaction_expectation(a, &rho_i, &split, t)).collect())
                }
            })
            .collect();
    };
    let mean = |pts: &[PhasePoint], a: &Observable, free: Option<(&OperatorSplit, f64)>| {
        compensated_sum(pts.iter().zip(e.masses()).map(|(z, m)| match free {
            Some((s, t)) => {
                let (q, p) = s.free_flow(z.q()[0], z.p()[0], t);
                m * a.eval(&[q], &[p])
            }
            None => m * a.eval(z.q(), z.p()),
        }))
    };
    let mut out = Vec::with_capacity(times.len());
    match tag {
        PictureTag::Schrodinger => {
            let stepper = num.stepper_for(model, &ensemble_probes(model, &e), 0.0)?;
            let mut pts = e.points.clone();
            let mut t_prev = 0.0;
            for &t in times {
                pts = par::try_map_range(num.exec, pts.len(), |i| moved(model, &stepper, &pts[i], t_prev, t))?;
                t_prev = t;
                out.push(observables.iter().map(|a| mean(&pts, a, None)).collect());
            }
        }
        PictureTag::Heisenberg => {
            let stepper = num.stepper_for(model, &ensemble_probes(model, &e), 0.0)?;
            for &t in times {
                let pts = par::try_map_range(num.exec, e.points.len(), |i| moved(model, &stepper, &e.points[i], 0.0, t))?;
                out.push(observables.iter().map(|a| mean(&pts, a, None)).collect());
            }
        }
        PictureTag::Interaction => {
            let split = split_of(model)?;
            let mut pts = e.points.clone();
            let mut t_prev = 0.0;
            for &t in times {
                pts = interaction_transport(&pts, &split, t_prev, t, num)?;
                t_prev = t;
                out.push(observables.iter().map(|a| mean(&pts, a, Some((&split, t)))).collect());
            }
        }
    }
    Ok(out)
}

/// Conjugates an existing time-`t` density by the free evolution:
/// `ρ_I = ρₜ ∘ Φ⁰ₜ`. Grid inputs without an analytic source are read by
/// cubic interpolation.
pub fn to_interaction_picture(rho_t: &PhaseSpaceDensity, split: &OperatorSplit, t: f64) -> Result<PhaseSpaceDensity> {
    if rho_t.dof() != 1 {
        return Err(Error::Unsupported("interaction picture needs one degree of freedom".into()));
    }
    match rho_t {
        PhaseSpaceDensity::Sheet(s) => {
            let p = s.p_support();
            Ok(PhaseSpaceDensity::Sheet(s.moved(s.shift() - p * t / split.mass, p)))
        }
        PhaseSpaceDensity::Ensemble(e) => {
            let points = e
                .points
                .iter()
                .map(|z| {
                    let (q, p) = split.free_flow(z.q()[0], z.p()[0], -t);
                    PhasePoint::one(q, p)
                })
                .collect();
            Ok(PhaseSpaceDensity::Ensemble(EnsembleDensity { points, ..e.clone() }))
        }
        PhaseSpaceDensity::Grid(g) => {
            let image: Vec<Vec<f64>> = boundary_nodes(&g.grid)
                .into_iter()
                .map(|i| {
                    let mut z = vec![0.0; 2];
                    g.grid.point(i, &mut z);
                    free_packed(split, &mut z, -t);
                    z
                })
                .collect();
            let target = tracking_grid(&g.grid, &image)?;
            let mut z = [0.0; 2];
            let values = (0..target.len())
                .map(|i| {
                    target.point(i, &mut z);
                    free_packed(split, &mut z, t);
                    g.evaluate(&z)
                })
                .collect();
            Ok(PhaseSpaceDensity::Grid(GridDensity::new(target, values)?))
        }
    }
}
