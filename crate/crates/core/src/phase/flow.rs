//! Flow maps and Liouville actions.

use serde::Serialize;

use super::integrator::{FlowStats, IntegratorConfig};
use super::model::{fd_step, Hamiltonian};
use super::point::PhasePoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub point: PhasePoint,
    pub t: f64,
    pub stats: FlowStats,
}

pub fn evaluate_hamiltonian<M: Hamiltonian + ?Sized>(model: &M, z: &PhasePoint, t: f64) -> Result<f64> {
    z.ensure_dof(model.dof())?;
    Ok(model.value(z.q(), z.p(), t))
}

/// `(L A)(z) = Σᵢ ∂H/∂qᵢ ∂A/∂pᵢ − ∂H/∂pᵢ ∂A/∂qᵢ` with `A`'s derivatives by
/// central differences.
///
/// With this operator `∂ρ/∂t = L ρ` for densities, while phase functions
/// carried along trajectories obey `dA/dt = −L A = {A, H}`; see
/// [`observable_rate`].
pub fn poisson_bracket_action<M, A>(model: &M, observable: A, z: &PhasePoint, t: f64) -> Result<f64>
where
    M: Hamiltonian + ?Sized,
    A: Fn(&[f64], &[f64]) -> f64,
{
    let n = model.dof();
    z.ensure_dof(n)?;
    let mut hq = vec![0.0; n];
    let mut hp = vec![0.0; n];
    model.grad_q(z.q(), z.p(), t, &mut hq);
    model.grad_p(z.q(), z.p(), t, &mut hp);
    let mut q = z.q().to_vec();
    let mut p = z.p().to_vec();
    let mut acc = 0.0;
    for i in 0..n {
        let h = fd_step(q[i], model.length_scale());
        let x = q[i];
        q[i] = x + h;
        let up = observable(&q, &p);
        q[i] = x - h;
        let dn = observable(&q, &p);
        q[i] = x;
        let da_dq = (up - dn) / (2.0 * h);

        let h = fd_step(p[i], model.length_scale());
        let x = p[i];
        p[i] = x + h;
        let up = observable(&q, &p);
        p[i] = x - h;
        let dn = observable(&q, &p);
        p[i] = x;
        let da_dp = (up - dn) / (2.0 * h);

        if !(da_dq.is_finite() && da_dp.is_finite()) {
            return Err(Error::NumericDerivative(format!("observable derivative at component {i}")));
        }
        acc += hq[i] * da_dp - hp[i] * da_dq;
    }
    Ok(acc)
}

/// Rate of change of `A` along the trajectory through `z`: `dA/dt = {A, H}`.
pub fn observable_rate<M, A>(model: &M, observable: A, z: &PhasePoint, t: f64) -> Result<f64>
where
    M: Hamiltonian + ?Sized,
    A: Fn(&[f64], &[f64]) -> f64,
{
    poisson_bracket_action(model, observable, z, t).map(|x| -x)
}

/// `Φ_t(z0)` starting at time zero.
pub fn flow<M: Hamiltonian + ?Sized>(
    model: &M,
    z0: &PhasePoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowResult> {
    advance(model, z0, 0.0, t, cfg)
}

/// `Φ_t⁻¹(z)`: the point at time zero that reaches `z` at time `t`.
pub fn inverse_flow<M: Hamiltonian + ?Sized>(
    model: &M,
    z: &PhasePoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowResult> {
    let mut r = advance(model, z, t, 0.0, cfg)?;
    r.t = 0.0;
    Ok(r)
}

/// Moves `z` from time `t0` to time `t1`.
pub fn advance<M: Hamiltonian + ?Sized>(
    model: &M,
    z: &PhasePoint,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowResult> {
    z.ensure_dof(model.dof())?;
    let stepper = cfg.stepper(model, z, t0)?;
    let mut point = z.clone();
    let (q, p) = point.parts_mut();
    let stats = stepper.advance(model, q, p, t0, t1)?;
    point.check_finite()?;
    Ok(FlowResult { point, t: t1, stats })
}
