//! Time steppers for Hamiltonian flows.
//!
//! Separable models (`H = Σ p²/2m + V(q, t)`) use symmetric compositions of the
//! kick-drift-kick leapfrog; time enters through the drift, so the schemes stay
//! symplectic in extended phase space. Non-separable models use adaptive
//! Dormand-Prince 5(4). Kicked models use their exact stroboscopic map.

use serde::{Deserialize, Serialize};

use super::model::Hamiltonian;
use super::point::PhasePoint;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Leapfrog,
    Yoshida4,
    Yoshida6,
    DormandPrince,
}

const YOSHIDA4: [f64; 3] = {
    // 1/(2 − 2^(1/3)) and −2^(1/3)/(2 − 2^(1/3))
    let w1 = 1.351_207_191_959_657_8;
    let w0 = -1.702_414_383_919_315_5;
    [w1, w0, w1]
};

const YOSHIDA6: [f64; 7] = {
    let w1 = -1.177_679_984_178_87;
    let w2 = 0.235_573_213_359_357;
    let w3 = 0.784_513_610_477_560;
    let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
    [w3, w2, w1, w0, w1, w2, w3]
};

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Leapfrog => 2,
            Scheme::Yoshida4 => 4,
            Scheme::Yoshida6 => 6,
            Scheme::DormandPrince => 5,
        }
    }

    fn weights(self) -> &'static [f64] {
        match self {
            Scheme::Leapfrog => &[1.0],
            Scheme::Yoshida4 => &YOSHIDA4,
            Scheme::Yoshida6 => &YOSHIDA6,
            Scheme::DormandPrince => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// `None` picks Yoshida6 for separable models and Dormand-Prince otherwise.
    pub scheme: Option<Scheme>,
    /// Fixed step for splitting schemes; `None` derives it from `tolerance`.
    pub dt: Option<f64>,
    /// Error budget per unit time (phase-space distance).
    pub tolerance: f64,
    pub max_steps: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { scheme: None, dt: None, tolerance: 1e-10, max_steps: 500_000_000 }
    }
}

impl IntegratorConfig {
    pub fn with_dt(scheme: Scheme, dt: f64) -> Self {
        IntegratorConfig { scheme: Some(scheme), dt: Some(dt), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(invalid("tolerance", "must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", "must be positive"));
            }
        }
        Ok(())
    }

    /// Resolves the scheme and step size for `model`, probing near `probe`
    /// starting at time `t0` when no step is given.
    pub fn stepper<M: Hamiltonian + ?Sized>(&self, model: &M, probe: &PhasePoint, t0: f64) -> Result<Stepper> {
        self.validate()?;
        probe.ensure_dof(model.dof())?;
        if let Some(km) = model.kicked() {
            return Ok(Stepper { kind: StepperKind::Kicked { period: km.period() }, max_steps: self.max_steps });
        }
        let separable = model.kinetic_masses().is_some();
        let scheme = match self.scheme {
            Some(Scheme::DormandPrince) | None if !separable => Scheme::DormandPrince,
            Some(s) if !separable => {
                return Err(Error::Unsupported(format!("{s:?} requires a separable Hamiltonian")))
            }
            Some(s) => s,
            None => Scheme::Yoshida6,
        };
        if scheme == Scheme::DormandPrince {
            let rtol = self.tolerance;
            return Ok(Stepper {
                kind: StepperKind::Adaptive { rtol, atol: rtol },
                max_steps: self.max_steps,
            });
        }
        let mut stepper = Stepper {
            kind: StepperKind::Splitting { weights: scheme.weights(), dt: self.dt.unwrap_or(0.05), error_rate: 0.0 },
            max_steps: self.max_steps,
        };
        if self.dt.is_none() {
            stepper.tune(model, probe, t0, scheme.order(), self.tolerance)?;
        }
        Ok(stepper)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum StepperKind {
    Splitting { weights: &'static [f64], dt: f64, error_rate: f64 },
    Adaptive { rtol: f64, atol: f64 },
    Kicked { period: f64 },
}

/// Per-call integration statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FlowStats {
    pub steps: u64,
    pub dt: f64,
    /// Energy drift for autonomous flows, otherwise the accumulated local error estimate.
    pub error_estimate: f64,
}

/// A resolved integrator: fixed scheme and step, reusable across many points.
#[derive(Debug, Clone, PartialEq)]
pub struct Stepper {
    kind: StepperKind,
    max_steps: u64,
}

const DT_MAX: f64 = 0.1;
const DT_MIN: f64 = 1e-6;
/// Tuning stops following a probe orbit this many length scales away.
const ESCAPE: f64 = 10.0;

impl Stepper {
    pub fn dt(&self) -> Option<f64> {
        match self.kind {
            StepperKind::Splitting { dt, .. } => Some(dt),
            StepperKind::Kicked { period } => Some(period),
            StepperKind::Adaptive { .. } => None,
        }
    }

    fn tune<M: Hamiltonian + ?Sized>(
        &mut self,
        model: &M,
        probe: &PhasePoint,
        t0: f64,
        order: u32,
        tol: f64,
    ) -> Result<()> {
        let mut dt = DT_MAX;
        let mut rate = 0.0;
        for _ in 0..3 {
            rate = self.richardson_rate(model, probe, t0, dt, order)?;
            if rate <= tol {
                break;
            }
            let next = 0.9 * dt * (tol / rate).powf(1.0 / order as f64);
            if next < DT_MIN {
                return Err(Error::IntegrationFailure {
                    t: t0,
                    reason: format!("step {next:e} below minimum for tolerance {tol:e}"),
                });
            }
            dt = next;
        }
        self.set_dt(dt.min(DT_MAX));
        if let StepperKind::Splitting { error_rate, .. } = &mut self.kind {
            *error_rate = rate.min(tol);
        }
        Ok(())
    }

    /// Error per unit time of step `dt`, by Richardson extrapolation against
    /// `dt/2`. Worst over several unit segments: a single segment can sit on a
    /// quiet arc of the orbit and underestimate badly.
    fn richardson_rate<M: Hamiltonian + ?Sized>(
        &mut self,
        model: &M,
        probe: &PhasePoint,
        t0: f64,
        dt: f64,
        order: u32,
    ) -> Result<f64> {
        const SEGMENTS: usize = 4;
        let two_k = 2f64.powi(order as i32);
        let (mut coarse, mut fine) = (probe.clone(), probe.clone());
        let mut rate = 0.0f64;
        for k in 0..SEGMENTS {
            let (a, b) = (t0 + k as f64, t0 + (k + 1) as f64);
            self.set_dt(dt);
            let c = self.run(model, &coarse, a, b);
            self.set_dt(dt / 2.0);
            let f = self.run(model, &fine, a, b);
            match (c, f) {
                (Ok(c), Ok(f)) => (coarse, fine) = (c, f),
                // Probe orbits may escape; later segments are optional.
                (Err(_), _) | (_, Err(_)) if k > 0 => break,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
            if k > 0 && fine.distance(probe) > ESCAPE * (1.0 + model.length_scale()) {
                break;
            }
            rate = rate.max(coarse.distance(&fine) * two_k / (two_k - 1.0) / (k + 1) as f64);
        }
        Ok(rate)
    }

    fn set_dt(&mut self, new: f64) {
        if let StepperKind::Splitting { dt, .. } = &mut self.kind {
            *dt = new;
        }
    }

    fn run<M: Hamiltonian + ?Sized>(&self, model: &M, z: &PhasePoint, t0: f64, t1: f64) -> Result<PhasePoint> {
        let mut out = z.clone();
        let (q, p) = out.parts_mut();
        self.advance(model, q, p, t0, t1)?;
        Ok(out)
    }

    /// Advances `(q, p)` in place from `t0` to `t1` (either direction).
    pub fn advance<M: Hamiltonian + ?Sized>(
        &self,
        model: &M,
        q: &mut [f64],
        p: &mut [f64],
        t0: f64,
        t1: f64,
    ) -> Result<FlowStats> {
        self.advance_with_tangent(model, q, p, t0, t1, None)
    }

    /// As [`Stepper::advance`], also carrying tangent vectors. `tangent` holds
    /// `k` packed `2N` columns back to back and is mapped by the Jacobian of the
    /// numerical flow.
    pub fn advance_with_tangent<M: Hamiltonian + ?Sized>(
        &self,
        model: &M,
        q: &mut [f64],
        p: &mut [f64],
        t0: f64,
        t1: f64,
        tangent: Option<&mut [f64]>,
    ) -> Result<FlowStats> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::NonFinite("flow time"));
        }
        let n = model.dof();
        if q.len() != n || p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.len() });
        }
        if let Some(tan) = tangent.as_deref() {
            if tan.len() % (2 * n) != 0 {
                return Err(Error::DimensionMismatch { expected: 2 * n, got: tan.len() });
            }
        }
        let h_start = model.is_autonomous().then(|| model.value(q, p, t0));
        let mut stats = match &self.kind {
            StepperKind::Kicked { period } => self.kicked(model, q, p, t0, t1, *period, tangent)?,
            StepperKind::Splitting { weights, dt, error_rate } => {
                let mut s = self.splitting(model, q, p, t0, t1, weights, *dt, tangent)?;
                s.error_estimate = error_rate * (t1 - t0).abs();
                s
            }
            StepperKind::Adaptive { rtol, atol } => adaptive(model, q, p, t0, t1, *rtol, *atol, self.max_steps, tangent)?,
        };
        if !q.iter().chain(p.iter()).all(|x| x.is_finite()) {
            return Err(Error::IntegrationFailure { t: t1, reason: "state became non-finite".into() });
        }
        if let (Some(h0), None) = (h_start, model.kicked()) {
            stats.error_estimate = (model.value(q, p, t1) - h0).abs();
        }
        Ok(stats)
    }

    #[allow(clippy::too_many_arguments)]
    fn kicked<M: Hamiltonian + ?Sized>(
        &self,
        model: &M,
        q: &mut [f64],
        p: &mut [f64],
        t0: f64,
        t1: f64,
        period: f64,
        mut tangent: Option<&mut [f64]>,
    ) -> Result<FlowStats> {
        let km = model.kicked().expect("kicked stepper on kicked model");
        let periods = (t1 - t0) / period;
        let count = periods.round();
        if (periods - count).abs() > 1e-9 * periods.abs().max(1.0) {
            return Err(invalid("t", format!("kicked flow needs whole periods, got {periods}")));
        }
        let d = 2 * q.len();
        let mut jac = vec![0.0; d * d];
        let mut col = vec![0.0; d];
        let steps = count.abs() as u64;
        for _ in 0..steps {
            if count > 0.0 {
                if let Some(tan) = tangent.as_deref_mut() {
                    km.jacobian(q, p, &mut jac);
                    for c in tan.chunks_mut(d) {
                        matvec(&jac, c, &mut col);
                        c.copy_from_slice(&col);
                    }
                }
                km.step(q, p);
            } else {
                km.step_back(q, p);
                if let Some(tan) = tangent.as_deref_mut() {
                    // Inverse Jacobian of the forward step at the new (earlier) point.
                    km.jacobian(q, p, &mut jac);
                    invert_symplectic(&mut jac, d);
                    for c in tan.chunks_mut(d) {
                        matvec(&jac, c, &mut col);
                        c.copy_from_slice(&col);
                    }
                }
            }
        }
        Ok(FlowStats { steps, dt: period, error_estimate: 0.0 })
    }

    #[allow(clippy::too_many_arguments)]
    fn splitting<M: Hamiltonian + ?Sized>(
        &self,
        model: &M,
        q: &mut [f64],
        p: &mut [f64],
        t0: f64,
        t1: f64,
        weights: &[f64],
        dt: f64,
        mut tangent: Option<&mut [f64]>,
    ) -> Result<FlowStats> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(FlowStats { steps: 0, dt, error_estimate: 0.0 });
        }
        let steps = (span.abs() / dt).ceil().max(1.0);
        if steps as u64 > self.max_steps {
            return Err(Error::IntegrationFailure {
                t: t0,
                reason: format!("{steps} steps exceed the budget of {}", self.max_steps),
            });
        }
        let steps = steps as u64;
        let h = span / steps as f64;
        let masses = model.kinetic_masses().expect("splitting needs kinetic masses");
        let n = q.len();
        let d = 2 * n;
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; d * d];
        let s = weights.len();
        let kick_coeff = |i: usize| -> f64 {
            match i {
                0 => 0.5 * weights[0],
                i if i == s => 0.5 * weights[s - 1],
                i => 0.5 * (weights[i - 1] + weights[i]),
            }
        };
        let mut t = t0;
        let mut kick = |q: &[f64], p: &mut [f64], t: f64, c: f64, tangent: Option<&mut [f64]>| {
            model.grad_q(q, p, t, &mut grad);
            for i in 0..n {
                p[i] -= c * grad[i];
            }
            if let Some(tan) = tangent {
                model.hessian(q, p, t, &mut hess);
                for col in tan.chunks_mut(d) {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += hess[i * d + j] * col[j];
                        }
                        col[n + i] -= c * acc;
                    }
                }
            }
        };
        for k in 0..steps {
            for i in 0..s {
                kick(q, p, t, kick_coeff(i) * h, tangent.as_deref_mut());
                let c = weights[i] * h;
                for j in 0..n {
                    q[j] += c * p[j] / masses[j];
                }
                if let Some(tan) = tangent.as_deref_mut() {
                    for col in tan.chunks_mut(d) {
                        for j in 0..n {
                            col[j] += c * col[n + j] / masses[j];
                        }
                    }
                }
                t += c;
            }
            // Snap accumulated time to the grid to avoid drift in t.
            t = t0 + (k + 1) as f64 * h;
            kick(q, p, t, kick_coeff(s) * h, tangent.as_deref_mut());
        }
        Ok(FlowStats { steps, dt: h.abs(), error_estimate: 0.0 })
    }
}

fn matvec(a: &[f64], x: &[f64], y: &mut [f64]) {
    let d = x.len();
    for i in 0..d {
        y[i] = (0..d).map(|j| a[i * d + j] * x[j]).sum();
    }
}

/// In-place inverse of a symplectic matrix: `M⁻¹ = −J Mᵀ J`.
fn invert_symplectic(m: &mut [f64], d: usize) {
    let n = d / 2;
    let mt: Vec<f64> = (0..d * d).map(|k| m[(k % d) * d + k / d]).collect();
    // J = [[0, I], [-I, 0]]; (−J Mᵀ J)_{ij}
    for i in 0..d {
        for j in 0..d {
            let (si, ri) = if i < n { (1.0, i + n) } else { (-1.0, i - n) };
            let (sj, cj) = if j < n { (-1.0, j + n) } else { (1.0, j - n) };
            // (J A)_{i,·} = si * A_{ri,·};  (A J)_{·,j} = sj * A_{·,cj}
            m[i * d + j] = -si * sj * mt[ri * d + cj];
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) on `y' = f(t, y)`.
pub(crate) fn dopri5<F>(
    mut f: F,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
    max_steps: u64,
) -> Result<FlowStats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(FlowStats::default());
    }
    let dir = span.signum();
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut t = t0;
    let mut h = dir * (span.abs() * 1e-3).min(1e-2);
    let mut steps = 0u64;
    let mut err_total = 0.0;
    let mut last_h = h.abs();
    f(t, y, &mut k[0]);
    while dir * (t1 - t) > 0.0 {
        if steps >= max_steps {
            return Err(Error::IntegrationFailure { t, reason: "step budget exhausted".into() });
        }
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, a) in DP_A[s][..s].iter().enumerate() {
                    acc += h * a * k[j][i];
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + DP_C[s] * h, &tmp, &mut tail[0]);
        }
        let mut err = 0.0f64;
        for i in 0..dim {
            let mut y5 = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                y5 += h * DP_B[s] * k[s][i];
                e += h * DP_E[s] * k[s][i];
            }
            tmp[i] = y5;
            let sc = atol + rtol * y[i].abs().max(y5.abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::IntegrationFailure { t, reason: "non-finite error estimate".into() });
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&tmp);
            // FSAL: the last stage is f at the new point.
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            steps += 1;
            err_total += err * rtol;
            last_h = h.abs();
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure { t, reason: "step size underflow".into() });
        }
    }
    Ok(FlowStats { steps, dt: last_h, error_estimate: err_total })
}

#[allow(clippy::too_many_arguments)]
fn adaptive<M: Hamiltonian + ?Sized>(
    model: &M,
    q: &mut [f64],
    p: &mut [f64],
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
    max_steps: u64,
    tangent: Option<&mut [f64]>,
) -> Result<FlowStats> {
    let n = q.len();
    let d = 2 * n;
    let cols = tangent.as_deref().map_or(0, |t| t.len() / d);
    let mut y: Vec<f64> = q.iter().chain(p.iter()).copied().collect();
    if let Some(tan) = tangent.as_deref() {
        y.extend_from_slice(tan);
    }
    let mut gq = vec![0.0; n];
    let mut gp = vec![0.0; n];
    let mut hess = vec![0.0; d * d];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (qq, pp) = (&y[..n], &y[n..d]);
        model.grad_q(qq, pp, t, &mut gq);
        model.grad_p(qq, pp, t, &mut gp);
        for i in 0..n {
            dy[i] = gp[i];
            dy[n + i] = -gq[i];
        }
        if cols > 0 {
            model.hessian(qq, pp, t, &mut hess);
            for c in 0..cols {
                let v = &y[d + c * d..d + (c + 1) * d];
                let out = &mut dy[d + c * d..d + (c + 1) * d];
                // d(δq)/dt = H_pq δq + H_pp δp ; d(δp)/dt = −H_qq δq − H_qp δp
                for i in 0..n {
                    let mut a = 0.0;
                    let mut b = 0.0;
                    for j in 0..d {
                        a += hess[(n + i) * d + j] * v[j];
                        b += hess[i * d + j] * v[j];
                    }
                    out[i] = a;
                    out[n + i] = -b;
                }
            }
        }
    };
    let stats = dopri5(rhs, &mut y, t0, t1, rtol, atol, max_steps)?;
    q.copy_from_slice(&y[..n]);
    p.copy_from_slice(&y[n..d]);
    if let Some(tan) = tangent {
        tan.copy_from_slice(&y[d..]);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::model::{ClosureModel, Model};

    fn end_point(model: &Model, scheme: Scheme, dt: f64, z: (f64, f64), t: f64) -> (f64, f64) {
        let st = IntegratorConfig::with_dt(scheme, dt).stepper(model, &PhasePoint::one(z.0, z.1), 0.0).unwrap();
        let (mut q, mut p) = ([z.0], [z.1]);
        st.advance(model, &mut q, &mut p, 0.0, t).unwrap();
        (q[0], p[0])
    }

    #[test]
    fn composition_orders() {
        let m = Model::harmonic(1.0, 1.0);
        let exact = (2f64.cos(), -2f64.sin());
        for (scheme, dt) in [(Scheme::Leapfrog, 0.02), (Scheme::Yoshida4, 0.1), (Scheme::Yoshida6, 0.25)] {
            let e = |dt: f64| {
                let (q, p) = end_point(&m, scheme, dt, (1.0, 0.0), 2.0);
                ((q - exact.0).powi(2) + (p - exact.1).powi(2)).sqrt()
            };
            let observed = (e(dt) / e(dt / 2.0)).log2();
            let order = scheme.order() as f64;
            assert!((observed - order).abs() < 0.3, "{scheme:?}: observed {observed}");
        }
    }

    #[test]
    fn tuned_step_meets_budget() {
        let m = Model::quartic(1.0, 1.0);
        let z = PhasePoint::one(1.5, 0.0);
        let st = IntegratorConfig::default().stepper(&m, &z, 0.0).unwrap();
        let dt = st.dt().unwrap();
        assert!(dt > 1e-3 && dt <= DT_MAX, "dt = {dt}");
        let (mut q, mut p) = ([1.5], [0.0]);
        let stats = st.advance(&m, &mut q, &mut p, 0.0, 10.0).unwrap();
        assert!(stats.error_estimate < 1e-8 * 10.0);
    }

    #[test]
    fn dopri_on_nonseparable() {
        // H = (q² + p²)² / 4: rotation with angular speed (q² + p²).
        let m = ClosureModel::new(1, |q, p, _| {
            let r2 = q[0] * q[0] + p[0] * p[0];
            0.25 * r2 * r2
        })
        .unwrap()
        .with_gradients(
            |q, p, _, o| o[0] = (q[0] * q[0] + p[0] * p[0]) * q[0],
            |q, p, _, o| o[0] = (q[0] * q[0] + p[0] * p[0]) * p[0],
        );
        let cfg = IntegratorConfig { tolerance: 1e-11, ..Default::default() };
        let z = PhasePoint::one(1.2, 0.0);
        let st = cfg.stepper(&m, &z, 0.0).unwrap();
        let (mut q, mut p) = ([1.2], [0.0]);
        st.advance(&m, &mut q, &mut p, 0.0, 3.0).unwrap();
        let w = 1.44;
        assert!((q[0] - 1.2 * (w * 3.0f64).cos()).abs() < 1e-8);
        assert!((p[0] + 1.2 * (w * 3.0f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn symplectic_inverse_formula() {
        let mut m = vec![2.0, 1.0, 3.0, 2.0];
        invert_symplectic(&mut m, 2);
        assert_eq!(m, vec![2.0, -1.0, -3.0, 2.0]);
    }

    #[test]
    fn kicked_needs_whole_periods() {
        let m = Model::standard_map(1.0);
        let st = IntegratorConfig::default().stepper(&m, &PhasePoint::one(0.0, 0.0), 0.0).unwrap();
        let (mut q, mut p) = ([0.0], [0.0]);
        assert!(st.advance(&m, &mut q, &mut p, 0.0, 1.5).is_err());
    }
}
