//! The sensitivity matrix `𝒯(t) = ∂z(t)/∂z₀`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::numerics::Numerics;
use crate::phase::{Hamiltonian, PhasePoint, Stepper};

/// Jacobian of the flow in packed `(q, p)` order: blocks
/// `[∂q/∂q₀, ∂q/∂p₀; ∂p/∂q₀, ∂p/∂p₀]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub entries: DMatrix<f64>,
    pub t: f64,
    pub base_point: PhasePoint,
}

impl SensitivityMatrix {
    pub fn identity(z0: PhasePoint) -> Self {
        let d = 2 * z0.dof();
        SensitivityMatrix { entries: DMatrix::identity(d, d), t: 0.0, base_point: z0 }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    pub fn det_error(&self) -> f64 {
        (self.determinant() - 1.0).abs()
    }

    /// Largest entrywise difference to `other`.
    pub fn max_difference(&self, other: &SensitivityMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Eigenvalues of `ln(𝒯ᵀ𝒯)/(2t)`, descending. Loses the contracting
    /// directions to roundoff once `𝒯` is large; intended for short times.
    pub fn finite_time_exponents(&self) -> Result<Vec<f64>> {
        if self.t == 0.0 {
            return Err(invalid("t", "finite-time exponents need t ≠ 0"));
        }
        let sv = self.entries.clone().svd(false, false).singular_values;
        let mut out: Vec<f64> = sv.iter().map(|s| s.ln() / self.t).collect();
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(out)
    }
}

/// Integrates the variational equations `d(δz)/dt = J·Hess(H)·δz` with the
/// trajectory from time 0 to `t`. Splitting schemes and kicked maps carry the
/// exact Jacobian of the numerical step, so the determinant stays at 1 to
/// roundoff.
pub fn tangent_flow<M: Hamiltonian + ?Sized>(
    model: &M,
    z0: &PhasePoint,
    t: f64,
    num: &Numerics,
) -> Result<SensitivityMatrix> {
    z0.ensure_dof(model.dof())?;
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    let d = 2 * model.dof();
    let mut tan = identity_columns(d);
    let mut z = z0.clone();
    if t != 0.0 {
        let stepper = tangent_stepper(model, z0, num)?;
        let (q, p) = z.parts_mut();
        stepper.advance_with_tangent(model, q, p, 0.0, t, Some(&mut tan))?;
    }
    if tan.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("tangent flow"));
    }
    // Column j of the frame is ∂z/∂z₀ⱼ.
    let entries = DMatrix::from_column_slice(d, d, &tan);
    Ok(SensitivityMatrix { entries, t, base_point: z0.clone() })
}

/// [`tangent_flow`] at each of the ascending, non-negative `times`, along one
/// trajectory.
pub fn tangent_flow_series<M: Hamiltonian + ?Sized>(
    model: &M,
    z0: &PhasePoint,
    times: &[f64],
    num: &Numerics,
) -> Result<Vec<SensitivityMatrix>> {
    z0.ensure_dof(model.dof())?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be finite, non-negative and ascending"));
    }
    let d = 2 * model.dof();
    let mut tan = identity_columns(d);
    let mut z = z0.clone();
    let stepper = tangent_stepper(model, z0, num)?;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t > now {
            let (q, p) = z.parts_mut();
            stepper.advance_with_tangent(model, q, p, now, t, Some(&mut tan))?;
            now = t;
        }
        if tan.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("tangent flow"));
        }
        out.push(SensitivityMatrix { entries: DMatrix::from_column_slice(d, d, &tan), t, base_point: z0.clone() });
    }
    Ok(out)
}

/// Central-difference Jacobian of the flow map with step `h`, all points
/// pushed through one resolved stepper.
pub fn finite_difference_sensitivity<M: Hamiltonian + ?Sized>(
    model: &M,
    z0: &PhasePoint,
    t: f64,
    h: f64,
    num: &Numerics,
) -> Result<SensitivityMatrix> {
    z0.ensure_dof(model.dof())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", "must be positive"));
    }
    let d = 2 * model.dof();
    let n = model.dof();
    if t == 0.0 {
        return Ok(SensitivityMatrix::identity(z0.clone()));
    }
    let stepper = tangent_stepper(model, z0, num)?;
    let image = |z: &[f64]| -> Result<Vec<f64>> {
        let mut q = z[..n].to_vec();
        let mut p = z[n..].to_vec();
        stepper.advance(model, &mut q, &mut p, 0.0, t)?;
        q.extend(p);
        Ok(q)
    };
    let base = z0.packed();
    let mut entries = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut up = base.clone();
        up[j] += h;
        let mut dn = base.clone();
        dn[j] -= h;
        let (a, b) = (image(&up)?, image(&dn)?);
        for i in 0..d {
            entries[(i, j)] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    Ok(SensitivityMatrix { entries, t, base_point: z0.clone() })
}

/// Step resolution for tangent work. The base trajectory alone can be a poor
/// probe (at an equilibrium it shows no error at all), so points displaced by
/// the model's length scale along each axis are probed too.
pub(crate) fn tangent_stepper<M: Hamiltonian + ?Sized>(model: &M, z0: &PhasePoint, num: &Numerics) -> Result<Stepper> {
    let base = z0.packed();
    let mut probes = vec![z0.clone()];
    for j in 0..base.len() {
        let mut z = base.clone();
        z[j] += model.length_scale();
        probes.push(PhasePoint::from_packed(&z)?);
    }
    num.stepper_for(model, &probes, 0.0)
}

pub(crate) fn identity_columns(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d * d];
    for j in 0..d {
        v[j * d + j] = 1.0;
    }
    v
}
