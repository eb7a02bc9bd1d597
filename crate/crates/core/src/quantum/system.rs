//! Quantized 1D models and their propagators.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::{
    build_canonical_pair, exp_real_symmetric, ladder_parts, real_times_complex, CMatrix, HilbertOperator,
    UNITARY_TOL,
};
use crate::error::{invalid, Error, Result};
use crate::phase::{Model, ModelKind};

/// `H(t) = H₀ + amplitude·cos(ωt)·coupling`, all real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub coupling: DMatrix<f64>,
    pub amplitude: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSystem {
    pub dim: usize,
    pub hbar: f64,
    pub mass: f64,
    pub omega_ref: f64,
    pub q_op: HilbertOperator,
    pub p_op: HilbertOperator,
    pub interior_dim: usize,
    q_real: DMatrix<f64>,
    h_static: DMatrix<f64>,
    drive: Option<Drive>,
}

impl QuantumSystem {
    /// `H = p̂²/2m + Σₖ cₖ q̂ᵏ` plus an optional drive `ε q̂ cos ωt`.
    pub fn polynomial(
        dim: usize,
        hbar: f64,
        mass: f64,
        omega_ref: f64,
        coeffs: &[f64],
        drive: Option<(f64, f64)>,
    ) -> Result<Self> {
        let (q_op, p_op, interior_dim) = build_canonical_pair(dim, hbar, mass, omega_ref)?;
        let (q, b) = ladder_parts(dim, hbar, mass, omega_ref);
        // p̂ = iB, so p̂² = −B².
        let mut h = -(&b * &b) / (2.0 * mass);
        let mut power = DMatrix::identity(dim, dim);
        for (k, &c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(invalid("coeffs", "must be finite"));
            }
            if k > 0 {
                power = &power * &q;
            }
            if c != 0.0 {
                h += &power * c;
            }
        }
        let h_static = (&h + h.transpose()) * 0.5;
        let drive = drive.map(|(amplitude, omega)| Drive { coupling: q.clone(), amplitude, omega });
        Ok(QuantumSystem { dim, hbar, mass, omega_ref, q_op, p_op, interior_dim, q_real: q, h_static, drive })
    }

    /// Quantizes a built-in 1D kinetic-plus-potential model.
    pub fn from_model(model: &Model, dim: usize, hbar: f64, omega_ref: f64) -> Result<Self> {
        let m = model.mass();
        let (coeffs, drive): (Vec<f64>, _) = match model.kind() {
            ModelKind::Free { .. } => (vec![], None),
            ModelKind::Harmonic { k, .. } => (vec![0.0, 0.0, 0.5 * k], None),
            ModelKind::InvertedOscillator { k, .. } => (vec![0.0, 0.0, -0.5 * k], None),
            ModelKind::ConstantForce { f, .. } => (vec![0.0, -f], None),
            ModelKind::Quartic { lambda, .. } => (vec![0.0, 0.0, 0.0, 0.0, 0.25 * lambda], None),
            ModelKind::DoubleWellDriven { a, b, epsilon, omega, .. } => {
                (vec![0.0, 0.0, -a, 0.0, b], Some((epsilon, omega)))
            }
            other => return Err(Error::Unsupported(format!("no quantization for {other:?}"))),
        };
        QuantumSystem::polynomial(dim, hbar, m, omega_ref, &coeffs, drive)
    }

    pub fn is_driven(&self) -> bool {
        self.drive.as_ref().is_some_and(|d| d.amplitude != 0.0)
    }

    /// Drive period, if the Hamiltonian depends on time.
    pub fn period(&self) -> Option<f64> {
        self.drive
            .as_ref()
            .filter(|d| d.amplitude != 0.0 && d.omega != 0.0)
            .map(|d| 2.0 * std::f64::consts::PI / d.omega.abs())
    }

    pub(crate) fn q_real(&self) -> &DMatrix<f64> {
        &self.q_real
    }

    pub(crate) fn hamiltonian_real(&self, t: f64) -> DMatrix<f64> {
        match &self.drive {
            Some(d) if d.amplitude != 0.0 => &self.h_static + &d.coupling * (d.amplitude * (d.omega * t).cos()),
            _ => self.h_static.clone(),
        }
    }

    pub fn hamiltonian(&self, t: f64) -> Result<HilbertOperator> {
        let h = HilbertOperator::from_real(&self.hamiltonian_real(t))?;
        if !h.is_hermitian() {
            return Err(Error::NonHermitian { deviation: h.hermiticity_deviation() });
        }
        Ok(h)
    }
}

/// `Û(t₁, t₀)`: exact exponentials of `H` sampled at the midpoints of `steps`
/// equal substeps, applied in time order. Static Hamiltonians use one exact
/// exponential regardless of `steps`.
pub fn propagator_between(system: &QuantumSystem, t0: f64, t1: f64, steps: usize) -> Result<HilbertOperator> {
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::NonFinite("propagation time"));
    }
    let u = if t1 == t0 {
        CMatrix::identity(system.dim, system.dim)
    } else if !system.is_driven() {
        exp_real_symmetric(&system.h_static, t1 - t0, system.hbar)
    } else {
        if steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        let h = (t1 - t0) / steps as f64;
        let mut u = CMatrix::identity(system.dim, system.dim);
        for k in 0..steps {
            let tm = t0 + (k as f64 + 0.5) * h;
            let eig = system.hamiltonian_real(tm).symmetric_eigen();
            let v = &eig.eigenvectors;
            // u ← V e^{−iEh/ħ} Vᵀ u
            let mut w = real_times_complex(&v.transpose(), &u);
            for (i, mut row) in w.row_iter_mut().enumerate() {
                let phase = Complex64::from_polar(1.0, -eig.eigenvalues[i] * h / system.hbar);
                row.iter_mut().for_each(|z| *z *= phase);
            }
            u = real_times_complex(v, &w);
        }
        u
    };
    let u = HilbertOperator::new(u)?;
    let dev = u.unitarity_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NonUnitary { deviation: dev });
    }
    Ok(u)
}

pub fn propagator(system: &QuantumSystem, t: f64, steps: usize) -> Result<HilbertOperator> {
    propagator_between(system, 0.0, t, steps)
}
