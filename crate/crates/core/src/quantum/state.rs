//! Density operators on the truncated basis.

use num_complex::Complex64;

use super::operator::{CMatrix, CVector, HilbertOperator};
use super::system::QuantumSystem;
use crate::error::{invalid, Error, Result};

const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    rho: HilbertOperator,
    /// Pure components when the state was assembled from vectors.
    parts: Option<Vec<(f64, CVector)>>,
}

impl QuantumState {
    /// Validates trace, hermiticity and positivity.
    pub fn new(rho: HilbertOperator) -> Result<Self> {
        QuantumState::checked(rho, None)
    }

    /// States assembled from weighted vectors are positive by construction;
    /// only general densities go through the eigenvalue check.
    fn checked(rho: HilbertOperator, parts: Option<Vec<(f64, CVector)>>) -> Result<Self> {
        if !rho.is_hermitian() {
            return Err(Error::NonHermitian { deviation: rho.hermiticity_deviation() });
        }
        let tr = rho.entries().trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::NotNormalized { total: tr.re });
        }
        if parts.is_none() {
            let min = rho.hermitian_eigenvalues()?[0];
            if min.is_nan() {
                return Err(Error::NonFinite("state spectrum"));
            }
            if min < -STATE_TOL {
                return Err(invalid("state", format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(QuantumState { rho, parts })
    }

    /// `|ψ⟩⟨ψ|` after normalizing `ψ`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("psi", "needs a finite, non-zero vector"));
        }
        let v = psi / Complex64::new(norm, 0.0);
        let rho = HilbertOperator::new(&v * v.adjoint())?;
        QuantumState::checked(rho, Some(vec![(1.0, v)]))
    }

    pub fn number(system: &QuantumSystem, n: usize) -> Result<Self> {
        if n >= system.dim {
            return Err(invalid("n", format!("must be below the dimension {}", system.dim)));
        }
        let mut v = CVector::zeros(system.dim);
        v[n] = Complex64::new(1.0, 0.0);
        QuantumState::pure(&v)
    }

    /// Coherent state of the reference oscillator centred at `(q0, p0)`,
    /// renormalized on the truncated basis.
    pub fn coherent(system: &QuantumSystem, q0: f64, p0: f64) -> Result<Self> {
        QuantumState::pure(&coherent_vector(system, q0, p0)?)
    }

    /// `Σ wᵢ ρᵢ` with non-negative weights summing to 1.
    pub fn mixed(parts: &[(f64, QuantumState)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| invalid("parts", "needs at least one component"))?;
        let n = first.1.dim();
        let mut acc = CMatrix::zeros(n, n);
        let mut pure = Some(Vec::new());
        for (w, s) in parts {
            if !(*w >= 0.0) || s.dim() != n {
                return Err(invalid("parts", "weights must be non-negative and dimensions equal"));
            }
            acc += s.rho.entries() * Complex64::new(*w, 0.0);
            match (&mut pure, &s.parts) {
                (Some(list), Some(sp)) => list.extend(sp.iter().map(|(v, psi)| (w * v, psi.clone()))),
                _ => pure = None,
            }
        }
        let pure = pure.map(|l| l.into_iter().filter(|(w, _)| *w > 0.0).collect());
        QuantumState::checked(HilbertOperator::new(acc)?, pure)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn density(&self) -> &HilbertOperator {
        &self.rho
    }

    /// `tr(Âρ̂)`.
    pub fn expectation(&self, a: &HilbertOperator) -> Complex64 {
        (a.entries() * self.rho.entries()).trace()
    }

    /// Weighted pure components: the ones the state was built from, or else
    /// the spectral decomposition with weights below `1e-15` dropped.
    pub fn components(&self) -> Result<Vec<(f64, CVector)>> {
        if let Some(parts) = &self.parts {
            return Ok(parts.clone());
        }
        let eig = self.rho.entries().clone().symmetric_eigen();
        let mut out = Vec::new();
        for (j, &w) in eig.eigenvalues.iter().enumerate() {
            if w > 1e-15 {
                out.push((w, eig.eigenvectors.column(j).into_owned()));
            }
        }
        if out.iter().any(|(w, v)| !w.is_finite() || v.iter().any(|z| !z.is_finite())) {
            return Err(Error::NonFinite("state decomposition"));
        }
        Ok(out)
    }

    /// Probability outside the leading `k` basis states.
    pub fn edge_population(&self, k: usize) -> f64 {
        (k..self.dim()).map(|i| self.rho.entries()[(i, i)].re).sum::<f64>().max(0.0)
    }
}

pub(crate) fn coherent_vector(system: &QuantumSystem, q0: f64, p0: f64) -> Result<CVector> {
    if !(q0.is_finite() && p0.is_finite()) {
        return Err(Error::NonFinite("coherent state centre"));
    }
    let (m, w, hbar) = (system.mass, system.omega_ref, system.hbar);
    let alpha = Complex64::new(q0 * (m * w / (2.0 * hbar)).sqrt(), p0 / (2.0 * hbar * m * w).sqrt());
    let mut v = CVector::zeros(system.dim);
    // αⁿ/√n! by recursion, then the common factor.
    let mut c = Complex64::new(1.0, 0.0);
    for n in 0..system.dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v[n] = c;
    }
    let norm = v.norm();
    Ok(v / Complex64::new(norm, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::Model;

    fn system() -> QuantumSystem {
        QuantumSystem::from_model(&Model::harmonic(1.0, 1.0), 40, 1.0, 1.0).unwrap()
    }

    #[test]
    fn coherent_state_moments() {
        let s = system();
        let st = QuantumState::coherent(&s, 0.8, -0.5).unwrap();
        assert!((st.expectation(&s.q_op).re - 0.8).abs() < 1e-12);
        assert!((st.expectation(&s.p_op).re + 0.5).abs() < 1e-12);
        let q2 = st.expectation(&s.q_op.mul(&s.q_op).unwrap()).re;
        assert!((q2 - 0.64 - 0.5).abs() < 1e-12);
        assert!(st.edge_population(s.interior_dim) < 1e-20);
    }

    #[test]
    fn validation() {
        let s = system();
        let bad = HilbertOperator::identity(40);
        assert!(QuantumState::new(bad).is_err());
        let a = QuantumState::number(&s, 0).unwrap();
        let b = QuantumState::number(&s, 3).unwrap();
        let mix = QuantumState::mixed(&[(0.25, a), (0.75, b)]).unwrap();
        let comps = mix.components().unwrap();
        assert_eq!(comps.len(), 2);
        let general = QuantumState::new(mix.density().clone()).unwrap();
        let spectral = general.components().unwrap();
        assert_eq!(spectral.len(), 2);
        assert!(spectral.iter().any(|(w, _)| (w - 0.75).abs() < 1e-14));
        assert!((comps.iter().map(|c| c.0).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(QuantumState::number(&s, 40).is_err());
    }
}
