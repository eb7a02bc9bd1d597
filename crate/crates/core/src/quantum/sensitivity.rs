//! The commutator sensitivity operator and its variance bound.

use num_complex::Complex64;
use serde::Serialize;

use super::operator::{real_times_vector, CMatrix, CVector, HilbertOperator, UNITARY_TOL};
use super::state::QuantumState;
use super::system::{propagator, propagator_between, QuantumSystem};
use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};

const BLOCK_HERMITIAN_TOL: f64 = 1e-10;
const IMAGINARY_WARN: f64 = 1e-8;
const EDGE_WARN: f64 = 1e-10;
/// Multiplicative slack on the variance bound.
pub const BOUND_SLACK: f64 = 1e-10;

/// `Â(t) = Û†ÂÛ`.
pub fn heisenberg_operator(u: &HilbertOperator, a: &HilbertOperator) -> Result<HilbertOperator> {
    let dev = u.unitarity_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NonUnitary { deviation: dev });
    }
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: a.dim() });
    }
    let out = u.entries().adjoint() * a.entries() * u.entries();
    // Keep Hermitian inputs exactly Hermitian.
    let out = if a.is_hermitian() { (&out + out.adjoint()).map(|z| z * 0.5) } else { out };
    HilbertOperator::new(out)
}

/// Blocks `(−i/ħ)[q̂(t), p̂₀]`, `(i/ħ)[q̂(t), q̂₀]`, `(−i/ħ)[p̂(t), p̂₀]`,
/// `(i/ħ)[p̂(t), q̂₀]`, laid out like the classical `∂(q, p)/∂(q₀, p₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSensitivity {
    pub blocks: [[HilbertOperator; 2]; 2],
    pub t: f64,
    pub interior_dim: usize,
}

pub fn sensitivity_operator(system: &QuantumSystem, t: f64, steps: usize) -> Result<QuantumSensitivity> {
    let u = propagator(system, t, steps)?;
    let q_t = heisenberg_operator(&u, &system.q_op)?;
    let p_t = heisenberg_operator(&u, &system.p_op)?;
    let minus_i = Complex64::new(0.0, -1.0 / system.hbar);
    let plus_i = Complex64::new(0.0, 1.0 / system.hbar);
    let blocks = [
        [q_t.commutator(&system.p_op)?.scaled(minus_i)?, q_t.commutator(&system.q_op)?.scaled(plus_i)?],
        [p_t.commutator(&system.p_op)?.scaled(minus_i)?, p_t.commutator(&system.q_op)?.scaled(plus_i)?],
    ];
    for b in blocks.iter().flatten() {
        let dev = interior_hermiticity(b.entries(), system.interior_dim);
        if dev > BLOCK_HERMITIAN_TOL {
            return Err(Error::NonHermitian { deviation: dev });
        }
    }
    Ok(QuantumSensitivity { blocks, t, interior_dim: system.interior_dim })
}

fn interior_hermiticity(m: &CMatrix, k: usize) -> f64 {
    let v = m.view((0, 0), (k, k));
    (v - v.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityExpectation {
    pub matrix: [[f64; 2]; 2],
    /// Largest discarded imaginary part.
    pub imaginary_residue: f64,
    /// Set when the imaginary residue exceeds `1e-8`, which signals truncation.
    pub truncation_warning: bool,
}

impl SensitivityExpectation {
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Entrywise `tr(𝒯̂ᵢⱼ ρ̂)`.
pub fn sensitivity_expectation(sens: &QuantumSensitivity, state: &QuantumState) -> Result<SensitivityExpectation> {
    if sens.blocks[0][0].dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: sens.blocks[0][0].dim(), got: state.dim() });
    }
    let mut matrix = [[0.0; 2]; 2];
    let mut residue = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let z = state.expectation(&sens.blocks[i][j]);
            matrix[i][j] = z.re;
            residue = residue.max(z.im.abs());
        }
    }
    let warn = residue > IMAGINARY_WARN;
    if warn {
        log::warn!("sensitivity expectation has imaginary residue {residue:e} at t = {}", sens.t);
    }
    Ok(SensitivityExpectation { matrix, imaginary_residue: residue, truncation_warning: warn })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub t: f64,
    /// `|tr(𝒯̂ᵢⱼ ρ̂)|`
    pub lhs: [[f64; 2]; 2],
    /// `(2/ħ) δzᵢ(t) δz̃ⱼ(0)` with `z̃ = (p, q)` the conjugate partner.
    pub rhs: [[f64; 2]; 2],
    pub satisfied: bool,
    /// Signed expectation matrix.
    pub expectation: [[f64; 2]; 2],
    pub imaginary_residue: f64,
    /// Probability outside the interior subspace at time `t`.
    pub edge_population: f64,
}

impl BoundReport {
    /// `min (rhs − lhs)` over entries.
    pub fn margin(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..2 {
            for j in 0..2 {
                m = m.min(self.rhs[i][j] - self.lhs[i][j]);
            }
        }
        m
    }

    pub fn norm(&self) -> f64 {
        self.expectation.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn truncation_warning(&self) -> bool {
        self.imaginary_residue > IMAGINARY_WARN || self.edge_population > EDGE_WARN
    }

    fn new(t: f64, expectation: [[f64; 2]; 2], rhs: [[f64; 2]; 2], residue: f64, edge: f64) -> Self {
        let lhs = expectation.map(|row| row.map(f64::abs));
        let satisfied = (0..2).all(|i| (0..2).all(|j| lhs[i][j] <= rhs[i][j] * (1.0 + BOUND_SLACK)));
        BoundReport { t, lhs, rhs, satisfied, expectation, imaginary_residue: residue, edge_population: edge }
    }

    /// Largest change of any lhs or rhs entry between two reports.
    pub fn max_entry_change(&self, other: &BoundReport) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.lhs[i][j] - other.lhs[i][j]).abs());
                d = d.max((self.rhs[i][j] - other.rhs[i][j]).abs());
            }
        }
        d
    }
}

/// Dense check of the variance bound at one time.
pub fn bound_check(system: &QuantumSystem, state: &QuantumState, t: f64, steps: usize) -> Result<BoundReport> {
    let sens = sensitivity_operator(system, t, steps)?;
    let ex = sensitivity_expectation(&sens, state)?;
    let u = propagator(system, t, steps)?;
    let q_t = heisenberg_operator(&u, &system.q_op)?;
    let p_t = heisenberg_operator(&u, &system.p_op)?;
    let sd = |a: &HilbertOperator| -> Result<f64> {
        let m = state.expectation(a).re;
        let m2 = state.expectation(&a.mul(a)?).re;
        Ok((m2 - m * m).max(0.0).sqrt())
    };
    let (dq_t, dp_t, dq0, dp0) = (sd(&q_t)?, sd(&p_t)?, sd(&system.q_op)?, sd(&system.p_op)?);
    let c = 2.0 / system.hbar;
    let rhs = [[c * dq_t * dp0, c * dq_t * dq0], [c * dp_t * dp0, c * dp_t * dq0]];
    let rho_t = u.entries() * state.density().entries() * u.entries().adjoint();
    let edge = (system.interior_dim..system.dim).map(|i| rho_t[(i, i)].re).sum::<f64>().max(0.0);
    Ok(BoundReport::new(t, ex.matrix, rhs, ex.imaginary_residue, edge))
}

/// Bound reports at `t = k·interval`, `k = 0..=samples`, from vectors
/// propagated by one reusable interval propagator (built from `steps`
/// midpoint substeps). Driven systems need `interval` to be a whole number of
/// drive periods so the same propagator applies to every interval.
pub fn bound_series(
    system: &QuantumSystem,
    state: &QuantumState,
    interval: f64,
    samples: usize,
    steps: usize,
) -> Result<Vec<BoundReport>> {
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(invalid("interval", "must be positive"));
    }
    if let Some(period) = system.period() {
        let r = interval / period;
        if (r - r.round()).abs() > 1e-9 || r.round() < 1.0 {
            return Err(invalid("interval", "must be a whole number of drive periods"));
        }
    }
    if state.dim() != system.dim {
        return Err(Error::DimensionMismatch { expected: system.dim, got: state.dim() });
    }
    let u = propagator_between(system, 0.0, interval, steps)?;
    let q = system.q_real();
    let b = &system.p_op.entries().map(|z| z.im);
    let p_apply = |v: &CVector| real_times_vector(b, v) * Complex64::new(0.0, 1.0);
    let q_apply = |v: &CVector| real_times_vector(q, v);

    // Each pure component carries ψ, q̂₀ψ and p̂₀ψ.
    let comps = state.components()?;
    let mut tracks: Vec<(f64, [CVector; 3])> =
        comps.iter().map(|(w, psi)| (*w, [psi.clone(), q_apply(psi), p_apply(psi)])).collect();
    let mean = |a: &dyn Fn(&CVector) -> CVector, tr: &[(f64, [CVector; 3])]| -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (w, v) in tr {
            let av = a(&v[0]);
            m1 += w * v[0].dotc(&av).re;
            m2 += w * av.norm_squared();
        }
        (m1, m2)
    };
    let sd = |(m1, m2): (f64, f64)| (m2 - m1 * m1).max(0.0).sqrt();
    let dq0 = sd(mean(&q_apply, &tracks));
    let dp0 = sd(mean(&p_apply, &tracks));
    let c = 2.0 / system.hbar;
    let edge_from = system.interior_dim;

    let mut out = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        if k > 0 {
            for (_, vs) in &mut tracks {
                for v in vs.iter_mut() {
                    *v = u.entries() * &*v;
                }
            }
        }
        // tr([Â(t), B̂₀]ρ) = Σ w (⟨Uψ|Â|UB̂ψ⟩ − ⟨UB̂ψ|Â|Uψ⟩), with ⟨Uψ|Â|φ⟩ = ⟨ÂUψ|φ⟩
        let mut comm = [[Complex64::new(0.0, 0.0); 2]; 2];
        let mut edge = 0.0;
        for (w, [u0, uq, up]) in &tracks {
            let qa = q_apply(u0);
            let pa = p_apply(u0);
            let w = Complex64::new(*w, 0.0);
            comm[0][0] += w * (qa.dotc(up) - up.dotc(&qa));
            comm[0][1] += w * (qa.dotc(uq) - uq.dotc(&qa));
            comm[1][0] += w * (pa.dotc(up) - up.dotc(&pa));
            comm[1][1] += w * (pa.dotc(uq) - uq.dotc(&pa));
            edge += w.re * (edge_from..system.dim).map(|i| u0[i].norm_sqr()).sum::<f64>();
        }
        let scale = [Complex64::new(0.0, -1.0 / system.hbar), Complex64::new(0.0, 1.0 / system.hbar)];
        let mut ex = [[0.0; 2]; 2];
        let mut residue = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let z = scale[j] * comm[i][j];
                ex[i][j] = z.re;
                residue = residue.max(z.im.abs());
            }
        }
        let dq_t = sd(mean(&q_apply, &tracks));
        let dp_t = sd(mean(&p_apply, &tracks));
        let rhs = [[c * dq_t * dp0, c * dq_t * dq0], [c * dp_t * dp0, c * dp_t * dq0]];
        if ex.iter().chain(&rhs).flatten().any(|x| !x.is_finite()) || !edge.is_finite() {
            return Err(Error::NonFinite("sensitivity series"));
        }
        out.push(BoundReport::new(k as f64 * interval, ex, rhs, residue, edge));
    }
    Ok(out)
}

/// Runs [`bound_series`] for independent systems (parameters, ħ, or
/// dimensions) concurrently, results in input order.
pub fn bound_series_batch(
    runs: &[(QuantumSystem, QuantumState)],
    interval: f64,
    samples: usize,
    steps: usize,
    exec: Execution,
) -> Vec<Result<Vec<BoundReport>>> {
    par::map(exec, runs, |(s, st)| bound_series(s, st, interval, samples, steps))
}

/// Least-squares slope of `ln(value)` against `t` over `window`.
pub fn growth_rate_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints { got: pts.len(), need: 4 });
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("series", format!("value {v} at t = {t} is not positive")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in &pts {
        sxy += (t - tm) * (v.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(invalid("window", "all sample times coincide"));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::Model;

    fn harmonic(dim: usize) -> QuantumSystem {
        QuantumSystem::from_model(&Model::harmonic(1.0, 1.0), dim, 1.0, 1.0).unwrap()
    }

    #[test]
    fn identity_propagator_is_no_op() {
        let s = harmonic(16);
        let a = heisenberg_operator(&HilbertOperator::identity(16), &s.q_op).unwrap();
        assert_eq!(a, s.q_op);
    }

    #[test]
    fn rejects_non_unitary() {
        let s = harmonic(16);
        let u = s.q_op.clone();
        assert!(matches!(heisenberg_operator(&u, &s.p_op), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn heisenberg_preserves_spectrum() {
        let s = QuantumSystem::from_model(&Model::quartic(1.0, 1.0), 24, 1.0, 1.0).unwrap();
        let u = propagator(&s, 1.3, 1).unwrap();
        let a = s.q_op.mul(&s.q_op).unwrap();
        let at = heisenberg_operator(&u, &a).unwrap();
        let (e0, e1) = (a.hermitian_eigenvalues().unwrap(), at.hermitian_eigenvalues().unwrap());
        assert!(e0.iter().zip(&e1).all(|(x, y)| (x - y).abs() < 1e-10));
        assert!(at.is_hermitian());
    }

    #[test]
    fn dense_and_vector_paths_agree() {
        let s = QuantumSystem::from_model(&Model::double_well_driven(1.0, 0.5, 0.025, 0.9, 1.0), 30, 1.0, 1.4).unwrap();
        let st = QuantumState::mixed(&[
            (0.6, QuantumState::coherent(&s, -1.0, 0.3).unwrap()),
            (0.4, QuantumState::number(&s, 2).unwrap()),
        ])
        .unwrap();
        let period = s.period().unwrap();
        let series = bound_series(&s, &st, period, 2, 32).unwrap();
        let dense = bound_check(&s, &st, 2.0 * period, 64).unwrap();
        let last = &series[2];
        for i in 0..2 {
            for j in 0..2 {
                assert!((last.expectation[i][j] - dense.expectation[i][j]).abs() < 1e-10);
                assert!((last.rhs[i][j] - dense.rhs[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interval_must_match_drive() {
        let s = QuantumSystem::from_model(&Model::double_well_driven(1.0, 0.5, 0.025, 0.9, 1.0), 16, 1.0, 1.0).unwrap();
        let st = QuantumState::number(&s, 0).unwrap();
        assert!(bound_series(&s, &st, 1.0, 3, 8).is_err());
    }

    #[test]
    fn growth_fit_examples() {
        let exp: Vec<(f64, f64)> = (0..20).map(|k| (k as f64 * 0.5, (0.7 * k as f64 * 0.5).exp())).collect();
        assert!((growth_rate_fit(&exp, (0.0, 10.0)).unwrap() - 0.7).abs() < 1e-10);
        let flat: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 3.0)).collect();
        assert_eq!(growth_rate_fit(&flat, (0.0, 9.0)).unwrap(), 0.0);
        assert!(matches!(growth_rate_fit(&flat, (0.0, 2.0)), Err(Error::TooFewPoints { got: 3, need: 4 })));
        let neg = vec![(0.0, 1.0), (1.0, -1.0), (2.0, 1.0), (3.0, 1.0)];
        assert!(growth_rate_fit(&neg, (0.0, 3.0)).is_err());
    }
}
