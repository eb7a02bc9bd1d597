//! Exact densities for a constant force acting on a momentum sheet.

use crate::error::{invalid, Result};
use crate::kvn::{MomentumSheet, PhaseSpaceDensity};

fn check(mass: f64, force: f64, t: f64) -> Result<()> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid("m", "mass must be positive"));
    }
    if !(force.is_finite() && t.is_finite()) {
        return Err(invalid("force", "force and time must be finite"));
    }
    Ok(())
}

/// Time-`t` density for `f(q) δ(p − p₀)` under `H = p²/2m − F q`:
/// `f(q − p₀t/m − Ft²/2m) δ(p − p₀ − Ft)`.
///
/// On the support `p = p₀ + Ft` the q-argument equals `q − pt/m + Ft²/2m`,
/// which is the inverse of the flow `q = q₀ + p₀t/m + Ft²/2m`.
pub fn constant_force_density(initial: &MomentumSheet, force: f64, mass: f64, t: f64) -> Result<PhaseSpaceDensity> {
    check(mass, force, t)?;
    let p0 = initial.p_support();
    let shift = initial.shift() + p0 * t / mass + force * t * t / (2.0 * mass);
    Ok(PhaseSpaceDensity::Sheet(initial.moved(shift, p0 + force * t)))
}

/// Interaction-picture counterpart: `f(q + Ft²/2m) δ(p − p₀ − Ft)`.
pub fn constant_force_interaction_density(
    initial: &MomentumSheet,
    force: f64,
    mass: f64,
    t: f64,
) -> Result<PhaseSpaceDensity> {
    check(mass, force, t)?;
    let p0 = initial.p_support();
    let shift = initial.shift() - force * t * t / (2.0 * mass);
    Ok(PhaseSpaceDensity::Sheet(initial.moved(shift, p0 + force * t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kvn::{expectation, Observable};

    #[test]
    fn zero_time_is_initial() {
        let s = MomentumSheet::gaussian(0.1, 0.4, 0.7, 10).unwrap();
        let PhaseSpaceDensity::Sheet(out) = constant_force_density(&s, 2.0, 1.0, 0.0).unwrap() else { panic!() };
        assert_eq!(out.p_support(), 0.7);
        assert_eq!(out.q_marginal(0.3), s.q_marginal(0.3));
    }

    #[test]
    fn moments_follow_exact_dynamics() {
        let (p0, f, m, t) = (0.7, -1.3, 2.0, 3.0);
        let s = MomentumSheet::gaussian(0.1, 0.4, p0, 10).unwrap();
        let rho = constant_force_density(&s, f, m, t).unwrap();
        let q = expectation(&Observable::position(0), &rho).unwrap();
        let p = expectation(&Observable::momentum(0), &rho).unwrap();
        assert!((q - (0.1 + p0 * t / m + f * t * t / (2.0 * m))).abs() < 1e-12);
        assert!((p - (p0 + f * t)).abs() < 1e-12);
        let PhaseSpaceDensity::Sheet(sheet) = rho else { panic!() };
        assert_eq!(sheet.p_support(), p0 + f * t);
    }

    #[test]
    fn rejects_bad_mass() {
        let s = MomentumSheet::gaussian(0.0, 1.0, 0.0, 4).unwrap();
        assert!(constant_force_density(&s, 1.0, 0.0, 1.0).is_err());
        assert!(constant_force_density(&s, 1.0, -1.0, 1.0).is_err());
    }
}
