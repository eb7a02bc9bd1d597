//! Interaction-picture Liouvillian for `H = p²/2m + V(q)`.

use crate::error::{Error, Result};
use crate::kvn::GridSpec;
use crate::phase::OperatorSplit;

/// Generator of the interaction-picture density in one dimension:
///
/// `∂ρ_I/∂t = V'(q + pt/m) [∂ρ_I/∂p − (t/m) ∂ρ_I/∂q]`,
///
/// the real form of `−i L̂_I(t)`. `coeff_p` and `coeff_q` are the coefficients
/// of `∂/∂p` and `∂/∂q`.
#[derive(Debug, Clone)]
pub struct InteractionLiouvillian1D {
    split: OperatorSplit,
    t: f64,
}

pub fn interaction_liouvillian(split: &OperatorSplit, t: f64) -> InteractionLiouvillian1D {
    InteractionLiouvillian1D { split: split.clone(), t }
}

impl InteractionLiouvillian1D {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn split(&self) -> &OperatorSplit {
        &self.split
    }

    pub fn coeff_p(&self, q: f64, p: f64) -> f64 {
        self.split.v_prime(q + p * self.t / self.split.mass)
    }

    pub fn coeff_q(&self, q: f64, p: f64) -> f64 {
        -self.t / self.split.mass * self.coeff_p(q, p)
    }

    /// Rate of change given the density gradient `(∂ρ/∂q, ∂ρ/∂p)` at `(q, p)`.
    pub fn rate(&self, q: f64, p: f64, drho_dq: f64, drho_dp: f64) -> f64 {
        self.coeff_p(q, p) * (drho_dp - self.t / self.split.mass * drho_dq)
    }

    /// Applies the generator to grid values with fourth-order central
    /// differences; values beyond the grid are taken as zero.
    pub fn apply(&self, grid: &GridSpec, values: &[f64], out: &mut [f64]) -> Result<()> {
        if grid.dims() != 2 {
            return Err(Error::Unsupported("interaction Liouvillian acts on 2D phase-space grids".into()));
        }
        if values.len() != grid.len() || out.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        let (nq, np) = (grid.shape()[0], grid.shape()[1]);
        let (hq, hp) = (grid.spacing(0), grid.spacing(1));
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i as usize >= nq || j as usize >= np {
                0.0
            } else {
                values[i as usize * np + j as usize]
            }
        };
        let d4 = |m2: f64, m1: f64, p1: f64, p2: f64, h: f64| (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        for i in 0..nq {
            let q = grid.lo()[0] + i as f64 * hq;
            let ii = i as isize;
            for j in 0..np {
                let p = grid.lo()[1] + j as f64 * hp;
                let jj = j as isize;
                let dq = d4(at(ii - 2, jj), at(ii - 1, jj), at(ii + 1, jj), at(ii + 2, jj), hq);
                let dp = d4(at(ii, jj - 2), at(ii, jj - 1), at(ii, jj + 1), at(ii, jj + 2), hp);
                out[i * np + j] = self.rate(q, p, dq, dp);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(v_prime: fn(f64) -> f64, m: f64) -> OperatorSplit {
        OperatorSplit::new(m, |_| 0.0, v_prime).unwrap()
    }

    #[test]
    fn reduces_to_bare_coupling_at_zero() {
        let l = interaction_liouvillian(&split(|q| q.powi(3), 1.0), 0.0);
        assert_eq!(l.coeff_p(0.7, 3.0), 0.7f64.powi(3));
        assert_eq!(l.coeff_q(0.7, 3.0), 0.0);
    }

    #[test]
    fn constant_force_coefficients_are_uniform() {
        let l = interaction_liouvillian(&split(|_| -2.0, 2.0), 1.5);
        for (q, p) in [(0.0, 0.0), (3.0, -1.0), (-5.0, 7.0)] {
            assert_eq!(l.coeff_p(q, p), -2.0);
            assert_eq!(l.coeff_q(q, p), 1.5 / 2.0 * 2.0);
        }
    }

    #[test]
    fn harmonic_argument_is_shifted() {
        let l = interaction_liouvillian(&split(|q| 3.0 * q, 2.0), 0.5);
        assert!((l.coeff_p(1.0, 2.0) - 3.0 * (1.0 + 2.0 * 0.5 / 2.0)).abs() < 1e-15);
    }

    /// The generator equals the free conjugation of the bare coupling,
    /// `(V'(q) ∂_p (g ∘ Φ⁰₋ₜ)) ∘ Φ⁰ₜ`, evaluated by finite differences.
    #[test]
    fn matches_conjugated_coupling() {
        let (m, t) = (1.3, 0.8);
        let s = split(|q| q + 0.3 * q.powi(3), m);
        let l = interaction_liouvillian(&s, t);
        let g = |q: f64, p: f64| (-(q - 0.2).powi(2) - 0.5 * (p + 0.1).powi(2)).exp() * (1.0 + 0.3 * q * p);
        let h = 1e-5;
        for &(q, p) in &[(0.1, 0.4), (-0.6, 0.9), (1.0, -0.5)] {
            let (qf, pf) = s.free_flow(q, p, t);
            let pulled = |pp: f64| {
                let (q0, p0) = s.free_flow(qf, pp, -t);
                g(q0, p0)
            };
            let conj = s.v_prime(qf) * (pulled(pf + h) - pulled(pf - h)) / (2.0 * h);
            let dq = (g(q + h, p) - g(q - h, p)) / (2.0 * h);
            let dp = (g(q, p + h) - g(q, p - h)) / (2.0 * h);
            assert!((l.rate(q, p, dq, dp) - conj).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_action_is_fourth_order() {
        let s = split(|q| q, 1.0);
        let l = interaction_liouvillian(&s, 0.4);
        let f = |q: f64, p: f64| (-(q * q + p * p) / 2.0).exp();
        let exact = |q: f64, p: f64| l.rate(q, p, -q * f(q, p), -p * f(q, p));
        let err = |n: usize| {
            let g = GridSpec::plane((-8.0, 8.0), (-8.0, 8.0), n, n).unwrap();
            let v: Vec<f64> = g.points().iter().map(|z| f(z[0], z[1])).collect();
            let mut out = vec![0.0; g.len()];
            l.apply(&g, &v, &mut out).unwrap();
            g.points().iter().zip(&out).map(|(z, o)| (o - exact(z[0], z[1])).abs()).fold(0.0, f64::max)
        };
        let order = (err(81) / err(161)).log2();
        assert!(order > 3.7, "order {order}");
    }
}
