//! Uniform tensor grids over a phase-space box.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Node-centred grid; axes are ordered `(q₁…q_N, p₁…p_N)` and the last axis
/// varies fastest in flat storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: n.len() });
        }
        if lo.is_empty() || !lo.len().is_multiple_of(2) {
            return Err(invalid("grid", "needs an even, non-zero number of axes"));
        }
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(invalid("grid", format!("axis {k} has an empty range")));
            }
            if n[k] < 4 {
                return Err(invalid("grid", format!("axis {k} needs at least 4 nodes")));
            }
        }
        Ok(GridSpec { lo, hi, n })
    }

    /// Square grid over `[q_lo, q_hi] × [p_lo, p_hi]` in one degree of freedom.
    pub fn plane(q: (f64, f64), p: (f64, f64), nq: usize, np: usize) -> Result<Self> {
        GridSpec::new(vec![q.0, p.0], vec![q.1, p.1], vec![nq, np])
    }

    pub fn dims(&self) -> usize {
        self.n.len()
    }

    pub fn dof(&self) -> usize {
        self.n.len() / 2
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|k| self.spacing(k)).product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.dims()).rev() {
            out[k] = flat % self.n[k];
            flat /= self.n[k];
        }
    }

    /// Packed coordinates of the node at `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for k in (0..self.dims()).rev() {
            let i = rest % self.n[k];
            rest /= self.n[k];
            out[k] = self.lo[k] + i as f64 * self.spacing(k);
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let mut z = vec![0.0; self.dims()];
                self.point(i, &mut z);
                z
            })
            .collect()
    }

    /// Tensor-product cubic Lagrange interpolation; zero outside the box.
    pub fn interpolate<T: Interpolant>(&self, values: &[T], z: &[f64]) -> T {
        let d = self.dims();
        let mut base = [0usize; 8];
        let mut w = [[0.0f64; 4]; 8];
        assert!(d <= 8, "interpolation supports up to 8 axes");
        for k in 0..d {
            let h = self.spacing(k);
            let x = (z[k] - self.lo[k]) / h;
            let n = self.n[k];
            if !(x >= 0.0 && x <= (n - 1) as f64) {
                return T::zero();
            }
            let i = (x.floor() as usize).clamp(1, n - 3);
            base[k] = i - 1;
            let s = x - (i - 1) as f64;
            // Nodes at offsets 0, 1, 2, 3 relative to base.
            w[k][0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
            w[k][1] = s * (s - 2.0) * (s - 3.0) / 2.0;
            w[k][2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
            w[k][3] = s * (s - 1.0) * (s - 2.0) / 6.0;
        }
        let mut acc = T::zero();
        let corners = 1usize << (2 * d);
        for c in 0..corners {
            let mut flat = 0;
            let mut weight = 1.0;
            for k in 0..d {
                let o = (c >> (2 * k)) & 3;
                flat += (base[k] + o) * self.stride(k);
                weight *= w[k][o];
            }
            acc = acc + values[flat] * weight;
        }
        acc
    }
}

pub trait Interpolant: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Interpolant for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Interpolant for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = GridSpec::plane((-1.0, 2.0), (0.0, 1.0), 13, 9).unwrap();
        let f = |z: &[f64]| 1.0 + z[0] - 2.0 * z[0].powi(3) + z[0] * z[1] * z[1] + 0.5 * z[1].powi(3);
        let vals: Vec<f64> = g.points().iter().map(|z| f(z)).collect();
        for z in [[0.123, 0.77], [-0.99, 0.01], [1.95, 0.5]] {
            assert!((g.interpolate(&vals, &z) - f(&z)).abs() < 1e-12);
        }
        assert_eq!(g.interpolate(&vals, &[3.0, 0.5]), 0.0);
    }

    #[test]
    fn flat_indexing_round_trips() {
        let g = GridSpec::new(vec![0.0; 4], vec![1.0; 4], vec![4, 5, 6, 7]).unwrap();
        let mut idx = [0; 4];
        g.multi_index(4 * 5 * 6 * 7 - 1, &mut idx);
        assert_eq!(idx, [3, 4, 5, 6]);
        let flat: usize = (0..4).map(|k| idx[k] * g.stride(k)).sum();
        assert_eq!(flat, g.len() - 1);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(GridSpec::plane((1.0, 1.0), (0.0, 1.0), 8, 8).is_err());
        assert!(GridSpec::plane((0.0, 1.0), (0.0, 1.0), 3, 8).is_err());
    }
}
