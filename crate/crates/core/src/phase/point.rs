use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical phase-space point `(q, p)` with `N` degrees of freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct PhasePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl TryFrom<RawPoint> for PhasePoint {
    type Error = Error;
    fn try_from(raw: RawPoint) -> Result<Self> {
        PhasePoint::new(raw.q, raw.p)
    }
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), got: p.len() });
        }
        if q.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let point = PhasePoint { q, p };
        point.check_finite()?;
        Ok(point)
    }

    /// One degree of freedom. Panics on non-finite input.
    pub fn one(q: f64, p: f64) -> Self {
        PhasePoint::new(vec![q], vec![p]).expect("finite 1D phase point")
    }

    /// Splits a packed `[q..., p...]` slice.
    pub fn from_packed(z: &[f64]) -> Result<Self> {
        if !z.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: z.len() + 1, got: z.len() });
        }
        let n = z.len() / 2;
        PhasePoint::new(z[..n].to_vec(), z[n..].to_vec())
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.q, &mut self.p)
    }

    /// `[q..., p...]`
    pub fn packed(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.dof());
        z.extend_from_slice(&self.q);
        z.extend_from_slice(&self.p);
        z
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.q.iter().chain(&self.p).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("phase point"))
        }
    }

    pub fn ensure_dof(&self, dof: usize) -> Result<()> {
        if self.dof() == dof {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dof, got: self.dof() })
        }
    }

    /// Euclidean distance in the packed coordinates.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Angles reduced to `[0, 2π)` for display; dynamics always use the lift.
    pub fn reduced_angles(&self) -> PhasePoint {
        let tau = std::f64::consts::TAU;
        PhasePoint { q: self.q.iter().map(|x| x.rem_euclid(tau)).collect(), p: self.p.clone() }
    }
}
