//! Dense operators on a truncated oscillator basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub(crate) const HERMITIAN_TOL: f64 = 1e-12;
pub(crate) const UNITARY_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertOperator {
    entries: CMatrix,
    hermitian: bool,
}

impl HilbertOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("operator entries"));
        }
        let hermitian = hermiticity_deviation(&entries) <= HERMITIAN_TOL;
        Ok(HilbertOperator { entries, hermitian })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        HilbertOperator::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        HilbertOperator { entries: CMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.entries)
    }

    /// `max |Û†Û − I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        (self.entries.adjoint() * &self.entries - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &HilbertOperator) -> Result<HilbertOperator> {
        self.same_dim(other)?;
        HilbertOperator::new(&self.entries * &other.entries - &other.entries * &self.entries)
    }

    pub fn scaled(&self, c: Complex64) -> Result<HilbertOperator> {
        HilbertOperator::new(self.entries.map(|z| z * c))
    }

    pub fn mul(&self, other: &HilbertOperator) -> Result<HilbertOperator> {
        self.same_dim(other)?;
        HilbertOperator::new(&self.entries * &other.entries)
    }

    /// Largest entry modulus on the leading `k × k` block.
    pub fn interior_max(&self, k: usize) -> f64 {
        let k = k.min(self.dim());
        self.entries.view((0, 0), (k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let dev = self.hermiticity_deviation();
        if dev > 1e-10 {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let sym = (&self.entries + self.entries.adjoint()).map(|z| z * 0.5);
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    fn same_dim(&self, other: &HilbertOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }
}

pub(crate) fn hermiticity_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Annihilation operator `a` on `dim` number states.
pub fn annihilation(dim: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// `q̂ = √(ħ/2mω)(a + a†)` and the real antisymmetric `B` with `p̂ = iB`,
/// `B = √(ħmω/2)(a† − a)`.
pub(crate) fn ladder_parts(dim: usize, hbar: f64, mass: f64, omega: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = annihilation(dim);
    let ad = a.transpose();
    let q = (&a + &ad) * (hbar / (2.0 * mass * omega)).sqrt();
    let b = (&ad - &a) * (hbar * mass * omega / 2.0).sqrt();
    (q, b)
}

/// Ladder construction on any `dim ≥ 2`.
pub fn ladder_pair(dim: usize, hbar: f64, mass: f64, omega: f64) -> Result<(HilbertOperator, HilbertOperator)> {
    for (name, x) in [("hbar", hbar), ("mass", mass), ("omega_ref", omega)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    if dim < 2 {
        return Err(invalid("dim", "needs at least two states"));
    }
    let (q, b) = ladder_parts(dim, hbar, mass, omega);
    let p = b.map(|x| Complex64::new(0.0, x));
    Ok((HilbertOperator::from_real(&q)?, HilbertOperator::new(p)?))
}

/// Canonical pair plus the interior dimension `D − 2` on which
/// `[q̂, p̂] = iħ` holds.
pub fn build_canonical_pair(
    dim: usize,
    hbar: f64,
    mass: f64,
    omega_ref: f64,
) -> Result<(HilbertOperator, HilbertOperator, usize)> {
    if dim < 8 {
        return Err(invalid("dim", format!("needs at least 8 states, got {dim}")));
    }
    let (q, p) = ladder_pair(dim, hbar, mass, omega_ref)?;
    Ok((q, p, dim - 2))
}

/// `U = V diag(e^{−iEτ/ħ}) Vᵀ` for real symmetric `h`.
pub(crate) fn exp_real_symmetric(h: &DMatrix<f64>, tau: f64, hbar: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let n = h.nrows();
    let (mut cr, mut ci) = (v.clone(), v.clone());
    for j in 0..n {
        let (s, c) = (-eig.eigenvalues[j] * tau / hbar).sin_cos();
        for i in 0..n {
            cr[(i, j)] = v[(i, j)] * c;
            ci[(i, j)] = v[(i, j)] * s;
        }
    }
    let vt = v.transpose();
    let re = cr * &vt;
    let im = ci * &vt;
    CMatrix::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// `A·U` for real `A` and complex `U`, through two real products.
pub(crate) fn real_times_complex(a: &DMatrix<f64>, u: &CMatrix) -> CMatrix {
    let re = a * u.map(|z| z.re);
    let im = a * u.map(|z| z.im);
    CMatrix::from_fn(u.nrows(), u.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// `A·v` for real `A`.
pub(crate) fn real_times_vector(a: &DMatrix<f64>, v: &CVector) -> CVector {
    let re = a * v.map(|z| z.re);
    let im = a * v.map(|z| z.im);
    CVector::from_fn(v.len(), |i, _| Complex64::new(re[i], im[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_state_ladder() {
        let (hbar, m, w) = (0.7, 1.3, 2.1);
        let (q, p) = ladder_pair(2, hbar, m, w).unwrap();
        let sq = (hbar / (2.0 * m * w)).sqrt();
        let sp = (hbar * m * w / 2.0).sqrt();
        let want_q = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(sq, 0.0), c(sq, 0.0), c(0.0, 0.0)]);
        // i·[[0, −1], [1, 0]]
        let want_p = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -sp), c(0.0, sp), c(0.0, 0.0)]);
        assert!((q.entries() - want_q).iter().all(|z| z.norm() < 1e-15));
        assert!((p.entries() - want_p).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn ccr_holds_except_corner() {
        let hbar = 1.0;
        let (q, p, interior) = build_canonical_pair(12, hbar, 1.0, 1.0).unwrap();
        assert!(q.is_hermitian() && p.is_hermitian());
        assert!(q.hermiticity_deviation() < 1e-15 && p.hermiticity_deviation() < 1e-15);
        let comm = q.commutator(&p).unwrap();
        let e = comm.entries();
        for k in 0..11 {
            assert!((e[(k, k)] - c(0.0, hbar)).norm() < 1e-12);
        }
        assert!((e[(11, 11)] - c(0.0, hbar)).norm() > 1.0);
        let shifted = HilbertOperator::new(e - CMatrix::identity(12, 12) * c(0.0, hbar)).unwrap();
        assert!(shifted.interior_max(interior) < 1e-10);
        assert!(build_canonical_pair(7, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn real_exponential_is_unitary() {
        let (q, b) = ladder_parts(20, 1.0, 1.0, 1.0);
        let h = &q * &q * 0.5 - &b * &b * 0.5 + &q * &q * &q * &q * 0.1;
        let u = HilbertOperator::new(exp_real_symmetric(&h, 0.37, 1.0)).unwrap();
        assert!(u.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn hermitian_flag() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(2.0, 0.0)]);
        assert!(!HilbertOperator::new(m).unwrap().is_hermitian());
        assert!(HilbertOperator::identity(3).is_hermitian());
    }
}
