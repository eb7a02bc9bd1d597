//! Lyapunov spectra by QR re-orthonormalization of a tangent frame.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sensitivity::{identity_columns, tangent_stepper};
use crate::error::{invalid, Error, Result};
use crate::numerics::Numerics;
use crate::par;
use crate::phase::{Hamiltonian, PhasePoint};

/// Exponents at or below this are not counted as positive.
pub const KS_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Total time `T` (iterations for maps).
    pub t_total: f64,
    #[serde(default = "default_renorm")]
    pub renorm_interval: f64,
    /// Burn-in before accumulation starts, letting the frame align.
    #[serde(default)]
    pub transient: f64,
    /// Number of running estimates to record.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
}

fn default_renorm() -> f64 {
    1.0
}

fn default_checkpoints() -> usize {
    50
}

impl LyapunovConfig {
    pub fn new(t_total: f64, renorm_interval: f64) -> Self {
        LyapunovConfig { t_total, renorm_interval, transient: 0.0, checkpoints: default_checkpoints() }
    }

    pub fn with_transient(mut self, transient: f64) -> Self {
        self.transient = transient;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.renorm_interval > 0.0 && self.renorm_interval.is_finite()) {
            return Err(invalid("renorm_interval", "must be positive"));
        }
        if !(self.transient >= 0.0 && self.transient.is_finite()) {
            return Err(invalid("transient", "must be non-negative"));
        }
        if !(self.t_total.is_finite() && self.t_total >= self.transient + self.renorm_interval) {
            return Err(invalid("t_total", "must exceed the transient by at least one renormalization interval"));
        }
        Ok(())
    }
}

/// Running estimate of the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: f64,
    pub exponents: Vec<f64>,
    /// `|det 𝒯(t) − 1|` accumulated from the QR factors.
    pub det_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovSpectrum {
    /// Descending.
    pub exponents: Vec<f64>,
    pub t_total: f64,
    pub renorm_interval: f64,
    pub transient: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Largest determinant error seen at any renormalization.
    pub max_det_error: f64,
}

impl LyapunovSpectrum {
    /// `max |λᵢ + λ_{2N+1−i}|`.
    pub fn pairing_residual(&self) -> f64 {
        pairing_residual(&self.exponents)
    }

    pub fn ks_entropy(&self) -> f64 {
        ks_entropy(&self.exponents, KS_FLOOR)
    }

    pub fn largest(&self) -> f64 {
        self.exponents[0]
    }
}

pub fn pairing_residual(exponents: &[f64]) -> f64 {
    let mut e = exponents.to_vec();
    e.sort_by(|a, b| b.total_cmp(a));
    let n = e.len();
    (0..n / 2).map(|i| (e[i] + e[n - 1 - i]).abs()).fold(0.0, f64::max)
}

/// Sum of the exponents above `floor`.
pub fn ks_entropy(exponents: &[f64], floor: f64) -> f64 {
    exponents.iter().filter(|&&l| l > floor).sum()
}

/// Benettin-style spectrum: the tangent frame is advanced over each
/// renormalization interval, QR-factorized, and the logs of `|Rᵢᵢ|` are
/// accumulated. Exponents are `(S(T) − S(T_b)) / (T − T_b)` with `T_b` the
/// transient.
pub fn lyapunov_spectrum<M: Hamiltonian + ?Sized>(
    model: &M,
    z0: &PhasePoint,
    cfg: &LyapunovConfig,
    num: &Numerics,
) -> Result<LyapunovSpectrum> {
    cfg.validate()?;
    z0.ensure_dof(model.dof())?;
    let d = 2 * model.dof();
    let intervals = (cfg.t_total / cfg.renorm_interval).round().max(1.0) as usize;
    let tau = cfg.t_total / intervals as f64;
    let burn = (cfg.transient / tau).round() as usize;
    if burn >= intervals {
        return Err(invalid("transient", "leaves no accumulation interval"));
    }
    let every = ((intervals - burn) / cfg.checkpoints.max(1)).max(1);

    let stepper = tangent_stepper(model, z0, num)?;
    let mut z = z0.clone();
    let mut frame = identity_columns(d);
    let mut sums = vec![0.0; d];
    let mut log_det = 0.0f64;
    let mut max_det_error = 0.0f64;
    let mut checkpoints = Vec::new();
    for k in 0..intervals {
        let (t0, t1) = (k as f64 * tau, (k + 1) as f64 * tau);
        {
            let (q, p) = z.parts_mut();
            stepper.advance_with_tangent(model, q, p, t0, t1, Some(&mut frame))?;
        }
        let qr = DMatrix::from_column_slice(d, d, &frame).qr();
        let r = qr.r();
        let mut step_log_det = 0.0;
        for i in 0..d {
            let rii = r[(i, i)].abs();
            if !(rii > 0.0 && rii.is_finite()) {
                return Err(Error::Renormalization { t: t1 });
            }
            step_log_det += rii.ln();
            if k >= burn {
                sums[i] += rii.ln();
            }
        }
        log_det += step_log_det;
        max_det_error = max_det_error.max(log_det.exp_m1().abs());
        frame.copy_from_slice(qr.q().as_slice());

        let done = k + 1 - burn.min(k + 1);
        if k >= burn && (done.is_multiple_of(every) || k + 1 == intervals) {
            let span = done as f64 * tau;
            let mut ex: Vec<f64> = sums.iter().map(|s| s / span).collect();
            ex.sort_by(|a, b| b.total_cmp(a));
            checkpoints.push(Checkpoint { t: t1, exponents: ex, det_error: log_det.exp_m1().abs() });
        }
    }
    let exponents = checkpoints.last().expect("at least one checkpoint").exponents.clone();
    Ok(LyapunovSpectrum {
        exponents,
        t_total: cfg.t_total,
        renorm_interval: tau,
        transient: burn as f64 * tau,
        checkpoints,
        max_det_error,
    })
}

/// Independent spectra from many initial points, in input order.
pub fn lyapunov_ensemble<M: Hamiltonian + ?Sized>(
    model: &M,
    points: &[PhasePoint],
    cfg: &LyapunovConfig,
    num: &Numerics,
) -> Vec<Result<LyapunovSpectrum>> {
    par::map(num.exec, points, |z| lyapunov_spectrum(model, z, cfg, num))
}

/// `ln ‖𝒯(t)‖_F` at ascending `times`, starting from `t = 0`. The matrix is
/// rescaled by a scalar as it grows, so long chaotic runs do not overflow.
pub fn log_tangent_norm_series<M: Hamiltonian + ?Sized>(
    model: &M,
    z0: &PhasePoint,
    times: &[f64],
    num: &Numerics,
) -> Result<Vec<f64>> {
    z0.ensure_dof(model.dof())?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("times", "must be non-negative and ascending"));
    }
    let d = 2 * model.dof();
    let stepper = tangent_stepper(model, z0, num)?;
    let mut z = z0.clone();
    let mut frame = identity_columns(d);
    let mut log_scale = 0.0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target > t {
            let (q, p) = z.parts_mut();
            stepper.advance_with_tangent(model, q, p, t, target, Some(&mut frame))?;
            t = target;
        }
        let norm = frame.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NonFinite("tangent norm"));
        }
        log_scale += norm.ln();
        frame.iter_mut().for_each(|x| *x /= norm);
        out.push(log_scale);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::Model;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_entropy(&[0.0, 0.0], KS_FLOOR), 0.0);
        assert_eq!(ks_entropy(&[1.0, -1.0], KS_FLOOR), 1.0);
        assert!((ks_entropy(&[0.5, 0.2, -0.2, -0.5], KS_FLOOR) - 0.7).abs() < 1e-15);
        assert_eq!(ks_entropy(&[5e-4, -5e-4], KS_FLOOR), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(LyapunovConfig::new(10.0, 0.0).validate().is_err());
        assert!(LyapunovConfig::new(0.5, 1.0).validate().is_err());
        assert!(LyapunovConfig::new(10.0, 1.0).with_transient(10.0).validate().is_err());
        let strict = serde_json::from_str::<LyapunovConfig>(r#"{"t_total": 5, "bogus": 1}"#);
        assert!(strict.is_err());
    }

    #[test]
    fn inverted_oscillator_rates() {
        let m = Model::inverted_oscillator(1.0, 4.0);
        let cfg = LyapunovConfig::new(20.0, 1.0).with_transient(5.0);
        let s = lyapunov_spectrum(&m, &PhasePoint::one(0.0, 0.0), &cfg, &Numerics::default()).unwrap();
        assert!((s.exponents[0] - 2.0).abs() < 1e-3 && (s.exponents[1] + 2.0).abs() < 1e-3, "{:?}", s.exponents);
        assert!(s.max_det_error < 1e-8);
    }

    #[test]
    fn checkpoints_are_ordered() {
        let m = Model::standard_map(3.0);
        let mut cfg = LyapunovConfig::new(200.0, 1.0);
        cfg.checkpoints = 10;
        let s = lyapunov_spectrum(&m, &PhasePoint::one(0.3, 0.2), &cfg, &Numerics::default()).unwrap();
        assert!(s.checkpoints.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(s.checkpoints.last().unwrap().t, 200.0);
        assert!(s.pairing_residual() < 1e-10);
    }

    #[test]
    fn norm_series_tracks_linear_growth() {
        let m = Model::inverted_oscillator(1.0, 1.0);
        let times: Vec<f64> = (0..=40).map(|k| k as f64).collect();
        let s = log_tangent_norm_series(&m, &PhasePoint::one(0.0, 0.0), &times, &Numerics::default()).unwrap();
        // ‖diag-rotated e^{±t}‖_F = √(2 cosh 2t)
        for (t, v) in times.iter().zip(&s) {
            let want = 0.5 * (2.0 * (2.0 * t).cosh()).ln();
            assert!((v - want).abs() < 1e-8, "{t}: {v} vs {want}");
        }
    }

    #[test]
    fn ensemble_matches_single_runs() {
        let m = Model::standard_map(2.0);
        let pts = vec![PhasePoint::one(0.1, 0.0), PhasePoint::one(2.0, 1.0)];
        let cfg = LyapunovConfig::new(50.0, 1.0);
        let all = lyapunov_ensemble(&m, &pts, &cfg, &Numerics::default());
        for (z, r) in pts.iter().zip(all) {
            let one = lyapunov_spectrum(&m, z, &cfg, &Numerics::sequential()).unwrap();
            assert_eq!(r.unwrap().exponents, one.exponents);
        }
    }
}
