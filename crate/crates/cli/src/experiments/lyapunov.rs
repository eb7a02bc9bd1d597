//! Lyapunov spectrum with running estimates.

use dynpictures::chaos::lyapunov_spectrum;
use dynpictures::phase::{Model, ModelKind, PhasePoint};
use serde_json::json;

use super::RunOutput;
use crate::config::{numerics_for, LyapunovNumerics};
use crate::error::CliResult;
use crate::output::Table;

/// Largest exponent of the standard map `p' = p + K sin q, q' = q + p'` from
/// one tangent vector, renormalized every iteration. Written separately from
/// the library's QR path so the two can be compared.
pub fn standard_map_oracle(k: f64, q0: f64, p0: f64, transient: usize, iterations: usize) -> f64 {
    let (mut q, mut p) = (q0, p0);
    let (mut dq, mut dp) = (1.0f64, 0.0f64);
    let mut sum = 0.0;
    for n in 0..transient + iterations {
        p += k * q.sin();
        dp += k * q.cos() * dq;
        q += p;
        dq += dp;
        let norm = dq.hypot(dp);
        dq /= norm;
        dp /= norm;
        if n >= transient {
            sum += norm.ln();
        }
    }
    sum / iterations as f64
}

pub fn run(model: &Model, z0: &PhasePoint, n: &LyapunovNumerics) -> CliResult<RunOutput> {
    let num = numerics_for(&n.integrator, n.parallel);
    let spec = lyapunov_spectrum(model, z0, &n.spectrum, &num)?;
    let d = spec.exponents.len();
    let mut columns = vec!["checkpoint_t".to_string()];
    columns.extend((1..=d).map(|i| format!("lambda_{i}")));
    columns.push("det_error".into());
    let mut table = Table::with_columns(
        "lambda_vs_t",
        "checkpoint_t: time of the running estimate, lambda_i: running exponents in descending order, \
         det_error: |det T - 1| from the accumulated QR factors",
        columns,
    );
    for c in &spec.checkpoints {
        let mut row = vec![c.t.into()];
        row.extend(c.exponents.iter().map(|&x| x.into()));
        row.push(c.det_error.into());
        table.push(row);
    }
    let lambda1 = spec.largest();
    let pairing = spec.pairing_residual();
    let mut summary = json!({
        "lambda1": lambda1,
        "exponents": spec.exponents,
        "ks_entropy": spec.ks_entropy(),
        "pairing_residual": pairing,
        "max_det_error": spec.max_det_error,
        "t_total": spec.t_total,
        "transient": spec.transient,
    });
    let mut checks = vec![
        ("sensitivity_determinant".to_string(), spec.max_det_error < n.det_tolerance),
        ("exponent_pairing".to_string(), pairing < n.pairing_tolerance),
    ];
    if let ModelKind::StandardMap { k } = model.kind() {
        let iterations = (n.spectrum.t_total - n.spectrum.transient).round() as usize;
        let oracle = standard_map_oracle(k, z0.q()[0], z0.p()[0], n.spectrum.transient.round() as usize, iterations);
        let within = (lambda1 - oracle).abs() <= n.oracle_band * oracle.abs();
        summary["oracle_lambda1"] = json!(oracle);
        summary["oracle_band"] = json!(n.oracle_band);
        checks.push(("lambda1_within_oracle_band".into(), within));
    }
    Ok(RunOutput { summary, checks, tables: vec![table] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_follows_the_large_k_estimate() {
        // ln(K/2) for strongly chaotic K
        let l = standard_map_oracle(10.0, 0.5, 0.3, 100, 20_000);
        assert!((l - (5.0f64).ln()).abs() < 0.1, "{l}");
        // Integrable at K = 0: shear only, exponent → 0
        assert!(standard_map_oracle(0.0, 0.5, 0.3, 0, 10_000).abs() < 1e-3);
    }
}
