//! Quantum sensitivity bound, and its growth compared with the classical
//! tangent norm.

use dynpictures::chaos::{log_tangent_norm_series, lyapunov_spectrum, LyapunovConfig};
use dynpictures::phase::{Model, ModelKind, PhasePoint};
use dynpictures::quantum::{bound_series, growth_rate_fit, BoundReport, QuantumState, QuantumSystem};
use serde_json::json;

use super::RunOutput;
use crate::config::{numerics_for, CompareNumerics, QuantumNumerics, StateDescriptor};
use crate::error::CliResult;
use crate::output::{Cell, Table};

const IDENTITY_TOL: f64 = 1e-12;

struct Resolved {
    omega_ref: f64,
    interval: f64,
    samples: usize,
    gate_dim: usize,
}

fn resolved(n: &QuantumNumerics) -> Resolved {
    Resolved {
        omega_ref: n.omega_ref.expect("resolved on load"),
        interval: n.interval.expect("resolved on load"),
        samples: n.samples.expect("resolved on load"),
        gate_dim: n.gate_dim.expect("resolved on load"),
    }
}

fn prepare(model: &Model, state: &StateDescriptor, n: &QuantumNumerics, dim: usize) -> CliResult<(QuantumSystem, QuantumState)> {
    let r = resolved(n);
    let system = QuantumSystem::from_model(model, dim, n.hbar, r.omega_ref)?;
    let st = match state {
        StateDescriptor::Coherent { q, p } => QuantumState::coherent(&system, *q, *p)?,
        StateDescriptor::Number { n } => QuantumState::number(&system, *n)?,
        _ => unreachable!("state kind checked on load"),
    };
    Ok((system, st))
}

/// Classical initial point paired with the quantum state.
fn classical_point(state: &StateDescriptor) -> PhasePoint {
    match state {
        StateDescriptor::Coherent { q, p } => PhasePoint::one(*q, *p),
        _ => PhasePoint::one(0.0, 0.0),
    }
}

struct Series {
    reports: Vec<BoundReport>,
    times: Vec<f64>,
    ln_classical: Vec<f64>,
    summary: serde_json::Value,
    checks: Vec<(String, bool)>,
    table: Table,
}

fn bound_run(model: &Model, state: &StateDescriptor, n: &QuantumNumerics) -> CliResult<Series> {
    let r = resolved(n);
    let num = numerics_for(&n.integrator, n.parallel);
    let (system, st) = prepare(model, state, n, n.dim)?;
    let reports = bound_series(&system, &st, r.interval, r.samples, n.steps)?;
    let times: Vec<f64> = reports.iter().map(|b| b.t).collect();
    let z0 = classical_point(state);
    let ln_classical = log_tangent_norm_series(model, &z0, &times, &num)?;

    let mut table = Table::new(
        "bound",
        "t: time, lhs_ij: |<T_ij>| of the quantum sensitivity operator, rhs_ij: (2/hbar) dz_i(t) dz~_j(0), \
         satisfied: lhs <= rhs entrywise, norm_T_quantum: Frobenius norm of <T>, norm_T_classical: Frobenius \
         norm of the classical sensitivity matrix at the state's centre, edge_population: weight on the two \
         outermost basis states",
        &[
            "t", "lhs_11", "lhs_12", "lhs_21", "lhs_22", "rhs_11", "rhs_12", "rhs_21", "rhs_22", "satisfied",
            "norm_T_quantum", "norm_T_classical", "edge_population",
        ],
    );
    for (b, lc) in reports.iter().zip(&ln_classical) {
        let mut row: Vec<Cell> = vec![b.t.into()];
        row.extend(b.lhs.iter().flatten().map(|&x| x.into()));
        row.extend(b.rhs.iter().flatten().map(|&x| x.into()));
        row.extend([b.satisfied.into(), b.norm().into(), lc.exp().into(), b.edge_population.into()]);
        table.push(row);
    }

    let all_satisfied = reports.iter().all(|b| b.satisfied);
    let min_margin = reports.iter().map(BoundReport::margin).fold(f64::INFINITY, f64::min);
    let warnings = reports.iter().filter(|b| b.truncation_warning()).count();
    let e0 = reports[0].expectation;
    let identity_error = (e0[0][0] - 1.0).abs().max(e0[0][1].abs()).max(e0[1][0].abs()).max((e0[1][1] - 1.0).abs());
    let mut summary = json!({
        "samples": reports.len(),
        "interval": r.interval,
        "dim": n.dim,
        "omega_ref": r.omega_ref,
        "min_margin": min_margin,
        "identity_error_t0": identity_error,
        "truncation_warnings": warnings,
        "max_edge_population": reports.iter().map(|b| b.edge_population).fold(0.0, f64::max),
        "max_imaginary_residue": reports.iter().map(|b| b.imaginary_residue).fold(0.0, f64::max),
    });
    let mut checks = vec![
        ("heisenberg_bound".to_string(), all_satisfied),
        ("sensitivity_identity_at_t0".to_string(), identity_error < IDENTITY_TOL),
    ];

    if r.gate_dim > 0 {
        let (big, big_state) = prepare(model, state, n, r.gate_dim)?;
        let wide = bound_series(&big, &big_state, r.interval, r.samples, n.steps)?;
        let change = reports.iter().zip(&wide).map(|(a, b)| a.max_entry_change(b)).fold(0.0, f64::max);
        summary["gate_dim"] = json!(r.gate_dim);
        summary["gate_max_entry_change"] = json!(change);
        checks.push(("truncation_gate".into(), change < n.gate_tolerance));
    }

    if let Some(exact) = linear_sensitivity(model) {
        let mut worst = 0.0f64;
        for b in &reports {
            let want = exact(b.t);
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((b.expectation[i][j] - want[i][j]).abs());
                }
            }
        }
        summary["classical_match_error"] = json!(worst);
        checks.push(("classical_sensitivity_match".into(), worst < n.classical_tolerance));
    }
    Ok(Series { reports, times, ln_classical, summary, checks, table })
}

/// Closed-form classical sensitivity matrix for models with linear flows,
/// the same at every base point.
fn linear_sensitivity(model: &Model) -> Option<impl Fn(f64) -> [[f64; 2]; 2]> {
    let m = model.mass();
    let w = match model.kind() {
        ModelKind::Free { .. } | ModelKind::ConstantForce { .. } => 0.0,
        ModelKind::Harmonic { k, .. } => (k / m).sqrt(),
        _ => return None,
    };
    Some(move |t: f64| {
        if w == 0.0 {
            [[1.0, t / m], [0.0, 1.0]]
        } else {
            let (s, c) = (w * t).sin_cos();
            [[c, s / (m * w)], [-m * w * s, c]]
        }
    })
}

pub fn run_sensitivity(model: &Model, state: &StateDescriptor, n: &QuantumNumerics) -> CliResult<RunOutput> {
    let s = bound_run(model, state, n)?;
    Ok(RunOutput { summary: s.summary, checks: s.checks, tables: vec![s.table] })
}

/// Least-squares slope of `ln x` over a window, with the series rescaled
/// first so large norms do not overflow.
fn ln_slope(times: &[f64], ln_values: &[f64], window: (f64, f64)) -> CliResult<f64> {
    let shift = ln_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let series: Vec<(f64, f64)> = times.iter().zip(ln_values).map(|(&t, &l)| (t, (l - shift).exp())).collect();
    Ok(growth_rate_fit(&series, window)?)
}

pub fn run_compare(model: &Model, state: &StateDescriptor, c: &CompareNumerics) -> CliResult<RunOutput> {
    let n = &c.quantum;
    let r = resolved(n);
    let s = bound_run(model, state, n)?;
    let num = numerics_for(&n.integrator, n.parallel);
    let total = r.interval * r.samples as f64;
    let cfg = LyapunovConfig::new(total, r.interval / c.renorm_per_interval as f64)
        .with_transient(r.interval * c.transient_intervals as f64);
    let spec = lyapunov_spectrum(model, &classical_point(state), &cfg, &num)?;
    let lambda1 = spec.largest();

    let ln_quantum: Vec<f64> = s.reports.iter().map(|b| b.norm().ln()).collect();
    let window = (c.window[0] * total, c.window[1] * total);
    let classical_slope = ln_slope(&s.times, &s.ln_classical, window)?;
    let quantum_slope = ln_slope(&s.times, &ln_quantum, window)?;

    let mut growth = Table::new(
        "growth",
        "t: time, ln_norm_T_quantum: ln of the Frobenius norm of the quantum sensitivity expectation, \
         ln_norm_T_classical: ln of the Frobenius norm of the classical sensitivity matrix",
        &["t", "ln_norm_T_quantum", "ln_norm_T_classical"],
    );
    for ((t, q), cl) in s.times.iter().zip(&ln_quantum).zip(&s.ln_classical) {
        growth.push(vec![(*t).into(), (*q).into(), (*cl).into()]);
    }

    let mut summary = s.summary;
    summary["lambda1"] = json!(lambda1);
    summary["lyapunov_det_error"] = json!(spec.max_det_error);
    summary["fit_window"] = json!([window.0, window.1]);
    summary["classical_slope"] = json!(classical_slope);
    summary["quantum_slope"] = json!(quantum_slope);
    let mut checks = s.checks;
    checks.push(("classical_chaos".into(), lambda1 > 0.0));
    checks.push((
        "classical_growth_matches_lambda1".into(),
        (classical_slope - lambda1).abs() <= c.classical_band * lambda1.abs(),
    ));
    checks.push(("quantum_growth_bounded".into(), quantum_slope < c.quantum_fraction * lambda1));
    Ok(RunOutput { summary, checks, tables: vec![s.table, growth] })
}
