//! Experiment dispatch, artifact writing and plot series.

pub mod constant_force;
pub mod lyapunov;
pub mod pictures;
pub mod quantum;

use std::path::{Path, PathBuf};

use dynpictures::kvn::GaussianState;
use dynpictures::phase::{ModelKind, PhasePoint};
use log::{info, warn};
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ExperimentKind, ExperimentNumerics, StateDescriptor};
use crate::error::{validation, CliError, CliResult};
use crate::output::{read_table, write_json, write_table, Cell, Table};

pub const RESOLVED_CONFIG: &str = "resolved_config.json";
pub const SUMMARY: &str = "summary.json";
pub const PLOT_DIR: &str = "plots";

/// What one experiment computed, before anything is written.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: Value,
    /// Named pass/fail assertions.
    pub checks: Vec<(String, bool)>,
    pub tables: Vec<Table>,
}

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub summary: Value,
    pub failed: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Runs one experiment and writes its artifacts under `out` (or the
/// config's output directory). Failed checks are reported in the summary
/// and returned as [`CliError::ChecksFailed`] after everything is written.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<RunReport> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone());
    let mut echo = serde_json::to_value(cfg).expect("configs serialize");
    echo["output"] = json!(dir);
    let mut files = Vec::new();
    let resolved = dir.join(RESOLVED_CONFIG);
    write_json(&resolved, &echo)?;
    files.push(resolved);

    let model = cfg.build_model()?;
    info!("running {:?} in {}", cfg.experiment, dir.display());
    let result = match (&cfg.numerics, &cfg.state) {
        (ExperimentNumerics::Pictures(n), StateDescriptor::Gaussian { q, p, sigma_q, sigma_p }) => {
            pictures::run(&model, &GaussianState::one(*q, *p, *sigma_q, *sigma_p), n)?
        }
        (ExperimentNumerics::ConstantForce(n), StateDescriptor::MomentumSheet { mean, sigma, p0, nodes }) => {
            let ModelKind::ConstantForce { f, .. } = model.kind() else { unreachable!("checked on load") };
            let sheet = constant_force::Sheet { mean: *mean, sigma: *sigma, p0: *p0, nodes: *nodes };
            constant_force::run(&model, f, &sheet, n)?
        }
        (ExperimentNumerics::Lyapunov(n), StateDescriptor::Point { q, p }) => {
            let z0 = PhasePoint::new(q.clone(), p.clone()).map_err(validation)?;
            lyapunov::run(&model, &z0, n)?
        }
        (ExperimentNumerics::Quantum(n), state) => quantum::run_sensitivity(&model, state, n)?,
        (ExperimentNumerics::Compare(c), state) => quantum::run_compare(&model, state, c)?,
        _ => unreachable!("state kind checked on load"),
    };

    for t in &result.tables {
        files.push(write_table(&dir, t)?);
    }
    let failed: Vec<String> = result.checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.clone()).collect();
    let mut summary = Map::new();
    summary.insert("experiment".into(), json!(cfg.experiment));
    summary.insert("passed".into(), json!(failed.is_empty()));
    summary.insert("checks".into(), Value::Object(result.checks.iter().map(|(n, ok)| (n.clone(), json!(ok))).collect()));
    if let Value::Object(extra) = result.summary {
        summary.extend(extra);
    }
    summary.insert(
        "outputs".into(),
        json!(result.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>()),
    );
    let summary = Value::Object(summary);
    let summary_path = dir.join(SUMMARY);
    write_json(&summary_path, &summary)?;
    files.push(summary_path);
    files.extend(emit_plot_data(&dir)?);

    if !failed.is_empty() {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(RunReport { dir, summary, failed, files })
}

/// Writes plot-ready series for a finished run into `dir/plots`. A
/// directory without a run summary is left alone with a warning.
pub fn emit_plot_data(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let summary_path = dir.join(SUMMARY);
    let Ok(text) = std::fs::read_to_string(&summary_path) else {
        warn!("{}: no run summary, nothing to plot", dir.display());
        return Ok(Vec::new());
    };
    let summary: Value = serde_json::from_str(&text).map_err(|e| CliError::io(&summary_path, e.into()))?;
    let Ok(kind) = serde_json::from_value::<ExperimentKind>(summary["experiment"].clone()) else {
        warn!("{}: unrecognized experiment in summary, nothing to plot", dir.display());
        return Ok(Vec::new());
    };
    let plots = dir.join(PLOT_DIR);
    let mut out = Vec::new();
    let margins = |out: &mut Vec<PathBuf>| -> CliResult<()> {
        let (h, rows) = read_table(&dir.join("bound.csv"))?;
        let col = |name: &str| h.iter().position(|c| c == name).expect("bound table columns");
        let mut t = Table::new(
            "bound_margins",
            "t: time, margin_ij: rhs_ij - lhs_ij of the sensitivity bound (non-negative when satisfied)",
            &["t", "margin_11", "margin_12", "margin_21", "margin_22"],
        );
        for r in &rows {
            let mut row: Vec<Cell> = vec![num(&r[col("t")])];
            for ij in ["11", "12", "21", "22"] {
                let gap = parse(&r[col(&format!("rhs_{ij}"))]) - parse(&r[col(&format!("lhs_{ij}"))]);
                row.push(gap.into());
            }
            t.push(row);
        }
        out.push(write_table(&plots, &t)?);
        Ok(())
    };
    match kind {
        ExperimentKind::PicturesEquivalence => {
            out.push(project(dir, &plots, "expectations", "pictures_vs_t", &["t", "observable", "max_pairwise_diff"],
                "t: time, observable: name, max_pairwise_diff: largest relative gap between pictures")?);
        }
        ExperimentKind::ConstantForce => {
            out.push(project(dir, &plots, "marginal", "marginal_vs_q", &["t", "q", "closed_form", "oracle"],
                "t: time, q: position, closed_form: closed-form q-marginal, oracle: pullback q-marginal")?);
        }
        ExperimentKind::Lyapunov => {
            let (h, _) = read_table(&dir.join("lambda_vs_t.csv"))?;
            let cols: Vec<&str> = h.iter().map(String::as_str).filter(|c| *c != "det_error").collect();
            out.push(project(dir, &plots, "lambda_vs_t", "lambda_vs_t", &cols,
                "checkpoint_t: time, lambda_i: running exponent estimates")?);
        }
        ExperimentKind::QuantumSensitivity => margins(&mut out)?,
        ExperimentKind::CompareChaos => {
            margins(&mut out)?;
            out.push(project(dir, &plots, "growth", "growth", &["t", "ln_norm_T_quantum", "ln_norm_T_classical"],
                "t: time, ln_norm_T_quantum: quantum series, ln_norm_T_classical: classical series")?);
        }
    }
    Ok(out)
}

fn parse(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn num(s: &str) -> Cell {
    s.parse::<f64>().map(Cell::Num).unwrap_or_else(|_| Cell::Text(s.to_string()))
}

/// Copies selected columns of `dir/src.csv` to `plots/dst.csv`, values
/// passed through verbatim.
fn project(dir: &Path, plots: &Path, src: &str, dst: &str, columns: &[&str], description: &str) -> CliResult<PathBuf> {
    let (h, rows) = read_table(&dir.join(format!("{src}.csv")))?;
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| h.iter().position(|x| x == c).ok_or_else(|| CliError::Validation(format!("{src}.csv: no column {c}"))))
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(dst, description, columns);
    for r in &rows {
        t.push(idx.iter().map(|&i| Cell::Text(r[i].clone())).collect());
    }
    write_table(plots, &t)
}
