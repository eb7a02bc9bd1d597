//! Expectations of `{q, p, q², H}` in the three pictures.

use dynpictures::kvn::{density_of, GaussianState, KvnWaveFunction, Observable};
use dynpictures::phase::Model;
use dynpictures::pictures::{expectation_series, PictureTag};
use serde_json::json;

use super::RunOutput;
use crate::config::{numerics_for, PicturesNumerics};
use crate::error::CliResult;
use crate::output::Table;

/// `|a − b| / max(|a|, |b|, 1)`
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn run(model: &Model, gaussian: &GaussianState, n: &PicturesNumerics) -> CliResult<RunOutput> {
    let num = numerics_for(&n.integrator, n.parallel);
    let times: Vec<f64> = (0..n.samples).map(|k| n.t_final * k as f64 / (n.samples - 1) as f64).collect();
    let obs = Observable::standard_set(model);
    let series = |tag, nodes| -> CliResult<Vec<Vec<f64>>> {
        let rho0 = density_of(&KvnWaveFunction::Ensemble(gaussian.ensemble(nodes)?));
        Ok(expectation_series(tag, &obs, &rho0, model, &times, &num)?)
    };
    let s = series(PictureTag::Schrodinger, n.schrodinger_nodes)?;
    let h = series(PictureTag::Heisenberg, n.heisenberg_nodes)?;
    let i = series(PictureTag::Interaction, n.interaction_nodes)?;

    let mut table = Table::new(
        "expectations",
        "t: time, observable: name, schrodinger/heisenberg/interaction: <A>(t) per picture, \
         max_pairwise_diff: largest |a - b| / max(|a|, |b|, 1)",
        &["t", "observable", "schrodinger", "heisenberg", "interaction", "max_pairwise_diff"],
    );
    let mut worst = 0.0f64;
    let mut worst_at = (0.0, String::new());
    for (k, &t) in times.iter().enumerate() {
        for (j, a) in obs.iter().enumerate() {
            let (x, y, z) = (s[k][j], h[k][j], i[k][j]);
            let gap = relative_gap(x, y).max(relative_gap(x, z)).max(relative_gap(y, z));
            if gap > worst || gap.is_nan() {
                worst = gap;
                worst_at = (t, a.name().to_string());
            }
            table.push(vec![t.into(), a.name().into(), x.into(), y.into(), z.into(), gap.into()]);
        }
    }
    let passed = worst < n.threshold;
    Ok(RunOutput {
        summary: json!({
            "max_pairwise_diff": worst,
            "worst_time": worst_at.0,
            "worst_observable": worst_at.1,
            "threshold": n.threshold,
        }),
        checks: vec![("picture_equivalence".into(), passed)],
        tables: vec![table],
    })
}
