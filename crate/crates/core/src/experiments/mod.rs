//! Experiment descriptions, runners, and result persistence.

mod config;
mod heatmap;
mod results;
mod runners;

use std::path::Path;

pub use config::{
    DatasetSpec, EstimatorSpec, ExperimentKind, ExperimentSpec, ModelSpec, Params, TrainSpec,
};
pub use heatmap::{export_heatmap, neighbor_heatmap, Heatmap};
pub use results::{curves_schema, results_schema, Manifest, ResultRow, ResultTable, RowStatus};
pub use runners::{
    dataset_normalization, instability_curve, normalization_mode, paired_strengths, pearson,
    probe_indices, run, run_banzhaf_correlation, run_dropout_compare, run_dropout_rate_sweep,
    run_heatmap, run_instability_study, run_lambda_sweep, run_overfit_table, run_verify_axioms,
    site_strength, train_model, training_config, Outcome, TrainedRun, NEGLIGIBLE_STRENGTH,
};

use crate::error::Result;

/// Writes `manifest.json` into `dir`, runs the experiment, then writes
/// `results.csv`/`results.json`, `curves.csv` and `heatmap.{csv,pgm}` as
/// produced.
pub fn execute(spec: &ExperimentSpec, dir: &Path) -> Result<Outcome> {
    spec.validate()?;
    std::fs::create_dir_all(dir)?;
    Manifest::new(spec, normalization_mode(spec.kind)).write(&dir.join("manifest.json"))?;
    let outcome = run(spec)?;
    outcome.results.write_csv(&dir.join("results.csv"))?;
    outcome.results.write_json(&dir.join("results.json"))?;
    if let Some(c) = &outcome.curves {
        c.write_csv(&dir.join("curves.csv"))?;
    }
    if let Some(h) = &outcome.heatmap {
        h.write(dir)?;
    }
    Ok(outcome)
}
