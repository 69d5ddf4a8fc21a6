//! Result tables and run manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, ExperimentSpec};
use crate::error::{Error, Result};
use crate::game::NormalizationMode;
use crate::sampling::BUCKET_RULE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Training produced a non-finite loss; metric values are NaN.
    Diverged,
    /// A metric is undefined (for example a correlation of constant series).
    Degenerate,
}

impl RowStatus {
    fn name(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Diverged => "diverged",
            RowStatus::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    /// Checkpoint or item the row describes, e.g. `epoch-8`.
    pub checkpoint: String,
    pub status: RowStatus,
    /// One value per table column.
    pub values: Vec<f64>,
}

/// Named scalar metrics with provenance. Columns are fixed per experiment
/// kind (see [`results_schema`] and [`curves_schema`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    /// Normalization that produced the strengths in this table, if any.
    pub normalization: Option<NormalizationMode>,
    pub rows: Vec<ResultRow>,
}

/// Columns of the main results table of each kind.
pub fn results_schema(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::VerifyAxioms => &["max_error", "tolerance", "cases", "passed", "seconds"],
        ExperimentKind::OverfitTable => &[
            "mislabeled_strength",
            "clean_strength",
            "train_loss",
            "train_accuracy",
            "epochs",
        ],
        ExperimentKind::DropoutCompare => &[
            "rate",
            "with_dropout_strength",
            "without_dropout_strength",
            "with_dropout_accuracy",
            "without_dropout_accuracy",
        ],
        ExperimentKind::LambdaSweep => &["lambda", "accuracy", "strength", "interaction_loss"],
        ExperimentKind::DropoutRateSweep => &["rate", "accuracy", "strength"],
        ExperimentKind::BanzhafCorrelation => &["pearson", "checkpoints"],
        ExperimentKind::Heatmap => &["row", "col", "raw", "normalized"],
        ExperimentKind::InstabilityStudy => &["samples", "instability"],
    }
}

/// Columns of the per-checkpoint curves of each kind; empty when the kind
/// emits no curves.
pub fn curves_schema(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::DropoutCompare => {
            &["epoch", "with_dropout_strength", "without_dropout_strength"]
        }
        ExperimentKind::LambdaSweep => &["lambda", "epoch", "strength"],
        ExperimentKind::DropoutRateSweep => &["rate", "epoch", "strength"],
        ExperimentKind::BanzhafCorrelation => &["epoch", "shapley_strength", "banzhaf_strength"],
        _ => &[],
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        v.to_string()
    }
}

impl ResultTable {
    pub fn new(kind: ExperimentKind, columns: &[&str]) -> Self {
        Self {
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            normalization: None,
            rows: Vec::new(),
        }
    }

    pub fn results(kind: ExperimentKind) -> Self {
        Self::new(kind, results_schema(kind))
    }

    pub fn curves(kind: ExperimentKind) -> Self {
        Self::new(kind, curves_schema(kind))
    }

    pub fn push(
        &mut self,
        seed: u64,
        checkpoint: impl Into<String>,
        status: RowStatus,
        values: Vec<f64>,
    ) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "row has {} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        self.rows.push(ResultRow {
            seed,
            checkpoint: checkpoint.into(),
            status,
            values,
        });
        Ok(())
    }

    /// Values of one column over all rows, in row order.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::arg(format!("no column {name}")))?;
        Ok(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// CSV with the header `seed,checkpoint,status,<columns>`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["seed".to_string(), "checkpoint".into(), "status".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(csv_error)?;
        for r in &self.rows {
            let mut rec = vec![
                r.seed.to_string(),
                r.checkpoint.clone(),
                r.status.name().into(),
            ];
            rec.extend(r.values.iter().map(|&v| fmt_value(v)));
            w.write_record(&rec).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// JSON form; non-finite values are written as `null`.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Everything needed to reproduce a run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ExperimentKind,
    pub package: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub spec: ExperimentSpec,
    /// How context sizes are drawn for order buckets.
    pub bucket_rule: String,
    /// How the interaction loss draws its context.
    pub context_rule: String,
    pub normalization: Option<NormalizationMode>,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec, normalization: Option<NormalizationMode>) -> Self {
        Self {
            kind: spec.kind,
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seeds: spec.seeds.clone(),
            spec: spec.clone(),
            bucket_rule: BUCKET_RULE.into(),
            context_rule:
                "rate u ~ U[0,1], then each unit outside A and B joins S with probability u".into(),
            normalization,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_failed_rows() {
        let mut t = ResultTable::results(ExperimentKind::LambdaSweep);
        t.push(1, "final", RowStatus::Ok, vec![0.0, 0.9, 0.01, 0.0])
            .unwrap();
        t.push(
            1,
            "final",
            RowStatus::Diverged,
            vec![5.0, f64::NAN, f64::NAN, f64::NAN],
        )
        .unwrap();
        let csv = t.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "seed,checkpoint,status,lambda,accuracy,strength,interaction_loss"
        );
        assert_eq!(lines[2], "1,final,diverged,5,NaN,NaN,NaN");
        assert!(t.push(0, "x", RowStatus::Ok, vec![1.0]).is_err());
        assert_eq!(t.column("lambda").unwrap(), vec![0.0, 5.0]);
    }

    #[test]
    fn json_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::InstabilityStudy);
        let m = Manifest::new(&spec, Some(NormalizationMode::MulticlassMargin));
        let p = dir.path().join("manifest.json");
        m.write(&p).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);

        let mut t = ResultTable::results(ExperimentKind::InstabilityStudy);
        t.push(0, "m-50", RowStatus::Ok, vec![50.0, f64::NAN])
            .unwrap();
        let jp = dir.path().join("results.json");
        t.write_json(&jp).unwrap();
        assert!(std::fs::read_to_string(jp).unwrap().contains("null"));
    }
}
