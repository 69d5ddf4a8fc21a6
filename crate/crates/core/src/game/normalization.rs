//! Output-scale normalization terms that make interaction strengths
//! comparable across models and images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{ForwardOptions, Head, Matrix, Network, ScoreKind};

/// One sample's output vector and its (assigned) label.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSample {
    pub outputs: Vec<f64>,
    pub label: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `|E_x[f_{y*} - E_{y≠y*} f_y]|` over the dataset.
    MulticlassMargin,
    /// Mean scalar output on positives minus mean on negatives.
    BinaryMeanGap,
    /// The margin of a single image: `|f_{y*} - E_{y≠y*} f_y|`
    /// (the scalar output's magnitude for one-output heads).
    PerImage,
    /// Range (max - min) of the label score over the dataset.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTerm {
    pub value: f64,
    pub mode: NormalizationMode,
}

impl NormalizationTerm {
    /// The identity normalization, for callers that opt out explicitly.
    pub fn unit(mode: NormalizationMode) -> Self {
        Self { value: 1.0, mode }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        raw / self.value
    }
}

fn margin(sample: &NormSample) -> Result<f64> {
    let k = sample.outputs.len();
    if sample.label >= k {
        return Err(Error::arg(format!(
            "label {} outside {k} outputs",
            sample.label
        )));
    }
    if k < 2 {
        return Err(Error::arg("margin needs at least two outputs"));
    }
    let others: f64 = sample
        .outputs
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != sample.label)
        .map(|(_, v)| v)
        .sum::<f64>()
        / (k - 1) as f64;
    Ok(sample.outputs[sample.label] - others)
}

fn label_score(sample: &NormSample) -> Result<f64> {
    match sample.outputs.len() {
        1 => Ok(sample.outputs[0]),
        k if sample.label < k => Ok(sample.outputs[sample.label]),
        k => Err(Error::arg(format!(
            "label {} outside {k} outputs",
            sample.label
        ))),
    }
}

pub fn compute_normalization(
    samples: &[NormSample],
    mode: NormalizationMode,
) -> Result<NormalizationTerm> {
    if samples.is_empty() {
        return Err(Error::arg("normalization needs at least one sample"));
    }
    let value = match mode {
        NormalizationMode::MulticlassMargin => {
            let mut total = 0.0;
            for s in samples {
                total += margin(s)?;
            }
            (total / samples.len() as f64).abs()
        }
        NormalizationMode::BinaryMeanGap => {
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for s in samples {
                if s.outputs.len() != 1 {
                    return Err(Error::arg("binary mean gap needs one output per sample"));
                }
                match s.label {
                    0 => neg.push(s.outputs[0]),
                    1 => pos.push(s.outputs[0]),
                    y => return Err(Error::arg(format!("binary label {y}"))),
                }
            }
            if pos.is_empty() || neg.is_empty() {
                return Err(Error::DegenerateNormalization(
                    "binary mean gap needs samples of both classes".into(),
                ));
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            (mean(&pos) - mean(&neg)).abs()
        }
        NormalizationMode::PerImage => {
            if samples.len() != 1 {
                return Err(Error::arg(format!(
                    "per-image normalization takes one sample, got {}",
                    samples.len()
                )));
            }
            let s = &samples[0];
            if s.outputs.len() == 1 {
                s.outputs[0].abs()
            } else {
                margin(s)?.abs()
            }
        }
        NormalizationMode::Global => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in samples {
                let v = label_score(s)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            hi - lo
        }
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::DegenerateNormalization(format!(
            "{mode:?} term is {value}"
        )));
    }
    Ok(NormalizationTerm { value, mode })
}

/// Eval-mode outputs for a batch, expressed in the given score space:
/// probabilities when `kind` is `Probability`, raw outputs otherwise.
pub fn normalization_samples(
    net: &Network,
    inputs: &Matrix,
    labels: &[usize],
    kind: ScoreKind,
) -> Result<Vec<NormSample>> {
    if inputs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            inputs.rows()
        )));
    }
    let out = net.forward(inputs, ForwardOptions::eval())?;
    let out = out.output();
    let mut samples = Vec::with_capacity(labels.len());
    for (r, &label) in labels.iter().enumerate() {
        let outputs = match (kind, net.head()) {
            (ScoreKind::Probability, Head::SoftmaxCrossEntropy) => softmax(out.row(r)),
            (ScoreKind::Probability, Head::Logistic) => {
                vec![1.0 / (1.0 + (-out.get(r, 0)).exp())]
            }
            _ => out.row(r).to_vec(),
        };
        samples.push(NormSample { outputs, label });
    }
    Ok(samples)
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
