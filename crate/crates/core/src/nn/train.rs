use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::network::{ForwardOptions, Network};
use crate::error::{Error, Result};
use crate::loss::{total_loss, LossConfig};
use crate::rng::{derive_seed, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Interaction term; `lambda = 0` turns it off.
    pub interaction: LossConfig,
    /// Fraction of training labels replaced by a random wrong class before
    /// training.
    pub mislabel_fraction: f64,
}

impl TrainingConfig {
    pub fn new(site: usize) -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            epochs: 10,
            seed: 0,
            interaction: LossConfig::new(site, 0.0),
            mislabel_fraction: 0.0,
        }
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mislabel_fraction) {
            return Err(Error::Config(format!(
                "mislabel fraction {} outside [0, 1)",
                self.mislabel_fraction
            )));
        }
        if self.interaction.lambda > 0.0 {
            self.interaction.validate(net)?;
        } else if self.interaction.lambda != 0.0 || !self.interaction.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda {} must be >= 0",
                self.interaction.lambda
            )));
        }
        Ok(())
    }
}

/// One row of the per-step log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub cls_loss: f64,
    pub int_loss: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean train-mode classification loss over the epoch's batches.
    pub classification_loss: f64,
    /// Mean interaction loss over the epoch's batches (zero when disabled).
    pub interaction_loss: f64,
    /// Train-mode accuracy over the epoch's batches.
    pub accuracy: f64,
}

/// Mini-batch SGD with momentum (`v ← μv + g`, `θ ← θ - ηv`).
#[derive(Clone, Debug)]
pub struct Trainer {
    config: TrainingConfig,
    velocity: Vec<Vec<f64>>,
    step: usize,
    epoch: usize,
    log: Vec<StepLog>,
}

impl Trainer {
    pub fn new(config: TrainingConfig, net: &Network) -> Result<Self> {
        config.validate(net)?;
        Ok(Self {
            velocity: net.zero_gradients().tensors,
            config,
            step: 0,
            epoch: 0,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn log(&self) -> &[StepLog] {
        &self.log
    }

    pub fn train_epoch(&mut self, net: &mut Network, data: &Dataset) -> Result<EpochMetrics> {
        if data.is_empty() {
            return Err(Error::arg("cannot train on an empty dataset"));
        }
        if data.dim() != net.input_dim() {
            return Err(Error::Shape(format!(
                "dataset width {} but network expects {}",
                data.dim(),
                net.input_dim()
            )));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut stream(
            derive_seed(self.config.seed, 0x5348),
            self.epoch as u64,
        ));
        let (mut cls, mut int, mut acc, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for chunk in order.chunks(self.config.batch_size) {
            let (x, labels) = data.batch(chunk);
            let step_seed = derive_seed(self.config.seed, self.step as u64);
            let out =
                total_loss(net, &x, &labels, &self.config.interaction, step_seed).map_err(|e| {
                    match e {
                        Error::Numeric { value, .. } => Error::Diverged {
                            step: self.step,
                            loss: value,
                        },
                        other => other,
                    }
                })?;
            if !out.value.is_finite() || out.gradients.flat().iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    step: self.step,
                    loss: out.value,
                });
            }
            net.commit_batch_stats(&out.trace);
            let lr = self.config.learning_rate;
            let mu = self.config.momentum;
            for ((p, v), g) in net
                .parameters_mut()
                .into_iter()
                .zip(&mut self.velocity)
                .zip(&out.gradients.tensors)
            {
                for ((pk, vk), gk) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vk = mu * *vk + gk;
                    *pk -= lr * *vk;
                }
            }
            self.log.push(StepLog {
                step: self.step,
                cls_loss: out.classification,
                int_loss: out.interaction,
                lambda: self.config.interaction.lambda,
            });
            cls += out.classification;
            int += out.interaction;
            acc += out.accuracy;
            batches += 1;
            self.step += 1;
        }
        let metrics = EpochMetrics {
            epoch: self.epoch,
            classification_loss: cls / batches as f64,
            interaction_loss: int / batches as f64,
            accuracy: acc / batches as f64,
        };
        self.epoch += 1;
        Ok(metrics)
    }

    /// Writes the step log as CSV with columns `step,cls_loss,int_loss,lambda`.
    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "step,cls_loss,int_loss,lambda")?;
        for r in &self.log {
            writeln!(w, "{},{},{},{}", r.step, r.cls_loss, r.int_loss, r.lambda)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Eval-mode mean head loss and accuracy.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<(f64, f64)> {
    let (x, labels) = data.all();
    let out = net.forward(&x, ForwardOptions::eval())?;
    let (loss, _) = net.head_loss(out.output(), &labels)?;
    Ok((loss, net.accuracy(out.output(), &labels)))
}
