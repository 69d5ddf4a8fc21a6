//! Experiment descriptions, loaded from TOML.
//!
//! ```toml
//! kind = "lambda_sweep"
//! seeds = [0, 1, 2]
//! output = "runs/lambda"
//!
//! [dataset]
//! source = "glyphs"          # or "blobs", "xor_rings", "idx"
//! samples = 600
//!
//! [model]
//! hidden = [256, 128]
//! dropout_rate = 0.0
//!
//! [training]
//! epochs = 8
//! learning_rate = 0.05
//!
//! [estimator]
//! samples = 200
//! pair_budget = 20
//! image_budget = 8
//!
//! [params]
//! lambdas = [0.0, 0.1, 1.0]
//! ```
//!
//! Every table and key is optional; omitted keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Weighting;
use crate::nn::{idx, Dataset, Head, MlpConfig, Synthetic};
use crate::sampling::SamplerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    VerifyAxioms,
    OverfitTable,
    DropoutCompare,
    LambdaSweep,
    DropoutRateSweep,
    BanzhafCorrelation,
    Heatmap,
    InstabilityStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VerifyAxioms => "verify_axioms",
            ExperimentKind::OverfitTable => "overfit_table",
            ExperimentKind::DropoutCompare => "dropout_compare",
            ExperimentKind::LambdaSweep => "lambda_sweep",
            ExperimentKind::DropoutRateSweep => "dropout_rate_sweep",
            ExperimentKind::BanzhafCorrelation => "banzhaf_correlation",
            ExperimentKind::Heatmap => "heatmap",
            ExperimentKind::InstabilityStudy => "instability_study",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Glyphs {
        samples: usize,
    },
    Blobs {
        samples: usize,
        classes: usize,
        dim: usize,
        spread: f64,
    },
    XorRings {
        samples: usize,
        noise_dims: usize,
    },
    /// An IDX image/label file pair; pixels are scaled to `[0, 1]`.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        limit: Option<usize>,
    },
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Glyphs { samples: 600 }
    }
}

impl DatasetSpec {
    /// Materializes the dataset. Synthetic sources draw from `seed`.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::Glyphs { samples } => {
                Synthetic::Glyphs { samples: *samples }.generate(seed)
            }
            DatasetSpec::Blobs {
                samples,
                classes,
                dim,
                spread,
            } => Synthetic::Blobs {
                samples: *samples,
                classes: *classes,
                dim: *dim,
                spread: *spread,
            }
            .generate(seed),
            DatasetSpec::XorRings {
                samples,
                noise_dims,
            } => Synthetic::XorRings {
                samples: *samples,
                noise_dims: *noise_dims,
            }
            .generate(seed),
            DatasetSpec::Idx {
                images,
                labels,
                limit,
            } => idx::load(images, labels, *limit),
        }
    }
}

/// Network layout; the input width and class count come from the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    pub site_hidden: usize,
    pub dropout_rate: f64,
    pub batchnorm: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let m = MlpConfig::mnist();
        Self {
            hidden: m.hidden,
            site_hidden: m.site_hidden,
            dropout_rate: m.dropout_rate,
            batchnorm: m.batchnorm,
        }
    }
}

impl ModelSpec {
    /// A softmax classifier sized for `data`.
    pub fn mlp(&self, data: &Dataset) -> MlpConfig {
        MlpConfig {
            input_dim: data.dim(),
            hidden: self.hidden.clone(),
            outputs: data.classes(),
            site_hidden: self.site_hidden,
            dropout_rate: self.dropout_rate,
            batchnorm: self.batchnorm,
            head: Head::SoftmaxCrossEntropy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Interaction-loss weight for kinds that do not sweep it.
    pub lambda: f64,
    /// Batch fraction of the interaction loss.
    pub alpha: f64,
    pub pairs_per_step: usize,
    /// Training-loss level that counts as fitted (over-fitting experiment).
    pub loss_threshold: f64,
    /// Epoch budget for reaching `loss_threshold`.
    pub max_epochs: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            epochs: 10,
            lambda: 0.0,
            alpha: 0.05,
            pairs_per_step: 1,
            loss_threshold: 0.01,
            max_epochs: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSpec {
    /// Draws per interaction estimate.
    pub samples: usize,
    pub pair_budget: usize,
    pub image_budget: usize,
    pub weighting: Weighting,
    /// Seed of the estimator draws, independent of the training seed.
    pub seed: u64,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        let s = SamplerConfig::default();
        Self {
            samples: s.samples,
            pair_budget: s.pair_budget,
            image_budget: s.image_budget,
            weighting: Weighting::Shapley,
            seed: s.seed,
        }
    }
}

impl EstimatorSpec {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            samples: self.samples,
            seed: self.seed,
            pair_budget: self.pair_budget,
            image_budget: self.image_budget,
            ..SamplerConfig::default()
        }
    }
}

/// Kind-specific settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub mislabel_fraction: f64,
    pub lambdas: Vec<f64>,
    pub dropout_rates: Vec<f64>,
    /// Draw counts for the instability curve.
    pub sample_grid: Vec<usize>,
    pub repeats: usize,
    /// Cells per side of the image grid whose cells are the players.
    pub grid: (usize, usize),
    /// Training sample rendered by the heatmap.
    pub image_index: usize,
    /// Measure strength every this many epochs (curves); 0 disables curves.
    pub curve_every: usize,
    /// Games and size range of the axiom battery.
    pub verify_games: usize,
    pub verify_max_players: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            mislabel_fraction: 0.05,
            lambdas: vec![0.0, 0.1, 1.0],
            dropout_rates: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            sample_grid: vec![50, 200, 500],
            repeats: 5,
            grid: (7, 7),
            image_index: 0,
            curve_every: 1,
            verify_games: 50,
            verify_max_players: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub training: TrainSpec,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seeds: default_seeds(),
            dataset: DatasetSpec::default(),
            model: ModelSpec::default(),
            training: TrainSpec::default(),
            estimator: EstimatorSpec::default(),
            params: Params::default(),
            output: default_output(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.estimator.sampler().validate()?;
        if self.training.epochs == 0 && self.kind != ExperimentKind::VerifyAxioms {
            return Err(Error::Config("training needs at least one epoch".into()));
        }
        Ok(())
    }
}
