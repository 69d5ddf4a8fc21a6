use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use interplay::estimate::Weighting;
use interplay::experiments::{
    dataset_normalization, execute, export_heatmap, instability_curve, probe_indices,
    site_strength, training_config, DatasetSpec, ExperimentKind, ExperimentSpec,
};
use interplay::game::{grid_partition, NormalizationMode};
use interplay::nn::{checkpoint, evaluate, Dataset, Network, Trainer};
use interplay::verify::{run_battery, VerifyConfig};
use interplay::{Error, Result};

#[derive(Parser)]
#[command(
    name = "interplay",
    version,
    about = "Interaction analysis and interaction-loss training for small networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the axiom and identity battery on seeded random games.
    Verify {
        #[arg(long, default_value_t = 50)]
        games: usize,
        #[arg(long, default_value_t = 10)]
        max_players: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a network and save its checkpoint and step log.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, default_value = "runs/train")]
        out: PathBuf,
    },
    /// Measure the interaction strength at a checkpoint's dropout site.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Run an experiment described by a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the file's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seeds; override the file's `seeds`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Export a neighbor-interaction heatmap of one image.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Sample index in the dataset.
        #[arg(long, default_value_t = 0)]
        image: usize,
        /// Grid cells per side.
        #[arg(long, default_value_t = 7)]
        grid: usize,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long, default_value = "runs/heatmap")]
        out: PathBuf,
    },
    /// Instability of the sampled strength over a grid of draw counts.
    Instability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "50,200,500")]
        m_grid: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file supplying dataset, model and training settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory holding `train-images-idx3-ubyte` and `train-labels-idx1-ubyte`.
    #[arg(long)]
    dataset_path: Option<PathBuf>,
    /// Keep only this many samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Interaction-loss weight.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Hidden layer whose ReLU output feeds the dropout site.
    #[arg(long)]
    site: Option<usize>,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Draws per interaction estimate.
    #[arg(short, long, default_value_t = 500)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    #[arg(long, default_value_t = 10)]
    images: usize,
    #[arg(long, default_value_t = 0)]
    estimator_seed: u64,
    #[arg(long)]
    banzhaf: bool,
}

impl EstimatorArgs {
    fn apply(&self, spec: &mut ExperimentSpec) {
        spec.estimator.samples = self.m;
        spec.estimator.pair_budget = self.pairs;
        spec.estimator.image_budget = self.images;
        spec.estimator.seed = self.estimator_seed;
        spec.estimator.weighting = if self.banzhaf {
            Weighting::Banzhaf
        } else {
            Weighting::Shapley
        };
    }
}

impl Common {
    fn spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(p) => ExperimentSpec::from_file(p)?,
            None => ExperimentSpec::new(kind),
        };
        spec.kind = kind;
        spec.seeds = vec![self.seed];
        if let Some(dir) = &self.dataset_path {
            spec.dataset = DatasetSpec::Idx {
                images: dir.join("train-images-idx3-ubyte"),
                labels: dir.join("train-labels-idx1-ubyte"),
                limit: self.samples,
            };
        } else if let Some(n) = self.samples {
            match &mut spec.dataset {
                DatasetSpec::Glyphs { samples }
                | DatasetSpec::Blobs { samples, .. }
                | DatasetSpec::XorRings { samples, .. } => *samples = n,
                DatasetSpec::Idx { limit, .. } => *limit = Some(n),
            }
        }
        if let Some(l) = self.lambda {
            spec.training.lambda = l;
        }
        if let Some(d) = self.dropout {
            spec.model.dropout_rate = d;
        }
        if let Some(s) = self.site {
            spec.model.site_hidden = s;
        }
        Ok(spec)
    }
}

fn load_checkpoint(path: &Path, data: &Dataset) -> Result<Network> {
    let net = checkpoint::load(path)?;
    if net.input_dim() != data.dim() {
        return Err(Error::Shape(format!(
            "checkpoint expects {} inputs, dataset has {}",
            net.input_dim(),
            data.dim()
        )));
    }
    Ok(net)
}

/// Index of the first dropout layer, whose inputs are the analyzed units.
fn dropout_site(net: &Network) -> Result<usize> {
    net.layers()
        .iter()
        .position(|l| l.kind() == "dropout")
        .ok_or_else(|| Error::Config("checkpoint has no dropout site".into()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Verify {
            games,
            max_players,
            seed,
            out,
        } => {
            let cfg = VerifyConfig {
                games,
                max_players,
                seed,
                ..VerifyConfig::default()
            };
            let report = run_battery(&cfg)?;
            for c in &report.checks {
                println!(
                    "{} {:<28} max_error={:.3e} tolerance={:.0e} cases={}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_error,
                    c.tolerance,
                    c.cases
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(
                    dir.join("report.json"),
                    serde_json::to_string_pretty(&report)?,
                )?;
            }
            if !report.passed {
                return Err(Error::InternalConsistency(
                    "verification battery failed".into(),
                ));
            }
        }
        Command::Train {
            common,
            epochs,
            learning_rate,
            out,
        } => {
            let mut spec = common.spec(ExperimentKind::LambdaSweep)?;
            if let Some(e) = epochs {
                spec.training.epochs = e;
            }
            if let Some(lr) = learning_rate {
                spec.training.learning_rate = lr;
            }
            let data = spec.dataset.load(common.seed)?;
            let mlp = spec.model.mlp(&data);
            let mut net = Network::mlp(&mlp, common.seed)?;
            let cfg = training_config(&spec, &mlp, spec.training.lambda, common.seed);
            let mut trainer = Trainer::new(cfg, &net)?;
            std::fs::create_dir_all(&out)?;
            for _ in 0..spec.training.epochs {
                let m = trainer.train_epoch(&mut net, &data)?;
                println!(
                    "epoch {:>3} cls_loss {:.4} int_loss {:.4e} acc {:.3}",
                    m.epoch + 1,
                    m.classification_loss,
                    m.interaction_loss,
                    m.accuracy
                );
            }
            let (loss, acc) = evaluate(&net, &data)?;
            println!("eval loss {loss:.4} accuracy {acc:.4}");
            checkpoint::save(&net, &out.join("model.bin"))?;
            trainer.write_log_csv(&out.join("steps.csv"))?;
            std::fs::write(out.join("config.toml"), spec.to_toml()?)?;
        }
        Command::Analyze {
            common,
            checkpoint,
            estimator,
        } => {
            let mut spec = common.spec(ExperimentKind::DropoutCompare)?;
            estimator.apply(&mut spec);
            let data = spec.dataset.load(common.seed)?;
            let net = load_checkpoint(&checkpoint, &data)?;
            let site = dropout_site(&net)?;
            let term = dataset_normalization(&net, &data, NormalizationMode::MulticlassMargin)?;
            let probes =
                probe_indices(data.len(), spec.estimator.image_budget, spec.estimator.seed);
            let report = site_strength(
                &net,
                &data,
                &probes,
                site,
                &spec.estimator.sampler(),
                spec.estimator.weighting,
                term,
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Sweep { config, out, seeds } => {
            let mut spec = ExperimentSpec::from_file(&config)?;
            if let Some(o) = out {
                spec.output = o;
            }
            if let Some(s) = seeds {
                spec.seeds = s;
            }
            let outcome = execute(&spec, &spec.output)?;
            print!("{}", outcome.results.to_csv()?);
            println!("outputs written to {}", spec.output.display());
        }
        Command::Heatmap {
            common,
            checkpoint,
            image,
            grid,
            estimator,
            out,
        } => {
            let mut spec = common.spec(ExperimentKind::Heatmap)?;
            estimator.apply(&mut spec);
            let data = spec.dataset.load(common.seed)?;
            let net = load_checkpoint(&checkpoint, &data)?;
            let (h, w, c) = data
                .image_shape
                .ok_or_else(|| Error::Config("heatmap needs image data".into()))?;
            if image >= data.len() {
                return Err(Error::Index {
                    index: image,
                    n: data.len(),
                });
            }
            let partition = grid_partition(h, w, c, grid, grid)?;
            let map = export_heatmap(
                &net,
                data.sample(image),
                data.labels()[image],
                data.mean_input(),
                &partition,
                &spec.estimator.sampler(),
                spec.estimator.weighting,
            )?;
            std::fs::create_dir_all(&out)?;
            map.write(&out)?;
            print!("{}", map.to_csv());
            if map.degenerate {
                println!("degenerate: all cells have the same raw value");
            }
        }
        Command::Instability {
            common,
            checkpoint,
            m_grid,
            repeats,
            estimator,
        } => {
            let mut spec = common.spec(ExperimentKind::InstabilityStudy)?;
            estimator.apply(&mut spec);
            spec.params.sample_grid = m_grid;
            spec.params.repeats = repeats;
            let data = spec.dataset.load(common.seed)?;
            let net = load_checkpoint(&checkpoint, &data)?;
            let site = dropout_site(&net)?;
            println!("m,instability");
            for (m, v) in instability_curve(&net, &data, site, &spec)? {
                println!("{m},{v}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
