//! Desk-scale experiment runners. Each returns its tables without touching
//! the filesystem; [`super::execute`] persists them.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, ExperimentSpec};
use super::heatmap::{export_heatmap, Heatmap};
use super::results::{ResultTable, RowStatus};
use crate::error::{Error, Result};
use crate::estimate::Weighting;
use crate::game::{
    compute_normalization, grid_partition, normalization_samples, MaskedModelGame,
    NormalizationMode, NormalizationTerm, ScoreSelector,
};
use crate::nn::{
    evaluate, Dataset, EpochMetrics, Matrix, MlpConfig, Network, Trainer, TrainingConfig,
};
use crate::rng::{derive_seed, stream};
use crate::sampling::{
    aggregate_strength, instability, Normalizer, PairSelection, SamplerConfig, StrengthReport,
};
use crate::verify::{run_battery, VerifyConfig};

/// Tables produced by one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub results: ResultTable,
    pub curves: Option<ResultTable>,
    pub heatmap: Option<Heatmap>,
}

impl Outcome {
    fn table(results: ResultTable) -> Self {
        Self {
            results,
            curves: None,
            heatmap: None,
        }
    }
}

/// Runs the experiment named by `spec.kind`.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::VerifyAxioms => run_verify_axioms(spec).map(Outcome::table),
        ExperimentKind::OverfitTable => run_overfit_table(spec).map(Outcome::table),
        ExperimentKind::DropoutCompare => run_dropout_compare(spec),
        ExperimentKind::LambdaSweep => run_lambda_sweep(spec),
        ExperimentKind::DropoutRateSweep => run_dropout_rate_sweep(spec),
        ExperimentKind::BanzhafCorrelation => run_banzhaf_correlation(spec),
        ExperimentKind::Heatmap => run_heatmap(spec),
        ExperimentKind::InstabilityStudy => run_instability_study(spec).map(Outcome::table),
    }
}

/// Normalization mode each kind reports strengths under.
pub fn normalization_mode(kind: ExperimentKind) -> Option<NormalizationMode> {
    match kind {
        ExperimentKind::OverfitTable => Some(NormalizationMode::PerImage),
        ExperimentKind::DropoutCompare
        | ExperimentKind::LambdaSweep
        | ExperimentKind::DropoutRateSweep
        | ExperimentKind::BanzhafCorrelation
        | ExperimentKind::InstabilityStudy => Some(NormalizationMode::MulticlassMargin),
        ExperimentKind::VerifyAxioms | ExperimentKind::Heatmap => None,
    }
}

fn with_mode(mut t: ResultTable) -> ResultTable {
    t.normalization = normalization_mode(t.kind);
    t
}

pub fn run_verify_axioms(spec: &ExperimentSpec) -> Result<ResultTable> {
    let cfg = VerifyConfig {
        games: spec.params.verify_games,
        max_players: spec.params.verify_max_players,
        seed: spec.seeds[0],
        ..VerifyConfig::default()
    };
    let report = run_battery(&cfg)?;
    let mut t = ResultTable::results(ExperimentKind::VerifyAxioms);
    for c in &report.checks {
        let status = if c.passed {
            RowStatus::Ok
        } else {
            RowStatus::Degenerate
        };
        t.push(
            cfg.seed,
            c.name.clone(),
            status,
            vec![
                c.max_error,
                c.tolerance,
                c.cases as f64,
                f64::from(u8::from(c.passed)),
                c.seconds,
            ],
        )?;
    }
    Ok(t)
}

/// A training run on one dataset with per-checkpoint callbacks.
pub struct TrainedRun {
    pub net: Network,
    pub metrics: Vec<EpochMetrics>,
}

/// Trains `mlp` initialized from `seed`. `on_checkpoint(epoch, net)` runs on
/// the untrained network (epoch 0) and after every `every`-th epoch and the
/// last one; `every = 0` disables it.
pub fn train_model(
    data: &Dataset,
    mlp: &MlpConfig,
    spec: &ExperimentSpec,
    lambda: f64,
    seed: u64,
    every: usize,
    mut on_checkpoint: impl FnMut(usize, &Network) -> Result<()>,
) -> Result<TrainedRun> {
    let mut net = Network::mlp(mlp, seed)?;
    let cfg = training_config(spec, mlp, lambda, seed);
    let mut trainer = Trainer::new(cfg, &net)?;
    if every > 0 {
        on_checkpoint(0, &net)?;
    }
    let epochs = spec.training.epochs;
    let mut metrics = Vec::with_capacity(epochs);
    for e in 1..=epochs {
        metrics.push(trainer.train_epoch(&mut net, data)?);
        if every > 0 && (e % every == 0 || e == epochs) {
            on_checkpoint(e, &net)?;
        }
    }
    Ok(TrainedRun { net, metrics })
}

pub fn training_config(
    spec: &ExperimentSpec,
    mlp: &MlpConfig,
    lambda: f64,
    seed: u64,
) -> TrainingConfig {
    let t = &spec.training;
    let mut cfg = TrainingConfig::new(mlp.site_layer());
    cfg.learning_rate = t.learning_rate;
    cfg.momentum = t.momentum;
    cfg.batch_size = t.batch_size;
    cfg.epochs = t.epochs;
    cfg.seed = seed;
    cfg.interaction.lambda = lambda;
    cfg.interaction.alpha = t.alpha;
    cfg.interaction.pairs_per_step = t.pairs_per_step;
    cfg
}

/// Seeded choice of `count` sample indices, sorted.
pub fn probe_indices(len: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut idx = sample(&mut stream(seed, 0x70), len, count.min(len)).into_vec();
    idx.sort_unstable();
    idx
}

/// Dataset-wide normalization term in the network's default score space.
pub fn dataset_normalization(
    net: &Network,
    data: &Dataset,
    mode: NormalizationMode,
) -> Result<NormalizationTerm> {
    let (x, labels) = data.all();
    compute_normalization(
        &normalization_samples(net, &x, &labels, net.default_score())?,
        mode,
    )
}

/// Mean normalized absolute interaction among the units entering `site`,
/// over the samples in `probes`.
pub fn site_strength(
    net: &Network,
    data: &Dataset,
    probes: &[usize],
    site: usize,
    sampler: &SamplerConfig,
    weighting: Weighting,
    term: NormalizationTerm,
) -> Result<StrengthReport> {
    let games = probes
        .iter()
        .map(|&i| {
            let label = data.labels()[i];
            MaskedModelGame::from_input(
                net,
                data.sample(i),
                site,
                ScoreSelector::default_for(net, label),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = SamplerConfig {
        image_budget: games.len(),
        ..sampler.clone()
    };
    aggregate_strength(
        &games,
        &cfg,
        &PairSelection::Random,
        weighting,
        &Normalizer::Global(term),
    )
}

/// Strength of a trained network at its dropout site, normalized over the
/// whole training set.
fn final_strength(
    net: &Network,
    data: &Dataset,
    mlp: &MlpConfig,
    spec: &ExperimentSpec,
    weighting: Weighting,
) -> Result<f64> {
    let term = dataset_normalization(net, data, NormalizationMode::MulticlassMargin)?;
    let probes = probe_indices(data.len(), spec.estimator.image_budget, spec.estimator.seed);
    Ok(site_strength(
        net,
        data,
        &probes,
        mlp.site_layer(),
        &spec.estimator.sampler(),
        weighting,
        term,
    )?
    .value)
}

pub fn run_overfit_table(spec: &ExperimentSpec) -> Result<ResultTable> {
    let frac = spec.params.mislabel_fraction;
    if !(frac > 0.0) {
        return Err(Error::Config(
            "mislabel fraction must be positive: with no mislabeled samples the two groups coincide".into(),
        ));
    }
    let mut table = with_mode(ResultTable::results(ExperimentKind::OverfitTable));
    for &seed in &spec.seeds {
        let (mis, clean, loss, acc, epochs) = overfit_seed(spec, seed)?;
        table.push(
            seed,
            format!("epoch-{epochs}"),
            RowStatus::Ok,
            vec![mis, clean, loss, acc, epochs as f64],
        )?;
    }
    Ok(table)
}

fn overfit_seed(spec: &ExperimentSpec, seed: u64) -> Result<(f64, f64, f64, f64, usize)> {
    let data = spec.dataset.load(seed)?;
    let (h, w, c) = data
        .image_shape
        .ok_or_else(|| Error::Config("over-fitting experiment needs image data".into()))?;
    let (noisy, flipped) =
        data.mislabel(spec.params.mislabel_fraction, derive_seed(seed, 0x6d6c))?;
    if flipped.is_empty() {
        return Err(Error::Config("no sample was mislabeled".into()));
    }
    let mlp = spec.model.mlp(&noisy);
    let mut net = Network::mlp(&mlp, seed)?;
    let mut trainer = Trainer::new(
        training_config(spec, &mlp, spec.training.lambda, seed),
        &net,
    )?;
    let threshold = spec.training.loss_threshold;
    let (mut loss, mut acc) = evaluate(&net, &noisy)?;
    let mut epochs = 0;
    while loss >= threshold {
        if epochs == spec.training.max_epochs {
            return Err(Error::BudgetExceeded {
                loss,
                threshold,
                epochs,
            });
        }
        trainer.train_epoch(&mut net, &noisy)?;
        epochs += 1;
        (loss, acc) = evaluate(&net, &noisy)?;
    }

    let grid = grid_partition(h, w, c, spec.params.grid.0, spec.params.grid.1)?;
    let mean = noisy.mean_input();
    let count = spec.estimator.image_budget;
    let pick = |pool: &[usize], tag: u64| -> Vec<usize> {
        probe_indices(pool.len(), count, derive_seed(spec.estimator.seed, tag))
            .into_iter()
            .map(|k| pool[k])
            .collect()
    };
    let clean_pool: Vec<usize> = (0..noisy.len())
        .filter(|i| flipped.binary_search(i).is_err())
        .collect();
    let groups = [pick(&flipped, 1), pick(&clean_pool, 2)];
    let mut strengths = [0.0; 2];
    for (g, idx) in groups.iter().enumerate() {
        let mut games = Vec::with_capacity(idx.len());
        let mut terms = Vec::with_capacity(idx.len());
        for &i in idx {
            let label = noisy.labels()[i];
            let game = MaskedModelGame::from_input(
                &net,
                noisy.sample(i),
                0,
                ScoreSelector::default_for(&net, label),
            )?
            .with_groups(grid.masks.clone())?
            .with_mean_baseline(mean.clone())?;
            games.push(game);
            let x = Matrix::row_vector(noisy.sample(i));
            let outputs = normalization_samples(&net, &x, &[label], net.default_score())?;
            terms.push(compute_normalization(
                &outputs,
                NormalizationMode::PerImage,
            )?);
        }
        let cfg = SamplerConfig {
            image_budget: games.len(),
            ..spec.estimator.sampler()
        };
        strengths[g] = aggregate_strength(
            &games,
            &cfg,
            &PairSelection::Random,
            spec.estimator.weighting,
            &Normalizer::PerImage(terms),
        )?
        .value;
    }
    Ok((strengths[0], strengths[1], loss, acc, epochs))
}

fn compare_rate(spec: &ExperimentSpec) -> f64 {
    if spec.model.dropout_rate > 0.0 {
        spec.model.dropout_rate
    } else {
        0.5
    }
}

pub fn run_dropout_compare(spec: &ExperimentSpec) -> Result<Outcome> {
    let kind = ExperimentKind::DropoutCompare;
    let mut results = with_mode(ResultTable::results(kind));
    let mut curves = with_mode(ResultTable::curves(kind));
    let rate = compare_rate(spec);
    let w = spec.estimator.weighting;
    for &seed in &spec.seeds {
        let data = spec.dataset.load(seed)?;
        let mut strengths: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
        let mut finals = [0.0; 2];
        let mut accs = [0.0; 2];
        for (k, r) in [rate, 0.0].into_iter().enumerate() {
            let mut mlp = spec.model.mlp(&data);
            mlp.dropout_rate = r;
            let curve = &mut strengths[k];
            let run = train_model(
                &data,
                &mlp,
                spec,
                spec.training.lambda,
                seed,
                spec.params.curve_every,
                |e, net| {
                    curve.push((e, final_strength(net, &data, &mlp, spec, w)?));
                    Ok(())
                },
            )?;
            finals[k] = match curve.last() {
                Some(&(e, v)) if e == spec.training.epochs => v,
                _ => final_strength(&run.net, &data, &mlp, spec, w)?,
            };
            accs[k] = evaluate(&run.net, &data)?.1;
        }
        results.push(
            seed,
            format!("epoch-{}", spec.training.epochs),
            RowStatus::Ok,
            vec![rate, finals[0], finals[1], accs[0], accs[1]],
        )?;
        for ((e, with), (_, without)) in strengths[0].iter().zip(&strengths[1]) {
            curves.push(
                seed,
                format!("epoch-{e}"),
                RowStatus::Ok,
                vec![*e as f64, *with, *without],
            )?;
        }
    }
    Ok(Outcome {
        results,
        curves: Some(curves),
        heatmap: None,
    })
}

pub fn run_dropout_rate_sweep(spec: &ExperimentSpec) -> Result<Outcome> {
    let kind = ExperimentKind::DropoutRateSweep;
    let mut results = with_mode(ResultTable::results(kind));
    let mut curves = with_mode(ResultTable::curves(kind));
    let w = spec.estimator.weighting;
    for &seed in &spec.seeds {
        let data = spec.dataset.load(seed)?;
        for &rate in &spec.params.dropout_rates {
            let mut mlp = spec.model.mlp(&data);
            mlp.dropout_rate = rate;
            let mut curve = Vec::new();
            let run = train_model(
                &data,
                &mlp,
                spec,
                spec.training.lambda,
                seed,
                spec.params.curve_every,
                |e, net| {
                    curve.push((e, final_strength(net, &data, &mlp, spec, w)?));
                    Ok(())
                },
            )?;
            let strength = match curve.last() {
                Some(&(e, v)) if e == spec.training.epochs => v,
                _ => final_strength(&run.net, &data, &mlp, spec, w)?,
            };
            let acc = evaluate(&run.net, &data)?.1;
            results.push(
                seed,
                format!("epoch-{}", spec.training.epochs),
                RowStatus::Ok,
                vec![rate, acc, strength],
            )?;
            for (e, v) in curve {
                curves.push(
                    seed,
                    format!("epoch-{e}"),
                    RowStatus::Ok,
                    vec![rate, e as f64, v],
                )?;
            }
        }
    }
    Ok(Outcome {
        results,
        curves: Some(curves),
        heatmap: None,
    })
}

/// Divergent runs are recorded as `diverged` rows and the sweep continues.
pub fn run_lambda_sweep(spec: &ExperimentSpec) -> Result<Outcome> {
    let kind = ExperimentKind::LambdaSweep;
    if !spec.params.lambdas.contains(&0.0) {
        return Err(Error::Config("the lambda grid must include 0".into()));
    }
    let mut results = with_mode(ResultTable::results(kind));
    let mut curves = with_mode(ResultTable::curves(kind));
    let w = spec.estimator.weighting;
    for &seed in &spec.seeds {
        let data = spec.dataset.load(seed)?;
        let mlp = spec.model.mlp(&data);
        for &lambda in &spec.params.lambdas {
            let mut curve = Vec::new();
            let run = train_model(
                &data,
                &mlp,
                spec,
                lambda,
                seed,
                spec.params.curve_every,
                |e, net| {
                    curve.push((e, final_strength(net, &data, &mlp, spec, w)?));
                    Ok(())
                },
            );
            let checkpoint = format!("epoch-{}", spec.training.epochs);
            let run = match run {
                Ok(r) => r,
                Err(Error::Diverged { .. }) => {
                    let nan = f64::NAN;
                    results.push(
                        seed,
                        checkpoint,
                        RowStatus::Diverged,
                        vec![lambda, nan, nan, nan],
                    )?;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let strength = match curve.last() {
                Some(&(e, v)) if e == spec.training.epochs => v,
                _ => final_strength(&run.net, &data, &mlp, spec, w)?,
            };
            let acc = evaluate(&run.net, &data)?.1;
            let int_loss = run.metrics.last().map_or(0.0, |m| m.interaction_loss);
            results.push(
                seed,
                checkpoint,
                RowStatus::Ok,
                vec![lambda, acc, strength, int_loss],
            )?;
            for (e, v) in curve {
                curves.push(
                    seed,
                    format!("epoch-{e}"),
                    RowStatus::Ok,
                    vec![lambda, e as f64, v],
                )?;
            }
        }
    }
    Ok(Outcome {
        results,
        curves: Some(curves),
        heatmap: None,
    })
}

/// Normalized strengths below this are floating-point residue, e.g. from a
/// head that is exactly additive in the site units.
pub const NEGLIGIBLE_STRENGTH: f64 = 1e-12;

/// Pearson correlation of two series. `None` when either series is
/// constant, so the coefficient is undefined.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "series of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 3 checkpoints, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

/// Shapley- and Banzhaf-weighted strengths of each checkpoint, measured on
/// the same probes with the same draws seed.
pub fn paired_strengths(
    checkpoints: &[Network],
    data: &Dataset,
    probes: &[usize],
    site: usize,
    sampler: &SamplerConfig,
) -> Result<Vec<(f64, f64)>> {
    checkpoints
        .iter()
        .map(|net| {
            let term = dataset_normalization(net, data, NormalizationMode::MulticlassMargin)?;
            let s =
                site_strength(net, data, probes, site, sampler, Weighting::Shapley, term)?.value;
            let b =
                site_strength(net, data, probes, site, sampler, Weighting::Banzhaf, term)?.value;
            Ok((s, b))
        })
        .collect()
}

/// Correlates the two weightings over the trained checkpoints. The
/// untrained network is left out: its near-zero margin makes its normalized
/// strength an outlier that would dominate the coefficient.
pub fn run_banzhaf_correlation(spec: &ExperimentSpec) -> Result<Outcome> {
    let kind = ExperimentKind::BanzhafCorrelation;
    let mut results = with_mode(ResultTable::results(kind));
    let mut curves = with_mode(ResultTable::curves(kind));
    let every = spec.params.curve_every.max(1);
    for &seed in &spec.seeds {
        let data = spec.dataset.load(seed)?;
        let mlp = spec.model.mlp(&data);
        let mut checkpoints = Vec::new();
        let mut epochs = Vec::new();
        train_model(
            &data,
            &mlp,
            spec,
            spec.training.lambda,
            seed,
            every,
            |e, net| {
                if e > 0 {
                    epochs.push(e);
                    checkpoints.push(net.clone());
                }
                Ok(())
            },
        )?;
        let probes = probe_indices(data.len(), spec.estimator.image_budget, spec.estimator.seed);
        let pairs = paired_strengths(
            &checkpoints,
            &data,
            &probes,
            mlp.site_layer(),
            &spec.estimator.sampler(),
        )?;
        let (s, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let negligible = |v: &[f64]| v.iter().all(|x| x.abs() < NEGLIGIBLE_STRENGTH);
        let (status, r) = match pearson(&s, &b)? {
            Some(r) if !negligible(&s) && !negligible(&b) => (RowStatus::Ok, r),
            _ => (RowStatus::Degenerate, f64::NAN),
        };
        results.push(seed, "all", status, vec![r, pairs.len() as f64])?;
        for (e, (sv, bv)) in epochs.iter().zip(pairs) {
            curves.push(
                seed,
                format!("epoch-{e}"),
                RowStatus::Ok,
                vec![*e as f64, sv, bv],
            )?;
        }
    }
    Ok(Outcome {
        results,
        curves: Some(curves),
        heatmap: None,
    })
}

pub fn run_heatmap(spec: &ExperimentSpec) -> Result<Outcome> {
    let seed = spec.seeds[0];
    let data = spec.dataset.load(seed)?;
    let (h, w, c) = data
        .image_shape
        .ok_or_else(|| Error::Config("heatmap needs image data".into()))?;
    let mlp = spec.model.mlp(&data);
    let run = train_model(&data, &mlp, spec, spec.training.lambda, seed, 0, |_, _| {
        Ok(())
    })?;
    let i = spec.params.image_index;
    if i >= data.len() {
        return Err(Error::Index {
            index: i,
            n: data.len(),
        });
    }
    let grid = grid_partition(h, w, c, spec.params.grid.0, spec.params.grid.1)?;
    let map = export_heatmap(
        &run.net,
        data.sample(i),
        data.labels()[i],
        data.mean_input(),
        &grid,
        &spec.estimator.sampler(),
        spec.estimator.weighting,
    )?;
    let mut results = ResultTable::results(ExperimentKind::Heatmap);
    let status = if map.degenerate {
        RowStatus::Degenerate
    } else {
        RowStatus::Ok
    };
    for g in 0..map.raw.len() {
        let (r, cc) = (g / map.grid_cols, g % map.grid_cols);
        results.push(
            seed,
            format!("image-{i}"),
            status,
            vec![r as f64, cc as f64, map.raw[g], map.normalized[g]],
        )?;
    }
    Ok(Outcome {
        results,
        curves: None,
        heatmap: Some(map),
    })
}

pub fn run_instability_study(spec: &ExperimentSpec) -> Result<ResultTable> {
    if spec.params.repeats < 2 {
        return Err(Error::Config(
            "instability needs at least two repeats".into(),
        ));
    }
    let mut table = with_mode(ResultTable::results(ExperimentKind::InstabilityStudy));
    for &seed in &spec.seeds {
        let data = spec.dataset.load(seed)?;
        let mlp = spec.model.mlp(&data);
        let run = train_model(&data, &mlp, spec, spec.training.lambda, seed, 0, |_, _| {
            Ok(())
        })?;
        for (m, value) in instability_curve(&run.net, &data, mlp.site_layer(), spec)? {
            table.push(seed, format!("m-{m}"), RowStatus::Ok, vec![m as f64, value])?;
        }
    }
    Ok(table)
}

/// Instability at every draw count of `spec.params.sample_grid`, with the
/// same probes and pairs throughout.
pub fn instability_curve(
    net: &Network,
    data: &Dataset,
    site: usize,
    spec: &ExperimentSpec,
) -> Result<Vec<(usize, f64)>> {
    let probes = probe_indices(data.len(), spec.estimator.image_budget, spec.estimator.seed);
    let games = probes
        .iter()
        .map(|&i| {
            MaskedModelGame::from_input(
                net,
                data.sample(i),
                site,
                ScoreSelector::default_for(net, data.labels()[i]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    spec.params
        .sample_grid
        .iter()
        .map(|&m| {
            let cfg = spec.estimator.sampler().with_samples(m);
            Ok((
                m,
                instability(&games, &cfg, spec.params.repeats, spec.estimator.weighting)?.mean,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{execute, DatasetSpec};

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(kind);
        s.dataset = DatasetSpec::Blobs {
            samples: 60,
            classes: 3,
            dim: 4,
            spread: 0.4,
        };
        s.model.hidden = vec![10, 6];
        s.training.epochs = 2;
        s.training.batch_size = 20;
        s.training.alpha = 0.1;
        s.estimator.samples = 30;
        s.estimator.pair_budget = 4;
        s.estimator.image_budget = 3;
        s
    }

    #[test]
    fn pearson_examples() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5])
            .unwrap()
            .unwrap();
        assert!(r > 0.99 && r <= 1.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0])
            .unwrap()
            .unwrap();
        assert!((r + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[0.0; 4], &[0.0; 4]).unwrap(), None);
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn overfit_table_refuses_clean_labels() {
        let mut s = small(ExperimentKind::OverfitTable);
        s.params.mislabel_fraction = 0.0;
        assert!(matches!(run_overfit_table(&s), Err(Error::Config(_))));
    }

    #[test]
    fn overfit_budget_is_enforced() {
        let mut s = small(ExperimentKind::OverfitTable);
        s.dataset = DatasetSpec::Glyphs { samples: 40 };
        s.training.max_epochs = 1;
        assert!(matches!(
            run_overfit_table(&s),
            Err(Error::BudgetExceeded { epochs: 1, .. })
        ));
    }

    #[test]
    fn zero_lambda_row_is_the_plain_run() {
        let mut s = small(ExperimentKind::LambdaSweep);
        s.params.lambdas = vec![0.0, 0.5];
        s.params.curve_every = 0;
        let sweep = run_lambda_sweep(&s).unwrap().results;
        s.kind = ExperimentKind::DropoutCompare;
        let plain = run_dropout_compare(&s).unwrap().results;
        let row = &sweep.rows[0];
        let without = plain.column("without_dropout_strength").unwrap()[0];
        let acc = plain.column("without_dropout_accuracy").unwrap()[0];
        assert_eq!(row.values[1].to_bits(), acc.to_bits());
        assert_eq!(row.values[2].to_bits(), without.to_bits());
        assert!(sweep.rows[1].values[3] > 0.0);
    }

    #[test]
    fn untrained_checkpoints_coincide() {
        let s = small(ExperimentKind::DropoutCompare);
        let curves = run_dropout_compare(&s).unwrap().curves.unwrap();
        let first = &curves.rows[0];
        assert_eq!(first.checkpoint, "epoch-0");
        assert_eq!(first.values[1].to_bits(), first.values[2].to_bits());
        assert_eq!(curves.rows.len(), 3);
    }

    #[test]
    fn divergent_lambda_is_a_failed_row() {
        let mut s = small(ExperimentKind::LambdaSweep);
        s.params.lambdas = vec![0.0, 1e300];
        s.params.curve_every = 0;
        let t = run_lambda_sweep(&s).unwrap().results;
        assert_eq!(t.rows[0].status, RowStatus::Ok);
        assert_eq!(t.rows[1].status, RowStatus::Diverged);
        assert!(t.rows[1].values[2].is_nan());
    }

    #[test]
    fn manifest_is_written_before_results() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = small(ExperimentKind::OverfitTable);
        s.params.mislabel_fraction = 0.0;
        assert!(execute(&s, dir.path()).is_err());
        assert!(dir.path().join("manifest.json").exists());
        assert!(!dir.path().join("results.csv").exists());
    }

    #[test]
    fn additive_site_gives_degenerate_correlation() {
        // the output layer is linear in the site units, so no pair interacts
        let mut s = small(ExperimentKind::BanzhafCorrelation);
        s.model.hidden = vec![8];
        s.training.epochs = 3;
        let out = run_banzhaf_correlation(&s).unwrap();
        assert_eq!(out.results.rows[0].status, RowStatus::Degenerate);
        let curves = out.curves.unwrap();
        assert_eq!(curves.rows.len(), 3);
        assert!(curves
            .rows
            .iter()
            .all(|r| r.values[1] < NEGLIGIBLE_STRENGTH && r.values[2] < NEGLIGIBLE_STRENGTH));
    }

    #[test]
    fn rerun_is_bit_identical() {
        let mut s = small(ExperimentKind::InstabilityStudy);
        s.estimator.pair_budget = 20;
        s.params.sample_grid = vec![10, 40];
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.results.to_csv().unwrap(), b.results.to_csv().unwrap());
        assert_eq!(
            a.results.normalization,
            Some(NormalizationMode::MulticlassMargin)
        );
    }
}
