//! Monte-Carlo estimators for games too large to enumerate.
//!
//! All draws for one estimate come from a single ChaCha8 stream seeded by the
//! estimate's seed and are generated up front in draw order. Game evaluations
//! are batched through [`Game::evaluate_many`]; results are reduced in draw
//! order, so an estimate depends only on `(game, config, seed)`.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Estimate, InteractionEstimate, Method, Weighting};
use crate::game::{finite, quad_coalitions, Coalition, Game, NormalizationMode, NormalizationTerm};
use crate::rng::{derive_seed, stream};

/// Draws evaluated per batch.
const DRAW_CHUNK: usize = 1024;

/// How a fractional order bucket is turned into integer context sizes.
pub const BUCKET_RULE: &str = "bounds rounded to nearest integer, clamped to [0, n-2], sizes uniform over the inclusive range";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Draws per estimate.
    pub samples: usize,
    pub seed: u64,
    /// `(center, halfwidth)` of each order bucket as fractions of `n`.
    pub order_buckets: Vec<(f64, f64)>,
    /// Pairs sampled per image by [`aggregate_strength`].
    pub pair_budget: usize,
    /// Images sampled by [`aggregate_strength`].
    pub image_budget: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            seed: 0,
            order_buckets: [0.1, 0.3, 0.5, 0.7, 0.9]
                .iter()
                .map(|&c| (c, 0.1))
                .collect(),
            pair_budget: 80,
            image_budget: 10,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if self.pair_budget == 0 || self.image_budget == 0 {
            return Err(Error::Config(
                "pair and image budgets must be positive".into(),
            ));
        }
        for &(c, h) in &self.order_buckets {
            if !(h >= 0.0 && c - h >= -1e-12 && c + h <= 1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "bucket ({c}, {h}) does not lie inside [0, 1] of n"
                )));
            }
        }
        Ok(())
    }

    pub fn with_samples(&self, samples: usize) -> Self {
        Self {
            samples,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Evaluates `groups` coalitions per draw and combines each group with
/// `signs`, preserving draw order.
fn combine<G: Game + ?Sized>(
    game: &G,
    coalitions: &[Coalition],
    signs: &[f64],
) -> Result<Vec<f64>> {
    let k = signs.len();
    let mut out = Vec::with_capacity(coalitions.len() / k);
    for chunk in coalitions.chunks(DRAW_CHUNK * k) {
        let v = game.evaluate_many(chunk)?;
        for (x, c) in v.iter().zip(chunk) {
            finite(*x, c)?;
        }
        for g in v.chunks(k) {
            out.push(g.iter().zip(signs).map(|(x, s)| s * x).sum());
        }
    }
    Ok(out)
}

fn check_pair<G: Game + ?Sized>(game: &G, i: usize, j: usize) -> Result<()> {
    game.players().check(i)?;
    game.players().check(j)?;
    if i == j {
        return Err(Error::arg(format!(
            "interaction needs two distinct players, got ({i}, {i})"
        )));
    }
    Ok(())
}

/// Permutation-prefix estimate of player `i`'s Shapley value.
pub fn shapley_sampled<G: Game + ?Sized>(
    game: &G,
    i: usize,
    config: &SamplerConfig,
) -> Result<Estimate> {
    config.validate()?;
    game.players().check(i)?;
    let n = game.n();
    let mut rng = stream(config.seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    let mut coalitions = Vec::with_capacity(2 * config.samples);
    for _ in 0..config.samples {
        order.shuffle(&mut rng);
        let mut prefix = Coalition::empty(n);
        for &p in order.iter().take_while(|&&p| p != i) {
            prefix.insert(p)?;
        }
        coalitions.push(prefix.with(i)?);
        coalitions.push(prefix);
    }
    let marginals = combine(game, &coalitions, &[1.0, -1.0])?;
    let (value, stderr) = mean_stderr(&marginals);
    Ok(Estimate {
        value,
        stderr,
        samples: config.samples,
        seed: config.seed,
    })
}

/// Uniform subset of `others` with exactly `size` members.
fn subset_of_size(
    n: usize,
    others: &[usize],
    size: usize,
    rng: &mut impl Rng,
) -> Result<Coalition> {
    let mut c = Coalition::empty(n);
    for k in sample(rng, others.len(), size) {
        c.insert(others[k])?;
    }
    Ok(c)
}

fn sampled_mean_delta<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    samples: usize,
    mut draw: impl FnMut(&[usize]) -> Result<Coalition>,
) -> Result<(f64, f64)> {
    let others: Vec<usize> = (0..game.n()).filter(|&p| p != i && p != j).collect();
    let mut coalitions = Vec::with_capacity(4 * samples);
    for _ in 0..samples {
        let ctx = draw(&others)?;
        coalitions.extend(quad_coalitions(&ctx, i, j)?);
    }
    let deltas = combine(game, &coalitions, &[1.0, -1.0, -1.0, 1.0])?;
    Ok(mean_stderr(&deltas))
}

/// Sampled `I(i, j)`. Shapley weighting draws `|S|` uniformly from
/// `0..=n-2` and then a uniform subset of that size; Banzhaf weighting
/// includes each other player independently with probability 1/2.
pub fn interaction_sampled<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    weighting: Weighting,
    config: &SamplerConfig,
) -> Result<InteractionEstimate> {
    config.validate()?;
    check_pair(game, i, j)?;
    let n = game.n();
    let mut rng = stream(config.seed, 1);
    let (value, stderr) =
        sampled_mean_delta(game, i, j, config.samples, |others| match weighting {
            Weighting::Shapley => {
                let size = rng.gen_range(0..=others.len());
                subset_of_size(n, others, size, &mut rng)
            }
            Weighting::Banzhaf => {
                let mut c = Coalition::empty(n);
                for &p in others {
                    if rng.gen::<bool>() {
                        c.insert(p)?;
                    }
                }
                Ok(c)
            }
        })?;
    Ok(InteractionEstimate {
        pair: (i, j),
        value,
        stderr,
        weighting,
        method: Method::Sampled {
            samples: config.samples,
            seed: config.seed,
        },
    })
}

/// Integer size range `[lo, hi]` of a `(center, halfwidth)` bucket for `n`
/// players; see [`BUCKET_RULE`].
pub fn bucket_bounds(n: usize, bucket: (f64, f64)) -> Result<(usize, usize)> {
    if n < 2 {
        return Err(Error::arg("order buckets need at least two players"));
    }
    let (c, h) = bucket;
    let max = (n - 2) as f64;
    let lo = ((c - h) * n as f64).round().clamp(0.0, max);
    let hi = ((c + h) * n as f64).round().clamp(0.0, max);
    if !(lo <= hi) || (c + h) * (n as f64) < -0.5 || (c - h) * (n as f64) > max + 0.5 {
        return Err(Error::arg(format!(
            "bucket ({c}, {h}) is empty for {n} players after clamping to [0, {}]",
            n - 2
        )));
    }
    Ok((lo as usize, hi as usize))
}

/// Sampled interaction of orders in a bucket: each draw picks `s` uniformly
/// in the bucket's size range, then a uniform size-`s` context.
pub fn multi_order_interaction_sampled<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    bucket: (f64, f64),
    config: &SamplerConfig,
) -> Result<Estimate> {
    config.validate()?;
    check_pair(game, i, j)?;
    let n = game.n();
    let (lo, hi) = bucket_bounds(n, bucket)?;
    let mut rng = stream(config.seed, 2);
    let (value, stderr) = sampled_mean_delta(game, i, j, config.samples, |others| {
        let size = rng.gen_range(lo..=hi);
        subset_of_size(n, others, size, &mut rng)
    })?;
    Ok(Estimate {
        value,
        stderr,
        samples: config.samples,
        seed: config.seed,
    })
}

/// JSON record of one sampled pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub image: usize,
    pub pair: (usize, usize),
    pub estimate: f64,
    pub stderr: f64,
    pub m: usize,
    pub seed: u64,
    /// `|estimate| / Y`.
    pub normalized: f64,
}

/// Which pairs of each image are measured.
#[derive(Clone, Debug, PartialEq)]
pub enum PairSelection {
    /// `pair_budget` distinct unordered pairs drawn uniformly per image.
    Random,
    /// The same pairs for every image (truncated to `pair_budget`).
    Fixed(Vec<(usize, usize)>),
}

/// Normalization applied to an aggregate strength.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalizer {
    /// One term for the whole image set.
    Global(NormalizationTerm),
    /// One term per game, in the order of the games slice.
    PerImage(Vec<NormalizationTerm>),
}

impl Normalizer {
    fn term(&self, image: usize) -> Result<NormalizationTerm> {
        let t = match self {
            Normalizer::Global(t) => *t,
            Normalizer::PerImage(ts) => *ts
                .get(image)
                .ok_or_else(|| Error::arg(format!("no normalization term for image {image}")))?,
        };
        if !(t.value.is_finite() && t.value > 0.0) {
            return Err(Error::DegenerateNormalization(format!(
                "term {} for image {image}",
                t.value
            )));
        }
        Ok(t)
    }

    pub fn mode(&self) -> Option<NormalizationMode> {
        match self {
            Normalizer::Global(t) => Some(t.mode),
            Normalizer::PerImage(ts) => ts.first().map(|t| t.mode),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthReport {
    /// `E_image E_pair |I| / Y`.
    pub value: f64,
    /// Image indices (into the games slice) that were measured.
    pub images: Vec<usize>,
    pub per_image: Vec<f64>,
    pub records: Vec<PairRecord>,
    pub weighting: Weighting,
    pub mode: Option<NormalizationMode>,
    pub samples: usize,
    pub seed: u64,
}

fn choose_images(count: usize, budget: usize, seed: u64) -> Vec<usize> {
    if count <= budget {
        return (0..count).collect();
    }
    let mut rng = stream(seed, 3);
    let mut idx = sample(&mut rng, count, budget).into_vec();
    idx.sort_unstable();
    idx
}

fn choose_pairs(
    n: usize,
    selection: &PairSelection,
    budget: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    match selection {
        PairSelection::Fixed(p) => p.iter().copied().take(budget).collect(),
        PairSelection::Random => {
            let total = n * (n - 1) / 2;
            let mut rng = stream(seed, 4);
            sample(&mut rng, total, budget.min(total))
                .into_iter()
                .map(|k| unrank_pair(n, k))
                .collect()
        }
    }
}

/// The `k`-th unordered pair `(i, j)`, `i < j`, in lexicographic order.
fn unrank_pair(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    while k >= n - 1 - i {
        k -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// Mean absolute sampled interaction over images and pairs, divided by the
/// normalization term.
pub fn aggregate_strength<G: Game>(
    games: &[G],
    config: &SamplerConfig,
    pairs: &PairSelection,
    weighting: Weighting,
    normalizer: &Normalizer,
) -> Result<StrengthReport> {
    config.validate()?;
    if games.is_empty() {
        return Err(Error::arg("aggregate strength needs at least one game"));
    }
    let images = choose_images(games.len(), config.image_budget, config.seed);
    let mut per_image = Vec::with_capacity(images.len());
    let mut records = Vec::new();
    for &img in &images {
        let game = &games[img];
        let term = normalizer.term(img)?;
        let image_seed = derive_seed(config.seed, img as u64);
        let chosen = choose_pairs(game.n(), pairs, config.pair_budget, image_seed);
        if chosen.is_empty() {
            return Err(Error::arg(format!("image {img} has no pairs to measure")));
        }
        let mut total = 0.0;
        for (p, &(i, j)) in chosen.iter().enumerate() {
            let seed = derive_seed(image_seed, p as u64 + 1);
            let est = interaction_sampled(game, i, j, weighting, &config.with_seed(seed))?;
            let normalized = term.apply(est.value.abs());
            total += normalized;
            records.push(PairRecord {
                image: img,
                pair: (i, j),
                estimate: est.value,
                stderr: est.stderr,
                m: config.samples,
                seed,
                normalized,
            });
        }
        per_image.push(total / chosen.len() as f64);
    }
    Ok(StrengthReport {
        value: per_image.iter().sum::<f64>() / per_image.len() as f64,
        images,
        per_image,
        records,
        weighting,
        mode: normalizer.mode(),
        samples: config.samples,
        seed: config.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub per_image: Vec<f64>,
    pub mean: f64,
    pub samples: usize,
    pub repeats: usize,
}

/// `E_{u≠v} |I^u - I^v| / E_w |I^w|` over repeated per-image strengths, one
/// repeat per seed, averaged over images. Pairs are fixed per image; only
/// the contexts are re-drawn.
pub fn instability_with_seeds<G: Game>(
    games: &[G],
    config: &SamplerConfig,
    seeds: &[u64],
    weighting: Weighting,
) -> Result<InstabilityReport> {
    config.validate()?;
    if seeds.len() < 2 {
        return Err(Error::arg("instability needs at least two repeats"));
    }
    if games.is_empty() {
        return Err(Error::arg("instability needs at least one game"));
    }
    let images = choose_images(games.len(), config.image_budget, config.seed);
    let mut per_image = Vec::with_capacity(images.len());
    for &img in &images {
        let game = &games[img];
        let image_seed = derive_seed(config.seed, img as u64);
        let pairs = choose_pairs(
            game.n(),
            &PairSelection::Random,
            config.pair_budget,
            image_seed,
        );
        let mut strengths = Vec::with_capacity(seeds.len());
        for &s in seeds {
            let mut total = 0.0;
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let cfg = config.with_seed(derive_seed(derive_seed(s, img as u64), p as u64));
                total += interaction_sampled(game, i, j, weighting, &cfg)?
                    .value
                    .abs();
            }
            strengths.push(total / pairs.len() as f64);
        }
        per_image.push(relative_spread(&strengths).map_err(|e| match e {
            Error::DegenerateInstability(m) => {
                Error::DegenerateInstability(format!("image {img}: {m}"))
            }
            other => other,
        })?);
    }
    Ok(InstabilityReport {
        mean: per_image.iter().sum::<f64>() / per_image.len() as f64,
        per_image,
        samples: config.samples,
        repeats: seeds.len(),
    })
}

/// [`instability_with_seeds`] with `repeats` seeds derived from the config seed.
pub fn instability<G: Game>(
    games: &[G],
    config: &SamplerConfig,
    repeats: usize,
    weighting: Weighting,
) -> Result<InstabilityReport> {
    let seeds: Vec<u64> = (0..repeats as u64)
        .map(|k| derive_seed(config.seed, 0x1000 + k))
        .collect();
    instability_with_seeds(games, config, &seeds, weighting)
}

/// `E_{u≠v} |x_u - x_v| / E_w |x_w|`.
pub fn relative_spread(values: &[f64]) -> Result<f64> {
    let k = values.len();
    if k < 2 {
        return Err(Error::arg("spread needs at least two values"));
    }
    let denom = values.iter().map(|v| v.abs()).sum::<f64>() / k as f64;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::DegenerateInstability(format!(
            "mean absolute estimate is {denom}"
        )));
    }
    let mut num = 0.0;
    for u in 0..k {
        for v in 0..k {
            if u != v {
                num += (values[u] - values[v]).abs();
            }
        }
    }
    Ok(num / (k * (k - 1)) as f64 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactGame;
    use crate::game::{TableGame, TermGame};

    fn cfg(m: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            samples: m,
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn additive_shapley_has_zero_variance() {
        let g = TermGame::additive(&[0.5, 2.0, -1.0, 3.0]).unwrap();
        let e = shapley_sampled(&g, 1, &cfg(50, 3)).unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn shapley_sampling_is_seeded() {
        let g = TableGame::random(8, 1).unwrap();
        let a = shapley_sampled(&g, 4, &cfg(300, 9)).unwrap();
        let b = shapley_sampled(&g, 4, &cfg(300, 9)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn shapley_sampling_converges() {
        let g = TableGame::random(8, 2).unwrap();
        let exact = ExactGame::new(&g).unwrap().shapley().values;
        let e = shapley_sampled(&g, 3, &cfg(10_000, 5)).unwrap();
        assert!(
            (e.value - exact[3]).abs() < 3.0 * e.stderr,
            "{e:?} vs {}",
            exact[3]
        );
    }

    #[test]
    fn interaction_examples() {
        let and = TermGame::and_gate(6, 1, 4).unwrap();
        for w in [Weighting::Shapley, Weighting::Banzhaf] {
            let e = interaction_sampled(&and, 1, 4, w, &cfg(7, 1)).unwrap();
            assert_eq!(e.value, 1.0);
            assert_eq!(e.stderr, 0.0);
        }
        let add = TermGame::additive(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(
            interaction_sampled(&add, 0, 2, Weighting::Shapley, &cfg(20, 1))
                .unwrap()
                .value,
            0.0
        );
        assert!(matches!(
            interaction_sampled(&add, 2, 2, Weighting::Shapley, &cfg(20, 1)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn interaction_sampling_converges() {
        let g = TableGame::random(10, 4).unwrap();
        let exact = ExactGame::new(&g).unwrap();
        for w in [Weighting::Shapley, Weighting::Banzhaf] {
            let truth = exact.interaction(2, 7, w).unwrap().value;
            let e = interaction_sampled(&g, 2, 7, w, &cfg(20_000, 8)).unwrap();
            assert!(
                (e.value - truth).abs() < 3.0 * e.stderr,
                "{w:?}: {} vs {truth}",
                e.value
            );
        }
    }

    #[test]
    fn bucket_rounding() {
        assert_eq!(bucket_bounds(12, (0.1, 0.1)).unwrap(), (0, 2));
        assert_eq!(bucket_bounds(12, (0.9, 0.1)).unwrap(), (10, 10));
        assert_eq!(bucket_bounds(100, (0.5, 0.1)).unwrap(), (40, 60));
        assert!(bucket_bounds(4, (1.4, 0.05)).is_err());
    }

    #[test]
    fn low_order_bucket_matches_exact_average() {
        // rewards only at q = 0 for the measured pair plus unrelated noise terms
        let mut g = TermGame::new(12).unwrap();
        g.add_term(1.3, &[0, 1]).unwrap();
        g.add_term(0.4, &[2, 3, 4]).unwrap();
        g.add_term(-0.7, &[5]).unwrap();
        let e = ExactGame::new(&g).unwrap();
        let orders = e.per_order(0, 1).unwrap();
        let (lo, hi) = bucket_bounds(12, (0.1, 0.1)).unwrap();
        let truth = orders[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        let est = multi_order_interaction_sampled(&g, 0, 1, (0.1, 0.1), &cfg(400, 2)).unwrap();
        assert!((est.value - truth).abs() <= 3.0 * est.stderr + 1e-12);

        // a game with order-dependent rewards
        let r = TableGame::random(12, 6).unwrap();
        let orders = ExactGame::new(&r).unwrap().per_order(0, 1).unwrap();
        let truth = orders[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        let est = multi_order_interaction_sampled(&r, 0, 1, (0.1, 0.1), &cfg(20_000, 2)).unwrap();
        assert!(
            (est.value - truth).abs() < 3.0 * est.stderr,
            "{} vs {truth}",
            est.value
        );
    }

    #[test]
    fn multi_order_trivial_games() {
        let and = TermGame::and_gate(10, 3, 8).unwrap();
        let add = TermGame::additive(&[1.0; 10]).unwrap();
        for &b in &SamplerConfig::default().order_buckets {
            assert_eq!(
                multi_order_interaction_sampled(&and, 3, 8, b, &cfg(30, 1))
                    .unwrap()
                    .value,
                1.0
            );
            assert_eq!(
                multi_order_interaction_sampled(&add, 3, 8, b, &cfg(30, 1))
                    .unwrap()
                    .value,
                0.0
            );
        }
    }

    #[test]
    fn aggregate_strength_trivial_games() {
        let unit = Normalizer::Global(NormalizationTerm::unit(NormalizationMode::Global));
        let adds: Vec<TermGame> = (0..3)
            .map(|k| TermGame::additive(&[k as f64, 1.0, 2.0, 3.0]).unwrap())
            .collect();
        let r = aggregate_strength(
            &adds,
            &cfg(20, 0),
            &PairSelection::Random,
            Weighting::Shapley,
            &unit,
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
        let and = [TermGame::and_gate(2, 0, 1).unwrap()];
        let r = aggregate_strength(
            &and,
            &cfg(20, 0),
            &PairSelection::Random,
            Weighting::Shapley,
            &unit,
        )
        .unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.records.len(), 1);
    }

    #[test]
    fn pair_unranking_covers_all_pairs() {
        let n = 6;
        let pairs: Vec<_> = (0..15).map(|k| unrank_pair(n, k)).collect();
        let mut expected = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                expected.push((i, j));
            }
        }
        assert_eq!(pairs, expected);
    }

    #[test]
    fn relative_spread_examples() {
        assert!(relative_spread(&[0.0, 0.0]).is_err());
        assert_eq!(relative_spread(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((relative_spread(&[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_seeds_give_zero_instability() {
        let g: Vec<TableGame> = (0..2).map(|k| TableGame::random(8, k).unwrap()).collect();
        let mut c = cfg(50, 1);
        c.pair_budget = 4;
        let r = instability_with_seeds(&g, &c, &[5, 5], Weighting::Shapley).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn deterministic_delta_gives_zero_instability() {
        // every pair of a pure pairwise game has constant Δf
        let mut g = TermGame::new(4).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                g.add_term(1.0 + (i + j) as f64, &[i, j]).unwrap();
            }
        }
        let r = instability(&[g], &cfg(30, 2), 4, Weighting::Shapley).unwrap();
        assert_eq!(r.mean, 0.0);
    }
}
