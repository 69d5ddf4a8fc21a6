//! The interaction loss: the exact pairwise form used as an oracle, and the
//! batched quad-difference approximation used during training.
//!
//! The approximation draws disjoint unit batches `A`, `B` of size `⌈αn⌉` and a
//! context `S ⊆ N \ A \ B`, then penalizes
//! `Δf(S, A, B)² = (f(S∪A∪B) − f(S∪A) − f(S∪B) + f(S))²`.
//! The context is drawn in two stages: a rate `u ~ U[0, 1]`, then each
//! remaining unit joins `S` independently with probability `u`.
//!
//! The constant factor relating the squared form to the expected absolute
//! pairwise interaction is folded into `λ`: the training objective is
//! `classification + λ · mean Δf²`.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::game::{Coalition, Game};
use crate::nn::{DropoutMasks, ForwardOptions, Gradients, Matrix, Mode, Network, ScoreKind, Trace};
use crate::rng::{derive_seed, stream};

/// Games larger than this are refused by [`exact_interaction_loss`].
pub const EXACT_LOSS_LIMIT: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Fraction of site units in each of `A` and `B`.
    pub alpha: f64,
    /// `(A, B, S)` draws averaged per training step.
    pub pairs_per_step: usize,
    /// Layer whose input activations are the players.
    pub site: usize,
    /// Weight of the interaction term; zero disables it entirely.
    pub lambda: f64,
    /// Score reduced from the network output; the network default when unset.
    pub score: Option<ScoreKind>,
}

impl LossConfig {
    pub fn new(site: usize, lambda: f64) -> Self {
        Self {
            alpha: 0.05,
            pairs_per_step: 1,
            site,
            lambda,
            score: None,
        }
    }

    pub fn batch_size(&self, n: usize) -> usize {
        ((self.alpha * n as f64).ceil() as usize).max(1)
    }

    /// Rejects site widths too small for two disjoint batches plus a context.
    pub fn validate(&self, net: &Network) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!(
                "alpha {} outside (0, 0.5)",
                self.alpha
            )));
        }
        if self.pairs_per_step == 0 {
            return Err(Error::Config("pairs_per_step must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda {} must be finite and >= 0",
                self.lambda
            )));
        }
        if self.site >= net.layers().len() {
            return Err(Error::Config(format!(
                "site {} outside the {}-layer network",
                self.site,
                net.layers().len()
            )));
        }
        let n = net.width_at(self.site);
        let k = self.batch_size(n);
        if n < 2 * k + 1 {
            return Err(Error::Config(format!(
                "site width {n} too small for two batches of {k} units plus a context"
            )));
        }
        Ok(())
    }
}

/// One `(A, B, S)` draw over `n` site units.
#[derive(Clone, Debug, PartialEq)]
pub struct Quad {
    pub a: Coalition,
    pub b: Coalition,
    pub s: Coalition,
    /// The context sampling rate `u` this draw used.
    pub rate: f64,
}

impl Quad {
    /// Coalitions `S∪A∪B, S∪A, S∪B, S` with their signs in `Δf(S, A, B)`.
    pub fn coalitions(&self) -> [(Coalition, f64); 4] {
        let sa = self.s.union(&self.a);
        let sb = self.s.union(&self.b);
        let sab = sa.union(&self.b);
        [(sab, 1.0), (sa, -1.0), (sb, -1.0), (self.s.clone(), 1.0)]
    }
}

/// The four scores of one draw and their combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadDelta {
    pub with_ab: f64,
    pub with_a: f64,
    pub with_b: f64,
    pub context: f64,
}

impl QuadDelta {
    pub fn delta(&self) -> f64 {
        self.with_ab - self.with_a - self.with_b + self.context
    }
}

pub fn sample_quad(n: usize, alpha: f64, rng: &mut impl Rng) -> Result<Quad> {
    let rate = rng.gen::<f64>();
    sample_quad_with_rate(n, alpha, rate, rng)
}

/// Draws `A` and `B`, then a context with the given inclusion rate.
pub fn sample_quad_with_rate(n: usize, alpha: f64, rate: f64, rng: &mut impl Rng) -> Result<Quad> {
    let k = ((alpha * n as f64).ceil() as usize).max(1);
    if n < 2 * k + 1 {
        return Err(Error::Config(format!(
            "{n} units cannot hold two disjoint batches of {k} plus a context"
        )));
    }
    let picked = sample(rng, n, 2 * k).into_vec();
    let a = Coalition::from_indices(n, &picked[..k])?;
    let b = Coalition::from_indices(n, &picked[k..])?;
    let taken = a.union(&b);
    let mut s = Coalition::empty(n);
    for u in 0..n {
        if !taken.contains(u) && rng.gen::<f64>() < rate {
            s.insert(u)?;
        }
    }
    Ok(Quad { a, b, s, rate })
}

/// `E_{i≠j} |I(i, j)|` over all unordered pairs by full enumeration.
/// Verification only.
pub fn exact_interaction_loss<G: Game + ?Sized>(game: &G) -> Result<f64> {
    let n = game.n();
    if n > EXACT_LOSS_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: EXACT_LOSS_LIMIT,
        });
    }
    if n < 2 {
        return Err(Error::arg("interaction loss needs at least two players"));
    }
    let pairs = exact::all_pair_interactions(game)?;
    Ok(pairs.iter().map(|(_, v)| v.abs()).sum::<f64>() / pairs.len() as f64)
}

/// Result of the interaction term on one batch.
#[derive(Clone, Debug)]
pub struct InteractionTerm {
    /// Mean of `Δf²` over rows and draws.
    pub loss: f64,
    /// Gradients of `loss` w.r.t. the parameters of layers after the site.
    pub gradients: Gradients,
    /// Gradient of `loss` w.r.t. the unmasked site activations.
    pub site_gradient: Matrix,
    pub quads: Vec<Quad>,
}

fn mask_rows(acts: &Matrix, coalition: &Coalition) -> Matrix {
    let mut out = acts.clone();
    for r in 0..out.rows() {
        for (u, v) in out.row_mut(r).iter_mut().enumerate() {
            if !coalition.contains(u) {
                *v = 0.0;
            }
        }
    }
    out
}

/// Evaluates the interaction term on given site activations. The four masked
/// passes run on the interaction track: batch norm reads its running
/// statistics and nothing is committed; dropout replays `masks` when given.
pub fn interaction_term(
    net: &Network,
    site_activations: &Matrix,
    labels: &[usize],
    masks: Option<&DropoutMasks>,
    config: &LossConfig,
    seed: u64,
) -> Result<InteractionTerm> {
    config.validate(net)?;
    let kind = config.score.unwrap_or_else(|| net.default_score());
    let n = net.width_at(config.site);
    if site_activations.cols() != n {
        return Err(Error::Shape(format!(
            "site {} has width {n}, activations have {}",
            config.site,
            site_activations.cols()
        )));
    }
    let rows = site_activations.rows();
    let end = net.layers().len();
    let opts = ForwardOptions {
        mode: Mode::InteractionTrack,
        mask_seed: 0,
        masks,
    };
    let mut gradients = net.zero_gradients();
    let mut site_gradient = Matrix::zeros(rows, n);
    let mut loss = 0.0;
    let mut quads = Vec::with_capacity(config.pairs_per_step);
    let norm = (rows * config.pairs_per_step) as f64;
    for draw in 0..config.pairs_per_step {
        let mut rng = stream(seed, draw as u64);
        let quad = sample_quad(n, config.alpha, &mut rng)?;
        let passes: Vec<(Coalition, f64, Trace, Vec<f64>)> = quad
            .coalitions()
            .into_iter()
            .map(|(c, sign)| {
                let masked = mask_rows(site_activations, &c);
                let trace = net.forward_range(&masked, config.site, end, opts)?;
                let scores = net.scores(trace.output(), labels, kind)?;
                Ok((c, sign, trace, scores))
            })
            .collect::<Result<_>>()?;
        let deltas: Vec<f64> = (0..rows)
            .map(|r| passes.iter().map(|(_, sign, _, s)| sign * s[r]).sum())
            .collect();
        if let Some((r, d)) = deltas.iter().enumerate().find(|(_, d)| !d.is_finite()) {
            return Err(Error::Numeric {
                value: *d,
                coalition: format!(
                    "draw {draw} row {r}: A={} B={} S={}",
                    quad.a, quad.b, quad.s
                ),
            });
        }
        loss += deltas.iter().map(|d| d * d).sum::<f64>() / norm;
        for (c, sign, trace, _) in &passes {
            let weights: Vec<f64> = deltas.iter().map(|d| sign * 2.0 * d / norm).collect();
            let dout = net.score_gradient(trace.output(), labels, kind, &weights)?;
            let dmasked = net.backward(trace, dout, &mut gradients)?;
            for r in 0..rows {
                let src = dmasked.row(r);
                for (u, g) in site_gradient.row_mut(r).iter_mut().enumerate() {
                    if c.contains(u) {
                        *g += src[u];
                    }
                }
            }
        }
        quads.push(quad);
    }
    Ok(InteractionTerm {
        loss,
        gradients,
        site_gradient,
        quads,
    })
}

/// Standalone interaction loss and its full parameter gradient. The layers
/// before the site run on the interaction track as well.
pub fn approx_interaction_loss(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    config: &LossConfig,
    seed: u64,
) -> Result<(f64, Gradients)> {
    config.validate(net)?;
    let opts = ForwardOptions {
        mode: Mode::InteractionTrack,
        mask_seed: 0,
        masks: None,
    };
    let prefix = net.forward_range(batch, 0, config.site, opts)?;
    let term = interaction_term(net, prefix.output(), labels, None, config, seed)?;
    let mut grads = term.gradients;
    net.backward(&prefix, term.site_gradient, &mut grads)?;
    Ok((term.loss, grads))
}

/// `classification + λ · interaction` on one batch.
#[derive(Clone, Debug)]
pub struct TotalLoss {
    pub value: f64,
    pub classification: f64,
    pub interaction: f64,
    pub gradients: Gradients,
    /// Classification-track trace; its batch statistics are the only ones a
    /// training step commits.
    pub trace: Trace,
    pub accuracy: f64,
}

/// Total loss for a train-mode step. With `λ = 0` no masked passes run.
pub fn total_loss(
    net: &Network,
    batch: &Matrix,
    labels: &[usize],
    config: &LossConfig,
    seed: u64,
) -> Result<TotalLoss> {
    let trace = net.forward(batch, ForwardOptions::train(derive_seed(seed, 0x6d61736b)))?;
    let (classification, dout) = net.head_loss(trace.output(), labels)?;
    let accuracy = net.accuracy(trace.output(), labels);
    let mut gradients = net.zero_gradients();
    let end = net.layers().len();
    if config.lambda == 0.0 {
        net.backward(&trace, dout, &mut gradients)?;
        return Ok(TotalLoss {
            value: classification,
            classification,
            interaction: 0.0,
            gradients,
            trace,
            accuracy,
        });
    }
    let masks = trace.masks();
    let term = interaction_term(
        net,
        trace.activation(config.site),
        labels,
        Some(&masks),
        config,
        derive_seed(seed, 0x71756164),
    )?;
    let mut site_grad = net.backward_between(&trace, end, config.site, dout, &mut gradients)?;
    let mut scaled = term.gradients;
    scaled.scale(config.lambda);
    gradients.add_assign(&scaled);
    for (g, t) in site_grad
        .data_mut()
        .iter_mut()
        .zip(term.site_gradient.data())
    {
        *g += config.lambda * t;
    }
    net.backward_between(&trace, config.site, 0, site_grad, &mut gradients)?;
    Ok(TotalLoss {
        value: classification + config.lambda * term.loss,
        classification,
        interaction: term.loss,
        gradients,
        trace,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{MaskedModelGame, ScoreSelector, TermGame};
    use crate::nn::{Dense, Head, Layer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quad_sizes_follow_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = sample_quad(100, 0.05, &mut rng).unwrap();
        assert_eq!(q.a.len(), 5);
        assert_eq!(q.b.len(), 5);
        assert!(q.a.is_disjoint(&q.b));
        assert!(q.s.is_disjoint(&q.a.union(&q.b)));
    }

    #[test]
    fn zero_rate_gives_empty_context() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = sample_quad_with_rate(40, 0.05, 0.0, &mut rng).unwrap();
        assert!(q.s.is_empty());
    }

    #[test]
    fn quad_is_seeded() {
        let a = sample_quad(60, 0.05, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_quad(60, 0.05, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_units_is_a_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_quad(2, 0.05, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn exact_loss_examples() {
        let additive = TermGame::additive(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert_eq!(exact_interaction_loss(&additive).unwrap(), 0.0);
        // only pair (0, 1) interacts, with I = 1; six unordered pairs
        let product = TermGame::and_gate(4, 0, 1).unwrap();
        assert!((exact_interaction_loss(&product).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let scaled = crate::game::ScaledGame::new(&product, -3.0);
        assert!((exact_interaction_loss(&scaled).unwrap() - 0.5).abs() < 1e-15);
    }

    /// Site of width 3 feeding `out = x0 * x1` through a dense-square-dense head:
    /// ((x0 + x1)^2 - (x0 - x1)^2) / 4.
    fn product_head() -> Network {
        let mut layers = vec![Layer::Dense(Dense::identity(3)), Layer::Relu];
        layers.push(Layer::Dense(Dense::from_parts(
            3,
            2,
            vec![1.0, 1.0, 1.0, -1.0, 0.0, 0.0],
            vec![0.0, 0.0],
        )));
        layers.push(Layer::Square);
        layers.push(Layer::Dense(Dense::from_parts(
            2,
            1,
            vec![0.25, -0.25],
            vec![0.0],
        )));
        Network::new(3, layers, Head::Logistic).unwrap()
    }

    #[test]
    fn product_head_quad_delta_is_one() {
        let net = product_head();
        let acts = Matrix::row_vector(&[1.0, 1.0, 0.0]);
        let mut cfg = LossConfig::new(2, 1.0);
        cfg.alpha = 0.3;
        // sample until A/B land on {0} and {1}
        let mut seed = 0;
        loop {
            let mut rng = stream(seed, 0);
            let q = sample_quad(3, cfg.alpha, &mut rng).unwrap();
            if q.a.contains(0) && q.b.contains(1) {
                break;
            }
            seed += 1;
        }
        let term = interaction_term(&net, &acts, &[1], None, &cfg, seed).unwrap();
        assert_eq!(term.loss, 1.0);
    }

    #[test]
    fn affine_site_map_has_no_interaction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layers = vec![
            Layer::Dense(Dense::he_uniform(4, 30, &mut rng)),
            Layer::Relu,
            Layer::Dense(Dense::he_uniform(30, 1, &mut rng)),
        ];
        let net = Network::new(4, layers, Head::Logistic).unwrap();
        let x = Matrix::from_vec(2, 4, vec![0.3, -0.2, 0.9, 0.1, -1.0, 0.5, 0.2, 0.7]).unwrap();
        let (loss, grads) =
            approx_interaction_loss(&net, &x, &[0, 1], &LossConfig::new(2, 1.0), 3).unwrap();
        assert!(loss.abs() < 1e-24);
        assert!(grads.max_abs() < 1e-12);
    }

    #[test]
    fn masked_game_and_loss_agree_on_delta() {
        let net = product_head();
        let acts = [2.0, 3.0, 1.0];
        let game = MaskedModelGame::at_site(&net, &acts, 2, ScoreSelector::ScalarOutput).unwrap();
        let i01 = exact::interaction_exact(&game, 0, 1).unwrap().value;
        assert!((i01 - 6.0).abs() < 1e-12);
    }

    fn bn_dropout_net() -> Network {
        Network::mlp(
            &crate::nn::MlpConfig {
                input_dim: 5,
                hidden: vec![12, 6],
                outputs: 3,
                site_hidden: 0,
                dropout_rate: 0.5,
                batchnorm: true,
                head: Head::SoftmaxCrossEntropy,
            },
            9,
        )
        .unwrap()
    }

    fn inputs(rows: usize, dim: usize, seed: u64) -> Matrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(
            rows,
            dim,
            (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_lambda_is_the_classification_loss() {
        let net = bn_dropout_net();
        let x = inputs(8, 5, 1);
        let y = [0, 1, 2, 0, 1, 2, 0, 1];
        let out = total_loss(&net, &x, &y, &LossConfig::new(3, 0.0), 4).unwrap();
        assert_eq!(out.value, out.classification);
        let trace = net
            .forward(&x, ForwardOptions::train(derive_seed(4, 0x6d61736b)))
            .unwrap();
        let (cls, dout) = net.head_loss(trace.output(), &y).unwrap();
        assert_eq!(out.value.to_bits(), cls.to_bits());
        let mut g = net.zero_gradients();
        net.backward(&trace, dout, &mut g).unwrap();
        assert_eq!(g, out.gradients);
    }

    #[test]
    fn total_gradient_is_linear_in_lambda() {
        let net = bn_dropout_net();
        let x = inputs(8, 5, 2);
        let y = [2, 1, 0, 0, 1, 2, 2, 1];
        let mut cfg = LossConfig::new(3, 0.0);
        cfg.alpha = 0.1;
        let g0 = total_loss(&net, &x, &y, &cfg, 6).unwrap().gradients;
        cfg.lambda = 1.0;
        let g1 = total_loss(&net, &x, &y, &cfg, 6).unwrap().gradients;
        cfg.lambda = 2.5;
        let g25 = total_loss(&net, &x, &y, &cfg, 6).unwrap().gradients;
        for ((a, b), c) in g0.flat().iter().zip(g1.flat()).zip(g25.flat()) {
            assert!((c - (a + 2.5 * (b - a))).abs() < 1e-10);
        }
    }

    #[test]
    fn total_gradient_matches_finite_differences() {
        let mut net = bn_dropout_net();
        // keep pre-activations of the all-masked passes off the ReLU kink at 0
        for (t, p) in net.parameters_mut().into_iter().enumerate() {
            for (k, v) in p.iter_mut().enumerate() {
                *v += 0.05 * ((7 * t + 3 * k) as f64).sin();
            }
        }
        let x = inputs(6, 5, 3);
        let y = [0, 1, 2, 2, 1, 0];
        let mut cfg = LossConfig::new(3, 0.7);
        cfg.alpha = 0.1;
        cfg.pairs_per_step = 2;
        let out = total_loss(&net, &x, &y, &cfg, 8).unwrap();
        assert!(out.interaction > 0.0);
        let h = 1e-5;
        for t in 0..out.gradients.tensors.len() {
            for k in 0..out.gradients.tensors[t].len() {
                let orig = net.parameters()[t][k];
                net.parameters_mut()[t][k] = orig + h;
                let up = total_loss(&net, &x, &y, &cfg, 8).unwrap().value;
                net.parameters_mut()[t][k] = orig - h;
                let down = total_loss(&net, &x, &y, &cfg, 8).unwrap().value;
                net.parameters_mut()[t][k] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = out.gradients.tensors[t][k];
                let scale = fd.abs().max(an.abs()).max(1e-6);
                assert!(
                    (fd - an).abs() / scale < 1e-4,
                    "tensor {t} entry {k}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn interaction_passes_leave_the_network_untouched() {
        let mut net = bn_dropout_net();
        let x = inputs(8, 5, 4);
        let y = [0, 1, 2, 0, 1, 2, 0, 1];
        // move the running statistics away from their initial values first
        let t = net.forward(&x, ForwardOptions::train(1)).unwrap();
        net.commit_batch_stats(&t);
        let (stats, params) = (net.running_stats_checksum(), net.parameter_checksum());
        let mut cfg = LossConfig::new(3, 1.0);
        cfg.alpha = 0.1;
        approx_interaction_loss(&net, &x, &y, &cfg, 5).unwrap();
        total_loss(&net, &x, &y, &cfg, 5).unwrap();
        assert_eq!(net.running_stats_checksum(), stats);
        assert_eq!(net.parameter_checksum(), params);
    }

    #[test]
    fn minimizing_the_approximation_reduces_the_exact_loss() {
        let (initial, last) = quadratic_head_descent(0);
        assert!(last <= 0.5 * initial, "{initial} -> {last}");
    }

    /// Trains a quadratic-head toy on the interaction term alone and returns
    /// the exact interaction loss over its site before and after.
    fn quadratic_head_descent(seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vec![
            Layer::Dense(Dense::he_uniform(6, 10, &mut rng)),
            Layer::Relu,
            Layer::Dense(Dense::he_uniform(10, 4, &mut rng)),
            Layer::Square,
            Layer::Dense(Dense::he_uniform(4, 1, &mut rng)),
        ];
        let mut net = Network::new(6, layers, Head::Logistic).unwrap();
        let x = inputs(16, 6, seed + 100);
        let y = vec![0; 16];
        let mut cfg = LossConfig::new(2, 1.0);
        cfg.alpha = 0.1;
        cfg.pairs_per_step = 4;
        let exact = |net: &Network| {
            let acts = net.forward_range(&x, 0, 2, ForwardOptions::eval()).unwrap();
            (0..4)
                .map(|r| {
                    let g = MaskedModelGame::at_site(
                        net,
                        acts.output().row(r),
                        2,
                        ScoreSelector::ScalarOutput,
                    )
                    .unwrap();
                    exact_interaction_loss(&g).unwrap()
                })
                .sum::<f64>()
                / 4.0
        };
        let initial = exact(&net);
        for step in 0..200 {
            let (_, g) = approx_interaction_loss(&net, &x, &y, &cfg, step).unwrap();
            for (p, gk) in net.parameters_mut().into_iter().zip(&g.tensors) {
                for (pk, d) in p.iter_mut().zip(gk) {
                    *pk -= 0.1 * d;
                }
            }
        }
        (initial, exact(&net))
    }
}
