use proptest::prelude::*;

use interplay::estimate::Weighting;
use interplay::exact::ExactGame;
use interplay::game::{
    grid_partition, Coalition, Game, MaskedModelGame, ScoreSelector, TableGame, TermGame,
};
use interplay::nn::{checkpoint, Head, Matrix, MlpConfig, Network};
use interplay::sampling::{interaction_sampled, SamplerConfig};

fn small_mlp(seed: u64, dropout_rate: f64, batchnorm: bool) -> Network {
    let cfg = MlpConfig {
        input_dim: 6,
        hidden: vec![8, 5],
        outputs: 3,
        site_hidden: 0,
        dropout_rate,
        batchnorm,
        head: Head::SoftmaxCrossEntropy,
    };
    Network::mlp(&cfg, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shapley_values_sum_to_grand_coalition_gain(n in 1usize..=9, seed in any::<u64>()) {
        let game = TableGame::random(n, seed).unwrap();
        let exact = ExactGame::new(&game).unwrap();
        let total: f64 = exact.shapley().values.iter().sum();
        let gain = exact.value((1 << n) - 1) - exact.value(0);
        prop_assert!((total - gain).abs() < 1e-9);
    }

    #[test]
    fn interaction_is_symmetric_in_the_pair(n in 2usize..=8, seed in any::<u64>(), a in 0usize..8, b in 0usize..8) {
        let (i, j) = (a % n, b % n);
        prop_assume!(i != j);
        let exact = ExactGame::new(&TableGame::random(n, seed).unwrap()).unwrap();
        for w in [Weighting::Shapley, Weighting::Banzhaf] {
            let ij = exact.interaction(i, j, w).unwrap().value;
            let ji = exact.interaction(j, i, w).unwrap().value;
            prop_assert!((ij - ji).abs() < 1e-12);
        }
    }

    #[test]
    fn and_gate_interaction_is_one_under_both_weightings(n in 2usize..=9, a in 0usize..9, b in 0usize..9) {
        let (i, j) = (a % n, b % n);
        prop_assume!(i != j);
        let exact = ExactGame::new(&TermGame::and_gate(n, i, j).unwrap()).unwrap();
        for w in [Weighting::Shapley, Weighting::Banzhaf] {
            prop_assert!((exact.interaction(i, j, w).unwrap().value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_interaction_is_the_mean_over_orders(n in 2usize..=9, seed in any::<u64>()) {
        let exact = ExactGame::new(&TableGame::random(n, seed).unwrap()).unwrap();
        let orders = exact.per_order(0, n - 1).unwrap();
        let mean = orders.iter().sum::<f64>() / orders.len() as f64;
        let direct = exact.interaction(0, n - 1, Weighting::Shapley).unwrap().value;
        prop_assert!((mean - direct).abs() < 1e-10);
    }

    #[test]
    fn coalition_set_algebra(n in 1usize..=64, a in any::<u64>(), b in any::<u64>()) {
        let keep = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let s = Coalition::from_mask(n, a & keep).unwrap();
        let t = Coalition::from_mask(n, b & keep).unwrap();
        prop_assert_eq!(s.union(&t).complement(), s.complement().intersection(&t.complement()));
        prop_assert!(s.intersection(&t).is_subset(&s));
        prop_assert!(s.difference(&t).is_disjoint(&t));
        prop_assert_eq!(s.len() + s.complement().len(), n);
        prop_assert_eq!(Coalition::from_indices(n, &s.members()).unwrap(), s);
    }

    #[test]
    fn grid_cells_partition_the_image(rows in 1usize..=4, cols in 1usize..=4, ph in 1usize..=3, pw in 1usize..=3, channels in 1usize..=2) {
        let (h, w) = (rows * ph, cols * pw);
        let grid = grid_partition(h, w, channels, rows, cols).unwrap();
        let mut seen = vec![0u8; h * w * channels];
        for cell in &grid.masks {
            prop_assert_eq!(cell.len(), ph * pw * channels);
            for &p in cell {
                seen[p] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(grid.adjacent_pairs().len(), rows * (cols - 1) + cols * (rows - 1));
    }

    #[test]
    fn masked_game_is_deterministic_and_full_coalition_is_the_forward_pass(seed in any::<u64>(), dropout in prop::bool::ANY, label in 0usize..3) {
        let net = small_mlp(seed, if dropout { 0.5 } else { 0.0 }, false);
        let input: Vec<f64> = (0..6).map(|k| ((seed >> k) & 7) as f64 / 7.0 - 0.5).collect();
        let site = 2;
        let game = MaskedModelGame::from_input(&net, &input, site, ScoreSelector::TrueClassLogit(label)).unwrap();
        let full = Coalition::full(game.n());
        let logits = net.predict(&Matrix::from_vec(1, 6, input.clone()).unwrap()).unwrap();
        prop_assert_eq!(game.evaluate(&full).unwrap(), logits.row(0)[label]);
        let some = Coalition::from_mask(game.n(), seed & 0xff).unwrap();
        prop_assert_eq!(game.evaluate(&some).unwrap().to_bits(), game.evaluate(&some).unwrap().to_bits());
        let batched = game.evaluate_many(&[some.clone(), full.clone()]).unwrap();
        prop_assert!((batched[0] - game.evaluate(&some).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn checkpoints_round_trip(seed in any::<u64>(), batchnorm in prop::bool::ANY) {
        let net = small_mlp(seed, 0.3, batchnorm);
        let mut buf = Vec::new();
        checkpoint::write(&net, &mut buf).unwrap();
        let back = checkpoint::read(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back, net);
    }
}

#[test]
fn sampled_interaction_is_reproducible_per_seed() {
    let game = TableGame::random(9, 3).unwrap();
    let cfg = SamplerConfig {
        samples: 300,
        seed: 17,
        ..SamplerConfig::default()
    };
    let a = interaction_sampled(&game, 1, 4, Weighting::Shapley, &cfg).unwrap();
    let b = interaction_sampled(&game, 1, 4, Weighting::Shapley, &cfg).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    let c = interaction_sampled(&game, 1, 4, Weighting::Shapley, &cfg.with_seed(18)).unwrap();
    assert_ne!(a.value.to_bits(), c.value.to_bits());
}

#[test]
fn sampled_interaction_is_unbiased() {
    for w in [Weighting::Shapley, Weighting::Banzhaf] {
        let mut within = 0;
        for seed in 0..40u64 {
            let n = 4 + (seed % 6) as usize;
            let game = TableGame::random(n, 500 + seed).unwrap();
            let exact = ExactGame::new(&game)
                .unwrap()
                .interaction(0, 1, w)
                .unwrap()
                .value;
            let cfg = SamplerConfig {
                samples: 50_000,
                seed,
                ..SamplerConfig::default()
            };
            let est = interaction_sampled(&game, 0, 1, w, &cfg).unwrap();
            if (est.value - exact).abs() <= 4.0 * est.stderr {
                within += 1;
            }
        }
        assert!(within >= 38, "{w:?}: {within}/40 within 4 SE");
    }
}

#[test]
fn standard_error_shrinks_with_more_samples() {
    let game = TableGame::random(8, 11).unwrap();
    let mean_se = |m: usize| {
        (0..20u64)
            .map(|seed| {
                let cfg = SamplerConfig {
                    samples: m,
                    seed,
                    ..SamplerConfig::default()
                };
                interaction_sampled(&game, 2, 5, Weighting::Banzhaf, &cfg)
                    .unwrap()
                    .stderr
            })
            .sum::<f64>()
            / 20.0
    };
    let (se1, se2) = (mean_se(400), mean_se(800));
    assert!(se2 < se1);
    assert!((se1 / se2 - 2f64.sqrt()).abs() < 0.1, "{se1} / {se2}");
}
