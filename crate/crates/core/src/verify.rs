//! Axiom and identity battery over seeded random games.
//!
//! Each check returns a [`CheckResult`]; [`run_battery`] runs all of them and
//! collects a JSON-serializable [`VerifyReport`].

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::Weighting;
use crate::exact::{gamma_ratio_chain, gamma_ratio_chain_exact, invert_orders, ExactGame};
use crate::game::{MergedPairGame, Subgame, SumGame, TableGame, TermGame};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub games: usize,
    pub min_players: usize,
    pub max_players: usize,
    /// Largest game used by the decomposition identities.
    pub identity_max_players: usize,
    /// Largest `s` of the exhaustive ratio-chain check.
    pub chain_max: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            games: 50,
            min_players: 4,
            max_players: 10,
            identity_max_players: 12,
            chain_max: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed violation (absolute error, or count of failures for
    /// checks without a continuous error).
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub seconds: f64,
}

/// `I^(s)_dropout / I^(s)` on a game whose pattern rewards have mixed signs.
/// Reported for inspection; no bound is claimed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedSignRatio {
    pub players: usize,
    pub s: usize,
    pub r: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
    pub mixed_sign_ratios: Vec<MixedSignRatio>,
    pub passed: bool,
    pub seconds: f64,
}

fn game_sizes(cfg: &VerifyConfig, max: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
    let span = max - cfg.min_players + 1;
    (0..cfg.games).map(move |k| (cfg.min_players + k % span, derive_seed(cfg.seed, k as u64)))
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    max_error: f64,
    cases: usize,
    start: Instant,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max_error: 0.0,
            cases: 0,
            start: Instant::now(),
        }
    }

    fn record(&mut self, a: f64, b: f64) {
        let e = (a - b).abs();
        self.max_error = if e.is_nan() {
            f64::INFINITY
        } else {
            self.max_error.max(e)
        };
        self.cases += 1;
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.max_error <= self.tolerance,
            max_error: self.max_error,
            tolerance: self.tolerance,
            cases: self.cases,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

pub fn check_efficiency(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("shapley_efficiency", 1e-9);
    for (n, seed) in game_sizes(cfg, cfg.max_players) {
        let g = ExactGame::new(&TableGame::random(n, seed)?)?;
        let total: f64 = g.shapley().values.iter().sum();
        t.record(total, g.value((1 << n) - 1) - g.value(0));
    }
    Ok(t.finish())
}

pub fn check_linearity(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("shapley_linearity", 1e-9);
    for (n, seed) in game_sizes(cfg, cfg.max_players) {
        let a = TableGame::random(n, seed)?;
        let b = TableGame::random(n, derive_seed(seed, 1))?;
        let pa = ExactGame::new(&a)?.shapley().values;
        let pb = ExactGame::new(&b)?.shapley().values;
        let psum = ExactGame::new(&SumGame::new(&a, &b)?)?.shapley().values;
        for k in 0..n {
            t.record(psum[k], pa[k] + pb[k]);
        }
    }
    Ok(t.finish())
}

/// A random game in which player `d` adds exactly `c` to every coalition.
pub fn dummy_game(n: usize, d: usize, c: f64, seed: u64) -> Result<TableGame> {
    let base = TableGame::random(n, seed)?;
    let bit = 1u32 << d;
    TableGame::from_fn(n, |m| {
        base.value(m & !bit) + if m & bit != 0 { c } else { 0.0 }
    })
}

/// A random game symmetrized over swapping players `a` and `b`.
pub fn symmetric_game(n: usize, a: usize, b: usize, seed: u64) -> Result<TableGame> {
    let base = TableGame::random(n, seed)?;
    let swap = |m: u32| {
        let (ba, bb) = ((m >> a) & 1, (m >> b) & 1);
        (m & !(1 << a) & !(1 << b)) | (ba << b) | (bb << a)
    };
    TableGame::from_fn(n, |m| 0.5 * (base.value(m) + base.value(swap(m))))
}

pub fn check_dummy(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("shapley_dummy", 1e-9);
    for (n, seed) in game_sizes(cfg, cfg.max_players) {
        let d = (seed % n as u64) as usize;
        let g = ExactGame::new(&dummy_game(n, d, 0.75, seed)?)?;
        t.record(g.shapley().values[d], g.value(1 << d) - g.value(0));
    }
    Ok(t.finish())
}

pub fn check_symmetry(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("shapley_symmetry", 1e-9);
    for (n, seed) in game_sizes(cfg, cfg.max_players) {
        let a = (seed % n as u64) as usize;
        let b = (a + 1 + (seed >> 8) as usize % (n - 1)) % n;
        let phi = ExactGame::new(&symmetric_game(n, a, b, seed)?)?
            .shapley()
            .values;
        t.record(phi[a], phi[b]);
    }
    Ok(t.finish())
}

/// `φ(S_ij | N') - φ(i | N \ {j}) - φ(j | N \ {i})` by explicit subgames.
pub fn interaction_via_merged(game: &TableGame, i: usize, j: usize) -> Result<f64> {
    let merged = MergedPairGame::new(game, i, j)?;
    let phi_pair = ExactGame::new(&merged)?.shapley().values[merged.merged_index()];
    let without_j = Subgame::new(game, j)?;
    let phi_i = ExactGame::new(&without_j)?.shapley().values[without_j.local_index(i).unwrap()];
    let without_i = Subgame::new(game, i)?;
    let phi_j = ExactGame::new(&without_i)?.shapley().values[without_i.local_index(j).unwrap()];
    Ok(phi_pair - phi_i - phi_j)
}

pub fn check_merged_pair_equivalence(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("interaction_merged_pair_equivalence", 1e-9);
    for (n, seed) in game_sizes(cfg, cfg.max_players) {
        let g = TableGame::random(n, seed)?;
        let e = ExactGame::new(&g)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..3 {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            t.record(
                e.interaction(i, j, Weighting::Shapley)?.value,
                interaction_via_merged(&g, i, j)?,
            );
        }
    }
    Ok(t.finish())
}

/// One seeded pair per game for the decomposition identities.
fn identity_cases(cfg: &VerifyConfig) -> impl Iterator<Item = (usize, u64, usize, usize)> + '_ {
    game_sizes(cfg, cfg.identity_max_players).map(|(n, seed)| {
        let i = (seed % n as u64) as usize;
        let j = (i + 1 + (seed >> 16) as usize % (n - 1)) % n;
        (n, seed, i, j)
    })
}

pub fn check_order_sum(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("order_sum_identity", 1e-8);
    for (n, seed, i, j) in identity_cases(cfg) {
        let e = ExactGame::new(&TableGame::random(n, seed)?)?;
        let mean = e.per_order(i, j)?.iter().sum::<f64>() / (n - 1) as f64;
        t.record(mean, e.interaction(i, j, Weighting::Shapley)?.value);
    }
    Ok(t.finish())
}

pub fn check_order_decomposition(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("order_decomposition_identity", 1e-8);
    for (n, seed, i, j) in identity_cases(cfg) {
        let e = ExactGame::new(&TableGame::random(n, seed)?)?;
        let sp = e.order_decomposition(i, j)?;
        for (s, direct) in sp.per_order_interaction.iter().enumerate() {
            let recomposed: f64 = (0..=s)
                .map(|q| crate::exact::binomial(s, q) * sp.j_components[q])
                .sum();
            t.record(recomposed, *direct);
        }
        for (a, b) in sp
            .j_components
            .iter()
            .zip(invert_orders(&sp.per_order_interaction))
        {
            t.record(*a, b);
        }
    }
    Ok(t.finish())
}

pub fn check_dropout_identity(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("dropout_truncation_identity", 1e-8);
    for (n, seed, i, j) in identity_cases(cfg) {
        let e = ExactGame::new(&TableGame::random(n, seed)?)?;
        let sp = e.order_decomposition(i, j)?;
        for s in 0..=n - 2 {
            for r in 0..=s {
                t.record(e.dropout_interaction(i, j, s, r)?, sp.truncated(r));
            }
        }
    }
    Ok(t.finish())
}

pub fn check_reward_reconstruction(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("pattern_reward_reconstruction", 1e-8);
    for (n, seed, i, j) in identity_cases(cfg) {
        let e = ExactGame::new(&TableGame::random(n, seed)?)?;
        let (others, rewards) = e.pattern_rewards(i, j)?;
        for ctx in 0..rewards.len() {
            let mut sum = 0.0;
            let mut sub = ctx;
            loop {
                sum += rewards[sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & ctx;
            }
            let mut full = 0usize;
            for (b, &p) in others.iter().enumerate() {
                if ctx & (1 << b) != 0 {
                    full |= 1 << p;
                }
            }
            let (bi, bj) = (1 << i, 1 << j);
            let delta =
                e.value(full | bi | bj) - e.value(full | bj) - e.value(full | bi) + e.value(full);
            t.record(sum, delta);
        }
    }
    Ok(t.finish())
}

/// Every chain for `1 <= r <= s <= chain_max` lies in `[0, 1]` and is
/// non-increasing, compared by exact cross-multiplication. `max_error`
/// counts violations.
pub fn check_ratio_chain(cfg: &VerifyConfig) -> Result<CheckResult> {
    let start = Instant::now();
    let mut violations = 0usize;
    let mut cases = 0usize;
    for s in 1..=cfg.chain_max {
        for r in 1..=s {
            let exact = gamma_ratio_chain_exact(s, r)?;
            for (k, &(num, den)) in exact.iter().enumerate() {
                cases += 1;
                if den == 0 || num > den {
                    violations += 1;
                }
                if k > 0 {
                    let (pn, pd) = exact[k - 1];
                    // num/den <= pn/pd
                    if num * pd > pn * den {
                        violations += 1;
                    }
                }
            }
            let floats = gamma_ratio_chain(s, r)?;
            if floats.iter().any(|v| !(0.0..=1.0).contains(v)) {
                violations += 1;
            }
        }
    }
    Ok(CheckResult {
        name: "gamma_ratio_chain".into(),
        passed: violations == 0,
        max_error: violations as f64,
        tolerance: 0.0,
        cases,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// A game `Σ_T c_T [T ⊆ S]` with `c_T > 0` on random patterns, so every
/// pattern reward of every pair is non-negative.
pub fn same_sign_game(n: usize, seed: u64) -> Result<TermGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = TermGame::new(n)?;
    for _ in 0..3 * n {
        let members: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.35)).collect();
        g.add_term(rng.gen_range(0.05..1.0), &members)?;
    }
    Ok(g)
}

/// Ratios `I^(s)_dropout / I^(s)` for every `r <= s` on same-sign games;
/// `max_error` is the largest distance outside `[0, 1]`.
pub fn check_ratio_bound(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("dropout_ratio_bound", 0.0);
    for (n, seed, i, j) in identity_cases(cfg) {
        let g = same_sign_game(n, seed)?;
        let e = ExactGame::new(&g)?;
        let sp = e.order_decomposition(i, j)?;
        for s in 0..=n - 2 {
            let full = sp.per_order_interaction[s];
            if full.abs() < 1e-12 {
                continue;
            }
            for r in 0..=s {
                let ratio = e.dropout_interaction(i, j, s, r)? / full;
                let outside = (-ratio).max(ratio - 1.0).max(0.0);
                // absorb rounding at the r = s endpoint
                t.record(if outside < 1e-12 { 0.0 } else { outside }, 0.0);
            }
        }
    }
    Ok(t.finish())
}

pub fn mixed_sign_ratios(cfg: &VerifyConfig) -> Result<Vec<MixedSignRatio>> {
    let mut out = Vec::new();
    for (n, seed, i, j) in identity_cases(cfg).take(5) {
        let e = ExactGame::new(&TableGame::random(n, seed)?)?;
        let sp = e.order_decomposition(i, j)?;
        let s = n - 2;
        if sp.per_order_interaction[s].abs() < 1e-12 {
            continue;
        }
        for r in 0..=s {
            out.push(MixedSignRatio {
                players: n,
                s,
                r,
                ratio: sp.truncated(r) / sp.per_order_interaction[s],
            });
        }
    }
    Ok(out)
}

pub fn check_additive_agreement(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut t = Tally::new("additive_shapley_banzhaf_agreement", 1e-12);
    for (n, seed) in game_sizes(cfg, cfg.max_players) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let e = ExactGame::new(&TermGame::additive(&w)?)?;
        let (phi, psi) = (e.shapley().values, e.banzhaf().values);
        for k in 0..n {
            t.record(phi[k], w[k]);
            t.record(psi[k], w[k]);
        }
    }
    Ok(t.finish())
}

pub fn run_battery(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let start = Instant::now();
    let checks = vec![
        check_efficiency(cfg)?,
        check_linearity(cfg)?,
        check_dummy(cfg)?,
        check_symmetry(cfg)?,
        check_merged_pair_equivalence(cfg)?,
        check_order_sum(cfg)?,
        check_order_decomposition(cfg)?,
        check_dropout_identity(cfg)?,
        check_reward_reconstruction(cfg)?,
        check_ratio_chain(cfg)?,
        check_ratio_bound(cfg)?,
        check_additive_agreement(cfg)?,
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        config: cfg.clone(),
        mixed_sign_ratios: mixed_sign_ratios(cfg)?,
        checks,
        passed,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            games: 8,
            max_players: 7,
            identity_max_players: 7,
            chain_max: 8,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn small_battery_passes() {
        let report = run_battery(&small()).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
            assert!(c.cases > 0, "{c:?}");
        }
        assert!(report.passed);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("shapley_efficiency"));
    }

    #[test]
    fn dummy_and_symmetric_constructions() {
        let g = dummy_game(5, 2, 0.75, 1).unwrap();
        for m in 0u32..32 {
            if m & 4 == 0 {
                assert_eq!(g.value(m | 4), g.value(m) + 0.75);
            }
        }
        let s = symmetric_game(5, 1, 3, 2).unwrap();
        assert_eq!(s.value(0b00010), s.value(0b01000));
    }

    #[test]
    fn same_sign_rewards_are_non_negative() {
        let g = same_sign_game(7, 4).unwrap();
        let e = ExactGame::new(&g).unwrap();
        let (_, rewards) = e.pattern_rewards(0, 1).unwrap();
        assert!(rewards.iter().all(|&r| r >= -1e-12));
    }
}
