//! Brute-force reference values by full enumeration of coalitions.
//!
//! Every quantity is computed from a table of `f` over all `2^n` coalitions,
//! so a game is evaluated once per [`ExactGame`] regardless of how many
//! quantities are read from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{AttributionKind, AttributionVector, InteractionEstimate, Method, Weighting};
use crate::game::{finite, Coalition, Game};

/// Largest game enumerated exhaustively.
pub const EXACT_LIMIT: usize = 24;
/// Largest game whose pattern rewards are computed by subset recursion.
pub const RECURSION_LIMIT: usize = 16;
/// Tolerance of the internal identity checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

const EVAL_CHUNK: usize = 4096;

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Shapley context weights `|S|!(m-|S|)!/(m+1)!` indexed by `|S|` for a
/// context drawn from `m` players.
pub fn shapley_weights(m: usize) -> Vec<f64> {
    let lf = ln_factorials(m + 1);
    (0..=m)
        .map(|s| (lf[s] + lf[m - s] - lf[m + 1]).exp())
        .collect()
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for t in 0..k {
        c = c * (n - t) as f64 / (t + 1) as f64;
    }
    c.round()
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for t in 0..k {
        c = c * (n - t) as u128 / (t + 1) as u128;
    }
    c
}

fn game_id<G: ?Sized>() -> String {
    let full = std::any::type_name::<G>();
    full.rsplit("::").next().unwrap_or(full).to_string()
}

/// A game tabulated over every coalition.
#[derive(Clone, Debug)]
pub struct ExactGame {
    n: usize,
    values: Vec<f64>,
    id: String,
}

/// Per-order components of one pair's interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderSpectrum {
    pub pair: (usize, usize),
    /// `I^(s)` for `s = 0..=n-2`.
    pub per_order_interaction: Vec<f64>,
    /// Players of `N \ {i, j}`; bit `b` of a pattern index stands for `others[b]`.
    pub others: Vec<usize>,
    /// `R^T` indexed by the compressed mask of `T` over `others`; empty when
    /// the spectrum was computed without pattern rewards.
    pub pattern_rewards: Vec<f64>,
    /// `J^(q)`: mean pattern reward of order `q`, for `q = 0..=n-2`.
    pub j_components: Vec<f64>,
    /// `gamma[s][q] = C(s, q) J^(q)` for `q <= s`.
    pub gamma: Vec<Vec<f64>>,
}

impl OrderSpectrum {
    /// `R^T` for a coalition `T ⊆ N \ {i, j}`.
    pub fn reward(&self, t: &Coalition) -> Result<f64> {
        if self.pattern_rewards.is_empty() {
            return Err(Error::State("spectrum carries no pattern rewards".into()));
        }
        let mut idx = 0usize;
        for p in t.iter() {
            let b = self
                .others
                .iter()
                .position(|&o| o == p)
                .ok_or_else(|| Error::arg(format!("player {p} is part of the pair")))?;
            idx |= 1 << b;
        }
        Ok(self.pattern_rewards[idx])
    }

    /// `Σ_{q<=r} C(r, q) J^(q)`.
    pub fn truncated(&self, r: usize) -> f64 {
        (0..=r).map(|q| binomial(r, q) * self.j_components[q]).sum()
    }
}

impl ExactGame {
    pub fn new<G: Game + ?Sized>(game: &G) -> Result<Self> {
        let n = game.n();
        if n > EXACT_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: EXACT_LIMIT,
            });
        }
        let total = 1usize << n;
        let mut values = Vec::with_capacity(total);
        let mut start = 0usize;
        while start < total {
            let end = (start + EVAL_CHUNK).min(total);
            let batch: Vec<Coalition> = (start..end)
                .map(|m| Coalition::from_mask(n, m as u64))
                .collect::<Result<_>>()?;
            let v = game.evaluate_many(&batch)?;
            for (x, c) in v.iter().zip(&batch) {
                finite(*x, c)?;
            }
            values.extend(v);
            start = end;
        }
        Ok(Self {
            n,
            values,
            id: game_id::<G>(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for p in [i, j] {
            if p >= self.n {
                return Err(Error::Index {
                    index: p,
                    n: self.n,
                });
            }
        }
        if i == j {
            return Err(Error::arg(format!(
                "interaction needs two distinct players, got ({i}, {i})"
            )));
        }
        Ok(())
    }

    fn delta(&self, s: usize, i: usize, j: usize) -> f64 {
        let (bi, bj) = (1 << i, 1 << j);
        self.values[s | bi | bj] - self.values[s | bj] - self.values[s | bi] + self.values[s]
    }

    fn others(&self, i: usize, j: usize) -> Vec<usize> {
        (0..self.n).filter(|&p| p != i && p != j).collect()
    }

    /// Expands a mask over `others` into a mask over all players.
    fn expand(others: &[usize], compressed: usize) -> usize {
        let mut m = 0;
        let mut c = compressed;
        while c != 0 {
            let b = c.trailing_zeros() as usize;
            m |= 1 << others[b];
            c &= c - 1;
        }
        m
    }

    /// `Δf(S, i, j)` for every `S ⊆ N \ {i, j}`, by compressed index.
    fn deltas(&self, i: usize, j: usize) -> (Vec<usize>, Vec<f64>) {
        let others = self.others(i, j);
        let d = (0..1usize << others.len())
            .map(|c| self.delta(Self::expand(&others, c), i, j))
            .collect();
        (others, d)
    }

    pub fn shapley(&self) -> AttributionVector {
        let w = shapley_weights(self.n - 1);
        self.attribution(|s| w[s], AttributionKind::Shapley)
    }

    pub fn banzhaf(&self) -> AttributionVector {
        let w = 0.5f64.powi(self.n as i32 - 1);
        self.attribution(|_| w, AttributionKind::Banzhaf)
    }

    fn attribution(
        &self,
        weight: impl Fn(usize) -> f64,
        kind: AttributionKind,
    ) -> AttributionVector {
        let mut values = vec![0.0; self.n];
        for (i, v) in values.iter_mut().enumerate() {
            let bit = 1usize << i;
            let mut acc = 0.0;
            for s in 0..self.values.len() {
                if s & bit == 0 {
                    acc +=
                        weight(s.count_ones() as usize) * (self.values[s | bit] - self.values[s]);
                }
            }
            *v = acc;
        }
        AttributionVector {
            values,
            kind,
            game_id: self.id.clone(),
        }
    }

    pub fn interaction(
        &self,
        i: usize,
        j: usize,
        weighting: Weighting,
    ) -> Result<InteractionEstimate> {
        self.check_pair(i, j)?;
        let m = self.n - 2;
        let w: Vec<f64> = match weighting {
            Weighting::Shapley => shapley_weights(m),
            Weighting::Banzhaf => vec![0.5f64.powi(m as i32); m + 1],
        };
        let (_, deltas) = self.deltas(i, j);
        let value = deltas
            .iter()
            .enumerate()
            .map(|(c, d)| w[c.count_ones() as usize] * d)
            .sum();
        Ok(InteractionEstimate {
            pair: (i, j),
            value,
            stderr: 0.0,
            weighting,
            method: Method::Exact,
        })
    }

    /// `I^(s)` for every `s = 0..=n-2`.
    pub fn per_order(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_pair(i, j)?;
        let m = self.n - 2;
        let (_, deltas) = self.deltas(i, j);
        let mut sums = vec![0.0; m + 1];
        for (c, d) in deltas.iter().enumerate() {
            sums[c.count_ones() as usize] += d;
        }
        Ok(sums
            .into_iter()
            .enumerate()
            .map(|(s, total)| total / binomial(m, s))
            .collect())
    }

    pub fn multi_order(&self, i: usize, j: usize, s: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        if s > self.n - 2 {
            return Err(Error::arg(format!(
                "order {s} outside 0..={} for {} players",
                self.n - 2,
                self.n
            )));
        }
        Ok(self.per_order(i, j)?[s])
    }

    /// `R^T` for every `T ⊆ N \ {i, j}` by the subset recursion
    /// `R^T = Δf(T) - Σ_{T' ⊊ T} R^{T'}`, filled in order of increasing mask.
    pub fn pattern_rewards(&self, i: usize, j: usize) -> Result<(Vec<usize>, Vec<f64>)> {
        self.check_pair(i, j)?;
        if self.n > RECURSION_LIMIT {
            return Err(Error::SizeLimit {
                n: self.n,
                limit: RECURSION_LIMIT,
            });
        }
        let (others, deltas) = self.deltas(i, j);
        let mut rewards = vec![0.0; deltas.len()];
        for t in 0..deltas.len() {
            let mut lower = 0.0;
            // proper submasks of t, largest first, ending with the empty set
            let mut sub = t;
            while sub != 0 {
                sub = (sub - 1) & t;
                lower += rewards[sub];
            }
            rewards[t] = deltas[t] - lower;
        }
        Ok((others, rewards))
    }

    pub fn pattern_reward(&self, i: usize, j: usize, t: &Coalition) -> Result<f64> {
        self.check_pair(i, j)?;
        if t.universe() != self.n {
            return Err(Error::Index {
                index: t.universe().max(1) - 1,
                n: self.n,
            });
        }
        if t.contains(i) || t.contains(j) {
            return Err(Error::arg(format!(
                "pattern {t} contains a player of ({i}, {j})"
            )));
        }
        let (others, rewards) = self.pattern_rewards(i, j)?;
        let mut idx = 0;
        for (b, &p) in others.iter().enumerate() {
            if t.contains(p) {
                idx |= 1 << b;
            }
        }
        Ok(rewards[idx])
    }

    /// Full spectrum from pattern rewards; checks `I^(s) = Σ_q C(s,q) J^(q)`
    /// against direct enumeration.
    pub fn order_decomposition(&self, i: usize, j: usize) -> Result<OrderSpectrum> {
        let (others, rewards) = self.pattern_rewards(i, j)?;
        let m = others.len();
        let mut sums = vec![0.0; m + 1];
        for (t, r) in rewards.iter().enumerate() {
            sums[t.count_ones() as usize] += r;
        }
        let j_components: Vec<f64> = sums
            .into_iter()
            .enumerate()
            .map(|(q, total)| total / binomial(m, q))
            .collect();
        let per_order = self.per_order(i, j)?;
        let spectrum = build_spectrum((i, j), per_order, others, rewards, j_components);
        for (s, direct) in spectrum.per_order_interaction.iter().enumerate() {
            let recomposed: f64 = spectrum.gamma[s].iter().sum();
            let scale: f64 = spectrum.gamma[s]
                .iter()
                .map(|g| g.abs())
                .sum::<f64>()
                .max(1.0);
            if (recomposed - direct).abs() > IDENTITY_TOLERANCE * scale {
                return Err(Error::InternalConsistency(format!(
                    "order {s} of pair ({i}, {j}): I^(s) = {direct} but Σ_q Γ = {recomposed}"
                )));
            }
        }
        Ok(spectrum)
    }

    /// Spectrum without pattern rewards: `J^(q)` by binomial inversion of
    /// `I^(s)`. Works up to [`EXACT_LIMIT`] players.
    pub fn order_components(&self, i: usize, j: usize) -> Result<OrderSpectrum> {
        let per_order = self.per_order(i, j)?;
        let j_components = invert_orders(&per_order);
        Ok(build_spectrum(
            (i, j),
            per_order,
            self.others(i, j),
            Vec::new(),
            j_components,
        ))
    }

    /// `E_{|S|=s} E_{S'⊆S, |S'|=r} Σ_{T⊆S'} R^T`, checked against
    /// `Σ_{q<=r} C(r,q) J^(q)`.
    pub fn dropout_interaction(&self, i: usize, j: usize, s: usize, r: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        if r > s {
            return Err(Error::arg(format!(
                "surviving order {r} exceeds context order {s}"
            )));
        }
        if s > self.n - 2 {
            return Err(Error::arg(format!("order {s} outside 0..={}", self.n - 2)));
        }
        let spectrum = self.order_decomposition(i, j)?;
        let m = spectrum.others.len();
        // reconstructed Δf(S') = Σ_{T⊆S'} R^T via a subset-sum transform
        let mut recon = spectrum.pattern_rewards.clone();
        for b in 0..m {
            for mask in 0..recon.len() {
                if mask & (1 << b) != 0 {
                    recon[mask] += recon[mask ^ (1 << b)];
                }
            }
        }
        let mut outer = 0.0;
        let mut contexts = 0usize;
        for ctx in 0..1usize << m {
            if ctx.count_ones() as usize != s {
                continue;
            }
            let mut inner = 0.0;
            let mut count = 0usize;
            let mut sub = ctx;
            loop {
                if sub.count_ones() as usize == r {
                    inner += recon[sub];
                    count += 1;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & ctx;
            }
            outer += inner / count as f64;
            contexts += 1;
        }
        let value = outer / contexts as f64;
        let via_gamma = spectrum.truncated(r);
        let scale = (0..=r)
            .map(|q| (binomial(r, q) * spectrum.j_components[q]).abs())
            .sum::<f64>()
            .max(1.0);
        if (value - via_gamma).abs() > IDENTITY_TOLERANCE * scale {
            return Err(Error::InternalConsistency(format!(
                "dropout interaction ({i}, {j}) s={s} r={r}: {value} by enumeration, {via_gamma} by components"
            )));
        }
        Ok(value)
    }

    pub fn all_pairs(&self, weighting: Weighting) -> Result<Vec<((usize, usize), f64)>> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(((i, j), self.interaction(i, j, weighting)?.value));
            }
        }
        Ok(out)
    }
}

fn build_spectrum(
    pair: (usize, usize),
    per_order: Vec<f64>,
    others: Vec<usize>,
    rewards: Vec<f64>,
    j_components: Vec<f64>,
) -> OrderSpectrum {
    let gamma = (0..per_order.len())
        .map(|s| (0..=s).map(|q| binomial(s, q) * j_components[q]).collect())
        .collect();
    OrderSpectrum {
        pair,
        per_order_interaction: per_order,
        others,
        pattern_rewards: rewards,
        j_components,
        gamma,
    }
}

/// `J^(q) = Σ_{s<=q} (-1)^(q-s) C(q,s) I^(s)`.
pub fn invert_orders(per_order: &[f64]) -> Vec<f64> {
    (0..per_order.len())
        .map(|q| {
            (0..=q)
                .map(|s| {
                    let sign = if (q - s) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial(q, s) * per_order[s]
                })
                .sum()
        })
        .collect()
}

pub fn shapley_exact<G: Game + ?Sized>(game: &G) -> Result<AttributionVector> {
    Ok(ExactGame::new(game)?.shapley())
}

pub fn banzhaf_exact<G: Game + ?Sized>(game: &G) -> Result<AttributionVector> {
    Ok(ExactGame::new(game)?.banzhaf())
}

fn check_pair_first<G: Game + ?Sized>(game: &G, i: usize, j: usize) -> Result<()> {
    game.players().check(i)?;
    game.players().check(j)?;
    if i == j {
        return Err(Error::arg(format!(
            "interaction needs two distinct players, got ({i}, {i})"
        )));
    }
    Ok(())
}

pub fn interaction_exact<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
) -> Result<InteractionEstimate> {
    check_pair_first(game, i, j)?;
    ExactGame::new(game)?.interaction(i, j, Weighting::Shapley)
}

pub fn banzhaf_interaction_exact<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
) -> Result<InteractionEstimate> {
    check_pair_first(game, i, j)?;
    ExactGame::new(game)?.interaction(i, j, Weighting::Banzhaf)
}

pub fn multi_order_interaction_exact<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    s: usize,
) -> Result<f64> {
    check_pair_first(game, i, j)?;
    if s + 2 > game.n() {
        return Err(Error::arg(format!(
            "order {s} outside 0..={}",
            game.n() - 2
        )));
    }
    ExactGame::new(game)?.multi_order(i, j, s)
}

pub fn pattern_reward<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    t: &Coalition,
) -> Result<f64> {
    check_pair_first(game, i, j)?;
    if t.contains(i) || t.contains(j) {
        return Err(Error::arg(format!(
            "pattern {t} contains a player of ({i}, {j})"
        )));
    }
    if game.n() > RECURSION_LIMIT {
        return Err(Error::SizeLimit {
            n: game.n(),
            limit: RECURSION_LIMIT,
        });
    }
    ExactGame::new(game)?.pattern_reward(i, j, t)
}

pub fn order_decomposition<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
) -> Result<OrderSpectrum> {
    check_pair_first(game, i, j)?;
    if game.n() > RECURSION_LIMIT {
        return Err(Error::SizeLimit {
            n: game.n(),
            limit: RECURSION_LIMIT,
        });
    }
    ExactGame::new(game)?.order_decomposition(i, j)
}

pub fn dropout_interaction_exact<G: Game + ?Sized>(
    game: &G,
    i: usize,
    j: usize,
    s: usize,
    r: usize,
) -> Result<f64> {
    check_pair_first(game, i, j)?;
    if r > s {
        return Err(Error::arg(format!(
            "surviving order {r} exceeds context order {s}"
        )));
    }
    if game.n() > RECURSION_LIMIT {
        return Err(Error::SizeLimit {
            n: game.n(),
            limit: RECURSION_LIMIT,
        });
    }
    ExactGame::new(game)?.dropout_interaction(i, j, s, r)
}

/// Shapley-weighted interactions of every unordered pair `i < j`.
pub fn all_pair_interactions<G: Game + ?Sized>(game: &G) -> Result<Vec<((usize, usize), f64)>> {
    ExactGame::new(game)?.all_pairs(Weighting::Shapley)
}

fn check_chain(s: usize, r: usize) -> Result<()> {
    if r == 0 || r > s {
        return Err(Error::arg(format!(
            "ratio chain needs 1 <= r <= s, got r={r}, s={s}"
        )));
    }
    Ok(())
}

/// `C(r,q) / C(s,q)` for `q = 1..=r`.
pub fn gamma_ratio_chain(s: usize, r: usize) -> Result<Vec<f64>> {
    check_chain(s, r)?;
    let mut out = Vec::with_capacity(r);
    let mut ratio = 1.0;
    for q in 1..=r {
        ratio *= (r - q + 1) as f64 / (s - q + 1) as f64;
        out.push(ratio);
    }
    Ok(out)
}

/// Largest `s` whose ratio chain is represented exactly in [`gamma_ratio_chain_exact`].
pub const EXACT_CHAIN_LIMIT: usize = 60;

/// The chain as exact fractions `(C(r,q), C(s,q))`.
pub fn gamma_ratio_chain_exact(s: usize, r: usize) -> Result<Vec<(u128, u128)>> {
    check_chain(s, r)?;
    if s > EXACT_CHAIN_LIMIT {
        return Err(Error::SizeLimit {
            n: s,
            limit: EXACT_CHAIN_LIMIT,
        });
    }
    Ok((1..=r)
        .map(|q| (binomial_u128(r, q), binomial_u128(s, q)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{FnGame, TableGame, TermGame};

    fn majority() -> FnGame<impl Fn(&Coalition) -> f64 + Sync> {
        FnGame::new(3, |c: &Coalition| if c.len() >= 2 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn shapley_examples() {
        let add = TermGame::additive(&[1.0, 2.0, 3.0]).unwrap();
        let phi = shapley_exact(&add).unwrap();
        for (v, w) in phi.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - w).abs() < 1e-12);
        }
        let sq = FnGame::new(3, |c: &Coalition| (c.len() * c.len()) as f64).unwrap();
        let phi = shapley_exact(&sq).unwrap();
        assert!(phi.values.iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert_eq!(phi.kind, AttributionKind::Shapley);
    }

    /// Average marginal contribution over all orderings of the players.
    fn permutation_oracle(game: &TableGame) -> Vec<f64> {
        let n = game.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut totals = vec![0.0; n];
        let mut count = 0usize;
        loop {
            let mut mask = 0u32;
            for &p in &perm {
                let before = game.value(mask);
                mask |= 1 << p;
                totals[p] += game.value(mask) - before;
            }
            count += 1;
            // next lexicographic permutation
            let Some(k) = (0..n - 1).rev().find(|&k| perm[k] < perm[k + 1]) else {
                break;
            };
            let l = (k + 1..n).rev().find(|&l| perm[k] < perm[l]).unwrap();
            perm.swap(k, l);
            perm[k + 1..].reverse();
        }
        totals.into_iter().map(|t| t / count as f64).collect()
    }

    #[test]
    fn shapley_matches_permutation_average() {
        let g = TableGame::random(8, 77).unwrap();
        let phi = shapley_exact(&g).unwrap();
        for (a, b) in phi.values.iter().zip(permutation_oracle(&g)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn banzhaf_examples() {
        let card = FnGame::new(2, |c: &Coalition| c.len() as f64).unwrap();
        assert_eq!(banzhaf_exact(&card).unwrap().values, vec![1.0, 1.0]);
        let add = TermGame::additive(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(banzhaf_exact(&add).unwrap().values, vec![1.0, 2.0, 3.0]);

        let g = TableGame::random(8, 5).unwrap();
        let psi = banzhaf_exact(&g).unwrap();
        for i in 0..8 {
            let mut direct = 0.0;
            for s in 0u32..256 {
                if s & (1 << i) == 0 {
                    direct += g.value(s | (1 << i)) - g.value(s);
                }
            }
            direct /= 128.0;
            assert!((psi.values[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_examples() {
        let and = TermGame::and_gate(4, 0, 1).unwrap();
        assert!((interaction_exact(&and, 0, 1).unwrap().value - 1.0).abs() < 1e-12);
        assert!((banzhaf_interaction_exact(&and, 0, 1).unwrap().value - 1.0).abs() < 1e-12);
        let add = TermGame::additive(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(interaction_exact(&add, 1, 3).unwrap().value, 0.0);
        assert_eq!(banzhaf_interaction_exact(&add, 1, 3).unwrap().value, 0.0);
        assert_eq!(interaction_exact(&majority(), 0, 1).unwrap().value, 0.0);
        assert_eq!(
            banzhaf_interaction_exact(&majority(), 0, 1).unwrap().value,
            0.0
        );
        assert!(matches!(
            interaction_exact(&and, 2, 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn majority_orders() {
        let g = majority();
        assert_eq!(multi_order_interaction_exact(&g, 0, 1, 0).unwrap(), 1.0);
        assert_eq!(multi_order_interaction_exact(&g, 0, 1, 1).unwrap(), -1.0);
        assert!(multi_order_interaction_exact(&g, 0, 1, 2).is_err());
        let e = ExactGame::new(&g).unwrap();
        let sum: f64 = e.per_order(0, 1).unwrap().iter().sum::<f64>() / 2.0;
        assert_eq!(sum, e.interaction(0, 1, Weighting::Shapley).unwrap().value);
    }

    #[test]
    fn pattern_reward_examples() {
        let and = TermGame::and_gate(4, 0, 1).unwrap();
        let empty = Coalition::empty(4);
        assert_eq!(pattern_reward(&and, 0, 1, &empty).unwrap(), 1.0);
        let t = Coalition::from_indices(4, &[2]).unwrap();
        assert_eq!(pattern_reward(&and, 0, 1, &t).unwrap(), 0.0);
        let bad = Coalition::from_indices(4, &[0, 2]).unwrap();
        assert!(matches!(
            pattern_reward(&and, 0, 1, &bad),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn recursion_matches_mobius_inversion() {
        let g = TableGame::random(7, 3).unwrap();
        let e = ExactGame::new(&g).unwrap();
        let (others, rewards) = e.pattern_rewards(2, 5).unwrap();
        for t in 0..rewards.len() {
            // inclusion-exclusion over subsets of T
            let mut mobius = 0.0;
            let mut sub = t;
            loop {
                let full = ExactGame::expand(&others, sub);
                let sign = if (t.count_ones() - sub.count_ones()) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                mobius += sign * e.delta(full, 2, 5);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & t;
            }
            assert!((rewards[t] - mobius).abs() < 1e-10);
        }
    }

    #[test]
    fn and_gate_spectrum() {
        let and = TermGame::and_gate(4, 0, 1).unwrap();
        let sp = order_decomposition(&and, 0, 1).unwrap();
        assert_eq!(sp.j_components, vec![1.0, 0.0, 0.0]);
        assert_eq!(sp.per_order_interaction, vec![1.0, 1.0, 1.0]);
        let add = TermGame::additive(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let sp = order_decomposition(&add, 0, 1).unwrap();
        assert!(sp.j_components.iter().all(|&j| j == 0.0));
        assert!(sp.gamma.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn random_spectrum_identity_and_second_route() {
        let g = TableGame::random(8, 21).unwrap();
        let e = ExactGame::new(&g).unwrap();
        let a = e.order_decomposition(3, 6).unwrap();
        let b = e.order_components(3, 6).unwrap();
        for (x, y) in a.j_components.iter().zip(&b.j_components) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn dropout_interaction_examples() {
        let g = TableGame::random(7, 8).unwrap();
        let e = ExactGame::new(&g).unwrap();
        for s in 0..=5 {
            let direct = e.multi_order(0, 4, s).unwrap();
            assert!((e.dropout_interaction(0, 4, s, s).unwrap() - direct).abs() < 1e-9);
            let j0 = e.order_decomposition(0, 4).unwrap().j_components[0];
            assert!((e.dropout_interaction(0, 4, s, 0).unwrap() - j0).abs() < 1e-9);
        }
        let and = TermGame::and_gate(4, 0, 1).unwrap();
        assert_eq!(dropout_interaction_exact(&and, 0, 1, 2, 1).unwrap(), 1.0);
        assert!(matches!(
            dropout_interaction_exact(&and, 0, 1, 1, 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn ratio_chain_examples() {
        let c = gamma_ratio_chain(4, 2).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!(gamma_ratio_chain(7, 7).unwrap().iter().all(|&v| v == 1.0));
        let c = gamma_ratio_chain(10, 3).unwrap();
        assert!(c.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(gamma_ratio_chain(3, 4).is_err());
        assert_eq!(gamma_ratio_chain_exact(4, 2).unwrap(), vec![(2, 4), (1, 6)]);
    }

    #[test]
    fn size_limits() {
        let big = FnGame::new(25, |c: &Coalition| c.len() as f64).unwrap();
        assert!(matches!(shapley_exact(&big), Err(Error::SizeLimit { .. })));
        let mid = FnGame::new(17, |c: &Coalition| c.len() as f64).unwrap();
        assert!(matches!(
            order_decomposition(&mid, 0, 1),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn shapley_weights_sum_to_one_per_size_class() {
        for m in 0..24 {
            let w = shapley_weights(m);
            let total: f64 = (0..=m).map(|s| binomial(m, s) * w[s]).sum();
            assert!((total - 1.0).abs() < 1e-12, "m={m}");
        }
    }
}
