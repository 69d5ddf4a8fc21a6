use super::{Coalition, Game, PlayerSet};
use crate::error::{Error, Result};

/// `f(S) = g(S) + h(S)`
pub struct SumGame<A, B> {
    a: A,
    b: B,
}

impl<A: Game, B: Game> SumGame<A, B> {
    pub fn new(a: A, b: B) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::arg("summed games must share a player set size"));
        }
        Ok(Self { a, b })
    }
}

impl<A: Game, B: Game> Game for SumGame<A, B> {
    fn players(&self) -> &PlayerSet {
        self.a.players()
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        Ok(self.a.evaluate(coalition)? + self.b.evaluate(coalition)?)
    }
}

/// `f(S) = c · g(S)`
pub struct ScaledGame<G> {
    inner: G,
    scale: f64,
}

impl<G: Game> ScaledGame<G> {
    pub fn new(inner: G, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl<G: Game> Game for ScaledGame<G> {
    fn players(&self) -> &PlayerSet {
        self.inner.players()
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        Ok(self.scale * self.inner.evaluate(coalition)?)
    }

    fn evaluate_many(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        Ok(self
            .inner
            .evaluate_many(coalitions)?
            .into_iter()
            .map(|v| self.scale * v)
            .collect())
    }
}

/// The game on `N \ {k}` in which player `k` is permanently absent.
/// Remaining players keep their relative order.
pub struct Subgame<G> {
    inner: G,
    removed: usize,
    players: PlayerSet,
}

impl<G: Game> Subgame<G> {
    pub fn new(inner: G, removed: usize) -> Result<Self> {
        inner.players().check(removed)?;
        let players = PlayerSet::new(inner.n() - 1)?;
        Ok(Self {
            inner,
            removed,
            players,
        })
    }

    /// Index in this game of an original player other than the removed one.
    pub fn local_index(&self, original: usize) -> Option<usize> {
        match original.cmp(&self.removed) {
            std::cmp::Ordering::Less => Some(original),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(original - 1),
        }
    }

    fn lift(&self, coalition: &Coalition) -> Result<Coalition> {
        let mut out = Coalition::empty(self.inner.n());
        for p in coalition.iter() {
            out.insert(if p < self.removed { p } else { p + 1 })?;
        }
        Ok(out)
    }
}

impl<G: Game> Game for Subgame<G> {
    fn players(&self) -> &PlayerSet {
        &self.players
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        super::check_universe(self, coalition)?;
        self.inner.evaluate(&self.lift(coalition)?)
    }
}

/// The game on `N' = N \ {i, j} ∪ {S_ij}` where `i` and `j` act as a single
/// player that is always present or absent together. The merged player is
/// the last index, `n - 2`; the others keep their relative order.
pub struct MergedPairGame<G> {
    inner: G,
    pair: (usize, usize),
    others: Vec<usize>,
    players: PlayerSet,
}

impl<G: Game> MergedPairGame<G> {
    pub fn new(inner: G, i: usize, j: usize) -> Result<Self> {
        inner.players().check(i)?;
        inner.players().check(j)?;
        if i == j {
            return Err(Error::arg("merged pair needs two distinct players"));
        }
        let others: Vec<usize> = (0..inner.n()).filter(|&p| p != i && p != j).collect();
        let players = PlayerSet::new(inner.n() - 1)?;
        Ok(Self {
            inner,
            pair: (i, j),
            others,
            players,
        })
    }

    pub fn merged_index(&self) -> usize {
        self.others.len()
    }
}

impl<G: Game> Game for MergedPairGame<G> {
    fn players(&self) -> &PlayerSet {
        &self.players
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        super::check_universe(self, coalition)?;
        let mut lifted = Coalition::empty(self.inner.n());
        for p in coalition.iter() {
            if p == self.others.len() {
                lifted.insert(self.pair.0)?;
                lifted.insert(self.pair.1)?;
            } else {
                lifted.insert(self.others[p])?;
            }
        }
        self.inner.evaluate(&lifted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TermGame;

    #[test]
    fn subgame_hides_removed_player() {
        let g = TermGame::additive(&[1.0, 10.0, 100.0]).unwrap();
        let sub = Subgame::new(&g, 1).unwrap();
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.evaluate(&Coalition::full(2)).unwrap(), 101.0);
        assert_eq!(sub.local_index(2), Some(1));
        assert_eq!(sub.local_index(1), None);
    }

    #[test]
    fn merged_pair_moves_together() {
        let g = TermGame::and_gate(4, 0, 2).unwrap();
        let merged = MergedPairGame::new(&g, 0, 2).unwrap();
        assert_eq!(merged.n(), 3);
        let m = merged.merged_index();
        assert_eq!(m, 2);
        assert_eq!(
            merged
                .evaluate(&Coalition::from_indices(3, &[m]).unwrap())
                .unwrap(),
            1.0
        );
        assert_eq!(
            merged
                .evaluate(&Coalition::from_indices(3, &[0, 1]).unwrap())
                .unwrap(),
            0.0
        );
    }
}
