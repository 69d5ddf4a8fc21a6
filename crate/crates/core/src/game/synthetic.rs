use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Coalition, Game, PlayerSet};
use crate::error::{Error, Result};

/// Largest player count for which a game may be stored as a dense table.
pub const TABLE_LIMIT: usize = 24;

/// One unanimity term: contributes `coefficient` whenever every member is
/// present. A single member is an additive term; an empty member list is a
/// constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub members: Coalition,
}

/// A game written as a sum of unanimity terms, `f(S) = Σ_T c_T [T ⊆ S]`.
#[derive(Clone, Debug)]
pub struct TermGame {
    players: PlayerSet,
    terms: Vec<Term>,
}

impl TermGame {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            players: PlayerSet::new(n)?,
            terms: Vec::new(),
        })
    }

    pub fn add_term(&mut self, coefficient: f64, members: &[usize]) -> Result<&mut Self> {
        let members = Coalition::from_indices(self.players.len(), members)?;
        self.terms.push(Term {
            coefficient,
            members,
        });
        Ok(self)
    }

    /// `f(S) = Σ_{i ∈ S} w_i`
    pub fn additive(weights: &[f64]) -> Result<Self> {
        let mut g = Self::new(weights.len())?;
        for (i, &w) in weights.iter().enumerate() {
            g.add_term(w, &[i])?;
        }
        Ok(g)
    }

    /// `f(S) = 1` iff `{i, j} ⊆ S`.
    pub fn and_gate(n: usize, i: usize, j: usize) -> Result<Self> {
        let mut g = Self::new(n)?;
        g.add_term(1.0, &[i, j])?;
        Ok(g)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Serializes to the line format accepted by [`FromStr`].
    pub fn to_text(&self) -> String {
        let mut out = format!("players {}\n", self.players.len());
        for t in &self.terms {
            let _ = write!(out, "term {:?}", t.coefficient);
            for i in t.members.iter() {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
        }
        out
    }
}

impl Game for TermGame {
    fn players(&self) -> &PlayerSet {
        &self.players
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        super::check_universe(self, coalition)?;
        Ok(self
            .terms
            .iter()
            .filter(|t| t.members.is_subset(coalition))
            .map(|t| t.coefficient)
            .sum())
    }
}

/// Parses the declarative game format:
///
/// ```text
/// # comment
/// players 4
/// term 1.5 0 1      # 1.5 when players 0 and 1 are both present
/// term -2 3         # additive term for player 3
/// term 0.25         # constant
/// ```
impl FromStr for TermGame {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut game: Option<TermGame> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let parse_err = |msg: String| Error::Parse { line, msg };
            match tokens.next() {
                Some("players") => {
                    if game.is_some() {
                        return Err(parse_err("duplicate players header".into()));
                    }
                    let n: usize = tokens
                        .next()
                        .ok_or_else(|| parse_err("missing player count".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad player count: {e}")))?;
                    if tokens.next().is_some() {
                        return Err(parse_err("trailing tokens after player count".into()));
                    }
                    game = Some(TermGame::new(n).map_err(|e| parse_err(e.to_string()))?);
                }
                Some("term") => {
                    let g = game
                        .as_mut()
                        .ok_or_else(|| parse_err("term before players header".into()))?;
                    let coef: f64 = tokens
                        .next()
                        .ok_or_else(|| parse_err("missing coefficient".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad coefficient: {e}")))?;
                    if !coef.is_finite() {
                        return Err(parse_err("coefficient must be finite".into()));
                    }
                    let members = tokens
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|e| parse_err(format!("bad player index {t:?}: {e}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    g.add_term(coef, &members)
                        .map_err(|e| parse_err(e.to_string()))?;
                }
                Some(other) => return Err(parse_err(format!("unknown directive {other:?}"))),
                None => unreachable!(),
            }
        }
        game.ok_or(Error::Parse {
            line: 0,
            msg: "missing players header".into(),
        })
    }
}

/// A game stored as an explicit value for every coalition, indexed by mask.
#[derive(Clone, Debug)]
pub struct TableGame {
    players: PlayerSet,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > TABLE_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: TABLE_LIMIT,
            });
        }
        if values.len() != 1 << n {
            return Err(Error::arg(format!(
                "table for {n} players needs {} values, got {}",
                1usize << n,
                values.len()
            )));
        }
        Ok(Self {
            players: PlayerSet::new(n)?,
            values,
        })
    }

    pub fn from_fn(n: usize, f: impl FnMut(u32) -> f64) -> Result<Self> {
        if n > TABLE_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: TABLE_LIMIT,
            });
        }
        Self::new(n, (0..1u32 << n).map(f).collect())
    }

    /// Independent standard-uniform values in `[-1, 1)` per coalition.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_fn(n, |_| rng.gen_range(-1.0..1.0))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }
}

impl Game for TableGame {
    fn players(&self) -> &PlayerSet {
        &self.players
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        super::check_universe(self, coalition)?;
        Ok(self.values[coalition.mask() as usize])
    }
}

/// A game backed by a closure.
pub struct FnGame<F> {
    players: PlayerSet,
    f: F,
}

impl<F> FnGame<F>
where
    F: Fn(&Coalition) -> f64 + Sync,
{
    pub fn new(n: usize, f: F) -> Result<Self> {
        Ok(Self {
            players: PlayerSet::new(n)?,
            f,
        })
    }
}

impl<F> Game for FnGame<F>
where
    F: Fn(&Coalition) -> f64 + Sync,
{
    fn players(&self) -> &PlayerSet {
        &self.players
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        super::check_universe(self, coalition)?;
        Ok((self.f)(coalition))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::evaluate;

    #[test]
    fn additive_game_sums_members() {
        let g = TermGame::additive(&[1.0, 2.0, 3.0]).unwrap();
        let s = Coalition::from_indices(3, &[0, 2]).unwrap();
        assert_eq!(evaluate(&g, &s).unwrap(), 4.0);
        assert_eq!(evaluate(&g, &Coalition::empty(3)).unwrap(), 0.0);
    }

    #[test]
    fn parses_and_round_trips() {
        let text = "# demo\nplayers 4\nterm 1.5 0 1\nterm -2 3 # additive\n\nterm 0.25\n";
        let g: TermGame = text.parse().unwrap();
        assert_eq!(g.terms().len(), 3);
        let full = Coalition::full(4);
        assert_eq!(g.evaluate(&full).unwrap(), 1.5 - 2.0 + 0.25);
        let again: TermGame = g.to_text().parse().unwrap();
        assert_eq!(again.evaluate(&full).unwrap(), g.evaluate(&full).unwrap());
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = "players 3\nterm 1 0 3\n".parse::<TermGame>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = "term 1 0\n".parse::<TermGame>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!("".parse::<TermGame>().is_err());
        assert!("players 2\nbogus\n".parse::<TermGame>().is_err());
    }

    #[test]
    fn wrong_universe_is_an_index_error() {
        let g = TermGame::additive(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            g.evaluate(&Coalition::full(3)),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn table_size_is_checked() {
        assert!(TableGame::new(3, vec![0.0; 7]).is_err());
        assert!(matches!(
            TableGame::from_fn(25, |_| 0.0),
            Err(Error::SizeLimit { .. })
        ));
    }
}
