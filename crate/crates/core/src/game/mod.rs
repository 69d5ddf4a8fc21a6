//! Players, coalitions, and the set-function abstraction consumed by every
//! estimator in the crate.

mod adapters;
mod coalition;
mod grid;
mod masked;
mod normalization;
mod synthetic;

pub use adapters::{MergedPairGame, ScaledGame, Subgame, SumGame};
pub use coalition::{Coalition, PlayerSet};
pub use grid::{grid_partition, GridPartition};
pub use masked::{MaskedModelGame, ScoreSelector};
pub use normalization::{
    compute_normalization, normalization_samples, NormSample, NormalizationMode, NormalizationTerm,
};
pub use synthetic::{FnGame, TableGame, Term, TermGame};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an absent player is simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BaselineKind {
    /// Absent players are set to zero (post-ReLU activations, abstract games).
    ZeroActivation,
    /// Absent input variables take the dataset mean.
    MeanInput,
    Custom(Vec<f64>),
}

/// A cooperative game `f: 2^N -> R`.
///
/// Implementations must be deterministic: the same coalition always yields
/// the same bits for as long as the game value is alive.
pub trait Game: Sync {
    fn players(&self) -> &PlayerSet;

    fn evaluate(&self, coalition: &Coalition) -> Result<f64>;

    /// Batched evaluation. Games backed by a network override this to run
    /// all coalitions through one forward pass.
    fn evaluate_many(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        coalitions.iter().map(|c| self.evaluate(c)).collect()
    }

    fn baseline_kind(&self) -> BaselineKind {
        BaselineKind::ZeroActivation
    }

    fn n(&self) -> usize {
        self.players().len()
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn players(&self) -> &PlayerSet {
        (**self).players()
    }
    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        (**self).evaluate(coalition)
    }
    fn evaluate_many(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        (**self).evaluate_many(coalitions)
    }
    fn baseline_kind(&self) -> BaselineKind {
        (**self).baseline_kind()
    }
}

impl<G: Game + ?Sized> Game for Box<G> {
    fn players(&self) -> &PlayerSet {
        (**self).players()
    }
    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        (**self).evaluate(coalition)
    }
    fn evaluate_many(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        (**self).evaluate_many(coalitions)
    }
    fn baseline_kind(&self) -> BaselineKind {
        (**self).baseline_kind()
    }
}

/// Checked evaluation: rejects coalitions from a different player set and
/// non-finite scores.
pub fn evaluate<G: Game + ?Sized>(game: &G, coalition: &Coalition) -> Result<f64> {
    check_universe(game, coalition)?;
    finite(game.evaluate(coalition)?, coalition)
}

pub(crate) fn check_universe<G: Game + ?Sized>(game: &G, coalition: &Coalition) -> Result<()> {
    let n = game.n();
    if coalition.universe() != n {
        return Err(Error::Index {
            index: coalition.universe().max(1) - 1,
            n,
        });
    }
    Ok(())
}

pub(crate) fn finite(value: f64, coalition: &Coalition) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric {
            value,
            coalition: coalition.to_string(),
        })
    }
}

/// `f(S ∪ {i, j}) - f(S ∪ {j}) - f(S ∪ {i}) + f(S)`
pub fn delta_f<G: Game + ?Sized>(game: &G, context: &Coalition, i: usize, j: usize) -> Result<f64> {
    let quad = quad_coalitions(context, i, j)?;
    let v = game.evaluate_many(&quad)?;
    for (value, c) in v.iter().zip(&quad) {
        finite(*value, c)?;
    }
    Ok(v[0] - v[1] - v[2] + v[3])
}

pub(crate) fn quad_coalitions(context: &Coalition, i: usize, j: usize) -> Result<[Coalition; 4]> {
    let with_i = context.with(i)?;
    let with_j = context.with(j)?;
    let with_both = with_i.with(j)?;
    Ok([with_both, with_j, with_i, context.clone()])
}
