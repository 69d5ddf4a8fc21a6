//! Result types shared by the exact and sampled estimators.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionKind {
    Shapley,
    Banzhaf,
}

/// Per-player attributions of one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub values: Vec<f64>,
    pub kind: AttributionKind,
    /// Free-form tag naming the game the values came from.
    pub game_id: String,
}

/// How contexts `S ⊆ N \ {i, j}` are weighted in a pairwise interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `|S|!(n-2-|S|)!/(n-1)!`: uniform over sizes, then uniform within a size.
    Shapley,
    /// `0.5^(n-2)`: every player joins independently with probability 1/2.
    Banzhaf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Method {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionEstimate {
    pub pair: (usize, usize),
    pub value: f64,
    /// Sample standard error of `value`; zero for exact values.
    pub stderr: f64,
    pub weighting: Weighting,
    pub method: Method,
}

/// A sampled scalar with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}
