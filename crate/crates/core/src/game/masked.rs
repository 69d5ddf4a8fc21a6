use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_universe, finite, BaselineKind, Coalition, Game, PlayerSet};
use crate::error::{Error, Result};
use crate::nn::{ForwardOptions, Head, Matrix, Network, ScoreKind};

/// Rows per forward pass in batched evaluation.
const CHUNK: usize = 256;

/// Which scalar of the network output is the game score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreSelector {
    TrueClassLogit(usize),
    TrueClassProbability(usize),
    /// The single output of a logistic head.
    ScalarOutput,
    /// Per-sample loss against the given label.
    LossValue(usize),
}

impl ScoreSelector {
    /// The class logit for plain networks, the class probability for
    /// batch-normalized ones, the raw scalar for logistic heads.
    pub fn default_for(net: &Network, label: usize) -> Self {
        match net.default_score() {
            ScoreKind::Scalar => ScoreSelector::ScalarOutput,
            ScoreKind::Probability => ScoreSelector::TrueClassProbability(label),
            ScoreKind::Logit => ScoreSelector::TrueClassLogit(label),
            ScoreKind::Loss => ScoreSelector::LossValue(label),
        }
    }

    pub fn from_kind(kind: ScoreKind, label: usize) -> Self {
        match kind {
            ScoreKind::Logit => ScoreSelector::TrueClassLogit(label),
            ScoreKind::Probability => ScoreSelector::TrueClassProbability(label),
            ScoreKind::Scalar => ScoreSelector::ScalarOutput,
            ScoreKind::Loss => ScoreSelector::LossValue(label),
        }
    }

    fn kind_and_label(self) -> (ScoreKind, usize) {
        match self {
            ScoreSelector::TrueClassLogit(c) => (ScoreKind::Logit, c),
            ScoreSelector::TrueClassProbability(c) => (ScoreKind::Probability, c),
            ScoreSelector::ScalarOutput => (ScoreKind::Scalar, 0),
            ScoreSelector::LossValue(c) => (ScoreKind::Loss, c),
        }
    }
}

/// A frozen network plus one sample, viewed as a game whose players are
/// groups of variables entering layer `site`. Absent players take their
/// baseline values; everything else is left untouched.
#[derive(Clone, Debug)]
pub struct MaskedModelGame<'a> {
    net: &'a Network,
    site: usize,
    values: Vec<f64>,
    baseline: Vec<f64>,
    baseline_kind: BaselineKind,
    groups: Vec<Vec<usize>>,
    players: PlayerSet,
    selector: ScoreSelector,
}

impl<'a> MaskedModelGame<'a> {
    /// Players are the individual units entering layer `site`, with given
    /// activation values and a zero baseline.
    pub fn at_site(
        net: &'a Network,
        activation: &[f64],
        site: usize,
        selector: ScoreSelector,
    ) -> Result<Self> {
        if site >= net.layers().len() {
            return Err(Error::arg(format!(
                "site {site} outside the {}-layer network",
                net.layers().len()
            )));
        }
        let width = net.width_at(site);
        if activation.len() != width {
            return Err(Error::Shape(format!(
                "site {site} has width {width}, got {} values",
                activation.len()
            )));
        }
        let (kind, label) = selector.kind_and_label();
        if kind == ScoreKind::Scalar && net.head() != Head::Logistic {
            return Err(Error::arg("scalar output selected on a multi-class head"));
        }
        let classes = match net.head() {
            Head::Logistic => 2,
            Head::SoftmaxCrossEntropy => net.output_dim(),
        };
        if label >= classes {
            return Err(Error::arg(format!(
                "label {label} outside {classes} classes"
            )));
        }
        Ok(Self {
            net,
            site,
            values: activation.to_vec(),
            baseline: vec![0.0; width],
            baseline_kind: BaselineKind::ZeroActivation,
            groups: (0..width).map(|u| vec![u]).collect(),
            players: PlayerSet::new(width)?,
            selector,
        })
    }

    /// Runs the layers before `site` in eval mode on `input` and uses the
    /// resulting activations as players.
    pub fn from_input(
        net: &'a Network,
        input: &[f64],
        site: usize,
        selector: ScoreSelector,
    ) -> Result<Self> {
        if site >= net.layers().len() {
            return Err(Error::arg(format!("site {site} outside the network")));
        }
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        let trace = net.forward_range(&x, 0, site, ForwardOptions::eval())?;
        Self::at_site(net, trace.output().row(0), site, selector)
    }

    /// Replaces the per-unit players by groups of units (for example image
    /// grid cells). Units outside every group are always present.
    pub fn with_groups(mut self, groups: Vec<Vec<usize>>) -> Result<Self> {
        let width = self.values.len();
        let mut seen = vec![false; width];
        for g in &groups {
            for &u in g {
                if u >= width {
                    return Err(Error::Index { index: u, n: width });
                }
                if std::mem::replace(&mut seen[u], true) {
                    return Err(Error::Partition(format!("unit {u} belongs to two players")));
                }
            }
        }
        self.players = PlayerSet::new(groups.len())?;
        self.groups = groups;
        Ok(self)
    }

    /// Mean-input baseline, typically the dataset mean.
    pub fn with_mean_baseline(self, mean: Vec<f64>) -> Result<Self> {
        self.set_baseline(mean, BaselineKind::MeanInput)
    }

    pub fn with_custom_baseline(self, values: Vec<f64>) -> Result<Self> {
        let kind = BaselineKind::Custom(values.clone());
        self.set_baseline(values, kind)
    }

    fn set_baseline(mut self, values: Vec<f64>, kind: BaselineKind) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "baseline has {} values for {} variables",
                values.len(),
                self.values.len()
            )));
        }
        self.baseline = values;
        self.baseline_kind = kind;
        Ok(self)
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn selector(&self) -> ScoreSelector {
        self.selector
    }

    /// Site values with the variables of absent players replaced.
    pub fn masked_values(&self, coalition: &Coalition) -> Vec<f64> {
        let mut row = self.values.clone();
        for (p, g) in self.groups.iter().enumerate() {
            if !coalition.contains(p) {
                for &u in g {
                    row[u] = self.baseline[u];
                }
            }
        }
        row
    }

    fn run(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        let width = self.values.len();
        let mut data = Vec::with_capacity(coalitions.len() * width);
        for c in coalitions {
            data.extend(self.masked_values(c));
        }
        let batch = Matrix::from_vec(coalitions.len(), width, data)?;
        let end = self.net.layers().len();
        let trace = self
            .net
            .forward_range(&batch, self.site, end, ForwardOptions::eval())?;
        let (kind, label) = self.selector.kind_and_label();
        let labels = vec![label; coalitions.len()];
        self.net.scores(trace.output(), &labels, kind)
    }
}

impl Game for MaskedModelGame<'_> {
    fn players(&self) -> &PlayerSet {
        &self.players
    }

    fn evaluate(&self, coalition: &Coalition) -> Result<f64> {
        check_universe(self, coalition)?;
        finite(self.run(std::slice::from_ref(coalition))?[0], coalition)
    }

    fn evaluate_many(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        for c in coalitions {
            check_universe(self, c)?;
        }
        let chunks: Vec<Vec<f64>> = coalitions
            .par_chunks(CHUNK)
            .map(|chunk| self.run(chunk))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = chunks.into_iter().flatten().collect();
        for (v, c) in values.iter().zip(coalitions) {
            finite(*v, c)?;
        }
        Ok(values)
    }

    fn baseline_kind(&self) -> BaselineKind {
        self.baseline_kind.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::evaluate;
    use crate::nn::MlpConfig;

    fn net() -> Network {
        Network::mlp(
            &MlpConfig {
                input_dim: 5,
                hidden: vec![8, 6],
                outputs: 3,
                site_hidden: 0,
                dropout_rate: 0.5,
                batchnorm: false,
                head: Head::SoftmaxCrossEntropy,
            },
            4,
        )
        .unwrap()
    }

    const X: [f64; 5] = [0.2, -0.7, 1.3, 0.05, -0.4];

    #[test]
    fn full_coalition_matches_forward_bit_exactly() {
        let net = net();
        let out = net.predict(&Matrix::row_vector(&X)).unwrap();
        let site = 2;
        let game =
            MaskedModelGame::from_input(&net, &X, site, ScoreSelector::TrueClassLogit(1)).unwrap();
        let full = game.players().full();
        assert_eq!(
            evaluate(&game, &full).unwrap().to_bits(),
            out.get(0, 1).to_bits()
        );

        let input_game =
            MaskedModelGame::from_input(&net, &X, 0, ScoreSelector::TrueClassLogit(2)).unwrap();
        let full = input_game.players().full();
        assert_eq!(
            input_game.evaluate(&full).unwrap().to_bits(),
            out.get(0, 2).to_bits()
        );
    }

    #[test]
    fn absent_players_take_baseline() {
        let net = net();
        let game = MaskedModelGame::from_input(&net, &X, 0, ScoreSelector::TrueClassLogit(0))
            .unwrap()
            .with_custom_baseline(vec![9.0; 5])
            .unwrap();
        let c = Coalition::from_indices(5, &[1, 3]).unwrap();
        assert_eq!(game.masked_values(&c), vec![9.0, -0.7, 9.0, 0.05, 9.0]);
        let expected = net
            .predict(&Matrix::row_vector(&[9.0, -0.7, 9.0, 0.05, 9.0]))
            .unwrap()
            .get(0, 0);
        assert_eq!(game.evaluate(&c).unwrap(), expected);
    }

    #[test]
    fn batched_and_single_evaluation_agree() {
        let net = net();
        let game = MaskedModelGame::from_input(&net, &X, 2, ScoreSelector::TrueClassProbability(2))
            .unwrap();
        let cs: Vec<Coalition> = (0..64u64)
            .map(|m| Coalition::from_mask(8, m * 3 % 256).unwrap())
            .collect();
        let many = game.evaluate_many(&cs).unwrap();
        for (c, v) in cs.iter().zip(many) {
            assert_eq!(game.evaluate(c).unwrap().to_bits(), v.to_bits());
            assert_eq!(game.evaluate(c).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn grouped_players() {
        let net = net();
        let game = MaskedModelGame::from_input(&net, &X, 0, ScoreSelector::LossValue(1))
            .unwrap()
            .with_groups(vec![vec![0, 1], vec![2, 3, 4]])
            .unwrap();
        assert_eq!(game.n(), 2);
        let c = Coalition::from_indices(2, &[1]).unwrap();
        assert_eq!(game.masked_values(&c), vec![0.0, 0.0, 1.3, 0.05, -0.4]);
        assert!(
            MaskedModelGame::from_input(&net, &X, 0, ScoreSelector::LossValue(1))
                .unwrap()
                .with_groups(vec![vec![0, 1], vec![1]])
                .is_err()
        );
    }

    #[test]
    fn scalar_selector_needs_logistic_head() {
        let net = net();
        assert!(MaskedModelGame::from_input(&net, &X, 0, ScoreSelector::ScalarOutput).is_err());
        assert!(
            MaskedModelGame::from_input(&net, &X, 0, ScoreSelector::TrueClassLogit(3)).is_err()
        );
    }

    #[test]
    fn wrong_universe_is_an_index_error() {
        let net = net();
        let game =
            MaskedModelGame::from_input(&net, &X, 2, ScoreSelector::TrueClassLogit(0)).unwrap();
        assert!(matches!(
            evaluate(&game, &Coalition::empty(3)),
            Err(Error::Index { .. })
        ));
    }
}
