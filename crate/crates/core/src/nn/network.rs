use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Aux, BatchNorm, Dense, Dropout, Layer, Mode};
use super::tensor::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    /// Multi-class logits trained with softmax cross-entropy.
    SoftmaxCrossEntropy,
    /// One scalar logit trained with binary cross-entropy; labels are 0/1.
    Logistic,
}

/// Which scalar a row of network output is reduced to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// Pre-softmax output of the row's class (the scalar itself for a
    /// logistic head).
    Logit,
    /// Post-softmax probability of the row's class (sigmoid for a logistic
    /// head).
    Probability,
    /// The raw scalar output; logistic heads only.
    Scalar,
    /// Per-sample loss value.
    Loss,
}

/// Dropout masks of one forward pass, indexed by layer.
#[derive(Clone, Debug, Default)]
pub struct DropoutMasks(pub(crate) Vec<Option<Matrix>>);

impl DropoutMasks {
    pub fn get(&self, layer: usize) -> Option<&Matrix> {
        self.0.get(layer).and_then(Option::as_ref)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ForwardOptions<'a> {
    pub mode: Mode,
    pub mask_seed: u64,
    /// Masks to replay instead of sampling fresh ones.
    pub masks: Option<&'a DropoutMasks>,
}

impl ForwardOptions<'_> {
    pub fn eval() -> Self {
        Self {
            mode: Mode::Eval,
            mask_seed: 0,
            masks: None,
        }
    }

    pub fn train(mask_seed: u64) -> Self {
        Self {
            mode: Mode::Train,
            mask_seed,
            masks: None,
        }
    }
}

/// Record of a forward pass over layers `from..to`.
#[derive(Clone, Debug)]
pub struct Trace {
    from: usize,
    inputs: Vec<Matrix>,
    aux: Vec<Aux>,
    output: Matrix,
}

impl Trace {
    pub fn from_layer(&self) -> usize {
        self.from
    }

    pub fn to_layer(&self) -> usize {
        self.from + self.inputs.len()
    }

    /// Input of layer `layer` (an absolute index inside the traced range).
    pub fn activation(&self, layer: usize) -> &Matrix {
        if layer == self.to_layer() {
            return &self.output;
        }
        &self.inputs[layer - self.from]
    }

    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn masks(&self) -> DropoutMasks {
        let mut masks = vec![None; self.to_layer()];
        for (k, aux) in self.aux.iter().enumerate() {
            if let Aux::Mask(m) = aux {
                masks[self.from + k] = Some(m.clone());
            }
        }
        DropoutMasks(masks)
    }
}

/// Parameter gradients, one flat tensor per parameter in
/// [`Network::parameters`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.tensors.iter_mut().flatten().for_each(|x| *x *= c);
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// A feedforward network: a validated chain of layers plus a loss head.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
    head: Head,
    dims: Vec<usize>,
    slots: Vec<Option<usize>>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>, head: Head) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Shape("input dimension must be positive".into()));
        }
        let mut dims = vec![input_dim];
        let mut slots = Vec::with_capacity(layers.len());
        let mut next_slot = 0;
        for (k, layer) in layers.iter().enumerate() {
            let d = *dims.last().unwrap();
            let out = match layer {
                Layer::Dense(dense) => {
                    if dense.in_dim != d {
                        return Err(Error::Shape(format!(
                            "layer {k}: dense expects {} inputs but receives {d}",
                            dense.in_dim
                        )));
                    }
                    dense.out_dim
                }
                Layer::BatchNorm(bn) => {
                    if bn.dim != d {
                        return Err(Error::Shape(format!(
                            "layer {k}: batch norm over {} features but receives {d}",
                            bn.dim
                        )));
                    }
                    d
                }
                Layer::Relu | Layer::Dropout(_) | Layer::Square => d,
            };
            slots.push(match layer {
                Layer::Dense(_) | Layer::BatchNorm(_) => {
                    next_slot += 2;
                    Some(next_slot - 2)
                }
                _ => None,
            });
            dims.push(out);
        }
        let out = *dims.last().unwrap();
        match head {
            Head::SoftmaxCrossEntropy if out < 2 => {
                return Err(Error::Shape(
                    "softmax head needs at least two outputs".into(),
                ))
            }
            Head::Logistic if out != 1 => {
                return Err(Error::Shape(
                    "logistic head needs exactly one output".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            input_dim,
            layers,
            head,
            dims,
            slots,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Width of the activation vector entering layer `layer`.
    pub fn width_at(&self, layer: usize) -> usize {
        self.dims[layer]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn has_batchnorm(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::BatchNorm(_)))
    }

    /// Score used for games by default: class probability for batch-normalized
    /// networks, class logit otherwise; the raw scalar for logistic heads.
    pub fn default_score(&self) -> ScoreKind {
        match self.head {
            Head::Logistic => ScoreKind::Scalar,
            Head::SoftmaxCrossEntropy if self.has_batchnorm() => ScoreKind::Probability,
            Head::SoftmaxCrossEntropy => ScoreKind::Logit,
        }
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weight.as_slice());
                    out.push(d.bias.as_slice());
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_slice());
                    out.push(b.beta.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weight.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_mut_slice());
                    out.push(b.beta.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            tensors: self
                .parameters()
                .iter()
                .map(|p| vec![0.0; p.len()])
                .collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn forward(&self, x: &Matrix, opts: ForwardOptions<'_>) -> Result<Trace> {
        self.forward_range(x, 0, self.layers.len(), opts)
    }

    /// Runs layers `from..to` on `x`, which must be the activation entering
    /// layer `from`.
    pub fn forward_range(
        &self,
        x: &Matrix,
        from: usize,
        to: usize,
        opts: ForwardOptions<'_>,
    ) -> Result<Trace> {
        if from > to || to > self.layers.len() {
            return Err(Error::arg(format!(
                "layer range {from}..{to} outside 0..{}",
                self.layers.len()
            )));
        }
        if x.cols() != self.dims[from] {
            return Err(Error::Shape(format!(
                "layer {from} expects width {}, got {}",
                self.dims[from],
                x.cols()
            )));
        }
        let mut inputs = Vec::with_capacity(to - from);
        let mut aux = Vec::with_capacity(to - from);
        let mut cur = x.clone();
        for k in from..to {
            let (next, a) = match &self.layers[k] {
                Layer::Dense(d) => (d.forward(&cur), Aux::None),
                Layer::Relu => {
                    let mut y = cur.clone();
                    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                    (y, Aux::None)
                }
                Layer::Square => {
                    let mut y = cur.clone();
                    y.data_mut().iter_mut().for_each(|v| *v *= *v);
                    (y, Aux::None)
                }
                Layer::Dropout(dr) => {
                    let replay = opts.masks.and_then(|m| m.get(k));
                    let mask = match (opts.mode, replay) {
                        (Mode::Eval, _) => None,
                        (_, Some(m)) => {
                            if m.rows() != cur.rows() || m.cols() != cur.cols() {
                                return Err(Error::Shape(format!(
                                    "replayed dropout mask for layer {k} is {}x{}, activation is {}x{}",
                                    m.rows(),
                                    m.cols(),
                                    cur.rows(),
                                    cur.cols()
                                )));
                            }
                            Some(m.clone())
                        }
                        (Mode::Train, None) => {
                            let mut rng = ChaCha8Rng::seed_from_u64(opts.mask_seed);
                            rng.set_stream(k as u64);
                            Some(dr.sample_mask(cur.rows(), cur.cols(), &mut rng))
                        }
                        (Mode::InteractionTrack, None) => None,
                    };
                    match mask {
                        Some(m) => {
                            let mut y = cur.clone();
                            y.hadamard_assign(&m);
                            (y, Aux::Mask(m))
                        }
                        None => (cur.clone(), Aux::None),
                    }
                }
                Layer::BatchNorm(bn) => bn.forward(&cur, opts.mode == Mode::Train),
            };
            inputs.push(std::mem::replace(&mut cur, next));
            aux.push(a);
        }
        Ok(Trace {
            from,
            inputs,
            aux,
            output: cur,
        })
    }

    /// Eval-mode output for a batch.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x, ForwardOptions::eval())?.output)
    }

    /// Backpropagates `grad_out` (gradient w.r.t. the trace output) through
    /// the traced layers, accumulating into `grads`. Returns the gradient
    /// w.r.t. the trace input.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_out: Matrix,
        grads: &mut Gradients,
    ) -> Result<Matrix> {
        self.backward_between(trace, trace.to_layer(), trace.from, grad_out, grads)
    }

    /// Backpropagates through layers `bottom..top` of a trace. `grad` is the
    /// gradient w.r.t. the activation entering layer `top` (the trace output
    /// when `top` is the end of the trace); the result is the gradient
    /// w.r.t. the activation entering layer `bottom`.
    pub fn backward_between(
        &self,
        trace: &Trace,
        top: usize,
        bottom: usize,
        grad: Matrix,
        grads: &mut Gradients,
    ) -> Result<Matrix> {
        if bottom > top || bottom < trace.from || top > trace.to_layer() {
            return Err(Error::arg(format!(
                "backward range {bottom}..{top} outside traced {}..{}",
                trace.from,
                trace.to_layer()
            )));
        }
        let expected = trace.activation(top);
        if grad.rows() != expected.rows() || grad.cols() != expected.cols() {
            return Err(Error::Shape(
                "gradient does not match traced activation".into(),
            ));
        }
        let mut g = grad;
        for k in (bottom..top).rev() {
            let local = k - trace.from;
            let x = &trace.inputs[local];
            g = match &self.layers[k] {
                Layer::Dense(d) => {
                    let slot = self.slots[k].unwrap();
                    let (dw, rest) = grads.tensors[slot..].split_at_mut(1);
                    d.backward(x, &g, &mut dw[0], &mut rest[0])
                }
                Layer::Relu => {
                    let mut dx = g;
                    for (d, v) in dx.data_mut().iter_mut().zip(x.data()) {
                        if *v <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    dx
                }
                Layer::Square => {
                    let mut dx = g;
                    for (d, v) in dx.data_mut().iter_mut().zip(x.data()) {
                        *d *= 2.0 * v;
                    }
                    dx
                }
                Layer::Dropout(_) => match &trace.aux[local] {
                    Aux::Mask(m) => {
                        let mut dx = g;
                        dx.hadamard_assign(m);
                        dx
                    }
                    _ => g,
                },
                Layer::BatchNorm(bn) => {
                    let slot = self.slots[k].unwrap();
                    let (dgamma, rest) = grads.tensors[slot..].split_at_mut(1);
                    bn.backward(&g, &trace.aux[local], &mut dgamma[0], &mut rest[0])
                }
            };
        }
        Ok(g)
    }

    /// Folds the batch statistics recorded in a train-mode trace into the
    /// running statistics. Traces from other modes carry none.
    pub fn commit_batch_stats(&mut self, trace: &Trace) {
        let rows = trace.output.rows();
        for (local, aux) in trace.aux.iter().enumerate() {
            if let Aux::Norm {
                batch_stats: Some((mean, var)),
                ..
            } = aux
            {
                if let Layer::BatchNorm(bn) = &mut self.layers[trace.from + local] {
                    bn.commit(mean, var, rows);
                }
            }
        }
    }

    /// FNV-1a over the bits of every batch-norm running statistic.
    pub fn running_stats_checksum(&self) -> u64 {
        let mut h = Fnv::default();
        for layer in &self.layers {
            if let Layer::BatchNorm(bn) = layer {
                bn.running_mean
                    .iter()
                    .chain(&bn.running_var)
                    .for_each(|v| h.push(*v));
            }
        }
        h.0
    }

    pub fn parameter_checksum(&self) -> u64 {
        let mut h = Fnv::default();
        self.parameters()
            .iter()
            .flat_map(|p| p.iter())
            .for_each(|v| h.push(*v));
        h.0
    }

    /// Mean head loss and its gradient w.r.t. the network output.
    pub fn head_loss(&self, output: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
        check_labels(self, output, labels)?;
        let rows = output.rows();
        let mut grad = Matrix::zeros(rows, output.cols());
        let mut total = 0.0;
        for r in 0..rows {
            let (loss, g) = sample_loss(self.head, output.row(r), labels[r]);
            total += loss;
            for (d, v) in grad.row_mut(r).iter_mut().zip(g) {
                *d = v / rows as f64;
            }
        }
        Ok((total / rows as f64, grad))
    }

    /// One score per row.
    pub fn scores(&self, output: &Matrix, labels: &[usize], kind: ScoreKind) -> Result<Vec<f64>> {
        check_labels(self, output, labels)?;
        (0..output.rows())
            .map(|r| score_row(self.head, output.row(r), labels[r], kind).map(|(s, _)| s))
            .collect()
    }

    /// Gradient of `Σ_r weights[r] · score_r` w.r.t. the output.
    pub fn score_gradient(
        &self,
        output: &Matrix,
        labels: &[usize],
        kind: ScoreKind,
        weights: &[f64],
    ) -> Result<Matrix> {
        check_labels(self, output, labels)?;
        let mut grad = Matrix::zeros(output.rows(), output.cols());
        for r in 0..output.rows() {
            let (_, g) = score_row(self.head, output.row(r), labels[r], kind)?;
            for (d, v) in grad.row_mut(r).iter_mut().zip(g) {
                *d = weights[r] * v;
            }
        }
        Ok(grad)
    }

    pub fn accuracy(&self, output: &Matrix, labels: &[usize]) -> f64 {
        let correct = output
            .iter_rows()
            .zip(labels)
            .filter(|(row, &y)| predicted_class(self.head, row) == y)
            .count();
        correct as f64 / labels.len().max(1) as f64
    }
}

pub(crate) fn predicted_class(head: Head, row: &[f64]) -> usize {
    match head {
        Head::Logistic => (row[0] > 0.0) as usize,
        Head::SoftmaxCrossEntropy => {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                })
                .0
        }
    }
}

fn check_labels(net: &Network, output: &Matrix, labels: &[usize]) -> Result<()> {
    if labels.len() != output.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            output.rows()
        )));
    }
    let classes = match net.head {
        Head::Logistic => 2,
        Head::SoftmaxCrossEntropy => output.cols(),
    };
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::arg(format!("label {bad} outside {classes} classes")));
    }
    Ok(())
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sample_loss(head: Head, row: &[f64], label: usize) -> (f64, Vec<f64>) {
    match head {
        Head::SoftmaxCrossEntropy => {
            let p = softmax(row);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            let mut g = p;
            g[label] -= 1.0;
            (lse - row[label], g)
        }
        Head::Logistic => {
            let z = row[0];
            let y = label as f64;
            (softplus(z) - y * z, vec![sigmoid(z) - y])
        }
    }
}

fn score_row(head: Head, row: &[f64], label: usize, kind: ScoreKind) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; row.len()];
    match (head, kind) {
        (_, ScoreKind::Loss) => Ok(sample_loss(head, row, label)),
        (Head::SoftmaxCrossEntropy, ScoreKind::Logit) => {
            g[label] = 1.0;
            Ok((row[label], g))
        }
        (Head::SoftmaxCrossEntropy, ScoreKind::Probability) => {
            let p = softmax(row);
            let pc = p[label];
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = pc * (f64::from(u8::from(k == label)) - p[k]);
            }
            Ok((pc, g))
        }
        (Head::SoftmaxCrossEntropy, ScoreKind::Scalar) => {
            Err(Error::arg("scalar score selected on a multi-class head"))
        }
        (Head::Logistic, ScoreKind::Logit | ScoreKind::Scalar) => {
            g[0] = 1.0;
            Ok((row[0], g))
        }
        (Head::Logistic, ScoreKind::Probability) => {
            let s = sigmoid(row[0]);
            g[0] = s * (1.0 - s);
            Ok((s, g))
        }
    }
}

#[derive(Clone, Copy)]
struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Fnv(0xcbf29ce484222325)
    }
}

impl Fnv {
    fn push(&mut self, v: f64) {
        for b in v.to_bits().to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
}

/// Layout of a multilayer perceptron built by [`Network::mlp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    /// The dropout layer follows the ReLU of this hidden layer. Its input is
    /// the activation site analyzed by the estimators and the interaction loss.
    pub site_hidden: usize,
    pub dropout_rate: f64,
    pub batchnorm: bool,
    pub head: Head,
}

impl MlpConfig {
    /// 784-256-128-10 classifier with the site after the first hidden layer.
    pub fn mnist() -> Self {
        Self {
            input_dim: 784,
            hidden: vec![256, 128],
            outputs: 10,
            site_hidden: 0,
            dropout_rate: 0.0,
            batchnorm: false,
            head: Head::SoftmaxCrossEntropy,
        }
    }

    /// Index of the dropout layer, whose input activations are the players.
    pub fn site_layer(&self) -> usize {
        let per_block = if self.batchnorm { 3 } else { 2 };
        per_block * (self.site_hidden + 1)
    }
}

impl Network {
    /// Dense → [BatchNorm] → ReLU blocks, a dropout layer after block
    /// `site_hidden` (rate 0 makes it the identity), then a dense output layer.
    pub fn mlp(config: &MlpConfig, seed: u64) -> Result<Self> {
        if config.site_hidden >= config.hidden.len() {
            return Err(Error::Config(format!(
                "site_hidden {} but only {} hidden layers",
                config.site_hidden,
                config.hidden.len()
            )));
        }
        if !(0.0..1.0).contains(&config.dropout_rate) {
            return Err(Error::Config("dropout rate must lie in [0, 1)".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut d = config.input_dim;
        for (k, &h) in config.hidden.iter().enumerate() {
            layers.push(Layer::Dense(Dense::he_uniform(d, h, &mut rng)));
            if config.batchnorm {
                layers.push(Layer::BatchNorm(BatchNorm::new(h)));
            }
            layers.push(Layer::Relu);
            if k == config.site_hidden {
                layers.push(Layer::Dropout(Dropout::new(config.dropout_rate)));
            }
            d = h;
        }
        layers.push(Layer::Dense(Dense::he_uniform(d, config.outputs, &mut rng)));
        Self::new(config.input_dim, layers, config.head)
    }
}
