use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;

/// How a forward pass treats dropout and batch normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Dropout samples masks; batch norm normalizes with batch statistics.
    Train,
    /// Dropout is the identity; batch norm uses running statistics.
    Eval,
    /// Side track for the interaction loss: batch norm uses running
    /// statistics and dropout replays masks supplied by the caller.
    /// Never produces statistics to commit.
    InteractionTrack,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    /// `in_dim x out_dim`, row-major.
    pub(crate) weight: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Dense {
    /// He-uniform weights, zero bias.
    pub fn he_uniform(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / in_dim as f64).sqrt();
        let weight = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn from_parts(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weight.len(), in_dim * out_dim);
        assert_eq!(bias.len(), out_dim);
        Self {
            in_dim,
            out_dim,
            weight,
            bias,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut weight = vec![0.0; dim * dim];
        for k in 0..dim {
            weight[k * dim + k] = 1.0;
        }
        Self::from_parts(dim, dim, weight, vec![0.0; dim])
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.out_dim);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let orow = out.row_mut(r);
            orow.copy_from_slice(&self.bias);
            for (k, &xk) in xr.iter().enumerate() {
                if xk == 0.0 {
                    continue;
                }
                let wk = &self.weight[k * self.out_dim..(k + 1) * self.out_dim];
                for (o, w) in orow.iter_mut().zip(wk) {
                    *o += xk * w;
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients into `dw`/`db` and returns `dL/dx`.
    pub(crate) fn backward(
        &self,
        x: &Matrix,
        dy: &Matrix,
        dw: &mut [f64],
        db: &mut [f64],
    ) -> Matrix {
        let mut dx = Matrix::zeros(x.rows(), self.in_dim);
        for r in 0..x.rows() {
            let dyr = dy.row(r);
            for (b, g) in db.iter_mut().zip(dyr) {
                *b += g;
            }
            let xr = x.row(r);
            for (k, &xk) in xr.iter().enumerate() {
                if xk == 0.0 {
                    continue;
                }
                let dwk = &mut dw[k * self.out_dim..(k + 1) * self.out_dim];
                for (w, g) in dwk.iter_mut().zip(dyr) {
                    *w += xk * g;
                }
            }
            let dxr = dx.row_mut(r);
            for (k, d) in dxr.iter_mut().enumerate() {
                let wk = &self.weight[k * self.out_dim..(k + 1) * self.out_dim];
                *d = wk.iter().zip(dyr).map(|(w, g)| w * g).sum();
            }
        }
        dx
    }
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at train time
/// so evaluation needs no rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Dropout {
    pub(crate) rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&rate),
            "dropout rate must lie in [0, 1)"
        );
        Self { rate }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Keep/drop decision per unit; `true` means the unit survives.
    pub fn sample_keep(&self, len: usize, rng: &mut impl Rng) -> Vec<bool> {
        (0..len).map(|_| rng.gen::<f64>() >= self.rate).collect()
    }

    /// Multiplicative mask: `0` for dropped units, `1 / keep` for survivors.
    pub(crate) fn sample_mask(&self, rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        let scale = 1.0 / (1.0 - self.rate);
        let mut m = Matrix::zeros(rows, cols);
        if self.rate == 0.0 {
            m.data_mut().fill(1.0);
            return m;
        }
        for v in m.data_mut() {
            *v = if rng.gen::<f64>() >= self.rate {
                scale
            } else {
                0.0
            };
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub(crate) dim: usize,
    pub(crate) gamma: Vec<f64>,
    pub(crate) beta: Vec<f64>,
    pub(crate) running_mean: Vec<f64>,
    pub(crate) running_var: Vec<f64>,
    pub(crate) momentum: f64,
    pub(crate) eps: f64,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn running_mean(&self) -> &[f64] {
        &self.running_mean
    }

    pub fn running_var(&self) -> &[f64] {
        &self.running_var
    }
}

/// Cached values a layer needs for its backward pass.
#[derive(Clone, Debug)]
pub(crate) enum Aux {
    None,
    Mask(Matrix),
    Norm {
        xhat: Matrix,
        inv_std: Vec<f64>,
        /// Batch mean/var, present when batch statistics were used.
        batch_stats: Option<(Vec<f64>, Vec<f64>)>,
    },
}

impl BatchNorm {
    pub(crate) fn forward(&self, x: &Matrix, use_batch: bool) -> (Matrix, Aux) {
        let rows = x.rows();
        let (mean, var) = if use_batch {
            let mut mean = vec![0.0; self.dim];
            for r in x.iter_rows() {
                for (m, v) in mean.iter_mut().zip(r) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= rows as f64);
            let mut var = vec![0.0; self.dim];
            for r in x.iter_rows() {
                for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= rows as f64);
            (mean, var)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = Matrix::zeros(rows, self.dim);
        let mut out = Matrix::zeros(rows, self.dim);
        for r in 0..rows {
            let xr = x.row(r);
            let hr = xhat.row_mut(r);
            for c in 0..self.dim {
                hr[c] = (xr[c] - mean[c]) * inv_std[c];
            }
            let hr = xhat.row(r).to_vec();
            let or = out.row_mut(r);
            for c in 0..self.dim {
                or[c] = self.gamma[c] * hr[c] + self.beta[c];
            }
        }
        let batch_stats = use_batch.then_some((mean, var));
        (
            out,
            Aux::Norm {
                xhat,
                inv_std,
                batch_stats,
            },
        )
    }

    pub(crate) fn backward(
        &self,
        dy: &Matrix,
        aux: &Aux,
        dgamma: &mut [f64],
        dbeta: &mut [f64],
    ) -> Matrix {
        let Aux::Norm {
            xhat,
            inv_std,
            batch_stats,
        } = aux
        else {
            unreachable!("batch norm trace without normalization cache");
        };
        let rows = dy.rows();
        let mut dxhat = Matrix::zeros(rows, self.dim);
        for r in 0..rows {
            let (dyr, hr) = (dy.row(r), xhat.row(r));
            for c in 0..self.dim {
                dgamma[c] += dyr[c] * hr[c];
                dbeta[c] += dyr[c];
            }
            let dr = dxhat.row_mut(r);
            for c in 0..self.dim {
                dr[c] = dyr[c] * self.gamma[c];
            }
        }
        let mut dx = Matrix::zeros(rows, self.dim);
        if batch_stats.is_some() {
            let n = rows as f64;
            let mut sum_d = vec![0.0; self.dim];
            let mut sum_dh = vec![0.0; self.dim];
            for r in 0..rows {
                let (dr, hr) = (dxhat.row(r), xhat.row(r));
                for c in 0..self.dim {
                    sum_d[c] += dr[c];
                    sum_dh[c] += dr[c] * hr[c];
                }
            }
            for r in 0..rows {
                let (dr, hr) = (dxhat.row(r).to_vec(), xhat.row(r).to_vec());
                let out = dx.row_mut(r);
                for c in 0..self.dim {
                    out[c] = inv_std[c] / n * (n * dr[c] - sum_d[c] - hr[c] * sum_dh[c]);
                }
            }
        } else {
            for r in 0..rows {
                let dr = dxhat.row(r).to_vec();
                let out = dx.row_mut(r);
                for c in 0..self.dim {
                    out[c] = dr[c] * inv_std[c];
                }
            }
        }
        dx
    }

    /// Folds batch statistics into the running estimates.
    pub(crate) fn commit(&mut self, mean: &[f64], var: &[f64], batch: usize) {
        let unbias = if batch > 1 {
            batch as f64 / (batch as f64 - 1.0)
        } else {
            1.0
        };
        for c in 0..self.dim {
            self.running_mean[c] =
                (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean[c];
            self.running_var[c] =
                (1.0 - self.momentum) * self.running_var[c] + self.momentum * var[c] * unbias;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Relu,
    Dropout(Dropout),
    BatchNorm(BatchNorm),
    /// Elementwise square; lets a dense-square-dense stack form a quadratic head.
    Square,
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Relu => "relu",
            Layer::Dropout(_) => "dropout",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Square => "square",
        }
    }
}
