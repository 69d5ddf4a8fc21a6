//! A small dense network kernel: layers, exact reverse-mode gradients,
//! dropout, batch normalization, training, data and checkpoints.

pub mod checkpoint;
mod data;
pub mod idx;
mod layers;
mod network;
mod tensor;
mod train;

pub use data::{Dataset, Synthetic, GLYPH_SIDE};
pub use layers::{BatchNorm, Dense, Dropout, Layer, Mode};
pub use network::{
    DropoutMasks, ForwardOptions, Gradients, Head, MlpConfig, Network, ScoreKind, Trace,
};
pub use tensor::Matrix;
pub use train::{evaluate, EpochMetrics, StepLog, Trainer, TrainingConfig};

use crate::error::{Error, Result};

/// Probability that dropout at `rate` leaves exactly a given set of units
/// `S ⊆ N \ {i}` alive among the `n - 1` units other than `i`:
/// `(1 - rate)^|S| · rate^(n-1-|S|)`, listed by mask over the other units.
/// At rate 1/2 every entry is `0.5^(n-1)`, the Banzhaf context weight.
pub fn dropout_coalition_distribution(n: usize, rate: f64) -> Result<Vec<f64>> {
    if n == 0 || n > 25 {
        return Err(Error::arg(format!(
            "distribution over {n} units not tabulated"
        )));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::arg(format!("dropout rate {rate} outside [0, 1)")));
    }
    let others = n - 1;
    let keep = 1.0 - rate;
    Ok((0..1usize << others)
        .map(|m| {
            let alive = m.count_ones() as i32;
            keep.powi(alive) * rate.powi(others as i32 - alive)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_rate_is_uniform() {
        let d = dropout_coalition_distribution(5, 0.5).unwrap();
        assert_eq!(d.len(), 16);
        assert!(d.iter().all(|&p| p == 0.0625));
        let total: f64 = dropout_coalition_distribution(9, 0.3).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
