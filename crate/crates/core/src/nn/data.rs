use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use crate::error::{Error, Result};

/// Labelled samples stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
    classes: usize,
    /// `(height, width, channels)` when the samples are images.
    pub image_shape: Option<(usize, usize, usize)>,
}

impl Dataset {
    pub fn new(dim: usize, inputs: Vec<f64>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if dim == 0 || inputs.len() != dim * labels.len() {
            return Err(Error::Shape(format!(
                "{} values do not form {} samples of width {dim}",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::arg(format!("label {y} outside {classes} classes")));
        }
        Ok(Self {
            dim,
            inputs,
            labels,
            classes,
            image_shape: None,
        })
    }

    pub fn with_image_shape(mut self, h: usize, w: usize, c: usize) -> Result<Self> {
        if h * w * c != self.dim {
            return Err(Error::Shape(format!(
                "image shape {h}x{w}x{c} does not match width {}",
                self.dim
            )));
        }
        self.image_shape = Some((h, w, c));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn batch(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        let m = Matrix::from_vec(indices.len(), self.dim, data).expect("consistent batch shape");
        (m, indices.iter().map(|&i| self.labels[i]).collect())
    }

    pub fn all(&self) -> (Matrix, Vec<usize>) {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.batch(&idx)
    }

    /// Per-feature mean over all samples (the mean-input baseline).
    pub fn mean_input(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for i in 0..self.len() {
            for (m, v) in mean.iter_mut().zip(self.sample(i)) {
                *m += v;
            }
        }
        let n = self.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let (m, labels) = self.batch(indices);
        Self {
            dim: self.dim,
            inputs: m.into_data(),
            labels,
            classes: self.classes,
            image_shape: self.image_shape,
        }
    }

    /// Replaces the label of `fraction` of the samples with a uniformly drawn
    /// incorrect class. Returns the relabelled dataset and the sorted indices
    /// that were changed.
    pub fn mislabel(&self, fraction: f64, seed: u64) -> Result<(Self, Vec<usize>)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config("mislabel fraction must lie in [0, 1)".into()));
        }
        if self.classes < 2 {
            return Err(Error::Config(
                "mislabelling needs at least two classes".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = (fraction * self.len() as f64).round() as usize;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng);
        let mut chosen: Vec<usize> = order[..count].to_vec();
        chosen.sort_unstable();
        let mut out = self.clone();
        for &i in &chosen {
            let shift = rng.gen_range(1..self.classes);
            out.labels[i] = (self.labels[i] + shift) % self.classes;
        }
        Ok((out, chosen))
    }

    /// First `count` samples of each class, in order of appearance.
    pub fn balanced_prefix(&self, per_class: usize) -> Self {
        let mut taken = vec![0; self.classes];
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| {
                let y = self.labels[i];
                taken[y] += 1;
                taken[y] <= per_class
            })
            .collect();
        self.subset(&idx)
    }
}

/// Synthetic dataset generators. All are deterministic in their seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Synthetic {
    /// Isotropic Gaussian clusters with random centers in `[-1, 1]^dim`.
    Blobs {
        samples: usize,
        classes: usize,
        dim: usize,
        spread: f64,
    },
    /// Two-class XOR of quadrant and ring membership in the plane, padded
    /// with `noise_dims` distractor features.
    XorRings { samples: usize, noise_dims: usize },
    /// 28x28 seven-segment digit renderings with random placement, stroke
    /// width, and pixel noise.
    Glyphs { samples: usize },
}

impl Synthetic {
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match *self {
            Synthetic::Blobs {
                samples,
                classes,
                dim,
                spread,
            } => {
                if classes < 2 || dim == 0 {
                    return Err(Error::Config("blobs need >= 2 classes and dim >= 1".into()));
                }
                let centers: Vec<Vec<f64>> = (0..classes)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                let mut inputs = Vec::with_capacity(samples * dim);
                let mut labels = Vec::with_capacity(samples);
                for s in 0..samples {
                    let y = s % classes;
                    for c in &centers[y] {
                        inputs.push(c + spread * gaussian(&mut rng));
                    }
                    labels.push(y);
                }
                Dataset::new(dim, inputs, labels, classes)
            }
            Synthetic::XorRings {
                samples,
                noise_dims,
            } => {
                let dim = 2 + noise_dims;
                let mut inputs = Vec::with_capacity(samples * dim);
                let mut labels = Vec::with_capacity(samples);
                for _ in 0..samples {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    let y: f64 = rng.gen_range(-1.0..1.0);
                    let quadrant = (x > 0.0) ^ (y > 0.0);
                    let ring = (x * x + y * y).sqrt() > 0.6;
                    inputs.push(x);
                    inputs.push(y);
                    for _ in 0..noise_dims {
                        inputs.push(0.1 * gaussian(&mut rng));
                    }
                    labels.push((quadrant ^ ring) as usize);
                }
                Dataset::new(dim, inputs, labels, 2)
            }
            Synthetic::Glyphs { samples } => {
                let mut inputs = Vec::with_capacity(samples * GLYPH_SIDE * GLYPH_SIDE);
                let mut labels = Vec::with_capacity(samples);
                for s in 0..samples {
                    let digit = s % 10;
                    inputs.extend(render_glyph(digit, &mut rng));
                    labels.push(digit);
                }
                Dataset::new(GLYPH_SIDE * GLYPH_SIDE, inputs, labels, 10)?
                    .with_image_shape(GLYPH_SIDE, GLYPH_SIDE, 1)
            }
        }
    }
}

pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub const GLYPH_SIDE: usize = 28;

// Segments a..g: top, upper right, lower right, bottom, lower left, upper left, middle.
const SEGMENTS: [[bool; 7]; 10] = [
    [true, true, true, true, true, true, false],
    [false, true, true, false, false, false, false],
    [true, true, false, true, true, false, true],
    [true, true, true, true, false, false, true],
    [false, true, true, false, false, true, true],
    [true, false, true, true, false, true, true],
    [true, false, true, true, true, true, true],
    [true, true, true, false, false, false, false],
    [true, true, true, true, true, true, true],
    [true, true, true, true, false, true, true],
];

fn render_glyph(digit: usize, rng: &mut impl Rng) -> Vec<f64> {
    let side = GLYPH_SIDE as f64;
    let width: f64 = rng.gen_range(9.0..13.0);
    let height: f64 = rng.gen_range(15.0..19.0);
    let left = rng.gen_range(3.0..(side - 3.0 - width));
    let top = rng.gen_range(3.0..(side - 3.0 - height));
    let shear: f64 = rng.gen_range(-0.2..0.2);
    let stroke: f64 = rng.gen_range(1.0..1.8);
    let ink: f64 = rng.gen_range(0.7..1.0);
    let (l, r) = (left, left + width);
    let (t, m, b) = (top, top + height / 2.0, top + height);
    let segs = [
        ((l, t), (r, t)),
        ((r, t), (r, m)),
        ((r, m), (r, b)),
        ((l, b), (r, b)),
        ((l, m), (l, b)),
        ((l, t), (l, m)),
        ((l, m), (r, m)),
    ];
    let mut img = vec![0.0; GLYPH_SIDE * GLYPH_SIDE];
    for (py, row) in img.chunks_mut(GLYPH_SIDE).enumerate() {
        for (px, v) in row.iter_mut().enumerate() {
            let y = py as f64 + 0.5;
            // undo the shear about the glyph's vertical center
            let x = px as f64 + 0.5 + shear * (y - m);
            let d = SEGMENTS[digit]
                .iter()
                .zip(&segs)
                .filter(|(on, _)| **on)
                .map(|(_, &(p, q))| segment_distance((x, y), p, q))
                .fold(f64::INFINITY, f64::min);
            let coverage = (stroke + 0.5 - d).clamp(0.0, 1.0);
            *v = (ink * coverage + 0.08 * gaussian(rng)).clamp(0.0, 1.0);
        }
    }
    img
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}
