//! Neighbor-interaction heatmaps over an image grid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Weighting;
use crate::game::{Game, GridPartition, MaskedModelGame, ScoreSelector};
use crate::nn::Network;
use crate::rng::derive_seed;
use crate::sampling::{interaction_sampled, SamplerConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cell_height: usize,
    pub cell_width: usize,
    /// Mean `|I(g, g')|` over the existing 4-neighbors `g'`, row-major.
    pub raw: Vec<f64>,
    /// `raw` min-max scaled to `[0, 1]`; all zeros when degenerate.
    pub normalized: Vec<f64>,
    /// Set when `raw` is constant, so min-max scaling is undefined.
    pub degenerate: bool,
    /// Sampled interaction of every adjacent pair `(a, b)`, `a < b`.
    pub pairs: Vec<((usize, usize), f64)>,
}

/// Heatmap of any game whose players are the cells of `grid`.
pub fn neighbor_heatmap<G: Game + ?Sized>(
    game: &G,
    grid: &GridPartition,
    config: &SamplerConfig,
    weighting: Weighting,
) -> Result<Heatmap> {
    let cells = grid.grid_rows * grid.grid_cols;
    if game.n() != cells {
        return Err(Error::Partition(format!(
            "game has {} players for a grid of {cells} cells",
            game.n()
        )));
    }
    let adjacent = grid.adjacent_pairs();
    let mut pairs = Vec::with_capacity(adjacent.len());
    let mut sum = vec![0.0; cells];
    for (k, &(a, b)) in adjacent.iter().enumerate() {
        let cfg = config.with_seed(derive_seed(config.seed, k as u64));
        let v = interaction_sampled(game, a, b, weighting, &cfg)?.value;
        sum[a] += v.abs();
        sum[b] += v.abs();
        pairs.push(((a, b), v));
    }
    let raw: Vec<f64> = (0..cells)
        .map(|g| {
            let d = grid.neighbors(g).len();
            if d == 0 {
                0.0
            } else {
                sum[g] / d as f64
            }
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = !(hi - lo > 0.0);
    let normalized = if degenerate {
        vec![0.0; cells]
    } else {
        raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
    };
    Ok(Heatmap {
        grid_rows: grid.grid_rows,
        grid_cols: grid.grid_cols,
        cell_height: grid.cell_height,
        cell_width: grid.cell_width,
        raw,
        normalized,
        degenerate,
        pairs,
    })
}

/// Heatmap of one image: grid cells of the input are the players and absent
/// cells take `baseline` pixel values.
pub fn export_heatmap(
    net: &Network,
    image: &[f64],
    label: usize,
    baseline: Vec<f64>,
    grid: &GridPartition,
    config: &SamplerConfig,
    weighting: Weighting,
) -> Result<Heatmap> {
    let game = MaskedModelGame::from_input(net, image, 0, ScoreSelector::default_for(net, label))?
        .with_groups(grid.masks.clone())?
        .with_mean_baseline(baseline)?;
    neighbor_heatmap(&game, grid, config, weighting)
}

impl Heatmap {
    /// `grid_rows` lines of comma-separated normalized values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.grid_rows {
            let row: Vec<String> = (0..self.grid_cols)
                .map(|c| self.normalized[r * self.grid_cols + c].to_string())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Binary 8-bit PGM at image resolution, one block per cell.
    pub fn to_pgm(&self) -> Vec<u8> {
        let h = self.grid_rows * self.cell_height;
        let w = self.grid_cols * self.cell_width;
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        for y in 0..h {
            for x in 0..w {
                let v =
                    self.normalized[(y / self.cell_height) * self.grid_cols + x / self.cell_width];
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("heatmap.csv"), self.to_csv())?;
        std::fs::write(dir.join("heatmap.pgm"), self.to_pgm())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{grid_partition, TermGame};
    use crate::nn::{Dense, Head, Layer};

    fn cfg() -> SamplerConfig {
        SamplerConfig {
            samples: 40,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn planted_pair_lights_up_alone() {
        let grid = grid_partition(8, 8, 1, 4, 4).unwrap();
        let (a, b) = (grid.cell(1, 1), grid.cell(1, 2));
        let mut game = TermGame::additive(&[0.3; 16]).unwrap();
        game.add_term(1.0, &[a, b]).unwrap();
        let h = neighbor_heatmap(&game, &grid, &cfg(), Weighting::Shapley).unwrap();
        assert!(!h.degenerate);
        for g in 0..16 {
            let want = if g == a || g == b { 1.0 } else { 0.0 };
            assert!(
                (h.normalized[g] - want).abs() < 1e-12,
                "cell {g}: {}",
                h.normalized[g]
            );
        }
    }

    #[test]
    fn boundary_cells_average_existing_neighbors() {
        let grid = grid_partition(4, 4, 1, 2, 2).unwrap();
        // corner 0 interacts with both of its neighbors, 1 and 2
        let mut game = TermGame::new(4).unwrap();
        game.add_term(1.0, &[0, 1]).unwrap();
        game.add_term(3.0, &[0, 2]).unwrap();
        let h = neighbor_heatmap(&game, &grid, &cfg(), Weighting::Banzhaf).unwrap();
        assert_eq!(h.raw, vec![2.0, 0.5, 1.5, 0.0]);
        assert_eq!(h.normalized, vec![1.0, 0.25, 0.75, 0.0]);
    }

    #[test]
    fn constant_model_is_degenerate() {
        let net = Network::new(
            16,
            vec![Layer::Dense(Dense::from_parts(
                16,
                2,
                vec![0.0; 32],
                vec![1.0, -1.0],
            ))],
            Head::SoftmaxCrossEntropy,
        )
        .unwrap();
        let grid = grid_partition(4, 4, 1, 2, 2).unwrap();
        let image: Vec<f64> = (0..16).map(|k| k as f64 / 16.0).collect();
        let h = export_heatmap(
            &net,
            &image,
            0,
            vec![0.0; 16],
            &grid,
            &cfg(),
            Weighting::Shapley,
        )
        .unwrap();
        assert!(h.degenerate);
        assert!(h.raw.iter().all(|&v| v == 0.0));
        assert!(h.normalized.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_and_pgm_shapes() {
        let grid = grid_partition(4, 6, 1, 2, 3).unwrap();
        let mut game = TermGame::new(6).unwrap();
        game.add_term(1.0, &[0, 1]).unwrap();
        let h = neighbor_heatmap(&game, &grid, &cfg(), Weighting::Shapley).unwrap();
        assert_eq!(h.to_csv().lines().count(), 2);
        let pgm = h.to_pgm();
        let header = b"P5\n6 4\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(pgm.len(), header.len() + 24);
        assert!(neighbor_heatmap(
            &TermGame::new(5).unwrap(),
            &grid,
            &cfg(),
            Weighting::Shapley
        )
        .is_err());
    }
}
