use super::PlayerSet;
use crate::error::{Error, Result};

/// An image split into equal rectangular cells, one player per cell.
/// Pixel `(y, x, c)` of an `h x w x c` image has flat index `(y * w + x) * c + ch`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPartition {
    pub players: PlayerSet,
    /// Flat pixel indices covered by each player, in row-major cell order.
    pub masks: Vec<Vec<usize>>,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cell_height: usize,
    pub cell_width: usize,
}

impl GridPartition {
    /// Row-major cell index.
    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.grid_cols + col
    }

    /// 4-neighbors of a cell that exist inside the grid.
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let (r, c) = (cell / self.grid_cols, cell % self.grid_cols);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.cell(r - 1, c));
        }
        if c > 0 {
            out.push(self.cell(r, c - 1));
        }
        if c + 1 < self.grid_cols {
            out.push(self.cell(r, c + 1));
        }
        if r + 1 < self.grid_rows {
            out.push(self.cell(r + 1, c));
        }
        out
    }

    /// Unordered adjacent pairs `(a, b)` with `a < b`.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for a in 0..self.masks.len() {
            for b in self.neighbors(a) {
                if a < b {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }
}

pub fn grid_partition(
    height: usize,
    width: usize,
    channels: usize,
    grid_rows: usize,
    grid_cols: usize,
) -> Result<GridPartition> {
    if grid_rows == 0 || grid_cols == 0 || channels == 0 {
        return Err(Error::Partition(
            "grid and channel counts must be positive".into(),
        ));
    }
    if height % grid_rows != 0 || width % grid_cols != 0 {
        return Err(Error::Partition(format!(
            "{height}x{width} image does not divide into {grid_rows}x{grid_cols} cells"
        )));
    }
    let (ch, cw) = (height / grid_rows, width / grid_cols);
    let mut masks = Vec::with_capacity(grid_rows * grid_cols);
    for gr in 0..grid_rows {
        for gc in 0..grid_cols {
            let mut m = Vec::with_capacity(ch * cw * channels);
            for y in gr * ch..(gr + 1) * ch {
                for x in gc * cw..(gc + 1) * cw {
                    for c in 0..channels {
                        m.push((y * width + x) * channels + c);
                    }
                }
            }
            masks.push(m);
        }
    }
    Ok(GridPartition {
        players: PlayerSet::new(grid_rows * grid_cols)?,
        masks,
        grid_rows,
        grid_cols,
        cell_height: ch,
        cell_width: cw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_by_seven_on_28() {
        let g = grid_partition(28, 28, 1, 7, 7).unwrap();
        assert_eq!(g.players.len(), 49);
        assert!(g.masks.iter().all(|m| m.len() == 16));
        assert_eq!((g.cell_height, g.cell_width), (4, 4));
    }

    #[test]
    fn sixteen_by_sixteen_on_224() {
        let g = grid_partition(224, 224, 3, 16, 16).unwrap();
        assert_eq!(g.players.len(), 256);
        assert_eq!((g.cell_height, g.cell_width), (14, 14));
        assert!(g.masks.iter().all(|m| m.len() == 14 * 14 * 3));
    }

    #[test]
    fn non_divisible_is_a_partition_error() {
        assert!(matches!(
            grid_partition(28, 28, 1, 5, 5),
            Err(Error::Partition(_))
        ));
    }

    #[test]
    fn masks_partition_the_pixels() {
        let g = grid_partition(12, 8, 2, 3, 4).unwrap();
        let mut hits = vec![0; 12 * 8 * 2];
        for m in &g.masks {
            for &p in m {
                hits[p] += 1;
            }
        }
        assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn boundary_cells_have_fewer_neighbors() {
        let g = grid_partition(4, 4, 1, 4, 4).unwrap();
        assert_eq!(g.neighbors(0).len(), 2);
        assert_eq!(g.neighbors(1).len(), 3);
        assert_eq!(g.neighbors(5).len(), 4);
        assert_eq!(g.adjacent_pairs().len(), 24);
    }
}
