use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Nodes at `i h`, `i = 0..cells`, wrapping around.
    Periodic,
    /// Nodes at `i h`, `i = 0..=cells`; boundary nodes are held fixed.
    Dirichlet,
}

/// Uniform tensor grid on the box `[0, extent_0] x ... x [0, extent_{n-1}]`.
///
/// Nodes are numbered row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    dim: usize,
    cells: Vec<usize>,
    extent: Vec<f64>,
    boundary: Boundary,
    // derived
    h: [f64; 3],
    shape: [usize; 3],
    strides: [usize; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    dim: usize,
    cells: Vec<usize>,
    extent: Vec<f64>,
    boundary: Boundary,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.dim, r.cells, r.extent, r.boundary)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr {
            dim: g.dim,
            cells: g.cells,
            extent: g.extent,
            boundary: g.boundary,
        }
    }
}

pub const MIN_CELLS: usize = 4;

impl Grid {
    pub fn new(dim: usize, cells: Vec<usize>, extent: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if cells.len() != dim || extent.len() != dim {
            return Err(Error::InvalidParams(format!(
                "need {dim} cell counts and extents, got {} and {}",
                cells.len(),
                extent.len()
            )));
        }
        if let Some(c) = cells.iter().find(|&&c| c < MIN_CELLS) {
            return Err(Error::InvalidParams(format!("at least {MIN_CELLS} cells per axis, got {c}")));
        }
        if extent.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParams("extents must be positive and finite".into()));
        }
        let mut h = [1.0; 3];
        let mut shape = [1usize; 3];
        for a in 0..dim {
            h[a] = extent[a] / cells[a] as f64;
            shape[a] = match boundary {
                Boundary::Periodic => cells[a],
                Boundary::Dirichlet => cells[a] + 1,
            };
        }
        let strides = [shape[1] * shape[2], shape[2], 1];
        Ok(Grid {
            dim,
            cells,
            extent,
            boundary,
            h,
            shape,
            strides,
        })
    }

    /// Cube `[0, extent]^dim` with `cells` cells per axis.
    pub fn cube(dim: usize, cells: usize, extent: f64, boundary: Boundary) -> Result<Self> {
        Grid::new(dim, vec![cells; dim], vec![extent; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Spacing along `axis`.
    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn min_h(&self) -> f64 {
        self.h[..self.dim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Nodes per axis, padded with 1 beyond `dim`.
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn strides(&self) -> [usize; 3] {
        self.strides
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Nodes in one slab of the outermost axis.
    pub fn slab_len(&self) -> usize {
        self.strides[0]
    }

    /// Volume carried by one node in the midpoint rule.
    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    pub fn coords_of(&self, node: usize) -> [usize; 3] {
        [
            node / self.strides[0],
            (node / self.strides[1]) % self.shape[1],
            node % self.shape[2],
        ]
    }

    pub fn index_of(&self, c: [usize; 3]) -> usize {
        c[0] * self.strides[0] + c[1] * self.strides[1] + c[2]
    }

    /// Physical position of a node (unused axes are 0).
    pub fn position(&self, node: usize) -> [f64; 3] {
        let c = self.coords_of(node);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = c[a] as f64 * self.h[a];
        }
        x
    }

    /// True for nodes whose values are held fixed by the boundary condition.
    pub fn is_boundary_node(&self, c: [usize; 3]) -> bool {
        match self.boundary {
            Boundary::Periodic => false,
            Boundary::Dirichlet => (0..self.dim).any(|a| c[a] == 0 || c[a] + 1 == self.shape[a]),
        }
    }

    /// Node indices with `|x - center| <= radius`.
    pub fn ball_nodes(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            if a < self.dim {
                let l = ((center[a] - radius) / self.h[a]).floor().max(0.0) as usize;
                let u = ((center[a] + radius) / self.h[a]).ceil().max(0.0) as usize;
                lo[a] = l.min(self.shape[a] - 1);
                hi[a] = u.min(self.shape[a] - 1);
            }
        }
        let r2 = radius * radius;
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let node = self.index_of([i, j, k]);
                    let x = self.position(node);
                    let d2: f64 = (0..self.dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                    if d2 <= r2 {
                        out.push(node);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::cube(3, 3, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::cube(4, 8, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::cube(3, 8, 0.0, Boundary::Periodic).is_err());
        assert!(Grid::new(3, vec![8, 8], vec![1.0; 3], Boundary::Periodic).is_err());
    }

    #[test]
    fn indexing_round_trips() {
        let g = Grid::new(3, vec![4, 5, 6], vec![1.0, 2.0, 3.0], Boundary::Dirichlet).unwrap();
        assert_eq!(g.shape(), [5, 6, 7]);
        for node in 0..g.node_count() {
            assert_eq!(g.index_of(g.coords_of(node)), node);
        }
        assert_eq!(g.h(1), 0.4);
        let g2 = Grid::cube(2, 8, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(g2.node_count(), 64);
        assert_eq!(g2.position(9), [0.125, 0.125, 0.0]);
    }

    #[test]
    fn ball_nodes_match_brute_force() {
        let g = Grid::cube(3, 10, 1.0, Boundary::Periodic).unwrap();
        let c = [0.43, 0.5, 0.61];
        let nodes = g.ball_nodes(&c, 0.27);
        let brute: Vec<usize> = (0..g.node_count())
            .filter(|&i| {
                let x = g.position(i);
                (0..3).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>() <= 0.27 * 0.27
            })
            .collect();
        assert_eq!(nodes, brute);
    }

    #[test]
    fn serde_validates() {
        let ok = r#"{"dim":2,"cells":[8,8],"extent":[1.0,1.0],"boundary":"periodic"}"#;
        assert!(serde_json::from_str::<Grid>(ok).is_ok());
        let bad = r#"{"dim":2,"cells":[2,8],"extent":[1.0,1.0],"boundary":"periodic"}"#;
        assert!(serde_json::from_str::<Grid>(bad).is_err());
    }
}
