//! Second-order finite differences on [`Grid`]s.
//!
//! Interior derivatives are central; Dirichlet boundary nodes use the
//! one-sided second-order formulas `(-3f0 + 4f1 - f2)/2h` and its mirror.
//! The divergence is the central difference applied to node fluxes, so on a
//! periodic grid it is minus the adjoint of [`gradient`].

use std::sync::Arc;

use crate::error::Result;
use crate::exec::Exec;

use super::{Boundary, Field, GradientField, Grid};

#[derive(Clone, Copy, Debug)]
struct Taps {
    coord: [usize; 3],
    weight: [f64; 3],
    len: usize,
}

const NO_TAPS: Taps = Taps {
    coord: [0; 3],
    weight: [0.0; 3],
    len: 0,
};

/// Per-axis, per-coordinate difference weights.
struct AxisTaps {
    taps: [Vec<Taps>; 3],
}

impl AxisTaps {
    fn gradient(grid: &Grid) -> Self {
        let shape = grid.shape();
        let mut taps: [Vec<Taps>; 3] = Default::default();
        for a in 0..grid.dim() {
            let d = shape[a];
            let inv = 1.0 / (2.0 * grid.h(a));
            taps[a] = (0..d)
                .map(|c| match grid.boundary() {
                    Boundary::Periodic => Taps {
                        coord: [(c + d - 1) % d, (c + 1) % d, 0],
                        weight: [-inv, inv, 0.0],
                        len: 2,
                    },
                    Boundary::Dirichlet if c == 0 => Taps {
                        coord: [0, 1, 2],
                        weight: [-3.0 * inv, 4.0 * inv, -inv],
                        len: 3,
                    },
                    Boundary::Dirichlet if c + 1 == d => Taps {
                        coord: [c, c - 1, c - 2],
                        weight: [3.0 * inv, -4.0 * inv, inv],
                        len: 3,
                    },
                    Boundary::Dirichlet => Taps {
                        coord: [c - 1, c + 1, 0],
                        weight: [-inv, inv, 0.0],
                        len: 2,
                    },
                })
                .collect();
        }
        AxisTaps { taps }
    }

    /// Central differences only; Dirichlet boundary nodes get no taps.
    fn divergence(grid: &Grid) -> Self {
        let mut t = AxisTaps::gradient(grid);
        if grid.boundary() == Boundary::Dirichlet {
            for a in 0..grid.dim() {
                let d = t.taps[a].len();
                t.taps[a][0] = NO_TAPS;
                t.taps[a][d - 1] = NO_TAPS;
            }
        }
        t
    }
}

/// Raw gradient kernel: `u` has `components` values per node, `out` has
/// `components * dim` values per node.
pub(crate) fn gradient_raw(grid: &Grid, components: usize, u: &[f64], out: &mut [f64], exec: Exec) {
    let dim = grid.dim();
    let taps = AxisTaps::gradient(grid);
    let shape = grid.shape();
    let strides = grid.strides();
    let slab = grid.slab_len();
    let block = components * dim;
    exec.for_each_chunk(out, slab * block, |i0, chunk| {
        for j in 0..slab {
            let node = i0 * slab + j;
            let c = [i0, j / shape[2], j % shape[2]];
            let dst = &mut chunk[j * block..(j + 1) * block];
            for a in 0..dim {
                let t = &taps.taps[a][c[a]];
                let base = node - c[a] * strides[a];
                for i in 0..components {
                    let mut acc = 0.0;
                    for k in 0..t.len {
                        acc += t.weight[k] * u[(base + t.coord[k] * strides[a]) * components + i];
                    }
                    dst[i * dim + a] = acc;
                }
            }
        }
    });
}

/// Raw divergence kernel: `flux` has `components * dim` values per node,
/// `out` receives `components` values per node (zero on Dirichlet boundary nodes).
pub(crate) fn divergence_raw(grid: &Grid, components: usize, flux: &[f64], out: &mut [f64], exec: Exec) {
    let dim = grid.dim();
    let taps = AxisTaps::divergence(grid);
    let shape = grid.shape();
    let strides = grid.strides();
    let slab = grid.slab_len();
    let block = components * dim;
    exec.for_each_chunk(out, slab * components, |i0, chunk| {
        for j in 0..slab {
            let node = i0 * slab + j;
            let c = [i0, j / shape[2], j % shape[2]];
            let dst = &mut chunk[j * components..(j + 1) * components];
            if grid.is_boundary_node(c) {
                dst.fill(0.0);
                continue;
            }
            for (i, d) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for a in 0..dim {
                    let t = &taps.taps[a][c[a]];
                    let base = node - c[a] * strides[a];
                    for k in 0..t.len {
                        acc += t.weight[k] * flux[(base + t.coord[k] * strides[a]) * block + i * dim + a];
                    }
                }
                *d = acc;
            }
        }
    });
}

pub(crate) fn magnitude_raw(grad: &[f64], block: usize) -> Vec<f64> {
    grad.chunks(block)
        .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Discrete gradient of a valid field.
pub fn gradient(f: &Field) -> Result<GradientField> {
    gradient_with(f, Exec::default())
}

pub fn gradient_with(f: &Field, exec: Exec) -> Result<GradientField> {
    f.validate()?;
    let grid = f.grid_arc().clone();
    let mut out = vec![0.0; f.values().len() * grid.dim()];
    gradient_raw(&grid, f.components(), f.values(), &mut out, exec);
    Ok(GradientField::new(grid, f.components(), out, f.time()))
}

/// Frobenius norm of the `components x dim` block at every node, as a
/// one-component field.
pub fn grad_magnitude(g: &GradientField) -> Field {
    let block = g.components() * g.grid().dim();
    let grid: Arc<Grid> = Arc::new(g.grid().clone());
    Field::from_values(grid, 1, magnitude_raw(g.values(), block), g.time()).expect("one value per node")
}

/// Central-difference divergence of a node flux field; returns one value per
/// node and component.
pub fn divergence(flux: &GradientField) -> Field {
    let grid = Arc::new(flux.grid().clone());
    let mut out = vec![0.0; grid.node_count() * flux.components()];
    divergence_raw(&grid, flux.components(), flux.values(), &mut out, Exec::default());
    Field::from_values(grid, flux.components(), out, flux.time()).expect("sizes match")
}

/// `div_h grad_h u`, the discrete operator the solver uses for `p = 2`.
pub fn laplacian(f: &Field) -> Result<Field> {
    Ok(divergence(&gradient(f)?))
}
