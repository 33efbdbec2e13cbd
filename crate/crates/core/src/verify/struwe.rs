use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{divergence, grad_magnitude, gradient, Field, Grid};

use super::ResidualReport;

/// Residual of `u = (x - c)/|x - c|` on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StruweLevel {
    pub h: f64,
    pub nodes: usize,
    /// Largest componentwise `|-div_h grad_h u - u |grad_h u|^2|` on the annulus.
    pub max_residual: f64,
    /// Largest `| |grad_h u| r / sqrt(n-1) - 1 |` on the annulus.
    pub grad_rel_dev: f64,
    /// Largest `|grad_h u|` on the annulus.
    pub grad_max: f64,
}

pub fn struwe_level(grid: &Grid, center: &[f64], annulus: (f64, f64)) -> Result<StruweLevel> {
    let (r_min, r_max) = annulus;
    let n = grid.dim();
    if n != 3 {
        return Err(Error::InvalidParams(format!("counterexample check needs n = 3, got {n}")));
    }
    if center.len() != n {
        return Err(Error::InvalidParams("center has the wrong dimension".into()));
    }
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::InvalidParams(format!("annulus [{r_min}, {r_max}] must satisfy 0 < r_min < r_max")));
    }
    // div_h grad_h reaches two nodes along each axis.
    let reach = 2.0 * grid.min_h();
    if r_min <= reach {
        return Err(Error::InvalidParams(format!(
            "annulus inner radius {r_min} must exceed the stencil reach {reach}"
        )));
    }
    for a in 0..n {
        if center[a] - r_max - 2.0 * grid.h(a) < 0.0 || center[a] + r_max + 2.0 * grid.h(a) > grid.extent()[a] {
            return Err(Error::InvalidParams("annulus stencil leaves the grid".into()));
        }
    }
    let g = Arc::new(grid.clone());
    let u = Field::from_fn(g.clone(), n, 0.0, |x, o| {
        let r = (0..n).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
        for a in 0..n {
            o[a] = if r > 0.0 { (x[a] - center[a]) / r } else { 0.0 };
        }
    });
    let du = gradient(&u)?;
    let lap = divergence(&du);
    let mag = grad_magnitude(&du);
    let scale = ((n - 1) as f64).sqrt();
    let mut out = StruweLevel {
        h: grid.min_h(),
        nodes: 0,
        max_residual: 0.0,
        grad_rel_dev: 0.0,
        grad_max: 0.0,
    };
    for node in grid.ball_nodes(center, r_max) {
        let x = g.position(node);
        let r = (0..n).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
        if r < r_min {
            continue;
        }
        let m = mag.node(node)[0];
        for i in 0..n {
            let res = -lap.node(node)[i] - u.node(node)[i] * m * m;
            out.max_residual = out.max_residual.max(res.abs());
        }
        out.grad_rel_dev = out.grad_rel_dev.max((m * r / scale - 1.0).abs());
        out.grad_max = out.grad_max.max(m);
        out.nodes += 1;
    }
    Ok(out)
}

/// Residual of `x/|x|` on the annulus about the box center, on `grid` and on
/// its twofold refinement.
pub fn struwe_residual(grid: &Grid, annulus: (f64, f64)) -> Result<ResidualReport> {
    let center: Vec<f64> = grid.extent().iter().map(|e| 0.5 * e).collect();
    let fine = Grid::new(
        grid.dim(),
        grid.cells().iter().map(|c| 2 * c).collect(),
        grid.extent().to_vec(),
        grid.boundary(),
    )?;
    let coarse = struwe_level(grid, &center, annulus)?;
    let fine_l = struwe_level(&fine, &center, annulus)?;
    Ok(ResidualReport {
        field_name: "x/|x|".into(),
        max_residual: coarse.max_residual,
        grid_h: coarse.h,
        order_estimate: (coarse.max_residual / fine_l.max_residual).log2(),
        fine_residual: fine_l.max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Boundary;

    #[test]
    fn continuum_identity_at_unit_radius() {
        // -Laplacian of x/|x| is (n-1) x/|x|^3 and |grad u|^2 = (n-1)/|x|^2.
        let x = [0.6, 0.0, 0.8];
        let r: f64 = 1.0;
        for i in 0..3 {
            let minus_lap = 2.0 * x[i] / r.powi(3);
            let coupling = x[i] / r * 2.0 / (r * r);
            assert_eq!(minus_lap, coupling);
        }
    }

    #[test]
    fn residual_is_second_order_on_small_grids() {
        let g = Grid::cube(3, 24, 4.0, Boundary::Dirichlet).unwrap();
        let rep = struwe_residual(&g, (0.8, 1.5)).unwrap();
        assert!(rep.order_estimate > 1.5 && rep.order_estimate < 2.5, "{rep:?}");
    }

    #[test]
    fn gradient_grows_as_inner_radius_shrinks() {
        let g = Grid::cube(3, 64, 4.0, Boundary::Dirichlet).unwrap();
        let c = [2.0; 3];
        let a = struwe_level(&g, &c, (0.5, 1.0)).unwrap();
        let b = struwe_level(&g, &c, (0.25, 1.0)).unwrap();
        assert!((a.grad_max * 0.5 / 2f64.sqrt() - 1.0).abs() < 0.05);
        assert!(b.grad_max > 1.8 * a.grad_max);
    }

    #[test]
    fn rejects_bad_annuli() {
        let g = Grid::cube(3, 16, 4.0, Boundary::Dirichlet).unwrap();
        let c = [2.0; 3];
        assert!(struwe_level(&g, &c, (0.4, 1.0)).is_err());
        assert!(struwe_level(&g, &c, (1.0, 1.9)).is_err());
        assert!(struwe_level(&g, &c, (1.0, 0.9)).is_err());
        let g2 = Grid::cube(2, 16, 4.0, Boundary::Dirichlet).unwrap();
        assert!(struwe_level(&g2, &[2.0, 2.0], (1.0, 1.5)).is_err());
    }
}
