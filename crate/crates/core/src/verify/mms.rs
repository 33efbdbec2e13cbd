use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::flux::{FluxKind, FluxSpec, RhsSpec, SourceTable};
use crate::mesh::{Field, Grid};
use crate::solver::RunRecord;

/// A smooth field known in closed form, with its first derivatives.
pub trait Target: Sync {
    fn components(&self) -> usize;
    fn value(&self, x: &[f64; 3], t: f64, out: &mut [f64]);
    /// `N x n`, component-major.
    fn gradient(&self, x: &[f64; 3], t: f64, dim: usize, out: &mut [f64]);
    fn time_derivative(&self, x: &[f64; 3], t: f64, out: &mut [f64]);
    /// Writes the Laplacian when it is available in closed form.
    fn laplacian(&self, _x: &[f64; 3], _t: f64, _out: &mut [f64]) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZeroTarget {
    pub components: usize,
}

impl Target for ZeroTarget {
    fn components(&self) -> usize {
        self.components
    }
    fn value(&self, _: &[f64; 3], _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn gradient(&self, _: &[f64; 3], _: f64, _: usize, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn time_derivative(&self, _: &[f64; 3], _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn laplacian(&self, _: &[f64; 3], _: f64, out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }
}

/// `e^-t * prod_{a < axes} sin(2 pi x_a)` on the periodic unit box.
#[derive(Clone, Copy, Debug)]
pub struct HeatMode {
    pub axes: usize,
}

impl HeatMode {
    fn parts(&self, x: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
        let mut s = [1.0; 3];
        let mut c = [0.0; 3];
        for a in 0..self.axes {
            s[a] = (2.0 * PI * x[a]).sin();
            c[a] = (2.0 * PI * x[a]).cos();
        }
        (s, c)
    }
}

impl Target for HeatMode {
    fn components(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64; 3], t: f64, out: &mut [f64]) {
        let (s, _) = self.parts(x);
        out[0] = (-t).exp() * s.iter().product::<f64>();
    }
    fn gradient(&self, x: &[f64; 3], t: f64, dim: usize, out: &mut [f64]) {
        let (s, c) = self.parts(x);
        for (a, o) in out.iter_mut().enumerate().take(dim) {
            *o = if a < self.axes {
                let others: f64 = (0..3).filter(|&b| b != a).map(|b| s[b]).product();
                (-t).exp() * 2.0 * PI * c[a] * others
            } else {
                0.0
            };
        }
    }
    fn time_derivative(&self, x: &[f64; 3], t: f64, out: &mut [f64]) {
        self.value(x, t, out);
        out[0] = -out[0];
    }
    fn laplacian(&self, x: &[f64; 3], t: f64, out: &mut [f64]) -> bool {
        self.value(x, t, out);
        out[0] *= -4.0 * PI * PI * self.axes as f64;
        true
    }
}

/// `x_1 + a e^-t sin(pi x_1) sin(pi x_2) sin(pi x_3)` on the unit cube.
///
/// Boundary values are `x_1` for all time and `|grad U| >= 1 - a pi > 0`.
#[derive(Clone, Copy, Debug)]
pub struct DirichletShear {
    pub amplitude: f64,
}

impl Target for DirichletShear {
    fn components(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64; 3], t: f64, out: &mut [f64]) {
        let b: f64 = (0..3).map(|a| (PI * x[a]).sin()).product();
        out[0] = x[0] + self.amplitude * (-t).exp() * b;
    }
    fn gradient(&self, x: &[f64; 3], t: f64, dim: usize, out: &mut [f64]) {
        let s: Vec<f64> = (0..3).map(|a| (PI * x[a]).sin()).collect();
        let e = self.amplitude * (-t).exp() * PI;
        for (a, o) in out.iter_mut().enumerate().take(dim) {
            let others: f64 = (0..3).filter(|&b| b != a).map(|b| s[b]).product();
            *o = e * (PI * x[a]).cos() * others + if a == 0 { 1.0 } else { 0.0 };
        }
    }
    fn time_derivative(&self, x: &[f64; 3], t: f64, out: &mut [f64]) {
        let b: f64 = (0..3).map(|a| (PI * x[a]).sin()).product();
        out[0] = -self.amplitude * (-t).exp() * b;
    }
}

pub struct ManufacturedProblem {
    pub rhs: RhsSpec,
    pub initial: Field,
}

/// Source `g = U_t - div A(grad U)` tabulated at `table_len` evenly spaced
/// times in `[0, t_end]`, plus `U(., 0)`.
///
/// With `A(Q) = Q` and a closed-form Laplacian the source is exact. Otherwise
/// `div A(grad U)` uses fourth-order central differences of `A` applied to the
/// exact gradient, with step `h_ref`, which must be finer than the grid.
pub fn manufactured_problem(
    target: &dyn Target,
    flux: &FluxSpec,
    grid: Arc<Grid>,
    t_end: f64,
    table_len: usize,
    h_ref: f64,
) -> Result<ManufacturedProblem> {
    flux.validate()?;
    if !(h_ref > 0.0 && h_ref < grid.min_h()) {
        return Err(Error::InvalidParams(format!(
            "reference step {h_ref} must be positive and finer than the grid spacing {}",
            grid.min_h()
        )));
    }
    if table_len < 2 || !(t_end > 0.0) {
        return Err(Error::InvalidParams("need t_end > 0 and at least two table times".into()));
    }
    let nc = target.components();
    let dim = grid.dim();
    let analytic = flux.kind == FluxKind::PurePLaplace && flux.p == 2.0 && {
        let mut probe = vec![0.0; nc];
        target.laplacian(&[0.0; 3], 0.0, &mut probe)
    };
    let times: Vec<f64> = (0..table_len)
        .map(|k| t_end * k as f64 / (table_len - 1) as f64)
        .collect();
    let slab = grid.slab_len();
    let mut values = Vec::with_capacity(table_len);
    for &t in &times {
        let mut v = vec![0.0; grid.node_count() * nc];
        let parts = Exec::default().map_chunks(&mut v, slab * nc, |k, out| -> Result<()> {
            let mut ut = vec![0.0; nc];
            let mut div = vec![0.0; nc];
            let mut q = vec![0.0; nc * dim];
            let mut a = vec![0.0; nc * dim];
            for (j, o) in out.chunks_mut(nc).enumerate() {
                let x = grid.position(k * slab + j);
                target.time_derivative(&x, t, &mut ut);
                if analytic {
                    target.laplacian(&x, t, &mut div);
                } else {
                    div.fill(0.0);
                    for ax in 0..dim {
                        for (off, wgt) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                            let mut y = x;
                            y[ax] += off * h_ref;
                            target.gradient(&y, t, dim, &mut q);
                            flux.apply(&q, &mut a)?;
                            for i in 0..nc {
                                div[i] += wgt * a[i * dim + ax] / (12.0 * h_ref);
                            }
                        }
                    }
                }
                for i in 0..nc {
                    o[i] = ut[i] - div[i];
                }
            }
            Ok(())
        });
        parts.into_iter().collect::<Result<Vec<()>>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("manufactured source is not finite".into()));
        }
        values.push(v);
    }
    let initial = Field::from_fn(grid.clone(), nc, 0.0, |x, o| target.value(x, 0.0, o));
    let table = SourceTable::new(grid, nc, times, values)?;
    Ok(ManufacturedProblem {
        rhs: RhsSpec::manufactured(table),
        initial,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsError {
    pub h: f64,
    pub max_error: f64,
    /// `sqrt(sum |u - U|^2 h^n)`.
    pub l2_error: f64,
}

/// Error of the last snapshot against the target at the same time.
pub fn mms_error(run: &RunRecord, target: &dyn Target) -> Result<MmsError> {
    run.require_completed()?;
    let last = run.snapshots().last().expect("at least one snapshot");
    let exact = Field::from_fn(last.grid_arc().clone(), target.components(), last.time(), |x, o| {
        target.value(x, last.time(), o)
    });
    let diff: Vec<f64> = last.values().iter().zip(exact.values()).map(|(a, b)| a - b).collect();
    let max = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l2 = (diff.iter().map(|v| v * v).sum::<f64>() * last.grid().cell_volume()).sqrt();
    Ok(MmsError {
        h: last.grid().min_h(),
        max_error: max,
        l2_error: l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Boundary;

    fn unit(cells: usize, b: Boundary) -> Arc<Grid> {
        Arc::new(Grid::cube(3, cells, 1.0, b).unwrap())
    }

    #[test]
    fn zero_target_gives_zero_problem() {
        let g = unit(8, Boundary::Periodic);
        let mp = manufactured_problem(&ZeroTarget { components: 2 }, &FluxSpec::p_laplace(3.0), g, 0.1, 3, 0.01).unwrap();
        assert_eq!(mp.initial.max_abs(), 0.0);
        assert!(mp.rhs.source.unwrap().values.iter().all(|v| v.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn heat_mode_source_matches_hand_derivative() {
        let g = unit(8, Boundary::Periodic);
        let mp = manufactured_problem(&HeatMode { axes: 1 }, &FluxSpec::p_laplace(2.0), g.clone(), 0.1, 3, 0.01).unwrap();
        let table = mp.rhs.source.unwrap();
        for node in 0..g.node_count() {
            let x = g.position(node);
            let t = table.times[2];
            let expect = (4.0 * PI * PI - 1.0) * (-t).exp() * (2.0 * PI * x[0]).sin();
            assert!((table.values[2][node] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn differenced_source_agrees_with_analytic_one() {
        // Same target through the fourth-order path: route p = 2 via the regularized kind.
        let g = unit(8, Boundary::Periodic);
        let a = manufactured_problem(&HeatMode { axes: 3 }, &FluxSpec::p_laplace(2.0), g.clone(), 0.1, 2, 0.01).unwrap();
        let b = manufactured_problem(&HeatMode { axes: 3 }, &FluxSpec::regularized(2.0, 0.0), g, 0.1, 2, 0.01).unwrap();
        let (ta, tb) = (a.rhs.source.unwrap(), b.rhs.source.unwrap());
        let scale = ta.values[1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in ta.values[1].iter().zip(&tb.values[1]) {
            assert!((x - y).abs() < 1e-5 * scale);
        }
    }

    #[test]
    fn shear_target_derivatives_are_consistent() {
        let t = DirichletShear { amplitude: 0.1 };
        let x = [0.3, 0.55, 0.7];
        let mut g = [0.0; 3];
        t.gradient(&x, 0.2, 3, &mut g);
        let h = 1e-6;
        for a in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[a] += h;
            xm[a] -= h;
            let (mut up, mut um) = ([0.0], [0.0]);
            t.value(&xp, 0.2, &mut up);
            t.value(&xm, 0.2, &mut um);
            assert!(((up[0] - um[0]) / (2.0 * h) - g[a]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_coarse_reference_step() {
        let g = unit(8, Boundary::Periodic);
        assert!(manufactured_problem(&HeatMode { axes: 1 }, &FluxSpec::p_laplace(3.0), g, 0.1, 3, 0.2).is_err());
    }
}
