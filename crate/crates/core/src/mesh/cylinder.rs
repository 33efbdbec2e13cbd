//! Parabolic cylinders `B_R(x0) x (t0 - R^e, t0)` and quadrature on them.
//!
//! Space uses the node-in-ball midpoint rule. Time integrates the piecewise
//! linear interpolant of the per-snapshot slice integrals over the window,
//! i.e. the trapezoid rule with interpolated endpoints.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

use super::stencil::{gradient_raw, magnitude_raw};
use super::{Field, Grid};

/// Time-ordered fields on one grid together with their gradient magnitudes.
#[derive(Clone, Debug)]
pub struct SnapshotSeries {
    grid: Arc<Grid>,
    components: usize,
    fields: Vec<Field>,
    grad_mag: Vec<Vec<f64>>,
}

impl SnapshotSeries {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        Self::new_with(fields, Exec::default())
    }

    pub fn new_with(fields: Vec<Field>, exec: Exec) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidField("empty snapshot series".into()))?;
        let grid = first.grid_arc().clone();
        let components = first.components();
        for w in fields.windows(2) {
            if !(w[1].time() > w[0].time()) {
                return Err(Error::InvalidField("snapshot times must increase strictly".into()));
            }
        }
        let block = components * grid.dim();
        let mut grad_mag = Vec::with_capacity(fields.len());
        let mut buf = vec![0.0; grid.node_count() * block];
        for f in &fields {
            if f.grid() != grid.as_ref() || f.components() != components {
                return Err(Error::InvalidField("snapshots must share grid and component count".into()));
            }
            f.validate()?;
            gradient_raw(&grid, components, f.values(), &mut buf, exec);
            grad_mag.push(magnitude_raw(&buf, block));
        }
        Ok(SnapshotSeries {
            grid,
            components,
            fields,
            grad_mag,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn time(&self, k: usize) -> f64 {
        self.fields[k].time()
    }

    pub fn times(&self) -> Vec<f64> {
        self.fields.iter().map(Field::time).collect()
    }

    /// `|grad u|` at every node of snapshot `k`.
    pub fn grad_mag(&self, k: usize) -> &[f64] {
        &self.grad_mag[k]
    }
}

impl AsRef<SnapshotSeries> for SnapshotSeries {
    fn as_ref(&self) -> &SnapshotSeries {
        self
    }
}

/// `B_R(center) x (t0 - R^e, t0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub center: Vec<f64>,
    pub t0: f64,
    pub radius: f64,
    pub time_exponent: f64,
}

impl CylinderSpec {
    pub fn new(center: Vec<f64>, t0: f64, radius: f64, time_exponent: f64) -> Self {
        CylinderSpec {
            center,
            t0,
            radius,
            time_exponent,
        }
    }

    /// Same center, top and time exponent with another radius.
    pub fn with_radius(&self, radius: f64) -> Self {
        CylinderSpec {
            radius,
            ..self.clone()
        }
    }

    pub fn depth(&self) -> f64 {
        self.radius.powf(self.time_exponent)
    }

    pub fn t_start(&self) -> f64 {
        self.t0 - self.depth()
    }

    /// Checks that the cylinder lies in the grid box and the stored time span.
    pub fn check_inside(&self, series: &SnapshotSeries) -> Result<()> {
        let g = series.grid();
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::CylinderOutside(format!("radius {} must be positive", self.radius)));
        }
        if self.center.len() != g.dim() {
            return Err(Error::CylinderOutside(format!(
                "center has {} coordinates, grid has dimension {}",
                self.center.len(),
                g.dim()
            )));
        }
        for a in 0..g.dim() {
            let (lo, hi) = (self.center[a] - self.radius, self.center[a] + self.radius);
            if lo < 0.0 || hi > g.extent()[a] {
                return Err(Error::CylinderOutside(format!(
                    "ball along axis {a} spans [{lo}, {hi}], grid spans [0, {}]",
                    g.extent()[a]
                )));
            }
        }
        let (first, last) = (series.time(0), series.time(series.len() - 1));
        let slack = 1e-9 * last.abs().max(1e-300);
        if self.t_start() < first - slack || self.t0 > last + slack {
            return Err(Error::CylinderOutside(format!(
                "time window [{}, {}] outside stored span [{first}, {last}]",
                self.t_start(),
                self.t0
            )));
        }
        Ok(())
    }

    pub fn ball_nodes(&self, grid: &Grid) -> Vec<usize> {
        grid.ball_nodes(&self.center, self.radius)
    }
}

/// Weights `w_k = integral over [a, b] of the hat function at `times[k]`.
pub fn time_weights(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    if !(b > a) {
        return w;
    }
    for k in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[k], times[k + 1]);
        let l = a.max(t0);
        let r = b.min(t1);
        if r <= l {
            continue;
        }
        let len = r - l;
        let mid = 0.5 * (l + r);
        let dt = t1 - t0;
        w[k] += len * (t1 - mid) / dt;
        w[k + 1] += len * (mid - t0) / dt;
    }
    w
}

/// Snapshot indices with `a <= t_k <= b` (with the same slack as [`CylinderSpec::check_inside`]).
pub(crate) fn snapshots_in(times: &[f64], a: f64, b: f64) -> Vec<usize> {
    let slack = 1e-9 * times.last().map_or(1.0, |t| t.abs().max(1e-300));
    (0..times.len())
        .filter(|&k| times[k] >= a - slack && times[k] <= b + slack)
        .collect()
}

/// What an integrand sees at one node of one snapshot.
#[derive(Clone, Copy, Debug)]
pub struct NodeSample<'a> {
    pub snapshot: usize,
    pub node: usize,
    pub x: [f64; 3],
    pub t: f64,
    pub u: &'a [f64],
    pub grad_mag: f64,
}

const NODE_CHUNK: usize = 2048;

/// Midpoint-rule integral of `f` over `nodes` of snapshot `k`.
pub fn slice_integral<F>(series: &SnapshotSeries, k: usize, nodes: &[usize], f: &F, exec: Exec) -> f64
where
    F: Fn(&NodeSample) -> f64 + Sync,
{
    let g = series.grid();
    let field = &series.fields[k];
    let mag = &series.grad_mag[k];
    let t = field.time();
    let chunks = nodes.len().div_ceil(NODE_CHUNK);
    let sum = exec.sum_range(chunks, |c| {
        let lo = c * NODE_CHUNK;
        let hi = (lo + NODE_CHUNK).min(nodes.len());
        nodes[lo..hi]
            .iter()
            .map(|&node| {
                f(&NodeSample {
                    snapshot: k,
                    node,
                    x: g.position(node),
                    t,
                    u: field.node(node),
                    grad_mag: mag[node],
                })
            })
            .sum::<f64>()
    });
    sum * g.cell_volume()
}

fn window_checked(series: &SnapshotSeries, c: &CylinderSpec) -> Result<(Vec<usize>, Vec<f64>)> {
    c.check_inside(series)?;
    let times = series.times();
    let inside = snapshots_in(&times, c.t_start(), c.t0);
    if inside.len() < 3 {
        return Err(Error::InsufficientSnapshots { found: inside.len() });
    }
    Ok((inside, time_weights(&times, c.t_start(), c.t0)))
}

/// `integral over Q_R of f dx dt`.
pub fn cylinder_integrate<S, F>(r: &S, c: &CylinderSpec, integrand: F) -> Result<f64>
where
    S: AsRef<SnapshotSeries>,
    F: Fn(&NodeSample) -> f64 + Sync,
{
    cylinder_integrate_with(r, c, integrand, Exec::default())
}

pub fn cylinder_integrate_with<S, F>(r: &S, c: &CylinderSpec, integrand: F, exec: Exec) -> Result<f64>
where
    S: AsRef<SnapshotSeries>,
    F: Fn(&NodeSample) -> f64 + Sync,
{
    let series = r.as_ref();
    let (_, weights) = window_checked(series, c)?;
    let nodes = c.ball_nodes(series.grid());
    Ok(weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(k, w)| w * slice_integral(series, k, &nodes, &integrand, exec))
        .sum())
}

/// `max over stored t of integral over B_R of f dx`, over snapshots in the window.
pub fn sup_slice<S, F>(r: &S, c: &CylinderSpec, integrand: F) -> Result<f64>
where
    S: AsRef<SnapshotSeries>,
    F: Fn(&NodeSample) -> f64 + Sync,
{
    let series = r.as_ref();
    let (inside, _) = window_checked(series, c)?;
    let nodes = c.ball_nodes(series.grid());
    Ok(inside
        .into_iter()
        .map(|k| slice_integral(series, k, &nodes, &integrand, Exec::default()))
        .fold(f64::NEG_INFINITY, f64::max))
}
