//! Explicit Euler for `u_t = div_h A(grad_h u) + f` on a [`Grid`].
//!
//! Each step runs a gradient pass, then a per-node pass that evaluates the flux
//! and the local largest Jacobian eigenvalue, then the divergence, then the
//! update. The step size is recomputed every step from the current state and
//! clamped so that snapshot times are hit exactly.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::flux::{FluxSpec, RhsKind, RhsSpec};
use crate::mesh::{divergence_raw, gradient_raw, io, Boundary, Field, Grid, SnapshotSeries};

pub const BLOWUP_THRESHOLD: f64 = 1e8;
pub const DT_FLOOR: f64 = 1e-12;
pub const MIN_SNAPSHOTS: usize = 64;

/// A prescribed field carried by a config. Serializes to a short description only.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldData(pub Arc<Field>);

impl Serialize for FieldData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!(
            "<{}-component field on {} nodes>",
            self.0.components(),
            self.0.grid().node_count()
        ))
    }
}

impl<'de> Deserialize<'de> for FieldData {
    fn deserialize<D: serde::Deserializer<'de>>(_: D) -> std::result::Result<Self, D::Error> {
        Err(serde::de::Error::custom("prescribed fields cannot be read from a config file"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialSpec {
    /// Finite Fourier sum with coefficients decaying like `|k|^-2`, scaled so
    /// that the largest nodal entry equals `amplitude`.
    RandomSmooth { seed: u64, amplitude: f64, modes: usize },
    Prescribed(FieldData),
    /// Target of a manufactured problem sampled at `t = 0`.
    ManufacturedInit(FieldData),
}

fn default_cfl() -> f64 {
    0.4
}

fn default_dt_max() -> f64 {
    f64::INFINITY
}

fn is_inf(v: &f64) -> bool {
    v.is_infinite()
}

fn default_snapshots() -> usize {
    MIN_SNAPSHOTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub flux: FluxSpec,
    pub rhs: RhsSpec,
    pub grid: Grid,
    pub components: usize,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max", skip_serializing_if = "is_inf")]
    pub dt_max: f64,
    #[serde(default = "default_snapshots")]
    pub snapshot_count: usize,
    pub initial: InitialSpec,
}

impl SolveConfig {
    pub fn new(flux: FluxSpec, rhs: RhsSpec, grid: Grid, components: usize, t_end: f64, initial: InitialSpec) -> Self {
        SolveConfig {
            flux,
            rhs,
            grid,
            components,
            t_end,
            cfl: default_cfl(),
            dt_max: default_dt_max(),
            snapshot_count: MIN_SNAPSHOTS,
            initial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        self.flux.validate()?;
        if !self.flux.regular_at_zero() {
            return bad(format!(
                "{:?} with p = {}, q = {} is singular at zero gradient; use RegularizedPLaplace",
                self.flux.kind,
                self.flux.p,
                self.flux.q_or_p()
            ));
        }
        if self.components == 0 {
            return bad("need at least one component".into());
        }
        self.rhs.validate(self.components)?;
        if let Some(s) = &self.rhs.source {
            if s.grid.as_ref() != &self.grid {
                return bad("source table grid differs from the solve grid".into());
            }
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end = {} must be finite and >= 0", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl = {} must lie in (0, 1]", self.cfl));
        }
        if !(self.dt_max > 0.0) {
            return bad("dt_max must be positive".into());
        }
        if self.snapshot_count < MIN_SNAPSHOTS {
            return bad(format!("snapshot_count must be at least {MIN_SNAPSHOTS}"));
        }
        match &self.initial {
            InitialSpec::RandomSmooth { amplitude, modes, .. } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) || *modes == 0 {
                    return bad("RandomSmooth needs amplitude >= 0 and modes >= 1".into());
                }
            }
            InitialSpec::Prescribed(f) | InitialSpec::ManufacturedInit(f) => {
                if f.0.grid() != &self.grid || f.0.components() != self.components {
                    return bad("initial field does not match grid and components".into());
                }
                f.0.validate()?;
            }
        }
        Ok(())
    }

    /// Samples the initial data.
    pub fn initial_field(&self) -> Field {
        match &self.initial {
            InitialSpec::Prescribed(f) | InitialSpec::ManufacturedInit(f) => {
                let mut f = f.0.as_ref().clone();
                f.set_time(0.0);
                f
            }
            InitialSpec::RandomSmooth { seed, amplitude, modes } => {
                random_smooth(&self.grid, self.components, *seed, *amplitude, *modes)
            }
        }
    }
}

fn random_smooth(grid: &Grid, components: usize, seed: u64, amplitude: f64, modes: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let m = modes as i64;
    let periodic = grid.boundary() == Boundary::Periodic;
    let mut waves: Vec<[i64; 3]> = Vec::new();
    let range: Vec<i64> = if periodic { (-m..=m).collect() } else { (1..=m).collect() };
    for &a in &range {
        for &b in &range {
            for &c in if dim == 3 { &range[..] } else { &[0][..] } {
                let k = [a, b, c];
                if k.iter().any(|&v| v != 0) {
                    waves.push(k);
                }
            }
        }
    }
    // (component, amplitude, phase) for each wave
    let coeffs: Vec<Vec<(f64, f64)>> = waves
        .iter()
        .map(|k| {
            let k2 = k.iter().map(|v| (v * v) as f64).sum::<f64>();
            (0..components)
                .map(|_| {
                    let a = rng.random_range(-1.0..1.0) / k2;
                    let ph = rng.random_range(0.0..std::f64::consts::TAU);
                    (a, ph)
                })
                .collect()
        })
        .collect();
    let ext = grid.extent().to_vec();
    let mut f = Field::from_fn(Arc::new(grid.clone()), components, 0.0, |x, out| {
        out.fill(0.0);
        for (k, c) in waves.iter().zip(&coeffs) {
            if periodic {
                let arg: f64 = (0..dim).map(|a| std::f64::consts::TAU * k[a] as f64 * x[a] / ext[a]).sum();
                for (o, (a, ph)) in out.iter_mut().zip(c) {
                    *o += a * (arg + ph).cos();
                }
            } else {
                let prod: f64 = (0..dim)
                    .map(|a| (std::f64::consts::PI * k[a] as f64 * x[a] / ext[a]).sin())
                    .product();
                for (o, (a, _)) in out.iter_mut().zip(c) {
                    *o += a * prod;
                }
            }
        }
    });
    let peak = f.max_abs();
    if peak > 0.0 {
        let s = amplitude / peak;
        f.values_mut().iter_mut().for_each(|v| *v *= s);
    }
    f
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    BlowupDetected { time: f64 },
    Diverged { time: f64 },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: SolveConfig,
    pub series: SnapshotSeries,
    pub dt_history: Vec<f64>,
    pub status: RunStatus,
}

impl AsRef<SnapshotSeries> for RunRecord {
    fn as_ref(&self) -> &SnapshotSeries {
        &self.series
    }
}

impl RunRecord {
    pub fn snapshots(&self) -> &[Field] {
        self.series.fields()
    }

    pub fn require_completed(&self) -> Result<()> {
        match self.status {
            RunStatus::Completed => Ok(()),
            s => Err(Error::RunNotCompleted(format!("{s:?}"))),
        }
    }

    /// Writes `config.json`, `status.json`, `dt_history.csv` and `snapshot_NNNN.bin`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(p, e))
        };
        write("config.json", serde_json::to_string_pretty(&self.config)?)?;
        write("status.json", serde_json::to_string_pretty(&self.status)?)?;
        let mut csv = String::from("step,dt\n");
        for (i, dt) in self.dt_history.iter().enumerate() {
            csv.push_str(&format!("{i},{dt:e}\n"));
        }
        write("dt_history.csv", csv)?;
        for (k, f) in self.snapshots().iter().enumerate() {
            io::write_binary(&dir.join(format!("snapshot_{k:04}.bin")), f)?;
        }
        Ok(())
    }
}

/// Reads the `snapshot_NNNN.bin` files of a saved run, in order.
pub fn load_snapshots(dir: &Path) -> Result<Vec<Field>> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snapshot_") && n.ends_with(".bin"))
        })
        .collect();
    names.sort();
    names.iter().map(|p| io::read_binary(p)).collect()
}

struct Stepper<'a> {
    cfg: &'a SolveConfig,
    exec: Exec,
    grad: Vec<f64>,
    flux: Vec<f64>,
    div: Vec<f64>,
}

struct FluxPass {
    d_max: f64,
    grad_max: f64,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SolveConfig, exec: Exec) -> Self {
        let nodes = cfg.grid.node_count();
        let block = cfg.components * cfg.grid.dim();
        Stepper {
            cfg,
            exec,
            grad: vec![0.0; nodes * block],
            flux: vec![0.0; nodes * block],
            div: vec![0.0; nodes * cfg.components],
        }
    }

    fn flux_pass(&mut self, u: &[f64]) -> Result<FluxPass> {
        let g = &self.cfg.grid;
        gradient_raw(g, self.cfg.components, u, &mut self.grad, self.exec);
        let block = self.cfg.components * g.dim();
        let chunk = g.slab_len() * block;
        let grad = &self.grad;
        let spec = &self.cfg.flux;
        let parts = self.exec.map_chunks(&mut self.flux, chunk, |k, out| -> Result<(f64, f64)> {
            let base = k * chunk;
            let (mut d, mut gm) = (0.0f64, 0.0f64);
            for (j, o) in out.chunks_mut(block).enumerate() {
                let q = &grad[base + j * block..base + (j + 1) * block];
                d = d.max(spec.apply(q, o)?);
                gm = gm.max(q.iter().map(|v| v * v).sum::<f64>());
            }
            Ok((d, gm))
        });
        let mut pass = FluxPass {
            d_max: 0.0,
            grad_max: 0.0,
        };
        for p in parts {
            let (d, gm) = p?;
            pass.d_max = pass.d_max.max(d);
            pass.grad_max = pass.grad_max.max(gm);
        }
        pass.grad_max = pass.grad_max.sqrt();
        Ok(pass)
    }

    fn stable_dt(&self, d_max: f64) -> f64 {
        let g = &self.cfg.grid;
        let h2 = g.min_h().powi(2);
        let dt = self.cfg.cfl * h2 / (2.0 * g.dim() as f64 * d_max);
        dt.min(self.cfg.dt_max)
    }

    /// Writes `u + dt (div A + f)` into `next`; returns the largest `|u|` entry
    /// of the result (NaN if any entry is NaN).
    fn update(&mut self, u: &[f64], t: f64, dt: f64, next: &mut [f64]) -> f64 {
        let g = &self.cfg.grid;
        let n_c = self.cfg.components;
        divergence_raw(g, n_c, &self.flux, &mut self.div, self.exec);
        let block = n_c * g.dim();
        let slab = g.slab_len();
        let (grad, div, rhs) = (&self.grad, &self.div, &self.cfg.rhs);
        let zero_rhs = rhs.kind == RhsKind::Zero;
        let parts = self.exec.map_chunks(next, slab * n_c, |k, out| {
            let mut f = vec![0.0; n_c];
            let mut peak = 0.0f64;
            let mut nan = false;
            for (j, o) in out.chunks_mut(n_c).enumerate() {
                let node = k * slab + j;
                let un = &u[node * n_c..(node + 1) * n_c];
                if g.is_boundary_node(g.coords_of(node)) {
                    o.copy_from_slice(un);
                } else {
                    if zero_rhs {
                        f.fill(0.0);
                    } else {
                        let q = &grad[node * block..(node + 1) * block];
                        let g2 = q.iter().map(|v| v * v).sum();
                        rhs.eval_into(Some(node), un, g2, &g.position(node), t, &mut f);
                    }
                    for i in 0..n_c {
                        o[i] = un[i] + dt * (div[node * n_c + i] + f[i]);
                    }
                }
                for v in o.iter() {
                    nan |= v.is_nan();
                    peak = peak.max(v.abs());
                }
            }
            if nan {
                f64::NAN
            } else {
                peak
            }
        });
        parts.into_iter().fold(0.0, |m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) })
    }
}

/// `cfl * min h^2 / (2 n D_max)`, capped by `dt_max`.
pub fn stable_dt(state: &Field, config: &SolveConfig) -> Result<f64> {
    let mut s = Stepper::new(config, Exec::default());
    let pass = s.flux_pass(state.values())?;
    Ok(s.stable_dt(pass.d_max))
}

/// One explicit Euler step of size `dt`.
pub fn step(state: &Field, config: &SolveConfig, dt: f64) -> Result<Field> {
    step_with(state, config, dt, Exec::default())
}

pub fn step_with(state: &Field, config: &SolveConfig, dt: f64, exec: Exec) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("step size {dt} must be positive")));
    }
    let mut s = Stepper::new(config, exec);
    s.flux_pass(state.values())?;
    let mut next = vec![0.0; state.values().len()];
    let peak = s.update(state.values(), state.time(), dt, &mut next);
    let t = state.time() + dt;
    if !peak.is_finite() {
        return Err(Error::Diverged { time: t });
    }
    Field::from_values(state.grid_arc().clone(), state.components(), next, t)
}

pub fn run(config: &SolveConfig) -> Result<RunRecord> {
    run_with(config, Exec::default())
}

pub fn run_with(config: &SolveConfig, exec: Exec) -> Result<RunRecord> {
    config.validate()?;
    let mut u = config.initial_field();
    let mut snaps = vec![u.clone()];
    let mut dts = Vec::new();
    let mut status = RunStatus::Completed;
    if config.t_end > 0.0 {
        let k = config.snapshot_count;
        let target = |j: usize| {
            if j + 1 == k {
                config.t_end
            } else {
                config.t_end * j as f64 / (k - 1) as f64
            }
        };
        let mut s = Stepper::new(config, exec);
        let mut next = vec![0.0; u.values().len()];
        let mut t = 0.0;
        let mut j = 1;
        while j < k {
            let pass = match s.flux_pass(u.values()) {
                Ok(p) => p,
                Err(_) => {
                    status = RunStatus::Diverged { time: t };
                    break;
                }
            };
            if pass.grad_max > BLOWUP_THRESHOLD {
                status = RunStatus::BlowupDetected { time: t };
                break;
            }
            if !pass.grad_max.is_finite() || pass.d_max.is_nan() {
                status = RunStatus::Diverged { time: t };
                break;
            }
            let stable = s.stable_dt(pass.d_max);
            if !(stable >= DT_FLOOR) {
                status = RunStatus::Diverged { time: t };
                break;
            }
            let remaining = target(j) - t;
            let (dt, hit) = if stable >= remaining {
                (remaining, true)
            } else if 2.0 * stable > remaining {
                (0.5 * remaining, false)
            } else {
                (stable, false)
            };
            let peak = s.update(u.values(), t, dt, &mut next);
            t = if hit { target(j) } else { t + dt };
            dts.push(dt);
            if peak.is_nan() {
                status = RunStatus::Diverged { time: t };
                break;
            }
            if peak > BLOWUP_THRESHOLD {
                status = RunStatus::BlowupDetected { time: t };
                break;
            }
            std::mem::swap(u.values_mut_vec(), &mut next);
            u.set_time(t);
            if hit {
                snaps.push(u.clone());
                j += 1;
            }
        }
    }
    Ok(RunRecord {
        config: config.clone(),
        series: SnapshotSeries::new_with(snaps, exec)?,
        dt_history: dts,
        status,
    })
}
