//! Cylinder-localized energy quantities evaluated on computed runs.
//!
//! Every "<= C ..." statement here is checked with a fitted constant: the
//! reports carry the smallest constant that makes the inequality hold, and
//! campaigns compare those constants across runs and grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{gradient_raw, slice_integral, snapshots_in, time_weights, CutoffFn, CylinderSpec, NodeSample, SnapshotSeries};
use crate::regimes::{self, ProblemParams};
use crate::solver::RunRecord;

/// Floor applied to `|grad u|` inside negative powers.
pub const DELTA_G: f64 = 1e-14;

/// Relative round-off allowance of the Hölder sandwich.
pub const HOLDER_TOL: f64 = 1e-10;

fn pow_floored(g: f64, e: f64) -> f64 {
    if e < 0.0 {
        g.max(DELTA_G).powf(e)
    } else if e == 0.0 {
        1.0
    } else {
        g.powf(e)
    }
}

/// `integral over Q_R of |grad u|^exponent`.
pub fn psi<S: AsRef<SnapshotSeries>>(r: &S, c: &CylinderSpec, exponent: f64) -> Result<f64> {
    if !(exponent > 0.0) {
        return Err(Error::InvalidParams(format!("psi exponent {exponent} must be positive")));
    }
    crate::mesh::cylinder_integrate(r, c, |ns| ns.grad_mag.powf(exponent))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub s: f64,
    pub rho: f64,
    pub cylinder: CylinderSpec,
    #[serde(rename = "M")]
    pub m: f64,
    /// `sup_t integral over B_R of |grad u|^(s+2) eta^2`.
    pub lhs_sup: f64,
    /// `integral over Q_R of |grad(|grad u|^((p+s)/2) eta)|^2`.
    pub lhs_grad: f64,
    /// `integral over Q_R of 1 + |grad u|^(s+M)`.
    pub rhs_raw: f64,
    /// `(1 + |s|^3)/(R - rho)^M`.
    pub gap_factor: f64,
    /// Smallest `c` for which the inequality holds on this run.
    pub c_required: f64,
    pub c: f64,
    pub rhs_scaled: f64,
    pub satisfied: bool,
}

impl EnergyReport {
    pub fn lhs(&self) -> f64 {
        self.lhs_sup + self.lhs_grad
    }

    /// Re-evaluates the right side with constant `c`.
    pub fn with_constant(mut self, c: f64) -> Self {
        self.c = c;
        self.rhs_scaled = c * self.gap_factor * self.rhs_raw;
        self.satisfied = self.lhs() <= self.rhs_scaled;
        self
    }

    pub const CSV_HEADER: &'static str =
        "s,rho,R,M,lhs_sup,lhs_grad,rhs_raw,gap_factor,c_required,c,rhs_scaled,satisfied";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.s,
            self.rho,
            self.cylinder.radius,
            self.m,
            self.lhs_sup,
            self.lhs_grad,
            self.rhs_raw,
            self.gap_factor,
            self.c_required,
            self.c,
            self.rhs_scaled,
            self.satisfied
        )
    }
}

/// Applies the `s`-range guard that the energy estimate needs.
pub fn check_s_range(s: f64, params: &ProblemParams) -> Result<()> {
    let lo = if params.c2_zero {
        params.p - 2.0 * params.w - 2.0
    } else {
        params.p - 2.0
    };
    if s > lo && s + 2.0 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("s = {s} must exceed {}", lo.max(-2.0))))
    }
}

/// Per-snapshot data shared by the energy and Hölder evaluations.
struct Localized<'a> {
    series: &'a SnapshotSeries,
    eta: CutoffFn,
    weights: Vec<f64>,
    window: Vec<usize>,
    nodes: Vec<usize>,
}

impl<'a> Localized<'a> {
    fn new(series: &'a SnapshotSeries, outer: &CylinderSpec, rho: f64) -> Result<Self> {
        outer.check_inside(series)?;
        let times = series.times();
        let window = snapshots_in(&times, outer.t_start(), outer.t0);
        if window.len() < 3 {
            return Err(Error::InsufficientSnapshots { found: window.len() });
        }
        Ok(Localized {
            series,
            eta: CutoffFn::new(outer, rho)?,
            weights: time_weights(&times, outer.t_start(), outer.t0),
            window,
            nodes: outer.ball_nodes(series.grid()),
        })
    }

    fn slice<F: Fn(&NodeSample) -> f64 + Sync>(&self, k: usize, f: F) -> f64 {
        slice_integral(self.series, k, &self.nodes, &f, Exec::default())
    }

    /// Snapshots that carry weight in the outer time integral.
    fn weighted(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().copied().enumerate().filter(|(_, w)| *w > 0.0)
    }

    /// `integral over B_R of |grad u|^(s+2) eta^2` at snapshot `k`.
    fn a_slice(&self, k: usize, s: f64) -> f64 {
        let eta = &self.eta;
        self.slice(k, |ns| pow_floored(ns.grad_mag, s + 2.0) * eta.value(&ns.x, ns.t).powi(2))
    }
}

pub fn energy_inequality_check<S: AsRef<SnapshotSeries>>(
    r: &S,
    s: f64,
    rho: f64,
    outer: &CylinderSpec,
    params: &ProblemParams,
) -> Result<EnergyReport> {
    check_s_range(s, params)?;
    let series = r.as_ref();
    let loc = Localized::new(series, outer, rho)?;
    let g = series.grid();
    let m = regimes::compute_m_general(params);
    let p = params.p;
    let half = 0.5 * (p + s);

    let lhs_sup = loc
        .window
        .iter()
        .map(|&k| loc.a_slice(k, s))
        .fold(0.0, f64::max);

    let dim = g.dim();
    let mut mag_grad = vec![0.0; g.node_count() * dim];
    let mut lhs_grad = 0.0;
    for (k, w) in loc.weighted() {
        gradient_raw(g, 1, series.grad_mag(k), &mut mag_grad, Exec::default());
        let mg = &mag_grad;
        let eta = &loc.eta;
        let v = loc.slice(k, |ns| {
            let e = eta.value(&ns.x, ns.t);
            let de = eta.gradient(&ns.x, ns.t);
            let a = half * pow_floored(ns.grad_mag, half - 1.0) * e;
            let b = pow_floored(ns.grad_mag, half);
            (0..dim)
                .map(|ax| {
                    let gi = a * mg[ns.node * dim + ax] + b * de[ax];
                    gi * gi
                })
                .sum()
        });
        lhs_grad += w * v;
    }

    let rhs_raw = loc
        .weighted()
        .map(|(k, w)| w * loc.slice(k, |ns| 1.0 + pow_floored(ns.grad_mag, s + m)))
        .sum::<f64>();
    let gap_factor = (1.0 + s.abs().powi(3)) / (outer.radius - rho).powf(m);
    let c_required = (lhs_sup + lhs_grad) / (gap_factor * rhs_raw);
    Ok(EnergyReport {
        s,
        rho,
        cylinder: outer.clone(),
        m,
        lhs_sup,
        lhs_grad,
        rhs_raw,
        gap_factor,
        c_required,
        c: c_required,
        rhs_scaled: 0.0,
        satisfied: false,
    }
    .with_constant(c_required))
}

/// Largest `c_required` over a family, applied to every member.
pub fn fit_energy_constant(reports: Vec<EnergyReport>) -> (f64, Vec<EnergyReport>) {
    let c = reports.iter().map(|r| r.c_required).fold(0.0, f64::max);
    (c, reports.into_iter().map(|r| r.with_constant(c)).collect())
}

/// The reverse-Hölder step evaluated with the common quadrature.
///
/// With `A_k = integral |grad u|^(s+2) eta^2` and
/// `B_k = integral (|grad u|^((p+s)/2) eta)^(2n/(n-2))` on slice `k`:
/// `lower <= middle <= upper` where `lower` integrates `|grad u|^(p+s+(s+2)2/n)`
/// over `Q_rho`, `middle = sum w_k A_k^(2/n) B_k^((n-2)/n)` and
/// `upper = (max A_k)^(2/n) sum w_k B_k^((n-2)/n)`.
///
/// The inner time window is snapped inward to stored snapshot times so that
/// `eta = 1` at every node and snapshot entering `lower`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub s: f64,
    pub rho: f64,
    pub radius: f64,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub violation: f64,
    pub holds: bool,
}

pub fn holder_sandwich<S: AsRef<SnapshotSeries>>(
    r: &S,
    s: f64,
    rho: f64,
    outer: &CylinderSpec,
    params: &ProblemParams,
) -> Result<HolderReport> {
    check_s_range(s, params)?;
    let series = r.as_ref();
    let n = series.grid().dim();
    if n < 3 {
        return Err(Error::InvalidParams("the Sobolev exponent needs n >= 3".into()));
    }
    let loc = Localized::new(series, outer, rho)?;
    let nf = n as f64;
    let p = params.p;
    let half = 0.5 * (p + s);
    let star = 2.0 * nf / (nf - 2.0);

    let mut sup_a = 0.0f64;
    let (mut middle, mut b_sum) = (0.0, 0.0);
    for (k, w) in loc.weighted() {
        let a = loc.a_slice(k, s);
        let eta = &loc.eta;
        let b = loc.slice(k, |ns| (pow_floored(ns.grad_mag, half) * eta.value(&ns.x, ns.t)).powf(star));
        let bp = b.powf((nf - 2.0) / nf);
        middle += w * a.powf(2.0 / nf) * bp;
        b_sum += w * bp;
        sup_a = sup_a.max(a);
    }
    let upper = sup_a.powf(2.0 / nf) * b_sum;

    let times = series.times();
    let inner = outer.with_radius(rho);
    let inside = snapshots_in(&times, inner.t_start(), inner.t0);
    let lower = match (inside.iter().find(|&&k| times[k] >= inner.t_start()), inside.last()) {
        (Some(&a), Some(&b)) if b > a => {
            let nodes = inner.ball_nodes(series.grid());
            let wts = time_weights(&times, times[a], times[b]);
            let e = p + s + (s + 2.0) * 2.0 / nf;
            wts.iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(k, w)| {
                    w * slice_integral(series, k, &nodes, &|ns: &NodeSample| pow_floored(ns.grad_mag, e), Exec::default())
                })
                .sum()
        }
        _ => 0.0,
    };

    let rel = |a: f64, b: f64| if a > b { (a - b) / b.abs().max(f64::MIN_POSITIVE) } else { 0.0 };
    let violation = rel(lower, middle).max(rel(middle, upper));
    Ok(HolderReport {
        s,
        rho,
        radius: outer.radius,
        lower,
        middle,
        upper,
        violation,
        holds: violation <= HOLDER_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunBound {
    /// `max |grad u|` over nodes and snapshots in `Q_{R0/2}`.
    pub lhs: f64,
    /// `(integral over Q_R0 of |grad u|^(s0+M))^(1/kappa)`.
    pub rhs_base: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub params: ProblemParams,
    pub theorem: regimes::Theorem,
    #[serde(rename = "M")]
    pub m: f64,
    pub s0: f64,
    pub kappa: f64,
    pub exponent: f64,
    pub cylinder: CylinderSpec,
    pub per_run: Vec<RunBound>,
    #[serde(rename = "fitted_C")]
    pub fitted_c: f64,
    /// `max/min` of the per-run ratios (1 when all vanish).
    pub spread: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "run,lhs,rhs_base,ratio";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for (i, r) in self.per_run.iter().enumerate() {
            s.push_str(&format!("{i},{:e},{:e},{:e}\n", r.lhs, r.rhs_base, r.ratio));
        }
        s
    }
}

/// `max |grad u|` over `B_rho x [t0 - rho^e, t0]`.
pub fn local_grad_max<S: AsRef<SnapshotSeries>>(r: &S, c: &CylinderSpec) -> Result<f64> {
    let series = r.as_ref();
    c.check_inside(series)?;
    let nodes = c.ball_nodes(series.grid());
    let times = series.times();
    Ok(snapshots_in(&times, c.t_start(), c.t0)
        .into_iter()
        .flat_map(|k| nodes.iter().map(move |&i| series.grad_mag(k)[i]))
        .fold(0.0, f64::max))
}

/// Fits the constant of the final gradient bound across a campaign.
///
/// `cylinder` is `Q_R0`; the left side is taken on the concentric `Q_{R0/2}`.
pub fn verify_bound(campaign: &[RunRecord], params: &ProblemParams, cylinder: &CylinderSpec) -> Result<BoundReport> {
    params.validate()?;
    let report = regimes::assess(params);
    if !report.is_covered() {
        return Err(Error::Inadmissible(report.violated_conditions));
    }
    if !(cylinder.radius < 1.0) {
        return Err(Error::InvalidParams(format!("R0 = {} must be < 1", cylinder.radius)));
    }
    if campaign.is_empty() {
        return Err(Error::InvalidParams("empty campaign".into()));
    }
    let (s0, m) = (params.s0, report.m);
    let exponent = regimes::bound_exponent(s0, params.p, m, params.n)?;
    let half = cylinder.with_radius(0.5 * cylinder.radius);
    let per_run = campaign
        .iter()
        .map(|run| {
            run.require_completed()?;
            let lhs = local_grad_max(run, &half)?;
            let base = psi(run, cylinder, s0 + m)?.powf(exponent);
            Ok(RunBound {
                lhs,
                rhs_base: base,
                ratio: lhs / (base + 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_c = per_run.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = per_run.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = if fitted_c == 0.0 { 1.0 } else { fitted_c / min };
    Ok(BoundReport {
        params: params.clone(),
        theorem: report.theorem_applied,
        m,
        s0,
        kappa: 1.0 / exponent,
        exponent,
        cylinder: cylinder.clone(),
        per_run,
        fitted_c,
        spread,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserLevel {
    pub i: usize,
    pub radius: f64,
    pub exponent: f64,
    pub psi: f64,
    /// `C^(i+1) psi_i^beta + C^(i+1)` for `i < levels`, bounding `psi_{i+1}`.
    pub chain_rhs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserReport {
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub levels: Vec<MoserLevel>,
    pub holds: bool,
}

impl MoserReport {
    pub const CSV_HEADER: &'static str = "i,radius,exponent,psi,chain_rhs";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for l in &self.levels {
            let rhs = l.chain_rhs.map_or(String::new(), |v| format!("{v:e}"));
            s.push_str(&format!("{},{},{},{:e},{rhs}\n", l.i, l.radius, l.exponent, l.psi));
        }
        s
    }
}

/// Smallest nodes-per-axis count of `B_{R0/2}` for a chain check.
pub const MOSER_MIN_NODES: f64 = 8.0;

/// `psi_i` on `R_i = (R0/2)(1 + 2^-i)` with exponents `s_i + M`, and the
/// smallest `C >= 1` with `psi_{i+1} <= C^(i+1) (psi_i^beta + 1)` at every level.
///
/// The level-`i` constant is `C^(i+1)` rather than `C^i` so that the first
/// link depends on `C` at all.
pub fn moser_chain_check<S: AsRef<SnapshotSeries>>(
    r: &S,
    params: &ProblemParams,
    cylinder: &CylinderSpec,
    levels: usize,
) -> Result<MoserReport> {
    if levels < 2 {
        return Err(Error::InvalidParams("need at least 2 levels".into()));
    }
    let series = r.as_ref();
    let m = regimes::assess(params).m;
    let ladder = regimes::build_ladder(params.s0, params.p, m, params.n, levels)?;
    let r0 = cylinder.radius;
    let h = series.grid().min_h();
    if r0 / h < MOSER_MIN_NODES {
        return Err(Error::GridTooCoarse(format!(
            "B_(R0/2) spans {:.2} nodes per axis, need {MOSER_MIN_NODES}",
            r0 / h
        )));
    }
    let mut out = Vec::with_capacity(levels + 1);
    for i in 0..=levels {
        let radius = 0.5 * r0 * (1.0 + 0.5f64.powi(i as i32));
        let exponent = ladder.exponent(i);
        out.push(MoserLevel {
            i,
            radius,
            exponent,
            psi: psi(series, &cylinder.with_radius(radius), exponent)?,
            chain_rhs: None,
        });
    }
    let beta = ladder.beta;
    let c = (0..levels)
        .map(|i| (out[i + 1].psi / (out[i].psi.powf(beta) + 1.0)).powf(1.0 / (i + 1) as f64))
        .fold(1.0, f64::max);
    let mut holds = true;
    for i in 0..levels {
        let ci = c.powi(i as i32 + 1);
        let rhs = ci * out[i].psi.powf(beta) + ci;
        holds &= out[i + 1].psi <= rhs * (1.0 + 1e-12);
        out[i].chain_rhs = Some(rhs);
    }
    Ok(MoserReport {
        beta,
        c,
        levels: out,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{FluxSpec, RhsSpec};
    use crate::mesh::{Boundary, Field, Grid};
    use crate::solver::{run, FieldData, InitialSpec, SolveConfig};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn prescribed(cells: usize, snaps: usize, t_end: f64, comps: usize, f: impl Fn(&[f64; 3], f64, &mut [f64])) -> SnapshotSeries {
        let g = Arc::new(Grid::cube(3, cells, 1.0, Boundary::Periodic).unwrap());
        let fields = (0..snaps)
            .map(|k| {
                let t = t_end * k as f64 / (snaps - 1) as f64;
                Field::from_fn(g.clone(), comps, t, |x, o| f(x, t, o))
            })
            .collect();
        SnapshotSeries::new(fields).unwrap()
    }

    fn cyl(r: f64, t0: f64) -> CylinderSpec {
        CylinderSpec::new(vec![0.5; 3], t0, r, 2.0)
    }

    fn heat_params() -> ProblemParams {
        ProblemParams::p_laplace(3, 1, 2.0, 1.0)
    }

    fn heat_run(cells: usize, amplitude: f64) -> RunRecord {
        let cfg = SolveConfig::new(
            FluxSpec::p_laplace(2.0),
            RhsSpec::zero(),
            Grid::cube(3, cells, 1.0, Boundary::Periodic).unwrap(),
            1,
            0.09,
            InitialSpec::RandomSmooth {
                seed: 3,
                amplitude,
                modes: 2,
            },
        );
        run(&cfg).unwrap()
    }

    #[test]
    fn psi_examples() {
        let zero = prescribed(16, 9, 0.09, 1, |_, _, o| o[0] = 1.0);
        assert_eq!(psi(&zero, &cyl(0.3, 0.09), 2.0).unwrap(), 0.0);
        let lin = prescribed(16, 9, 0.09, 1, |x, _, o| o[0] = (2.0 * PI * x[0]).sin() / (2.0 * PI));
        assert!(psi(&lin, &cyl(0.3, 0.09), 0.0).is_err());
    }

    #[test]
    fn psi_of_unit_gradient_is_cylinder_measure() {
        // u = x_1 on a Dirichlet grid has exactly unit discrete gradient.
        let g = Arc::new(Grid::cube(3, 32, 1.0, Boundary::Dirichlet).unwrap());
        let fields = (0..9)
            .map(|k| Field::from_fn(g.clone(), 1, 0.09 * k as f64 / 8.0, |x, o| o[0] = x[0]))
            .collect();
        let s = SnapshotSeries::new(fields).unwrap();
        let c = cyl(0.3, 0.09);
        let v = psi(&s, &c, 3.0).unwrap();
        let nodes = c.ball_nodes(s.grid()).len() as f64 * s.grid().cell_volume();
        assert!((v - nodes * 0.09).abs() < 1e-12 * v);
        let exact = 4.0 / 3.0 * PI * 0.027 * 0.09;
        assert!((v - exact).abs() < 0.03 * exact);
    }

    #[test]
    fn psi_of_radial_profile_matches_closed_form() {
        // u = |x - x0|^2/2 has |grad u| = |x - x0|; integral of r^e over B_R is 4 pi R^(e+3)/(e+3).
        let g = Arc::new(Grid::cube(3, 64, 1.0, Boundary::Dirichlet).unwrap());
        let fields = (0..5)
            .map(|k| {
                Field::from_fn(g.clone(), 1, 0.09 * k as f64 / 4.0, |x, o| {
                    o[0] = 0.5 * (0..3).map(|a| (x[a] - 0.5).powi(2)).sum::<f64>()
                })
            })
            .collect();
        let s = SnapshotSeries::new(fields).unwrap();
        let c = cyl(0.3, 0.09);
        let e = 2.0;
        let exact = 4.0 * PI * 0.3f64.powf(e + 3.0) / (e + 3.0) * 0.09;
        let v = psi(&s, &c, e).unwrap();
        assert!((v - exact).abs() < 0.03 * exact, "{v} vs {exact}");
    }

    #[test]
    fn psi_is_monotone_in_the_domain() {
        let s = prescribed(20, 65, 0.16, 2, |x, t, o| {
            o[0] = (2.0 * PI * x[0]).sin() * (1.0 + t);
            o[1] = (2.0 * PI * (x[1] + x[2])).cos();
        });
        let mut last = 0.0;
        for r in [0.1, 0.2, 0.3, 0.4] {
            let v = psi(&s, &cyl(r, 0.16), 2.5).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn constant_run_gives_zero_energy_terms() {
        let s = prescribed(16, 9, 0.09, 2, |_, _, o| o.fill(0.7));
        let r = energy_inequality_check(&s, 0.0, 0.15, &cyl(0.3, 0.09), &heat_params()).unwrap();
        assert_eq!((r.lhs_sup, r.lhs_grad), (0.0, 0.0));
        assert!(r.rhs_raw > 0.0);
        assert!(r.clone().with_constant(0.0).satisfied);
        assert!(r.with_constant(1e-6).satisfied);
    }

    #[test]
    fn energy_terms_are_invariant_under_component_permutation() {
        let f = |x: &[f64; 3], t: f64| [(2.0 * PI * x[0]).sin() * (1.0 - t), (2.0 * PI * x[1]).cos() + x[2]];
        let a = prescribed(16, 9, 0.09, 2, |x, t, o| o.copy_from_slice(&f(x, t)));
        let b = prescribed(16, 9, 0.09, 2, |x, t, o| {
            let v = f(x, t);
            o.copy_from_slice(&[v[1], v[0]]);
        });
        let p = heat_params();
        let ra = energy_inequality_check(&a, 0.5, 0.15, &cyl(0.3, 0.09), &p).unwrap();
        let rb = energy_inequality_check(&b, 0.5, 0.15, &cyl(0.3, 0.09), &p).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn gap_factor_scales_like_inverse_power() {
        let s = prescribed(16, 9, 0.09, 1, |x, _, o| o[0] = (2.0 * PI * x[0]).sin());
        let p = heat_params();
        let r1 = energy_inequality_check(&s, 0.0, 0.2, &cyl(0.3, 0.09), &p).unwrap();
        let r2 = energy_inequality_check(&s, 0.0, 0.25, &cyl(0.3, 0.09), &p).unwrap();
        assert!((r2.gap_factor / r1.gap_factor - 2f64.powf(r1.m)).abs() < 1e-9);
        assert_eq!(r1.rhs_raw, r2.rhs_raw);
    }

    #[test]
    fn rejects_s_outside_range() {
        let s = prescribed(8, 9, 0.09, 1, |_, _, o| o[0] = 0.0);
        let p = heat_params().with_c2_zero(false);
        assert!(energy_inequality_check(&s, 0.0, 0.15, &cyl(0.3, 0.09), &p).is_err());
        assert!(energy_inequality_check(&s, 0.1, 0.15, &cyl(0.3, 0.09), &p).is_ok());
    }

    #[test]
    fn heat_energy_ratio_is_stable_under_refinement() {
        let p = heat_params();
        let c = |cells| {
            let r = heat_run(cells, 1.0);
            energy_inequality_check(&r, 0.0, 0.15, &cyl(0.3, 0.09), &p).unwrap().c_required
        };
        let (a, b) = (c(16), c(32));
        assert!(a > 0.0 && b > 0.0);
        assert!((b / a - 1.0).abs() <= 0.2, "{a} vs {b}");
    }

    #[test]
    fn holder_sandwich_holds_on_heat_run() {
        let r = heat_run(16, 2.0);
        for s in [0.0, 0.5, 1.5] {
            let h = holder_sandwich(&r, s, 0.15, &cyl(0.3, 0.09), &heat_params()).unwrap();
            assert!(h.holds, "{h:?}");
            assert!(h.lower > 0.0 && h.lower <= h.middle && h.middle <= h.upper);
        }
    }

    #[test]
    fn zero_run_bound_has_zero_constant() {
        let cfg = SolveConfig::new(
            FluxSpec::p_laplace(2.0),
            RhsSpec::zero(),
            Grid::cube(3, 8, 1.0, Boundary::Periodic).unwrap(),
            1,
            0.09,
            InitialSpec::Prescribed(FieldData(Arc::new(Field::zeros(
                Arc::new(Grid::cube(3, 8, 1.0, Boundary::Periodic).unwrap()),
                1,
            )))),
        );
        let rec = run(&cfg).unwrap();
        let b = verify_bound(&[rec], &heat_params(), &cyl(0.3, 0.09)).unwrap();
        assert_eq!(b.fitted_c, 0.0);
        assert_eq!(b.per_run[0].lhs, 0.0);
    }

    #[test]
    fn heat_bound_uses_ladder_exponent() {
        let rec = heat_run(16, 1.0);
        let p = heat_params();
        let b = verify_bound(&[rec], &p, &cyl(0.3, 0.09)).unwrap();
        assert_eq!(b.exponent, regimes::bound_exponent(0.0, 2.0, 2.0, 3).unwrap());
        assert_eq!(b.exponent, 0.5);
        assert!(b.per_run[0].lhs > 0.0 && b.per_run[0].rhs_base > 0.0);
        assert!(b.fitted_c.is_finite() && b.fitted_c > 0.0);
        let bad = ProblemParams::p_laplace(3, 1, 2.0, 2.0).with_s0(-0.5);
        assert!(matches!(
            verify_bound(&[heat_run(8, 1.0)], &bad, &cyl(0.3, 0.09)),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn moser_chain_on_unit_gradient() {
        let g = Arc::new(Grid::cube(3, 64, 1.0, Boundary::Dirichlet).unwrap());
        let fields = (0..9)
            .map(|k| Field::from_fn(g.clone(), 1, 0.09 * k as f64 / 8.0, |x, o| o[0] = x[0]))
            .collect();
        let s = SnapshotSeries::new(fields).unwrap();
        let rep = moser_chain_check(&s, &heat_params(), &cyl(0.3, 0.09), 4).unwrap();
        assert!(rep.holds);
        for w in rep.levels.windows(2) {
            assert!(w[1].psi < w[0].psi);
        }
        let coarse = prescribed(16, 9, 0.09, 1, |x, _, o| o[0] = x[0]);
        assert!(matches!(
            moser_chain_check(&coarse, &heat_params(), &cyl(0.3, 0.09), 4),
            Err(Error::GridTooCoarse(_))
        ));
    }
}
