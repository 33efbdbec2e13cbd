use std::f64::consts::PI;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::psi;
use crate::flux::{flux_eval, flux_jacobian_bounds, jacobian, FluxSpec, RhsSpec};
use crate::mesh::{Boundary, CylinderSpec, Field, Grid, SnapshotSeries};
use crate::regimes::{build_ladder, classify_thm1, ladder_closed_form, Theorem};
use crate::solver::{run, stable_dt, FieldData, InitialSpec, SolveConfig};

use super::ladder::{beta_pow, ladder_oracle_exact, random_admissible_tuples, relative_error};
use super::mms::{manufactured_problem, mms_error, HeatMode};
use super::struwe::struwe_residual;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, detail: String) -> OracleOutcome {
    OracleOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

fn thresholds() -> OracleOutcome {
    let mut worst = String::new();
    let mut ok = true;
    for p in [1.6, 2.0, 2.5, 3.0] {
        let edge = p - 0.6;
        let below = classify_thm1(p, edge - 1e-9, p).theorem_applied == Theorem::Thm1Case2;
        let at = classify_thm1(p, edge, p).theorem_applied != Theorem::Thm1Case2;
        ok &= below && at;
        if !(below && at) {
            worst = format!("p = {p}: edge {edge} misclassified");
        }
    }
    ok &= classify_thm1(2.0, 1.4, 2.0).theorem_applied != Theorem::Thm1Case2;
    outcome("case-2 threshold w = p - 3/5", ok, worst)
}

fn ladders() -> OracleOutcome {
    let mut worst: f64 = 0.0;
    let mut ratio_err: f64 = 0.0;
    let mut limit_err: f64 = 0.0;
    let mut closed: f64 = 0.0;
    for t in random_admissible_tuples(200, 2024) {
        let exact = ladder_oracle_exact(t.s0, t.p, t.m, t.n, 60).expect("admissible tuple");
        let fl = build_ladder(t.s0, t.p, t.m, t.n, 60).expect("admissible tuple");
        for (i, (a, b)) in fl.s.iter().zip(&exact).enumerate() {
            let b = b.to_f64().unwrap();
            worst = worst.max(relative_error(*a, b));
            closed = closed.max(relative_error(ladder_closed_form(t.s0, t.p, t.m, t.n, i), b));
        }
        let k = crate::regimes::kappa(t.s0, t.p, t.m, t.n);
        let r60 = (&exact[60] / beta_pow(t.n, 60)).to_f64().unwrap();
        ratio_err = ratio_err.max((r60 - k).abs());
        let m = num_rational::BigRational::from_float(t.m).unwrap();
        let lim = (beta_pow(t.n, 60) / (&exact[60] + m)).to_f64().unwrap();
        limit_err = limit_err.max((lim - 1.0 / k).abs());
    }
    outcome(
        "ladder vs exact rational iteration",
        worst <= 1e-12 && closed <= 1e-12 && ratio_err <= 1e-6 && limit_err <= 1e-6,
        format!("float {worst:.2e}, closed form {closed:.2e}, s_60/beta^60 - kappa {ratio_err:.2e}, exponent limit {limit_err:.2e}"),
    )
}

fn flux_jacobians() -> OracleOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let mut window: f64 = 0.0;
    for k in 0..100 {
        let p: f64 = rng.random_range(1.3..4.0);
        let spec = match k % 3 {
            0 => FluxSpec::p_laplace(p),
            1 => FluxSpec::double_power(p, rng.random_range(1.3..4.0)),
            _ => FluxSpec::regularized(p, rng.random_range(0.05..1.0)),
        };
        let q: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let j = jacobian(&spec, &q).unwrap();
        let scale = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = 6e-6;
        for b in 0..6 {
            let (mut qp, mut qm) = (q.clone(), q.clone());
            qp[b] += h;
            qm[b] -= h;
            let (fp, fm) = (flux_eval(&spec, &qp).unwrap(), flux_eval(&spec, &qm).unwrap());
            for a in 0..6 {
                worst = worst.max(((fp[a] - fm[a]) / (2.0 * h) - j[a * 6 + b]).abs() / scale);
            }
        }
        if k % 3 == 0 {
            let (lo, hi) = flux_jacobian_bounds(&spec, &q).unwrap();
            let s = q.iter().map(|v| v * v).sum::<f64>().powf(0.5 * (p - 2.0));
            window = window
                .max((lo - (p - 1.0).min(1.0) * s).abs() / s)
                .max((hi - (p - 1.0).max(1.0) * s).abs() / s);
        }
    }
    let dp = flux_jacobian_bounds(&FluxSpec::double_power(2.0, 4.0), &[1.0, 0.0]).unwrap();
    outcome(
        "flux Jacobian radial/tangential split",
        worst <= 1e-6 && window <= 1e-13 && dp == (2.0, 4.0),
        format!("finite differences {worst:.2e}, p-Laplace window {window:.2e}, double power at |Q| = 1 {dp:?}"),
    )
}

fn steep_dt() -> OracleOutcome {
    let grid = Grid::cube(3, 16, 1.0, Boundary::Dirichlet).unwrap();
    let g = Arc::new(grid.clone());
    let cfg = SolveConfig::new(
        FluxSpec::p_laplace(3.0),
        RhsSpec::zero(),
        grid,
        1,
        0.1,
        InitialSpec::RandomSmooth {
            seed: 0,
            amplitude: 1.0,
            modes: 1,
        },
    );
    let dt = |a: f64| stable_dt(&Field::from_fn(g.clone(), 1, 0.0, |x, o| o[0] = a * x[0]), &cfg).unwrap();
    let r = dt(10.0) / dt(100.0);
    outcome("stable dt scales like |grad u|^(2-p)", (r - 10.0).abs() < 1e-9, format!("dt ratio {r}"))
}

fn heat_decay(cells: usize) -> OracleOutcome {
    let grid = Grid::cube(3, cells, 1.0, Boundary::Periodic).unwrap();
    let g = Arc::new(grid.clone());
    let init = Field::from_fn(g.clone(), 1, 0.0, |x, o| o[0] = (2.0 * PI * x[0]).sin());
    let mut cfg = SolveConfig::new(
        FluxSpec::p_laplace(2.0),
        RhsSpec::zero(),
        grid,
        1,
        0.02,
        InitialSpec::Prescribed(FieldData(Arc::new(init.clone()))),
    );
    cfg.cfl = 0.2;
    let rec = run(&cfg).unwrap();
    let node = g.index_of([cells / 4 + 1, 0, 0]);
    let ratio = rec.snapshots().last().unwrap().node(node)[0] / init.node(node)[0];
    let h = 1.0 / cells as f64;
    let discrete = (-((2.0 * PI * h).sin() / h).powi(2) * 0.02).exp();
    outcome(
        "heat eigenfunction decay",
        (ratio / discrete - 1.0).abs() < 2e-3,
        format!("decay {ratio:.6}, stencil eigenvalue predicts {discrete:.6}, continuum {:.6}", (-4.0 * PI * PI * 0.02f64).exp()),
    )
}

fn struwe(cells: usize) -> OracleOutcome {
    let g = Grid::cube(3, cells, 4.0, Boundary::Dirichlet).unwrap();
    match struwe_residual(&g, (0.5, 1.5)) {
        Ok(r) => outcome(
            "x/|x| residual order",
            (1.5..=2.5).contains(&r.order_estimate),
            format!("residual {:.3e} -> {:.3e}, order {:.3}", r.max_residual, r.fine_residual, r.order_estimate),
        ),
        Err(e) => outcome("x/|x| residual order", false, e.to_string()),
    }
}

fn mms_heat(cells: usize) -> OracleOutcome {
    let t_end = 0.01;
    let fine = 2 * cells;
    let target = HeatMode { axes: 3 };
    let grid_f = Grid::cube(3, fine, 1.0, Boundary::Periodic).unwrap();
    let dt = 0.4 * grid_f.min_h().powi(2) / 6.0;
    let err = |n: usize| {
        let grid = Grid::cube(3, n, 1.0, Boundary::Periodic).unwrap();
        let g = Arc::new(grid.clone());
        let mp = manufactured_problem(&target, &FluxSpec::p_laplace(2.0), g, t_end, 17, 0.25 / fine as f64).unwrap();
        let mut cfg = SolveConfig::new(
            FluxSpec::p_laplace(2.0),
            mp.rhs,
            grid,
            1,
            t_end,
            InitialSpec::ManufacturedInit(FieldData(Arc::new(mp.initial))),
        );
        cfg.dt_max = dt;
        mms_error(&run(&cfg).unwrap(), &target).unwrap().max_error
    };
    let (a, b) = (err(cells), err(fine));
    let ratio = a / b;
    outcome(
        "manufactured heat solution",
        (3.5..=4.5).contains(&ratio),
        format!("max error {a:.3e} -> {b:.3e}, ratio {ratio:.3}"),
    )
}

fn radial_psi() -> OracleOutcome {
    let g = Arc::new(Grid::cube(3, 48, 1.0, Boundary::Dirichlet).unwrap());
    let fields = (0..5)
        .map(|k| {
            Field::from_fn(g.clone(), 1, 0.09 * k as f64 / 4.0, |x, o| {
                o[0] = 0.5 * (0..3).map(|a| (x[a] - 0.5).powi(2)).sum::<f64>()
            })
        })
        .collect();
    let s = SnapshotSeries::new(fields).unwrap();
    let c = CylinderSpec::new(vec![0.5; 3], 0.09, 0.3, 2.0);
    let v = psi(&s, &c, 1.0).unwrap();
    let exact = PI * 0.3f64.powi(4) * 0.09;
    let rel = (v / exact - 1.0).abs();
    outcome("psi of |x - x0| profile", rel < 0.05, format!("relative deviation {rel:.3e}"))
}

/// Runs every oracle. `quick` uses smaller grids for the grid-based checks.
pub fn run_oracles(quick: bool) -> Vec<OracleOutcome> {
    let (struwe_cells, mms_cells, heat_cells) = if quick { (24, 8, 16) } else { (48, 32, 32) };
    vec![
        thresholds(),
        ladders(),
        flux_jacobians(),
        steep_dt(),
        heat_decay(heat_cells),
        radial_psi(),
        struwe(struwe_cells),
        mms_heat(mms_cells),
    ]
}
