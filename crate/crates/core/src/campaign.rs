//! Multi-run studies: a sweep of seeds and amplitudes, optionally repeated on
//! a finer grid, reduced to bound, sandwich, energy and chain reports.

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, S0Source};
use crate::energy::{
    energy_inequality_check, fit_energy_constant, holder_sandwich, moser_chain_check, verify_bound, BoundReport,
    EnergyReport, HolderReport, MoserReport,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::CylinderSpec;
use crate::regimes::{assess, build_ladder, ProblemParams, RegimeReport};
use crate::solver::{run_with, InitialSpec, RunRecord, SolveConfig};

/// Largest admissible max/min ratio of per-run constants.
pub const SPREAD_MAX: f64 = 10.0;
/// Largest admissible change of a fitted constant under refinement.
pub const REFINE_MAX: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct Campaign {
    pub params: ProblemParams,
    pub s0_source: S0Source,
    pub regime: RegimeReport,
    pub cylinder: CylinderSpec,
    /// Runs per resolution; the second entry, if any, is the refined grid.
    pub levels: Vec<Vec<SolveConfig>>,
    pub moser_levels: usize,
    pub moser_run: usize,
}

/// Checks admissibility first, so an uncovered configuration never solves.
pub fn plan(cfg: &RunConfig) -> Result<Campaign> {
    let (params, s0_source) = cfg.problem()?.params()?;
    let regime = assess(&params);
    if !regime.is_covered() {
        return Err(Error::Inadmissible(regime.violated_conditions));
    }
    let camp = cfg.campaign()?;
    let solve = cfg.solve()?;
    let cyl = cfg.cylinder()?;
    if camp.seeds.is_empty() || camp.amplitudes.is_empty() {
        return Err(Error::InvalidParams("empty campaign: need at least one seed and one amplitude".into()));
    }
    let runs = camp.seeds.len() * camp.amplitudes.len();
    if camp.moser_run >= runs {
        return Err(Error::Config(format!("campaign.moser_run = {} but only {runs} runs", camp.moser_run)));
    }
    let mut cells = vec![solve.grid.cells];
    cells.extend(camp.refine_cells);
    let levels = cells
        .iter()
        .map(|&c| {
            let base = solve.solve_config(params.n, params.components, c)?;
            let InitialSpec::RandomSmooth { amplitude, modes, .. } = base.initial else {
                return Err(Error::Config("campaigns need initial.kind = \"random_smooth\"".into()));
            };
            let mut out = Vec::with_capacity(runs);
            for &seed in &camp.seeds {
                for &a in &camp.amplitudes {
                    let mut run = base.clone();
                    run.initial = InitialSpec::RandomSmooth {
                        seed,
                        amplitude: amplitude * a,
                        modes,
                    };
                    run.validate()?;
                    out.push(run);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let cylinder = cyl.spec(params.n, solve.grid.extent, solve.t_end)?;
    Ok(Campaign {
        params,
        s0_source,
        regime,
        cylinder,
        levels,
        moser_levels: cyl.moser_levels,
        moser_run: camp.moser_run,
    })
}

/// Reports of one resolution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelReport {
    pub cells: usize,
    pub bound: BoundReport,
    pub holder: Vec<HolderReport>,
    pub energy: Vec<EnergyReport>,
    pub energy_c: f64,
    pub moser: Option<MoserReport>,
    pub moser_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignReport {
    pub params: ProblemParams,
    pub s0_source: S0Source,
    pub regime: RegimeReport,
    pub levels: Vec<LevelReport>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Sandwich exponents checked on every run: the seed and the next rung.
fn sandwich_exponents(params: &ProblemParams, m: f64) -> Result<Vec<f64>> {
    let l = build_ladder(params.s0, params.p, m, params.n, 1)?;
    Ok(l.s)
}

fn reduce_level(c: &Campaign, runs: &[RunRecord]) -> Result<LevelReport> {
    let bound = verify_bound(runs, &c.params, &c.cylinder)?;
    let rho = 0.5 * c.cylinder.radius;
    let mut holder = Vec::new();
    for run in runs {
        for s in sandwich_exponents(&c.params, bound.m)? {
            holder.push(holder_sandwich(run, s, rho, &c.cylinder, &c.params)?);
        }
    }
    let energy = runs
        .iter()
        .map(|r| energy_inequality_check(r, c.params.s0, rho, &c.cylinder, &c.params))
        .collect::<Result<Vec<_>>>()?;
    let (energy_c, energy) = fit_energy_constant(energy);
    let (moser, moser_error) = match moser_chain_check(&runs[c.moser_run], &c.params, &c.cylinder, c.moser_levels) {
        Ok(m) => (Some(m), None),
        Err(e @ Error::GridTooCoarse(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(LevelReport {
        cells: runs[0].config.grid.cells()[0],
        bound,
        holder,
        energy,
        energy_c,
        moser,
        moser_error,
    })
}

/// Runs the resolutions one after another; only one resolution's runs are
/// held in memory at a time.
pub fn execute(c: &Campaign, exec: Exec, mut on_run: impl FnMut(&RunRecord)) -> Result<CampaignReport> {
    let mut levels = Vec::with_capacity(c.levels.len());
    for configs in &c.levels {
        let runs = configs
            .iter()
            .map(|cfg| {
                let r = run_with(cfg, exec)?;
                on_run(&r);
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        levels.push(reduce_level(c, &runs)?);
    }
    let checks = evaluate(&levels);
    Ok(CampaignReport {
        params: c.params.clone(),
        s0_source: c.s0_source,
        regime: c.regime.clone(),
        passed: checks.iter().all(|k| k.passed),
        levels,
        checks,
    })
}

/// `max(a/b, b/a)`; infinite when exactly one side vanishes.
pub fn change_factor(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else if a <= 0.0 || b <= 0.0 {
        f64::INFINITY
    } else {
        (a / b).max(b / a)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Stability criteria of a finished campaign.
pub fn evaluate(levels: &[LevelReport]) -> Vec<Check> {
    let mut out = Vec::new();
    let worst = levels
        .iter()
        .flat_map(|l| &l.holder)
        .map(|h| h.violation)
        .fold(0.0, f64::max);
    let all = levels.iter().all(|l| l.holder.iter().all(|h| h.holds));
    out.push(check("holder_sandwich", all, format!("largest relative violation {worst:.3e}")));
    for l in levels {
        out.push(check(
            &format!("spread_{}", l.cells),
            l.bound.spread <= SPREAD_MAX,
            format!("fitted_C {:.4e}, spread {:.3}", l.bound.fitted_c, l.bound.spread),
        ));
        match (&l.moser, &l.moser_error) {
            (Some(m), _) => out.push(check(
                &format!("moser_chain_{}", l.cells),
                m.holds,
                format!("C {:.4}", m.c),
            )),
            (None, e) => out.push(check(
                &format!("moser_chain_{}", l.cells),
                false,
                e.clone().unwrap_or_default(),
            )),
        }
    }
    if let [a, b] = levels {
        let f = change_factor(a.bound.fitted_c, b.bound.fitted_c);
        out.push(check(
            "fitted_C_refinement",
            f <= REFINE_MAX,
            format!("{} -> {} cells: factor {f:.3}", a.cells, b.cells),
        ));
        if let (Some(ma), Some(mb)) = (&a.moser, &b.moser) {
            let f = change_factor(ma.c, mb.c);
            out.push(check(
                "moser_C_refinement",
                f <= REFINE_MAX,
                format!("C {:.4} -> {:.4}: factor {f:.3}", ma.c, mb.c),
            ));
        }
    }
    out
}
