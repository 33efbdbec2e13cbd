//! Command-line entry point. Every command reads one configuration file,
//! prints a JSON report on stdout and writes its artifacts under the output
//! directory.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::campaign;
use crate::config::{CounterexampleSection, RunConfig, S0Source};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{Boundary, Grid};
use crate::regimes::{assess, build_ladder, classify_thm1, ExponentLadder, RegimeReport};
use crate::solver::{run_with, RunStatus};
use crate::verify::{run_oracles, struwe_level, struwe_residual};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_COVERED: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

/// Order window of the counterexample residual.
pub const ORDER_WINDOW: (f64, f64) = (1.5, 2.5);
/// Tolerance on `|grad u| |x| / sqrt(n - 1) = 1` for the counterexample.
pub const GRAD_TOL: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "gradbound", version, about = "Gradient bounds for p-Laplacian systems with gradient-dependent sources")]
pub struct Cli {
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    pub serial: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the parameters and print the exponent ladder.
    Check { config: PathBuf },
    /// Run one solve and persist the record.
    Solve { config: PathBuf },
    /// Run a campaign and check the bound, sandwich and chain criteria.
    Verify { config: PathBuf },
    /// Residual study of the x/|x| counterexample.
    Counterexample { config: PathBuf },
    /// Run the built-in oracle suite.
    Oracles {
        /// Smaller grids.
        #[arg(long)]
        quick: bool,
    },
}

/// Exit status and the report printed on stdout.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

impl Outcome {
    fn new(code: i32, report: Value) -> Self {
        Outcome { code, report }
    }

    fn from_error(command: &str, e: &Error) -> Self {
        let code = match e {
            Error::Inadmissible(_) | Error::KappaNonPositive(_) => EXIT_NOT_COVERED,
            Error::RunNotCompleted(_) => EXIT_VERIFY_FAILED,
            _ => EXIT_INPUT,
        };
        let violated = match e {
            Error::Inadmissible(c) => c.iter().map(|c| c.name()).collect(),
            _ => vec![],
        };
        Outcome::new(
            code,
            json!({ "command": command, "error": e.to_string(), "violated_conditions": violated }),
        )
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    write_file(dir, name, &serde_json::to_string_pretty(v)?)
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path)
}

/// Regime of the configured problem and, when covered, its ladder.
pub fn check_report(cfg: &RunConfig) -> Result<(RegimeReport, Option<ExponentLadder>, Value)> {
    let (params, source) = cfg.problem()?.params()?;
    let regime = if params.n == 3 && params.q == params.p && source != S0Source::Config {
        classify_thm1(params.p, params.w, params.p_tilde)
    } else {
        assess(&params)
    };
    let ladder = if regime.is_covered() {
        Some(build_ladder(regime.s0_effective, params.p, regime.m, params.n, cfg.ladder_depth)?)
    } else {
        None
    };
    let report = json!({
        "command": "check",
        "params": to_value(&params),
        "s0_source": to_value(&source),
        "regime": to_value(&regime),
        "ladder": to_value(&ladder),
    });
    Ok((regime, ladder, report))
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome> {
    let (regime, _, report) = check_report(cfg)?;
    write_json(&cfg.output_dir(), "check.json", &report)?;
    let code = if regime.is_covered() {
        EXIT_OK
    } else {
        EXIT_NOT_COVERED
    };
    Ok(Outcome::new(code, report))
}

pub fn cmd_solve(cfg: &RunConfig, exec: Exec) -> Result<Outcome> {
    let sc = cfg.solve_config()?;
    let rec = run_with(&sc, exec)?;
    let dir = cfg.output_dir();
    rec.save(&dir)?;
    let code = match rec.status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::BlowupDetected { .. } => EXIT_BLOWUP,
        RunStatus::Diverged { .. } => EXIT_DIVERGED,
    };
    let last = rec.series.fields().last().map_or(0.0, |f| f.time());
    let report = json!({
        "command": "solve",
        "status": to_value(&rec.status),
        "steps": rec.dt_history.len(),
        "snapshots": rec.series.len(),
        "final_time": last,
        "output_dir": dir.display().to_string(),
    });
    write_json(&dir, "solve.json", &report)?;
    Ok(Outcome::new(code, report))
}

pub fn cmd_verify(cfg: &RunConfig, exec: Exec) -> Result<Outcome> {
    let plan = campaign::plan(cfg)?;
    let total: usize = plan.levels.iter().map(Vec::len).sum();
    let mut done = 0;
    let rep = campaign::execute(&plan, exec, |r| {
        done += 1;
        eprintln!(
            "run {done}/{total}: {} cells, {} steps, {:?}",
            r.config.grid.cells()[0],
            r.dt_history.len(),
            r.status
        );
    })?;
    let dir = cfg.output_dir();
    for l in &rep.levels {
        write_file(&dir, &format!("bound_{}.csv", l.cells), &l.bound.csv())?;
        let mut energy = format!("{}\n", crate::energy::EnergyReport::CSV_HEADER);
        for e in &l.energy {
            energy.push_str(&e.csv_row());
            energy.push('\n');
        }
        write_file(&dir, &format!("energy_{}.csv", l.cells), &energy)?;
        if let Some(m) = &l.moser {
            write_file(&dir, &format!("moser_{}.csv", l.cells), &m.csv())?;
        }
    }
    let mut report = to_value(&rep);
    report["command"] = json!("verify");
    write_json(&dir, "verify.json", &report)?;
    let code = if rep.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    };
    Ok(Outcome::new(code, report))
}

pub fn cmd_counterexample(cfg: &RunConfig) -> Result<Outcome> {
    let sec = cfg.counterexample.clone().unwrap_or_else(|| {
        toml::from_str::<CounterexampleSection>("").expect("all fields have defaults")
    });
    let [r_min, r_max] = sec.annulus;
    if r_min <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "annulus [{r_min}, {r_max}] contains the singular point"
        )));
    }
    if sec.n < 3 {
        return Err(Error::InvalidParams(format!(
            "the counterexample is bounded with unbounded gradient only for n >= 3, got n = {}",
            sec.n
        )));
    }
    let grid = Grid::cube(sec.n, sec.cells, sec.extent, Boundary::Dirichlet)?;
    let residual = struwe_residual(&grid, (r_min, r_max))?;
    let fine = Grid::cube(sec.n, 2 * sec.cells, sec.extent, Boundary::Dirichlet)?;
    let center = vec![0.5 * sec.extent; sec.n];
    let level = struwe_level(&fine, &center, (r_min, r_max))?;
    let passed = (ORDER_WINDOW.0..=ORDER_WINDOW.1).contains(&residual.order_estimate) && level.grad_rel_dev <= GRAD_TOL;
    let report = json!({
        "command": "counterexample",
        "residual": to_value(&residual),
        "grad_rel_dev": level.grad_rel_dev,
        "passed": passed,
    });
    let dir = cfg.output_dir();
    write_json(&dir, "counterexample.json", &report)?;
    write_file(
        &dir,
        "counterexample.csv",
        &format!("{}\n{}\n", crate::verify::ResidualReport::CSV_HEADER, residual.csv_row()),
    )?;
    Ok(Outcome::new(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED }, report))
}

pub fn cmd_oracles(quick: bool) -> Outcome {
    let outcomes = run_oracles(quick);
    let passed = outcomes.iter().all(|o| o.passed);
    Outcome::new(
        if passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
        json!({ "command": "oracles", "outcomes": to_value(&outcomes), "passed": passed }),
    )
}

/// Dispatches a parsed command line.
pub fn execute(cli: &Cli) -> Outcome {
    let exec = if cli.serial { Exec::Serial } else { Exec::default() };
    let (name, result) = match &cli.command {
        Command::Check { config } => ("check", load(config).and_then(|c| cmd_check(&c))),
        Command::Solve { config } => ("solve", load(config).and_then(|c| cmd_solve(&c, exec))),
        Command::Verify { config } => ("verify", load(config).and_then(|c| cmd_verify(&c, exec))),
        Command::Counterexample { config } => ("counterexample", load(config).and_then(|c| cmd_counterexample(&c))),
        Command::Oracles { quick } => ("oracles", Ok(cmd_oracles(*quick))),
    };
    result.unwrap_or_else(|e| {
        eprintln!("gradbound {name}: {e}");
        Outcome::from_error(name, &e)
    })
}

/// Parses `args`, runs, prints the report and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let out = execute(&cli);
    println!("{}", serde_json::to_string_pretty(&out.report).expect("reports serialize"));
    out.code
}
