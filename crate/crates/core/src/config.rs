use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{FluxSpec, RhsSpec};
use crate::mesh::{Boundary, CylinderSpec, Field, Grid};
use crate::regimes::{classify_thm1, compute_m_general, ProblemParams};
use crate::solver::{FieldData, InitialSpec, SolveConfig};
use std::sync::Arc;

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "GRADBOUND_OUTPUT_DIR";

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_ladder_depth() -> usize {
    8
}

fn yes() -> bool {
    true
}

/// One configuration file; each command reads the sections it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_ladder_depth")]
    pub ladder_depth: usize,
    pub problem: Option<ProblemSection>,
    pub solve: Option<SolveSection>,
    pub campaign: Option<CampaignSection>,
    pub cylinder: Option<CylinderSection>,
    pub counterexample: Option<CounterexampleSection>,
}

/// Structural parameters. Omitted exponents default to the p-Laplacian values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    #[serde(default = "one")]
    pub components: usize,
    pub p: f64,
    pub q: Option<f64>,
    pub w: f64,
    pub p_tilde: Option<f64>,
    /// Seed exponent; resolved when absent, see [`ProblemSection::params`].
    pub s0: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "Lambda")]
    pub lambda_upper: Option<f64>,
    #[serde(default = "yes")]
    pub c2_zero: bool,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum S0Source {
    Config,
    /// Seed of the three-dimensional p-Laplace classification.
    Thm1,
    /// `p_tilde - M` with the general `M`.
    PTildeMinusM,
}

impl ProblemSection {
    /// Builds the parameter set. Without an explicit `s0`, the seed is the one
    /// of the three-dimensional p-Laplace classification when `n = 3` and
    /// `q = p`, and `p_tilde - M` otherwise.
    pub fn params(&self) -> Result<(ProblemParams, S0Source)> {
        let mut pp = ProblemParams::p_laplace(self.n, self.components, self.p, self.w)
            .with_q(self.q.unwrap_or(self.p))
            .with_p_tilde(self.p_tilde.unwrap_or(self.p))
            .with_c2_zero(self.c2_zero);
        let (lo, hi) = (self.lambda.unwrap_or(pp.lambda), self.lambda_upper.unwrap_or(pp.lambda_upper));
        pp = pp.with_ellipticity(lo, hi);
        pp.validate()?;
        let source = match self.s0 {
            Some(s0) => {
                pp.s0 = s0;
                S0Source::Config
            }
            None if self.n == 3 && pp.q == pp.p => {
                pp.s0 = classify_thm1(pp.p, pp.w, pp.p_tilde).s0_effective;
                S0Source::Thm1
            }
            None => {
                pp.s0 = pp.p_tilde - compute_m_general(&pp);
                S0Source::PTildeMinusM
            }
        };
        pp.validate()?;
        Ok((pp, source))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cells: usize,
    #[serde(default = "unit")]
    pub extent: f64,
    pub boundary: Boundary,
}

fn unit() -> f64 {
    1.0
}

fn default_modes() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    RandomSmooth {
        seed: u64,
        amplitude: f64,
        #[serde(default = "default_modes")]
        modes: usize,
    },
    Zero,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_snapshots() -> usize {
    crate::solver::MIN_SNAPSHOTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub flux: FluxSpec,
    pub rhs: RhsSpec,
    pub grid: GridSection,
    /// Defaults to the problem's component count.
    pub components: Option<usize>,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub dt_max: Option<f64>,
    #[serde(default = "default_snapshots")]
    pub snapshot_count: usize,
    pub initial: InitialSection,
}

impl SolveSection {
    /// Solver configuration on an `n`-dimensional grid with `cells` per axis.
    pub fn solve_config(&self, n: usize, components: usize, cells: usize) -> Result<SolveConfig> {
        let grid = Grid::cube(n, cells, self.grid.extent, self.grid.boundary)?;
        let components = self.components.unwrap_or(components);
        let initial = match &self.initial {
            InitialSection::RandomSmooth { seed, amplitude, modes } => InitialSpec::RandomSmooth {
                seed: *seed,
                amplitude: *amplitude,
                modes: *modes,
            },
            InitialSection::Zero => {
                let f = Field::zeros(Arc::new(grid.clone()), components);
                InitialSpec::Prescribed(FieldData(Arc::new(f)))
            }
        };
        let mut cfg = SolveConfig::new(self.flux.clone(), self.rhs.clone(), grid, components, self.t_end, initial);
        cfg.cfl = self.cfl;
        if let Some(d) = self.dt_max {
            cfg.dt_max = d;
        }
        cfg.snapshot_count = self.snapshot_count;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs are the product `seeds x amplitudes`; each run scales the initial
/// amplitude of `[solve]` by its sweep factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub seeds: Vec<u64>,
    pub amplitudes: Vec<f64>,
    /// Second grid resolution for the refinement comparison.
    pub refine_cells: Option<usize>,
    /// Index of the run used for the chain check.
    #[serde(default)]
    pub moser_run: usize,
}

fn default_time_exponent() -> f64 {
    2.0
}

fn default_levels() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSection {
    #[serde(rename = "R0")]
    pub radius: f64,
    /// Defaults to the box center.
    pub center: Option<Vec<f64>>,
    /// Defaults to the final time.
    pub t0: Option<f64>,
    #[serde(default = "default_time_exponent")]
    pub time_exponent: f64,
    #[serde(default = "default_levels")]
    pub moser_levels: usize,
}

impl CylinderSection {
    pub fn spec(&self, n: usize, extent: f64, t_end: f64) -> Result<CylinderSpec> {
        let center = self.center.clone().unwrap_or_else(|| vec![0.5 * extent; n]);
        if center.len() != n {
            return Err(Error::Config(format!(
                "cylinder.center has {} entries, expected {n}",
                center.len()
            )));
        }
        Ok(CylinderSpec::new(center, self.t0.unwrap_or(t_end), self.radius, self.time_exponent))
    }
}

fn default_counter_cells() -> usize {
    48
}

fn default_counter_extent() -> f64 {
    4.0
}

fn default_annulus() -> [f64; 2] {
    [0.5, 1.5]
}

fn three() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    #[serde(default = "three")]
    pub n: usize,
    #[serde(default = "default_counter_cells")]
    pub cells: usize,
    #[serde(default = "default_counter_extent")]
    pub extent: f64,
    #[serde(default = "default_annulus")]
    pub annulus: [f64; 2],
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// `output_dir`, unless the environment overrides it.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output_dir.clone(),
        }
    }

    pub fn problem(&self) -> Result<&ProblemSection> {
        self.problem.as_ref().ok_or_else(|| Error::Config("missing [problem] section".into()))
    }

    pub fn solve(&self) -> Result<&SolveSection> {
        self.solve.as_ref().ok_or_else(|| Error::Config("missing [solve] section".into()))
    }

    pub fn cylinder(&self) -> Result<&CylinderSection> {
        self.cylinder.as_ref().ok_or_else(|| Error::Config("missing [cylinder] section".into()))
    }

    pub fn campaign(&self) -> Result<&CampaignSection> {
        self.campaign.as_ref().ok_or_else(|| Error::Config("missing [campaign] section".into()))
    }

    /// The single run described by `[problem]` and `[solve]`.
    pub fn solve_config(&self) -> Result<SolveConfig> {
        let pr = self.problem()?;
        let s = self.solve()?;
        s.solve_config(pr.n, pr.components, s.grid.cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regimes::Theorem;

    const HEAT: &str = r#"
output_dir = "out/heat"

[problem]
n = 3
p = 2.0
w = 1.0

[solve]
t_end = 0.01
flux = { kind = "PurePLaplace", p = 2.0 }
rhs = { kind = "Zero" }
grid = { cells = 8, boundary = "periodic" }
initial = { kind = "random_smooth", seed = 3, amplitude = 0.5 }
"#;

    #[test]
    fn parses_heat_config() {
        let c = RunConfig::parse(HEAT).unwrap();
        let cfg = c.solve_config().unwrap();
        assert_eq!(cfg.grid.cells(), &[8, 8, 8]);
        assert_eq!(cfg.snapshot_count, 64);
        assert_eq!(c.ladder_depth, 8);
        let (pp, src) = c.problem().unwrap().params().unwrap();
        assert_eq!((pp.s0, src), (0.0, S0Source::Thm1));
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = HEAT.replace("p = 2.0\nw", "pp = 2.0\nw");
        let e = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("`pp`"), "{e}");
        let bad = HEAT.replace("amplitude = 0.5", "amplitude = 0.5, mode = 2");
        assert!(RunConfig::parse(&bad).unwrap_err().to_string().contains("`mode`"));
        let bad = format!("{HEAT}\n[cylinder]\nR0 = 0.3\nradius = 1\n");
        assert!(RunConfig::parse(&bad).unwrap_err().to_string().contains("`radius`"));
    }

    #[test]
    fn seed_resolution() {
        let mut pr = RunConfig::parse(HEAT).unwrap().problem.unwrap();
        pr.w = 1.3;
        let (pp, src) = pr.params().unwrap();
        assert_eq!(src, S0Source::Thm1);
        assert!((pp.s0 + 0.6).abs() < 1e-12);
        assert_eq!(classify_thm1(2.0, 1.3, 2.0).theorem_applied, Theorem::Thm1Case2);
        pr.q = Some(2.5);
        let (pp, src) = pr.params().unwrap();
        assert_eq!(src, S0Source::PTildeMinusM);
        assert_eq!(pp.s0, 2.0 - compute_m_general(&pp));
        pr.s0 = Some(0.25);
        assert_eq!(pr.params().unwrap().0.s0, 0.25);
    }
}
