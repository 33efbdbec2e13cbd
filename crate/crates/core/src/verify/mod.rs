//! Independent oracles: the `x/|x|` counterexample, manufactured solutions,
//! exact-arithmetic exponent ladders, and a suite that runs them all.

mod ladder;
mod mms;
mod oracles;
mod struwe;

use serde::{Deserialize, Serialize};

pub use ladder::{ladder_oracle, ladder_oracle_exact, random_admissible_tuples, relative_error, LadderTuple};
pub use mms::{manufactured_problem, mms_error, DirichletShear, HeatMode, ManufacturedProblem, MmsError, Target, ZeroTarget};
pub use oracles::{run_oracles, OracleOutcome};
pub use struwe::{struwe_level, struwe_residual, StruweLevel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub field_name: String,
    pub max_residual: f64,
    pub grid_h: f64,
    /// `log2` of the residual ratio between the grid and its twofold refinement.
    pub order_estimate: f64,
    /// Residual on the refined grid.
    pub fine_residual: f64,
}

impl ResidualReport {
    pub const CSV_HEADER: &'static str = "field_name,max_residual,grid_h,order_estimate,fine_residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{},{},{:e}",
            self.field_name, self.max_residual, self.grid_h, self.order_estimate, self.fine_residual
        )
    }
}
