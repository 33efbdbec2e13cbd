pub mod campaign;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod exec;
pub mod flux;
pub mod mesh;
pub mod regimes;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
