//! Uniform grids, nodal fields, finite-difference stencils and space-time quadrature.

mod cutoff;
mod cylinder;
mod field;
mod grid;
pub mod io;
mod stencil;

pub use cutoff::{CutoffFn, SLOPE as CUTOFF_SLOPE};
pub use cylinder::{
    cylinder_integrate, cylinder_integrate_with, slice_integral, sup_slice, time_weights, CylinderSpec,
    NodeSample, SnapshotSeries,
};
pub(crate) use cylinder::snapshots_in;
pub use field::{Field, GradientField};
pub use grid::{Boundary, Grid, MIN_CELLS};
pub(crate) use stencil::{divergence_raw, gradient_raw};
pub use stencil::{divergence, grad_magnitude, gradient, gradient_with, laplacian};
