//! Grids, fields, discrete norms and the monotone finite-volume scheme.

mod grid;
mod norms;
mod scheme;

pub use grid::{Field, GridKind, GridSpec, TorusChannelMap, MAX_DIM};
pub use norms::{gradient_components_cells, gradient_magnitude_cells, lq_norm, smoothed_l1};
pub use scheme::{
    cfl_dt, gradient_field, integrate, step, write_snapshot, Bc, FaceGradient, SolverParams,
};

pub(crate) use scheme::{cfl_dt_raw, step_into, KappaPow};
