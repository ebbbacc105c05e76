//! Theorem-level experiments: periodic decay rates, planar-wave approach,
//! L¹ contraction, residual decay, power-law fitting and the Gronwall-type
//! ODE bound.

mod contraction;
mod fit;
mod ode;
mod periodic;
mod rarefaction;
mod residual;

pub use contraction::{l1_contraction_check, ContractionResult, JDELTA_VALUES};
pub use fit::{
    alpha_q, fit_power_law, gamma_rate, log_snapshots, rate_theorem3, DecaySeries, FitResult,
    LabeledFit, RateCard,
};
pub use ode::{ode_bound_check, OdeBoundCheck};
pub use periodic::{norm_index_label, run_periodic_decay, PeriodicDecayResult};
pub use rarefaction::{run_rarefaction_approach, RarefactionResult};
pub use residual::{residual_j1_norms, sigma, ResidualResult};
