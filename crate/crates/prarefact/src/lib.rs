//! Numerical study of the scalar conservation law with degenerate
//! p-Laplacian viscosity
//!
//! ∂ₜu + div f(u) = div((|∇u|² + ε²)^{(m-1)/2} ∇u),   m > 1.
//!
//! The crate builds the explicit wave objects of the problem (centered
//! rarefaction, smooth viscous rarefaction, periodic far fields, the blended
//! approximate planar wave), evolves the equation with a monotone explicit
//! finite-volume scheme, and measures every decay rate and structural
//! invariant that the theory predicts: periodic decay exponents, L¹
//! contraction, maximum principle, residual decay of the approximate wave,
//! the Gronwall-type ODE bound, and the vector inequalities that drive the
//! energy estimates.
//!
//! Hot loops (per-cell scheme updates, norm reductions, inequality sampling)
//! run data-parallel through rayon when the default `parallel` feature is
//! enabled and fall back to sequential execution without it. Reductions use
//! a fixed pairwise tree so results are bit-identical across thread counts.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod ineq;
pub mod par;
pub mod solver;
pub mod waves;

pub use error::{Error, Result};
pub use flux::Flux;
