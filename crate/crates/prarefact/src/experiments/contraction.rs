//! L¹ contraction between two co-evolved solutions, with the smoothed
//! functional ∫ J_δ(u-v) dx, J_δ(η) = (η² + δ²)^{1/2}, as a
//! δ-insensitivity cross-check. The same run also witnesses the discrete
//! maximum principle and mass conservation.

use crate::error::{Error, Result};
use crate::experiments::fit::DecaySeries;
use crate::flux::Flux;
use crate::par;
use crate::solver::{cfl_dt, smoothed_l1, step, Bc, Field, GridKind, SolverParams};

/// δ values of the smoothed functional.
pub const JDELTA_VALUES: [f64; 2] = [1e-3, 1e-6];

#[derive(Clone, Debug)]
pub struct ContractionResult {
    pub series_l1: DecaySeries,
    pub series_jdelta: Vec<(f64, DecaySeries)>,
    pub initial_l1: f64,
    /// Largest per-step increase of ‖u-v‖₁ over the whole run.
    pub max_step_increase: f64,
    /// Worst excursion of either solution outside its initial bounds.
    pub max_principle_violation: f64,
    /// Largest drift of either mean from its initial value.
    pub mass_drift: f64,
    pub steps: usize,
}

/// Evolve `u0` and `v0` with a shared time step and record ‖u-v‖₁.
pub fn l1_contraction_check(
    flux: Flux,
    params: &SolverParams,
    data_u0: &Field,
    data_v0: &Field,
) -> Result<ContractionResult> {
    if data_u0.grid() != data_v0.grid() {
        return Err(Error::GridMismatch("contraction needs one shared grid".into()));
    }
    if data_u0.grid().kind() != GridKind::Torus {
        return Err(Error::Validation("contraction check runs on a torus grid".into()));
    }
    let grid = data_u0.grid().clone();
    let vol = grid.cell_volume();
    let n = grid.n_cells();

    let l1_diff = |u: &Field, v: &Field, scratch: &mut Vec<f64>| -> f64 {
        scratch.resize(n, 0.0);
        let uv = u.values();
        let vv = v.values();
        par::fill_chunked(scratch, |s, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = (uv[s + k] - vv[s + k]).abs();
            }
        });
        par::pairwise_sum(scratch) * vol
    };

    let mut scratch = Vec::new();
    let mut u = data_u0.clone();
    let mut v = data_v0.clone();
    let (u_lo, u_hi) = u.min_max();
    let (v_lo, v_hi) = v.min_max();
    let mean_u0 = u.mean();
    let mean_v0 = v.mean();
    let initial_l1 = l1_diff(&u, &v, &mut scratch);

    let mut series_l1 = DecaySeries::new("l1_diff");
    let mut series_jdelta: Vec<(f64, DecaySeries)> = JDELTA_VALUES
        .iter()
        .map(|&d| (d, DecaySeries::new(format!("jdelta_{d:.0e}"))))
        .collect();

    let tol = 1e-12 * params.t_end.max(1.0);
    let snaps = &params.snapshot_times;
    let mut idx = 0;
    let record = |t: f64,
                      u: &Field,
                      v: &Field,
                      series_l1: &mut DecaySeries,
                      series_jdelta: &mut Vec<(f64, DecaySeries)>,
                      scratch: &mut Vec<f64>| {
        series_l1.push(t, l1_diff(u, v, scratch));
        let diff = u.zip_with(v, |a, b| a - b).expect("shared grid");
        for (d, s) in series_jdelta.iter_mut() {
            s.push(t, smoothed_l1(&diff, *d));
        }
    };
    while idx < snaps.len() && snaps[idx] <= tol {
        record(snaps[idx], &u, &v, &mut series_l1, &mut series_jdelta, &mut scratch);
        idx += 1;
    }

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut prev_l1 = initial_l1;
    let mut max_step_increase = f64::NEG_INFINITY;
    let mut max_principle_violation = 0.0f64;
    let mut mass_drift = 0.0f64;

    while t < params.t_end - tol {
        let target = if idx < snaps.len() { snaps[idx].min(params.t_end) } else { params.t_end };
        let stable = cfl_dt(&u, flux, params, &Bc::Periodic)
            .min(cfl_dt(&v, flux, params, &Bc::Periodic));
        let dt = stable.min(target - t);
        u = step(&u, flux, params, dt, &Bc::Periodic)?;
        v = step(&v, flux, params, dt, &Bc::Periodic)?;
        steps += 1;
        if !par::all_finite(u.values()) || !par::all_finite(v.values()) {
            return Err(Error::NonFinite { step: steps, t });
        }
        let l1 = l1_diff(&u, &v, &mut scratch);
        max_step_increase = max_step_increase.max(l1 - prev_l1);
        prev_l1 = l1;
        let (lo, hi) = u.min_max();
        max_principle_violation = max_principle_violation
            .max(u_lo - lo)
            .max(hi - u_hi);
        let (lo, hi) = v.min_max();
        max_principle_violation = max_principle_violation
            .max(v_lo - lo)
            .max(hi - v_hi);
        mass_drift = mass_drift
            .max((u.mean() - mean_u0).abs())
            .max((v.mean() - mean_v0).abs());
        t = if t + dt >= target - tol { target } else { t + dt };
        while idx < snaps.len() && snaps[idx] <= t + tol {
            record(snaps[idx], &u, &v, &mut series_l1, &mut series_jdelta, &mut scratch);
            idx += 1;
        }
    }

    Ok(ContractionResult {
        series_l1,
        series_jdelta,
        initial_l1,
        max_step_increase,
        max_principle_violation,
        mass_drift,
        steps,
    })
}
