//! Gronwall-type ODE bound: a nonnegative y with y(0) = 0 and
//! y' ≤ C₁(1+t)^{-α} y + C₂(1+t)^{-β}, α > 1, β > 1, stays below
//! (C₂/(β-1))·exp(C₁/(α-1)).
//!
//! The check integrates the saturated equation
//! y' = C₁(1+t)^{-α} y + C₂(1+t)^{-β} with classical RK4 at a fixed step
//! and compares the running maximum against the closed-form bound.

use crate::error::{Error, Result};
use crate::experiments::fit::DecaySeries;

const DT: f64 = 1e-3;
const T_END: f64 = 1e4;
const RECORD_EVERY: usize = 1000;

#[derive(Clone, Debug)]
pub struct OdeBoundCheck {
    /// Decimated trajectory (every 1000th step plus the endpoint).
    pub trajectory: DecaySeries,
    pub y_max: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// (1+t)^{-a} with fast paths for the half-integer exponents the
/// experiments use.
#[inline]
fn inv_pow(one_plus_t: f64, a: f64) -> f64 {
    if a == 2.0 {
        1.0 / (one_plus_t * one_plus_t)
    } else if a == 1.5 {
        1.0 / (one_plus_t * one_plus_t.sqrt())
    } else if a == 3.0 {
        1.0 / (one_plus_t * one_plus_t * one_plus_t)
    } else {
        one_plus_t.powf(-a)
    }
}

pub fn ode_bound_check(c1: f64, c2: f64, alpha: f64, beta: f64) -> Result<OdeBoundCheck> {
    if !(alpha > 1.0) {
        return Err(Error::Hypothesis(format!(
            "the bound exponent C1/(alpha-1) needs alpha > 1, got {alpha}"
        )));
    }
    if !(beta > 1.0) {
        return Err(Error::Hypothesis(format!("need beta > 1, got {beta}")));
    }
    if c1 < 0.0 || c2 < 0.0 {
        return Err(Error::Hypothesis(format!("need C1, C2 >= 0, got {c1}, {c2}")));
    }
    let bound = c2 / (beta - 1.0) * (c1 / (alpha - 1.0)).exp();
    let rhs = |t: f64, y: f64| {
        let s = 1.0 + t;
        c1 * inv_pow(s, alpha) * y + c2 * inv_pow(s, beta)
    };
    let steps = (T_END / DT).round() as usize;
    let mut y = 0.0f64;
    let mut y_max = 0.0f64;
    let mut trajectory = DecaySeries::new("ode_trajectory");
    trajectory.push(0.0, 0.0);
    for n in 0..steps {
        let t = n as f64 * DT;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * DT, y + 0.5 * DT * k1);
        let k3 = rhs(t + 0.5 * DT, y + 0.5 * DT * k2);
        let k4 = rhs(t + DT, y + DT * k3);
        y += DT / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        y_max = y_max.max(y);
        if (n + 1) % RECORD_EVERY == 0 || n + 1 == steps {
            trajectory.push((n + 1) as f64 * DT, y);
        }
    }
    Ok(OdeBoundCheck { trajectory, y_max, bound, margin: bound - y_max, pass: y_max <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_forcing_has_closed_form() {
        // C1 = 0, C2 = 1, beta = 2: y(t) = 1 - 1/(1+t) < 1.
        let out = ode_bound_check(0.0, 1.0, 2.0, 2.0).unwrap();
        assert!(out.pass);
        assert!((out.bound - 1.0).abs() < 1e-15);
        let y_end = *out.trajectory.values.last().unwrap();
        let t_end = *out.trajectory.times.last().unwrap();
        assert!((y_end - (1.0 - 1.0 / (1.0 + t_end))).abs() < 1e-9);
        assert_eq!(out.trajectory.values[0], 0.0);
    }

    #[test]
    fn coupled_case_stays_below_e() {
        let out = ode_bound_check(1.0, 1.0, 2.0, 2.0).unwrap();
        assert!((out.bound - std::f64::consts::E).abs() < 1e-12);
        assert!(out.pass, "y_max = {} exceeds {}", out.y_max, out.bound);
        assert!(out.margin > 0.0);
    }

    #[test]
    fn rejects_alpha_at_or_below_one() {
        assert!(matches!(ode_bound_check(1.0, 1.0, 1.0, 2.0), Err(Error::Hypothesis(_))));
        assert!(matches!(ode_bound_check(1.0, 1.0, 0.5, 2.0), Err(Error::Hypothesis(_))));
        assert!(matches!(ode_bound_check(1.0, 1.0, 2.0, 1.0), Err(Error::Hypothesis(_))));
    }
}
