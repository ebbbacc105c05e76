//! Time series of norms, log-log power-law fits, and the theoretical decay
//! exponents they are compared against.

use crate::error::{Error, Result};

/// Time-stamped norm trajectory.
#[derive(Clone, Debug)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl DecaySeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self { times: Vec::new(), values: Vec::new(), label: label.into() }
    }

    pub fn push(&mut self, t: f64, value: f64) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        debug_assert!(value >= 0.0 || value.is_nan());
        self.times.push(t);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest increase between consecutive samples (negative when the
    /// series is strictly decreasing).
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-squares fit of log(value) against log(1+t).
#[derive(Clone, Copy, Debug)]
pub struct FitResult {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
}

/// Fit `value ~ C (1+t)^exponent` on the samples inside `window`.
pub fn fit_power_law(series: &DecaySeries, window: (f64, f64)) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::NonpositiveValue(format!(
                "series '{}' has value {v} at t = {t} inside the fit window",
                series.label
            )));
        }
        xs.push((1.0 + t).ln());
        ys.push(v.ln());
    }
    if xs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "series '{}' has {} samples in [{}, {}], need >= 8",
            series.label,
            xs.len(),
            window.0,
            window.1
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData("fit window spans a single time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        let r = y - (slope * x + intercept);
        ss += r * r;
    }
    Ok(FitResult {
        exponent: slope,
        log_prefactor: intercept,
        rms_residual: (ss / n).sqrt(),
        window,
    })
}

/// A fitted series paired with the exponent the theory predicts for it.
/// `fit` is absent when every window sample decayed below round-off
/// (`underflow`), which can only out-pace a polynomial bound.
#[derive(Clone, Debug)]
pub struct LabeledFit {
    pub label: String,
    pub fit: Option<FitResult>,
    pub theoretical: Option<f64>,
    /// Second candidate exponent where the theory has two branches.
    pub alt_theoretical: Option<f64>,
    pub underflow: bool,
}

impl LabeledFit {
    /// One-sided rate gate: measured decay at least as fast as `target`
    /// within `tol` (upper-bound direction).
    pub fn one_sided_pass(&self, target: f64, tol: f64) -> bool {
        if self.underflow {
            return true;
        }
        self.fit.map(|f| f.exponent <= target + tol).unwrap_or(false)
    }
}

/// Theoretical decay exponents for exponent m, dimension N and norm
/// indices q (periodic problem) and r (planar-wave problem):
///
/// * solution:         -1/(m-1)
/// * ∇u in L^{m+1}:    -2/((m-1)(m+1))
/// * ∇u in L^q, q>m+1: -2γ_q/((m-1)(m+1)) with γ_q = min(1, α_q) on one
///   branch, -2/((m-1)(m+1)) on the other
/// * ‖u - ũ‖_{L^r}:    -(r-2)/(r(3m+1))
#[derive(Clone, Copy, Debug)]
pub struct RateCard {
    pub m: f64,
    pub n_dim: usize,
    pub q: f64,
    pub r: f64,
    pub rate_solution: f64,
    pub rate_gradient_mplus1: f64,
    pub alpha_q: f64,
    pub gamma_q: f64,
    pub rate_theorem3: f64,
}

impl RateCard {
    pub fn new(m: f64, n_dim: usize, q: f64, r: f64) -> Self {
        let alpha_q = alpha_q(m, n_dim, q);
        let gamma_q = alpha_q.min(1.0);
        Self {
            m,
            n_dim,
            q,
            r,
            rate_solution: -1.0 / (m - 1.0),
            rate_gradient_mplus1: -2.0 / ((m - 1.0) * (m + 1.0)),
            alpha_q,
            gamma_q,
            rate_theorem3: rate_theorem3(m, r),
        }
    }

    /// Decay exponent of ∇u in L^q for the branch labelled m > 2.
    pub fn rate_gradient_q_branch1(&self) -> f64 {
        -2.0 * self.gamma_q / ((self.m - 1.0) * (self.m + 1.0))
    }
}

/// γ of the planar-wave analysis: 2/((m-1)(m+1)).
pub fn gamma_rate(m: f64) -> f64 {
    2.0 / ((m - 1.0) * (m + 1.0))
}

pub fn alpha_q(m: f64, n_dim: usize, q: f64) -> f64 {
    let n = n_dim as f64;
    if q.is_infinite() {
        return 2.0 * (m + 1.0) / (n * (m - 2.0) - 2.0 * m + 2.0);
    }
    (m + 1.0) * (2.0 * (q + 1.0) + n * (m - 2.0)) / ((m + q - 1.0) * (n * (m - 2.0) - 2.0 * m + 2.0))
}

pub fn rate_theorem3(m: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return -1.0 / (3.0 * m + 1.0);
    }
    -(r - 2.0) / (r * (3.0 * m + 1.0))
}

/// Log-spaced snapshot schedule from 0 to t_end (inclusive).
pub fn log_snapshots(t_end: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && t_end > 0.0);
    let top = (1.0 + t_end).ln();
    let mut times: Vec<f64> = (0..count)
        .map(|j| (top * j as f64 / (count - 1) as f64).exp() - 1.0)
        .collect();
    times[0] = 0.0;
    *times.last_mut().unwrap() = t_end;
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    times
}
