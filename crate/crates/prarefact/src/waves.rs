//! Wave objects: the centered rarefaction u^R, the smooth viscous
//! rarefaction ũ^R launched from a tanh profile, the weight
//! g = (ũ^R - u₋)/(u₊ - u₋), the blended approximate wave
//! ũ = u_l(1-g) + u_r g, and zero-mean periodic perturbations.
//!
//! ũ^R is evaluated by characteristics: the monotone increasing data under a
//! convex flux never shocks, so the fixed point w = ũ₀^R(x₁ - λ(w)t) has a
//! unique root in [u₋, u₊] and gives machine-precision values and slopes
//! without a PDE solve.

use crate::error::{Error, Result};
use crate::flux::Flux;
use crate::solver::Field;

/// Far-field states of a rarefaction with their characteristic speeds.
#[derive(Clone, Copy, Debug)]
pub struct WavePair {
    pub u_minus: f64,
    pub u_plus: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl WavePair {
    /// Requires u₋ < u₊; convexity then orders the speeds λ₋ < λ₊.
    pub fn new(flux: Flux, u_minus: f64, u_plus: f64) -> Result<Self> {
        if !(u_minus < u_plus) {
            return Err(Error::Domain(format!(
                "rarefaction needs u_minus < u_plus, got {u_minus} >= {u_plus}"
            )));
        }
        Ok(Self {
            u_minus,
            u_plus,
            lambda_minus: flux.lambda(u_minus),
            lambda_plus: flux.lambda(u_plus),
        })
    }

    pub fn jump(&self) -> f64 {
        self.u_plus - self.u_minus
    }
}

/// tanh written as (eˣ - e⁻ˣ)/(eˣ + e⁻ˣ); beyond |x| = 40 the quotient
/// rounds to ±1 in f64, returned exactly.
pub fn tanh_profile(x: f64) -> f64 {
    if x.abs() > 40.0 {
        return x.signum();
    }
    let ep = x.exp();
    let en = (-x).exp();
    (ep - en) / (ep + en)
}

/// sech²x = (2/(eˣ+e⁻ˣ))², evaluated in a form that stays positive out to
/// |x| ≈ 350 instead of flushing to zero where 1 - tanh² would.
fn sech_sq(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 350.0 {
        return 0.0;
    }
    let e = (-ax).exp();
    let s = 2.0 * e / (1.0 + e * e);
    s * s
}

/// Invert λ on a bracket where it is strictly increasing: monotone bisection
/// refined by Newton, absolute tolerance 1e-12.
pub fn lambda_inverse(flux: Flux, s: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let s_lo = flux.lambda(lo);
    let s_hi = flux.lambda(hi);
    let slack = 1e-12 * (1.0 + s_lo.abs().max(s_hi.abs()));
    if s < s_lo - slack || s > s_hi + slack {
        return Err(Error::OutOfRange { what: "s", value: s, lo: s_lo, hi: s_hi });
    }
    let s = s.clamp(s_lo, s_hi);
    if s == s_lo {
        return Ok(lo);
    }
    if s == s_hi {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if flux.lambda(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = flux.lambda_prime(u);
        if d <= 0.0 {
            break;
        }
        u = (u - (flux.lambda(u) - s) / d).clamp(lo, hi);
    }
    Ok(u)
}

/// Centered rarefaction u^R(t, x₁): u₋ left of the fan, λ⁻¹(x₁/t) inside,
/// u₊ right of it. Defined for t > 0 only.
pub fn rarefaction_profile(flux: Flux, pair: &WavePair, t: f64, x1: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("rarefaction profile needs t > 0, got {t}")));
    }
    let s = x1 / t;
    if s <= pair.lambda_minus {
        Ok(pair.u_minus)
    } else if s >= pair.lambda_plus {
        Ok(pair.u_plus)
    } else {
        lambda_inverse(flux, s, (pair.u_minus, pair.u_plus))
    }
}

/// Initial profile of the viscous rarefaction:
/// ũ₀^R(x₁) = λ⁻¹((λ₊+λ₋)/2 + ((λ₊-λ₋)/2)·tanh x₁).
pub fn viscous_rarefaction_init(flux: Flux, pair: &WavePair, x1: f64) -> f64 {
    let mid = 0.5 * (pair.lambda_plus + pair.lambda_minus);
    let half = 0.5 * (pair.lambda_plus - pair.lambda_minus);
    lambda_inverse(flux, mid + half * tanh_profile(x1), (pair.u_minus, pair.u_plus))
        .expect("tanh image lies inside [lambda_minus, lambda_plus]")
}

/// d/dx₁ of [`viscous_rarefaction_init`]: λ(ũ₀) = mid + half·tanh x₁ gives
/// ũ₀' = half·sech²x₁ / λ'(ũ₀); strictly positive.
pub fn viscous_rarefaction_init_slope(flux: Flux, pair: &WavePair, x1: f64) -> f64 {
    let half = 0.5 * (pair.lambda_plus - pair.lambda_minus);
    let u = viscous_rarefaction_init(flux, pair, x1);
    half * sech_sq(x1) / flux.lambda_prime(u)
}

/// ũ^R(t, x₁) and ∂₁ũ^R(t, x₁) by characteristics.
///
/// Solves the fixed point w = ũ₀^R(x₁ - λ(w)t) by monotone bisection on
/// [u₋, u₊] (the map w ↦ w - ũ₀^R(x₁ - λ(w)t) is strictly increasing, so the
/// root is unique) to absolute tolerance 1e-12, then reports the slope by
/// implicit differentiation: d/(1 + t·λ'(w)·d) with d = (ũ₀^R)' at the foot
/// point.
pub fn viscous_rarefaction_eval(
    flux: Flux,
    pair: &WavePair,
    t: f64,
    x1: f64,
) -> Result<(f64, f64)> {
    if t < 0.0 {
        return Err(Error::Domain(format!("viscous rarefaction needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok((
            viscous_rarefaction_init(flux, pair, x1),
            viscous_rarefaction_init_slope(flux, pair, x1),
        ));
    }
    let residual = |w: f64| w - viscous_rarefaction_init(flux, pair, x1 - flux.lambda(w) * t);
    let mut lo = pair.u_minus;
    let mut hi = pair.u_plus;
    // 2^-52 of the jump reaches round-off; stop early once the bracket is
    // tighter than the 1e-12 contract.
    for _ in 0..60 {
        if hi - lo <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = 0.5 * (lo + hi);
    let foot = x1 - flux.lambda(w) * t;
    let d = viscous_rarefaction_init_slope(flux, pair, foot);
    let slope = d / (1.0 + t * flux.lambda_prime(w) * d);
    Ok((w, slope))
}

/// Weight g(t,x₁) = (ũ^R(t,x₁) - u₋)/(u₊ - u₋) ∈ (0,1).
pub fn weight_g(flux: Flux, pair: &WavePair, t: f64, x1: f64) -> Result<f64> {
    Ok(weight_g_with_slope(flux, pair, t, x1)?.0)
}

/// (g, ∂₁g); the slope is ∂₁ũ^R/(u₊-u₋).
pub fn weight_g_with_slope(flux: Flux, pair: &WavePair, t: f64, x1: f64) -> Result<(f64, f64)> {
    let (value, slope) = viscous_rarefaction_eval(flux, pair, t, x1)?;
    let jump = pair.jump();
    Ok(((value - pair.u_minus) / jump, slope / jump))
}

/// Blend ũ = u_l(1-g) + u_r·g pointwise; all fields must share one grid.
pub fn approximate_wave(u_l: &Field, u_r: &Field, g_values: &Field) -> Result<Field> {
    if u_l.grid() != g_values.grid() {
        return Err(Error::GridMismatch("u_l and g live on different grids".into()));
    }
    // u_l + g (u_r - u_l), algebraically u_l(1-g) + u_r g
    let lr = u_l.zip_with(u_r, |l, r| r - l)?;
    lr.zip_with(g_values, |d, g| d * g)?.zip_with(u_l, |dg, l| l + dg)
}

/// Difference form ũ - ũ^R = w_l(1-g) + w_r·g.
pub fn wave_gap(w_l: &Field, w_r: &Field, g_values: &Field) -> Result<Field> {
    let blend = w_l.zip_with(w_r, |l, r| r - l)?;
    blend.zip_with(g_values, |d, g| d * g)?.zip_with(w_l, |dg, l| l + dg)
}

/// One Fourier mode of a periodic perturbation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub wave_vector: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
}

/// Zero-mean perturbation w₀(x) = Σ amp·sin(2π k·x + phase) on the unit
/// torus. Zero wave vectors are rejected, which enforces ∫ w₀ = 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerturbationSpec {
    modes: Vec<Mode>,
}

impl PerturbationSpec {
    pub fn new(modes: Vec<Mode>, dim: usize) -> Result<Self> {
        for mode in &modes {
            if mode.wave_vector.len() != dim {
                return Err(Error::Domain(format!(
                    "mode wave vector {:?} does not match dimension {dim}",
                    mode.wave_vector
                )));
            }
            if mode.wave_vector.iter().all(|&k| k == 0) {
                return Err(Error::Domain("zero wave vector breaks the zero-mean constraint".into()));
            }
            if !mode.amplitude.is_finite() || !mode.phase.is_finite() {
                return Err(Error::Domain("mode amplitude and phase must be finite".into()));
            }
        }
        Ok(Self { modes })
    }

    pub fn none() -> Self {
        Self { modes: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Evaluate at a point in unit-cell coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for mode in &self.modes {
            let mut kx = 0.0;
            for (&k, &xi) in mode.wave_vector.iter().zip(x) {
                kx += k as f64 * xi;
            }
            sum += mode.amplitude * (std::f64::consts::TAU * kx + mode.phase).sin();
        }
        sum
    }

    /// Largest possible magnitude Σ|amp|.
    pub fn amplitude_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::GridSpec;
    use std::f64::consts::PI;

    fn burgers_pair() -> WavePair {
        WavePair::new(Flux::Burgers, -1.0, 1.0).unwrap()
    }

    #[test]
    fn wave_pair_orders_speeds() {
        let p = WavePair::new(Flux::Quartic, -0.5, 1.0).unwrap();
        assert!(p.lambda_minus < p.lambda_plus);
        assert!(WavePair::new(Flux::Burgers, 1.0, -1.0).is_err());
    }

    #[test]
    fn lambda_inverse_identity_for_burgers() {
        let u = lambda_inverse(Flux::Burgers, 0.3, (-1.0, 1.0)).unwrap();
        assert!((u - 0.3).abs() < 1e-12);
    }

    #[test]
    fn lambda_inverse_quartic() {
        // λ(u) = u + u³, λ(1) = 2
        let u = lambda_inverse(Flux::Quartic, 2.0, (0.0, 1.5)).unwrap();
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_inverse_endpoint() {
        let pair = burgers_pair();
        let u = lambda_inverse(Flux::Burgers, pair.lambda_plus, (-1.0, 1.0)).unwrap();
        assert_eq!(u, 1.0);
        assert!(lambda_inverse(Flux::Burgers, 1.5, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn rarefaction_fan_values() {
        let pair = burgers_pair();
        assert_eq!(rarefaction_profile(Flux::Burgers, &pair, 1.0, 0.0).unwrap(), 0.0);
        let inside = rarefaction_profile(Flux::Burgers, &pair, 2.0, 1.0).unwrap();
        assert!((inside - 0.5).abs() < 1e-12);
        let right = rarefaction_profile(Flux::Burgers, &pair, 1.0, pair.lambda_plus + 1.0).unwrap();
        assert_eq!(right, 1.0);
        assert!(rarefaction_profile(Flux::Burgers, &pair, 0.0, 0.0).is_err());
    }

    #[test]
    fn viscous_init_profile() {
        let pair = burgers_pair();
        assert_eq!(viscous_rarefaction_init(Flux::Burgers, &pair, 0.0), 0.0);
        let v = viscous_rarefaction_init(Flux::Burgers, &pair, 1.0);
        assert!((v - 0.7615941559557649).abs() < 1e-12); // tanh(1)
        let far = viscous_rarefaction_init(Flux::Burgers, &pair, 100.0);
        assert_eq!(far, 1.0);
    }

    #[test]
    fn viscous_eval_reduces_to_data_at_t_zero() {
        let pair = burgers_pair();
        for x in [-2.0, 0.0, 0.7, 3.0] {
            let (v, s) = viscous_rarefaction_eval(Flux::Burgers, &pair, 0.0, x).unwrap();
            assert_eq!(v, viscous_rarefaction_init(Flux::Burgers, &pair, x));
            assert_eq!(s, viscous_rarefaction_init_slope(Flux::Burgers, &pair, x));
        }
    }

    #[test]
    fn viscous_eval_keeps_odd_symmetry_center() {
        let pair = burgers_pair();
        for t in [0.5, 1.0, 7.0] {
            let (v, s) = viscous_rarefaction_eval(Flux::Burgers, &pair, t, 0.0).unwrap();
            assert!(v.abs() < 1e-12, "v = {v}");
            assert!(s > 0.0);
        }
    }

    #[test]
    fn viscous_eval_matches_scalar_fixed_point_oracle() {
        // Burgers, t = 1, x1 = 1: w = tanh(1 - w) solved independently by
        // plain bisection at 1e-14.
        let pair = burgers_pair();
        let (mut lo, mut hi) = (-1.0, 1.0);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if mid - (1.0 - mid as f64).tanh() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let (v, _) = viscous_rarefaction_eval(Flux::Burgers, &pair, 1.0, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-11, "{v} vs {oracle}");
        assert!(viscous_rarefaction_eval(Flux::Burgers, &pair, -1.0, 0.0).is_err());
    }

    #[test]
    fn weight_g_limits_and_center() {
        let pair = burgers_pair();
        let left = weight_g(Flux::Burgers, &pair, 1.0, -60.0).unwrap();
        let right = weight_g(Flux::Burgers, &pair, 1.0, 60.0).unwrap();
        let center = weight_g(Flux::Burgers, &pair, 1.0, 0.0).unwrap();
        assert!(left < 1e-12);
        assert!(right > 1.0 - 1e-12);
        assert!((center - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weight_g_self_interaction_integral_is_finite() {
        // ∫ g(1-g) dx1 at t = 1 by trapezoid quadrature over the wave support.
        let pair = burgers_pair();
        let (a, b, n) = (-50.0, 50.0, 2000);
        let h = (b - a) / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let x = a + i as f64 * h;
            let g = weight_g(Flux::Burgers, &pair, 1.0, x).unwrap();
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * g * (1.0 - g) * h;
        }
        assert!(integral.is_finite());
        assert!(integral > 0.0 && integral < 20.0, "integral = {integral}");
    }

    #[test]
    fn approximate_wave_identities() {
        let grid = GridSpec::channel(&[64], 2.0).unwrap();
        let pair = burgers_pair();
        let g = Field::from_fn(grid.clone(), |x| {
            weight_g(Flux::Burgers, &pair, 1.0, x[0]).unwrap()
        });
        let u_l = Field::constant(grid.clone(), pair.u_minus);
        let u_r = Field::constant(grid.clone(), pair.u_plus);
        // w0 = 0 means u_l = u_-, u_r = u_+ and the blend reproduces the
        // viscous wave itself.
        let blended = approximate_wave(&u_l, &u_r, &g).unwrap();
        let direct = Field::from_fn(grid.clone(), |x| {
            viscous_rarefaction_eval(Flux::Burgers, &pair, 1.0, x[0]).unwrap().0
        });
        for (a, b) in blended.values().iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        // endpoint weights
        let zero = Field::constant(grid.clone(), 0.0);
        let one = Field::constant(grid.clone(), 1.0);
        assert_eq!(approximate_wave(&u_l, &u_r, &zero).unwrap().values(), u_l.values());
        assert_eq!(approximate_wave(&u_l, &u_r, &one).unwrap().values(), u_r.values());
        // convex combination bound on the gap form
        let w_l = Field::from_fn(grid.clone(), |x| 0.03 * (2.0 * PI * x[0]).sin());
        let w_r = Field::from_fn(grid.clone(), |x| 0.05 * (2.0 * PI * x[0]).cos());
        let gap = wave_gap(&w_l, &w_r, &g).unwrap();
        let bound = 0.03 + 0.05 + 1e-12;
        assert!(gap.values().iter().all(|v| v.abs() <= bound));
        // grid mismatch
        let other = GridSpec::channel(&[32], 2.0).unwrap();
        let bad = Field::constant(other, 0.0);
        assert!(approximate_wave(&bad, &u_r, &g).is_err());
    }

    #[test]
    fn perturbation_examples() {
        assert_eq!(PerturbationSpec::none().eval(&[0.3, 0.4]), 0.0);
        let spec = PerturbationSpec::new(
            vec![Mode { wave_vector: vec![1, 0], amplitude: 0.1, phase: 0.0 }],
            2,
        )
        .unwrap();
        let v = spec.eval(&[0.25, 0.9]);
        assert!((v - 0.1).abs() < 1e-15);
        // discrete mean over a 1024-cell grid vanishes
        let grid = GridSpec::torus(&[1024]).unwrap();
        let spec1 = PerturbationSpec::new(
            vec![Mode { wave_vector: vec![3], amplitude: 0.2, phase: 1.1 }],
            1,
        )
        .unwrap();
        let f = Field::from_fn(grid, |x| spec1.eval(x));
        assert!(f.mean().abs() < 1e-15);
    }

    #[test]
    fn perturbation_rejects_zero_mode() {
        let res = PerturbationSpec::new(
            vec![Mode { wave_vector: vec![0, 0], amplitude: 0.1, phase: 0.0 }],
            2,
        );
        assert!(res.is_err());
    }

    #[test]
    fn slope_envelope_on_coarse_grid() {
        // 0 < slope <= min(C/t, jump) with C fitted once on a coarse pass.
        let pair = burgers_pair();
        let fit_c = {
            let mut c = 0.0f64;
            for ti in 0..10 {
                let t = 0.1 * 10f64.powf(ti as f64 / 3.0);
                for xi in 0..40 {
                    let x = pair.lambda_minus * t - 5.0
                        + (pair.lambda_plus * t + 10.0 - pair.lambda_minus * t) * xi as f64 / 39.0;
                    let (_, s) = viscous_rarefaction_eval(Flux::Burgers, &pair, t, x).unwrap();
                    c = c.max(s * t);
                }
            }
            c * 1.2
        };
        for ti in 0..20 {
            let t = 0.1 * (1000f64).powf(ti as f64 / 19.0);
            for xi in 0..60 {
                let x = pair.lambda_minus * t - 8.0
                    + (pair.lambda_plus * t + 16.0 - pair.lambda_minus * t) * xi as f64 / 59.0;
                let (v, s) = viscous_rarefaction_eval(Flux::Burgers, &pair, t, x).unwrap();
                assert!(v > pair.u_minus && v < pair.u_plus);
                assert!(s > 0.0);
                assert!(s <= (fit_c / t).min(pair.jump()) * (1.0 + 1e-9));
            }
        }
    }
}
