//! Flux models for the conservation law.
//!
//! Both models satisfy the normalization f(0) = f'(0) = 0 and a uniform
//! convexity floor f₁'' ≥ c_f > 0, so λ = f₁' is strictly increasing and
//! invertible on any state interval.

/// Smooth flux f = (f₁, …, f_N) with convex first component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flux {
    /// f_i(u) = u²/2 for every component. λ(u) = u is the identity.
    Burgers,
    /// f₁(u) = u²/2 + u⁴/4 (so λ(u) = u + u³ is not the identity),
    /// transverse components u²/2.
    Quartic,
}

impl Flux {
    /// i-th flux component f_i(u); `axis` is 0-based.
    #[inline]
    pub fn component(self, axis: usize, u: f64) -> f64 {
        match self {
            Flux::Burgers => 0.5 * u * u,
            Flux::Quartic if axis == 0 => 0.5 * u * u + 0.25 * u * u * u * u,
            Flux::Quartic => 0.5 * u * u,
        }
    }

    /// f_i'(u).
    #[inline]
    pub fn component_prime(self, axis: usize, u: f64) -> f64 {
        match self {
            Flux::Burgers => u,
            Flux::Quartic if axis == 0 => u + u * u * u,
            Flux::Quartic => u,
        }
    }

    /// f_i''(u).
    #[inline]
    pub fn component_second(self, axis: usize, u: f64) -> f64 {
        match self {
            Flux::Burgers => 1.0,
            Flux::Quartic if axis == 0 => 1.0 + 3.0 * u * u,
            Flux::Quartic => 1.0,
        }
    }

    /// Characteristic speed λ(u) = f₁'(u).
    #[inline]
    pub fn lambda(self, u: f64) -> f64 {
        self.component_prime(0, u)
    }

    /// λ'(u) = f₁''(u).
    #[inline]
    pub fn lambda_prime(self, u: f64) -> f64 {
        self.component_second(0, u)
    }

    /// Convexity floor c_f with f₁'' ≥ c_f everywhere.
    pub fn convexity_floor(self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_holds() {
        for flux in [Flux::Burgers, Flux::Quartic] {
            for axis in 0..3 {
                assert_eq!(flux.component(axis, 0.0), 0.0);
                assert_eq!(flux.component_prime(axis, 0.0), 0.0);
                assert!(flux.component_second(axis, 0.0) >= flux.convexity_floor());
            }
        }
    }

    #[test]
    fn quartic_lambda() {
        assert_eq!(Flux::Quartic.lambda(1.0), 2.0);
        assert_eq!(Flux::Quartic.lambda_prime(1.0), 4.0);
        assert_eq!(Flux::Quartic.component(1, 2.0), 2.0);
    }
}
