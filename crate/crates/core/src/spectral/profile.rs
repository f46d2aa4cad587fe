use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

/// Interaction multiplier `|k|^(1 - s)` with the zero mode removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    s_exponent: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(s_exponent: T) -> Result<Self> {
        if !(s_exponent > T::zero()) || !s_exponent.is_finite() {
            return Err(Error::InvalidKernel(format!("s must be positive, got {s_exponent}")));
        }
        Ok(Self { s_exponent })
    }

    /// Coulomb/gravitational case, `|k|^-2`.
    pub fn coulomb() -> Self {
        Self { s_exponent: T::lit(3.0) }
    }

    pub fn s_exponent(&self) -> T {
        self.s_exponent
    }

    pub fn eval(&self, k: i64) -> T {
        if k == 0 {
            return T::zero();
        }
        T::from_mode(k.abs()).powf(T::one() - self.s_exponent)
    }
}

/// Shape function on `[-1, 1]`, normalized to 1 at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpShape {
    /// `exp(1 - 1/(1 - u^2))`
    #[default]
    Smooth,
}

impl BumpShape {
    pub fn eval<T: Scalar>(self, u: T) -> T {
        match self {
            BumpShape::Smooth => {
                let q = T::one() - u * u;
                if q <= T::zero() {
                    T::zero()
                } else {
                    (T::one() - q.recip()).exp()
                }
            }
        }
    }

    /// `∫_{-1}^{1} shape(u) du`.
    pub fn integral(self) -> f64 {
        static SMOOTH: OnceLock<f64> = OnceLock::new();
        match self {
            BumpShape::Smooth => *SMOOTH.get_or_init(|| {
                let rule = GaussLegendre::<f64>::new(64);
                let f = |u: f64| BumpShape::Smooth.eval(u);
                rule.integrate(-1.0, -0.5, f)
                    + rule.integrate(-0.5, 0.0, f)
                    + rule.integrate(0.0, 0.5, f)
                    + rule.integrate(0.5, 1.0, f)
            }),
        }
    }
}

/// Fourier-side velocity profile `ψ̂(η) = σ · shape(η/δ)`, exactly zero for `|η| >= δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile<T> {
    delta: T,
    sigma: T,
    shape: BumpShape,
}

impl<T: Scalar> BumpProfile<T> {
    pub fn new(delta: T, sigma: T) -> Result<Self> {
        Self::with_shape(delta, sigma, BumpShape::Smooth)
    }

    pub fn with_shape(delta: T, sigma: T, shape: BumpShape) -> Result<Self> {
        if !(delta > T::zero() && delta < T::lit(0.1)) {
            return Err(Error::InvalidProfile(format!("delta must lie in (0, 0.1), got {delta}")));
        }
        if !sigma.is_finite() {
            return Err(Error::InvalidProfile("sigma must be finite".into()));
        }
        Ok(Self { delta, sigma, shape })
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn shape(&self) -> BumpShape {
        self.shape
    }

    pub fn is_nonnegative(&self) -> bool {
        self.sigma >= T::zero()
    }

    /// `∫ ψ̂(η) dη`, the mass a convolution with `ψ̂` multiplies smooth data by.
    pub fn mass(&self) -> T {
        self.sigma * self.delta * T::lit(self.shape.integral())
    }
}

pub fn eval_psi_hat<T: Scalar>(profile: &BumpProfile<T>, eta: T) -> T {
    if eta.abs() >= profile.delta {
        return T::zero();
    }
    profile.sigma * profile.shape.eval(eta / profile.delta)
}

/// `sup_v |ψ̌(v)| = (1/2π) ∫ ψ̂`, valid because `ψ̂ >= 0`.
pub fn psi_check_sup<T: Scalar>(profile: &BumpProfile<T>) -> Result<T> {
    if !profile.is_nonnegative() {
        return Err(Error::InvalidProfile(format!(
            "psi_hat must be nonnegative, sigma = {}",
            profile.sigma
        )));
    }
    let rule = GaussLegendre::<T>::new(64);
    let d = profile.delta;
    let f = |eta: T| eval_psi_hat(profile, eta);
    let integral = rule.integrate(-d, T::zero(), f) + rule.integrate(T::zero(), d, f);
    Ok(integral / (T::lit(2.0) * T::PI()))
}

/// Background wave `ε cos(x - tv) ψ(v)` with `f₀ ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundState<T> {
    epsilon: T,
    profile: BumpProfile<T>,
}

impl<T: Scalar> BackgroundState<T> {
    pub fn new(epsilon: T, profile: BumpProfile<T>) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidProfile("epsilon must be finite".into()));
        }
        Ok(Self { epsilon, profile })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn profile(&self) -> &BumpProfile<T> {
        &self.profile
    }

    /// Coupling constant in front of the resonant sum: `ε/2`, from `cos x = (e^{ix} + e^{-ix})/2`.
    pub fn prefactor(&self) -> T {
        self.epsilon / T::lit(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> BumpProfile<f64> {
        BumpProfile::new(0.05, 0.1).unwrap()
    }

    #[test]
    fn psi_hat_center_and_boundary() {
        let p = profile();
        assert_eq!(eval_psi_hat(&p, 0.0), 0.1);
        assert_eq!(eval_psi_hat(&p, 0.05), 0.0);
        assert_eq!(eval_psi_hat(&p, -0.05), 0.0);
        assert_eq!(eval_psi_hat(&p, 0.2), 0.0);
    }

    #[test]
    fn psi_hat_half_radius() {
        // shape(1/2) = exp(1 - 1/(3/4)) = exp(-1/3)
        let v = eval_psi_hat(&profile(), 0.025);
        assert!((v - 0.1 * (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!(v > 0.0 && v < 0.1);
    }

    #[test]
    fn shape_integral_value() {
        // independent reference from adaptive quadrature at 30 digits
        assert!((BumpShape::Smooth.integral() - 1.2069003224378763).abs() < 1e-13);
    }

    #[test]
    fn psi_check_sup_matches_shape_integral() {
        let p = profile();
        let expected = 0.1 * 0.05 / std::f64::consts::PI * (1.2069003224378763 / 2.0);
        assert!((psi_check_sup(&p).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn psi_check_sup_zero_and_linear() {
        let zero = BumpProfile::new(0.05, 0.0).unwrap();
        assert_eq!(psi_check_sup(&zero).unwrap(), 0.0);
        let a = psi_check_sup(&profile()).unwrap();
        let b = psi_check_sup(&BumpProfile::new(0.05, 0.2).unwrap()).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-16);
    }

    #[test]
    fn psi_check_sup_rejects_negative_profile() {
        let p = BumpProfile::new(0.05, -1.0).unwrap();
        assert!(matches!(psi_check_sup(&p), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn delta_bound_enforced() {
        assert!(BumpProfile::new(0.1, 1.0).is_err());
        assert!(BumpProfile::new(0.0, 1.0).is_err());
    }

    #[test]
    fn kernel_values() {
        let w = KernelSpec::<f64>::coulomb();
        assert_eq!(w.eval(0), 0.0);
        assert_eq!(w.eval(2), 0.25);
        assert_eq!(w.eval(-2), w.eval(2));
        let neutral = KernelSpec::new(1.0).unwrap();
        assert_eq!(neutral.eval(7), 1.0);
        assert!(KernelSpec::new(0.0).is_err());
    }

    #[test]
    fn mass_is_two_pi_sup() {
        let p = profile();
        let m = p.mass();
        assert!((m - 2.0 * std::f64::consts::PI * psi_check_sup(&p).unwrap()).abs() < 1e-15);
    }
}
