//! Bounded time-varying gains built from a time reparametrization.
//!
//! A gain profile `Phi` on the auxiliary time axis induces the map
//! `psi(tau) = T_c * integral_0^tau Phi`, and the gain applied in real time
//! is `kappa(t) = 1 / (T_c * Phi(psi_inverse(t - t0)))` inside the window
//! `[t0, t0 + eta*T_c)` and `1` outside. For the exponential profile
//! `Phi(tau) = alpha_hat * eta^{-1} * e^{-alpha_hat * tau}` with
//! `eta = 1 - e^{-alpha_hat * T}`, everything has a closed form, which is all
//! this module implements: no quadrature, no root finding.

use core::fmt;

use libm::{exp, log};

/// Error for evaluating `psi_inverse` at or beyond the image of `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingError {
    /// `t_rel` is negative or at/beyond `T_c / eta`, the limit of `psi`.
    OutOfDomain { t_rel: f64, limit: f64 },
}

impl fmt::Display for ScalingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingError::OutOfDomain { t_rel, limit } => {
                write!(f, "psi_inverse argument {t_rel} outside [0, {limit})")
            }
        }
    }
}

/// Shape of the profile `Phi` on the auxiliary time axis.
///
/// Only the exponential instance is implemented concretely; the enum leaves
/// room for other integrable profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainProfile {
    /// `Phi(tau) = rate * eta^{-1} * e^{-rate * tau}`.
    Exponential { rate: f64 },
}

/// A fully resolved gain window: profile, start time, settling scale `T_c`,
/// shaping parameter `T`, and the derived `eta` and window end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSchedule {
    profile: GainProfile,
    t0: f64,
    t_c: f64,
    shaping_t: f64,
    eta: f64,
    window_end: f64,
}

impl GainSchedule {
    /// Builds a schedule. Panics if `rate`, `t_c`, or `shaping_t` is not a
    /// positive finite number (these are programming errors, not runtime
    /// conditions: configs validate them before construction).
    pub fn new(profile: GainProfile, t0: f64, t_c: f64, shaping_t: f64) -> Self {
        let GainProfile::Exponential { rate } = profile;
        assert!(rate > 0.0 && rate.is_finite(), "profile rate must be positive");
        assert!(t_c > 0.0 && t_c.is_finite(), "settling scale must be positive");
        assert!(shaping_t > 0.0 && shaping_t.is_finite(), "shaping time must be positive");
        let eta = 1.0 - exp(-rate * shaping_t);
        Self { profile, t0, t_c, shaping_t, eta, window_end: t0 + eta * t_c }
    }

    pub fn profile(&self) -> GainProfile {
        self.profile
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn shaping_t(&self) -> f64 {
        self.shaping_t
    }

    /// `eta(T) = 1 - e^{-rate * T}`, the fraction of `T_c` the window spans.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `t0 + eta * T_c`; the gain reverts to 1 from here on.
    pub fn window_end(&self) -> f64 {
        self.window_end
    }

    /// Same profile and parameters, shifted to start at `t0`.
    pub fn chained_at(&self, t0: f64) -> Self {
        Self { t0, window_end: t0 + self.eta * self.t_c, ..*self }
    }

    fn rate(&self) -> f64 {
        let GainProfile::Exponential { rate } = self.profile;
        rate
    }

    /// Profile value `Phi(tau)`.
    pub fn phi(&self, tau: f64) -> f64 {
        let rate = self.rate();
        rate / self.eta * exp(-rate * tau)
    }

    /// `psi(tau) = T_c * eta^{-1} * (1 - e^{-rate * tau})`, mapping the
    /// auxiliary interval `[0, T]` onto `[0, T_c]`.
    pub fn psi(&self, tau: f64) -> f64 {
        debug_assert!(tau >= 0.0);
        self.t_c / self.eta * (1.0 - exp(-self.rate() * tau))
    }

    /// Inverse of [`psi`](Self::psi):
    /// `tau = -(1/rate) * ln(1 - eta * t_rel / T_c)`.
    pub fn psi_inverse(&self, t_rel: f64) -> Result<f64, ScalingError> {
        let limit = self.t_c / self.eta;
        if !(0.0..limit).contains(&t_rel) {
            return Err(ScalingError::OutOfDomain { t_rel, limit });
        }
        Ok(-log(1.0 - self.eta * t_rel / self.t_c) / self.rate())
    }

    /// The bounded time-varying gain:
    /// `eta / (rate * (T_c - eta * (t - t0)))` inside `[t0, window_end)`,
    /// `1` outside. Finite for every `t`.
    pub fn kappa(&self, t: f64) -> f64 {
        if t < self.t0 || t >= self.window_end {
            return 1.0;
        }
        self.eta / (self.rate() * (self.t_c - self.eta * (t - self.t0)))
    }

    /// Time derivative of [`kappa`](Self::kappa):
    /// `eta^2 / (rate * (T_c - eta * (t - t0))^2)` inside the window, `0`
    /// outside. At the boundaries the convention matches `kappa`: the
    /// interior value at `t0`, the exterior value at `window_end`.
    pub fn kappa_dot(&self, t: f64) -> f64 {
        if t < self.t0 || t >= self.window_end {
            return 0.0;
        }
        let d = self.t_c - self.eta * (t - self.t0);
        self.eta * self.eta / (self.rate() * d * d)
    }

    /// Supremum of `kappa` over the window: `eta / (rate * T_c * (1 - eta^2))`.
    pub fn sup_gain(&self) -> f64 {
        self.eta / (self.rate() * self.t_c * (1.0 - self.eta * self.eta))
    }
}
