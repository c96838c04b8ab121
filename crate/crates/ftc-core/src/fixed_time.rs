//! Scalar fixed-time stability primitives.
//!
//! The scalar system `dx/dt = -(alpha*|x|^p + beta*|x|^q)^k * sign(x)` with
//! `k*p < 1 < k*q` is fixed-time stable: its settling time is bounded by a
//! constant `gamma(rho)` that does not depend on the initial condition. This
//! module evaluates that bound, the Gamma function it is built from, the
//! signed power used throughout the protocols, and the derived controller
//! constants `gamma1`/`gamma2`.

use core::fmt;

use libm::{exp, pow, sin, sqrt};

/// Validation failure for fixed-time parameters or a Gamma-function argument.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    /// The named parameter must be strictly positive.
    NonPositive { name: &'static str, value: f64 },
    /// The product `k*p` must be strictly below one.
    KpNotBelowOne { kp: f64 },
    /// The product `k*q` must be strictly above one.
    KqNotAboveOne { kq: f64 },
    /// Gamma is only evaluated on the positive real axis.
    GammaDomain { z: f64 },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonPositive { name, value } => {
                write!(f, "parameter {name} must be > 0, got {value}")
            }
            ParamError::KpNotBelowOne { kp } => {
                write!(f, "exponent constraint k*p < 1 violated: k*p = {kp}")
            }
            ParamError::KqNotAboveOne { kq } => {
                write!(f, "exponent constraint k*q > 1 violated: k*q = {kq}")
            }
            ParamError::GammaDomain { z } => {
                write!(f, "gamma_fn requires z > 0, got {z}")
            }
        }
    }
}

/// The parameter vector `rho = [alpha, beta, p, q, k]` of the scalar
/// fixed-time system, with `alpha, beta, p, q, k > 0`, `k*p < 1` and
/// `k*q > 1` enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedTimeParams {
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    k: f64,
}

impl FixedTimeParams {
    pub fn new(alpha: f64, beta: f64, p: f64, q: f64, k: f64) -> Result<Self, ParamError> {
        for (name, value) in [
            ("alpha", alpha),
            ("beta", beta),
            ("p", p),
            ("q", q),
            ("k", k),
        ] {
            if !(value > 0.0) {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        if !(k * p < 1.0) {
            return Err(ParamError::KpNotBelowOne { kp: k * p });
        }
        if !(k * q > 1.0) {
            return Err(ParamError::KqNotAboveOne { kq: k * q });
        }
        Ok(Self { alpha, beta, p, q, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `(alpha*|x|^p + beta*|x|^q)^k`, the magnitude factor shared by every
    /// protocol right-hand side.
    pub fn power_term(&self, x: f64) -> f64 {
        let ax = x.abs();
        pow(self.alpha * pow(ax, self.p) + self.beta * pow(ax, self.q), self.k)
    }

    /// Right-hand side of the scalar fixed-time system.
    pub fn scalar_rhs(&self, x: f64) -> f64 {
        -self.power_term(x) * sign(x)
    }
}

/// `sign(x)` with `sign(0) = 0`, so the origin is an exact equilibrium of
/// every right-hand side built on it.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// How the discontinuous `sign` is evaluated inside the simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignMode {
    /// Exact sign with `sign(0) = 0`.
    Exact,
    /// `sign(x) ~ x / width` saturated to +-1 inside a band of the given
    /// width, to tame chattering in long post-settling runs.
    BoundaryLayer { width: f64 },
}

impl SignMode {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            SignMode::Exact => sign(x),
            SignMode::BoundaryLayer { width } => {
                if x.abs() < width {
                    x / width
                } else {
                    sign(x)
                }
            }
        }
    }
}

/// Signed power `|x|^r * sign(x)`.
///
/// Odd in `x`; `signed_pow(0, r) = 0` for `r > 0`. The combination `r <= 0`
/// with `x = 0` is outside the domain and yields NaN.
pub fn signed_pow(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        if r > 0.0 {
            return 0.0;
        }
        return f64::NAN;
    }
    pow(x.abs(), r) * sign(x)
}

// Lanczos approximation, g = 7, 9 terms. Coefficients as published in the
// GNU Scientific Library.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const PI: f64 = core::f64::consts::PI;

/// Gamma function on the positive real axis, relative error below 1e-10 on
/// `[1e-3, 50]`.
pub fn gamma_fn(z: f64) -> Result<f64, ParamError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(ParamError::GammaDomain { z });
    }
    Ok(lanczos_gamma(z))
}

fn lanczos_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // Reflection keeps the argument of the series above 1/2.
        PI / (sin(PI * z) * lanczos_gamma(1.0 - z))
    } else {
        let z = z - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        sqrt(2.0 * PI) * pow(t, z + 0.5) * exp(-t) * acc
    }
}

/// Settling-time bound `gamma(rho)` of the scalar fixed-time system:
///
/// ```text
/// gamma(rho) = Gamma(m_p) * Gamma(m_q) / (alpha^k * Gamma(k) * (q - p))
///              * (alpha / beta)^m_p
/// ```
///
/// with `m_p = (1 - k*p)/(q - p)` and `m_q = (q*k - 1)/(q - p)`. The
/// parameter constraints are enforced by [`FixedTimeParams::new`], so this
/// cannot fail.
pub fn settling_bound(params: &FixedTimeParams) -> f64 {
    let (alpha, beta, p, q, k) =
        (params.alpha, params.beta, params.p, params.q, params.k);
    let m_p = (1.0 - k * p) / (q - p);
    let m_q = (q * k - 1.0) / (q - p);
    let g_mp = lanczos_gamma(m_p);
    let g_mq = lanczos_gamma(m_q);
    let g_k = lanczos_gamma(k);
    g_mp * g_mq / (pow(alpha, k) * g_k * (q - p)) * pow(alpha / beta, m_p)
}

/// The constants the tracking controller is tuned with.
///
/// `gamma1` is the settling-bound constant of the sliding-surface reduced
/// dynamics (exponents fixed at 1 and 3), `gamma2` the one of the reaching
/// dynamics with exponents `p'`, `q'`, `k'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConstants {
    pub gamma1: f64,
    pub gamma2: f64,
    pub m_p: f64,
    pub m_q: f64,
}

/// Computes `gamma1`/`gamma2` from the controller parameters.
///
/// `gamma1 = Gamma(1/4)^2 / (2*alpha1^(1/2)*Gamma(1/2)) * (alpha1/beta1)^(1/4)`
/// and `gamma2` follows the same pattern as [`settling_bound`] with the
/// primed exponents.
#[allow(clippy::too_many_arguments)]
pub fn controller_constants(
    alpha1: f64,
    beta1: f64,
    alpha2: f64,
    beta2: f64,
    p: f64,
    q: f64,
    k: f64,
) -> Result<ControllerConstants, ParamError> {
    for (name, value) in [
        ("alpha1", alpha1),
        ("beta1", beta1),
        ("alpha2", alpha2),
        ("beta2", beta2),
    ] {
        if !(value > 0.0) {
            return Err(ParamError::NonPositive { name, value });
        }
    }
    // Re-uses the rho validation for p', q', k'.
    let primed = FixedTimeParams::new(alpha2, beta2, p, q, k)?;
    let m_p = (1.0 - k * p) / (q - p);
    let m_q = (q * k - 1.0) / (q - p);
    let g_quarter = lanczos_gamma(0.25);
    let g_half = lanczos_gamma(0.5);
    let gamma1 =
        g_quarter * g_quarter / (2.0 * sqrt(alpha1) * g_half) * pow(alpha1 / beta1, 0.25);
    let gamma2 = settling_bound(&primed);
    Ok(ControllerConstants { gamma1, gamma2, m_p, m_q })
}

/// Power-mean inequality used in the observer convergence argument:
/// for positive `a_i`,
///
/// ```text
/// (1/n) * sum a_i*(alpha*a_i^p + beta*a_i^q)^k
///     >= mean * (alpha*mean^p + beta*mean^q)^k
/// ```
///
/// Evaluated directly on both sides, with a 1e-12 relative allowance for
/// rounding at the equality case.
pub fn check_power_mean_inequality(a: &[f64], params: &FixedTimeParams) -> bool {
    if a.is_empty() {
        return true;
    }
    let n = a.len() as f64;
    let mut lhs = 0.0;
    let mut mean = 0.0;
    for &ai in a {
        lhs += ai * params.power_term(ai);
        mean += ai;
    }
    lhs /= n;
    mean /= n;
    let rhs = mean * params.power_term(mean);
    lhs - rhs >= -1e-12 * (lhs.abs() + rhs.abs())
}

/// p-norm monotonicity: `||z||_l <= ||z||_r` for `l > r > 0`.
pub fn check_norm_monotonicity(z: &[f64], l: f64, r: f64) -> bool {
    debug_assert!(l > r && r > 0.0);
    let nl = p_norm(z, l);
    let nr = p_norm(z, r);
    nl - nr <= 1e-12 * (nl.abs() + nr.abs())
}

fn p_norm(z: &[f64], p: f64) -> f64 {
    let mut acc = 0.0;
    for &zi in z {
        acc += pow(zi.abs(), p);
    }
    pow(acc, 1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    fn rho_paper() -> FixedTimeParams {
        FixedTimeParams::new(1.0, 2.0, 1.5, 3.0, 0.5).unwrap()
    }

    #[test]
    fn signed_pow_examples() {
        assert_eq!(signed_pow(0.0, 0.5), 0.0);
        assert_eq!(signed_pow(-4.0, 0.5), -2.0);
        assert_eq!(signed_pow(-2.0, 3.0), -8.0);
        assert!(signed_pow(0.0, -1.0).is_nan());
        assert!(signed_pow(0.0, 0.0).is_nan());
    }

    #[test]
    fn signed_pow_is_odd() {
        for &x in &[1e-9, 0.1, 1.0, 7.3, 1e6] {
            for &r in &[0.2, 0.5, 1.0, 2.0, 3.7] {
                assert_eq!(signed_pow(-x, r), -signed_pow(x, r));
            }
        }
    }

    #[test]
    fn gamma_known_values() {
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(gamma_fn(1.0).unwrap(), 1.0) < 1e-13);
        assert!(rel(gamma_fn(5.0).unwrap(), 24.0) < 1e-13);
        assert!(rel(gamma_fn(0.5).unwrap(), SQRT_PI) < 1e-12);
        // Oracle values computed with 40-digit arithmetic.
        assert!(rel(gamma_fn(1.0 / 6.0).unwrap(), 5.566_316_001_780_235) < 1e-10);
        assert!(rel(gamma_fn(0.25).unwrap(), 3.625_609_908_221_908_3) < 1e-10);
        assert!(rel(gamma_fn(1.0 / 3.0).unwrap(), 2.678_938_534_707_747_6) < 1e-10);
    }

    #[test]
    fn gamma_accuracy_across_range() {
        // (z, Gamma(z)) frozen from a 40-digit oracle.
        let table = [
            (1e-3, 999.423_772_484_595_5),
            (0.01, 99.432_585_119_150_6),
            (0.1, 9.513_507_698_668_732),
            (1.5, 0.886_226_925_452_758),
            (4.2, 7.756_689_535_793_177_6),
            (7.0, 720.0),
            (12.34, 92_044_896.636_968_6),
            (25.0, 6.204_484_017_332_394_4e23),
            (50.0, 6.082_818_640_342_675_6e62),
        ];
        for (z, expected) in table {
            let got = gamma_fn(z).unwrap();
            assert!(
                ((got - expected) / expected).abs() < 1e-10,
                "Gamma({z}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn settling_bound_golden() {
        // Oracle: 4.996808960935077743... from 40-digit evaluation.
        let g = settling_bound(&rho_paper());
        assert!(((g - 4.996_808_960_935_078) / g).abs() < 1e-9);
    }

    #[test]
    fn settling_bound_pi_closed_form() {
        let params = FixedTimeParams::new(1.0, 1.0, 0.5, 1.5, 1.0).unwrap();
        let g = settling_bound(&params);
        assert!((g - core::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn settling_bound_monotone_in_alpha() {
        let base = settling_bound(&rho_paper());
        let scaled = settling_bound(&FixedTimeParams::new(4.0, 2.0, 1.5, 3.0, 0.5).unwrap());
        assert!(scaled < base);
    }

    #[test]
    fn invalid_exponents_rejected() {
        let err = FixedTimeParams::new(1.0, 2.0, 2.0, 3.0, 0.5).unwrap_err();
        assert_eq!(err, ParamError::KpNotBelowOne { kp: 1.0 });
        let err = FixedTimeParams::new(1.0, 2.0, 0.5, 1.5, 0.5).unwrap_err();
        assert_eq!(err, ParamError::KqNotAboveOne { kq: 0.75 });
        assert!(FixedTimeParams::new(-1.0, 2.0, 1.5, 3.0, 0.5).is_err());
    }

    #[test]
    fn controller_constants_examples() {
        let c = controller_constants(0.25, 4.0, 0.25, 4.0, 1.5, 3.0, 0.5).unwrap();
        // gamma1 oracle: 3.708149354602744; gamma2 oracle: 7.0665550011418.
        assert!(((c.gamma1 - 3.708_149_354_602_744) / c.gamma1).abs() < 1e-10);
        assert!(((c.gamma2 - 7.066_555_001_141_8) / c.gamma2).abs() < 1e-10);
        assert!((c.m_p - 1.0 / 6.0).abs() < 1e-12);
        assert!((c.m_q - 1.0 / 3.0).abs() < 1e-12);

        // alpha1 = beta1 = 1 collapses to the same gamma1.
        let c2 = controller_constants(1.0, 1.0, 0.25, 4.0, 1.5, 3.0, 0.5).unwrap();
        assert!(((c2.gamma1 - c.gamma1) / c.gamma1).abs() < 1e-12);
    }

    #[test]
    fn controller_constants_rejects_bad_exponents() {
        assert!(controller_constants(0.25, 4.0, 0.25, 4.0, 3.0, 4.0, 0.5).is_err());
        assert!(controller_constants(0.0, 4.0, 0.25, 4.0, 1.5, 3.0, 0.5).is_err());
    }

    #[test]
    fn power_mean_examples() {
        let rho = rho_paper();
        assert!(check_power_mean_inequality(&[0.7, 0.7, 0.7], &rho));
        assert!(check_power_mean_inequality(&[1.0, 2.0, 3.0], &rho));
        let rho2 = FixedTimeParams::new(1.0, 1.0, 0.5, 2.0, 1.0).unwrap();
        assert!(check_power_mean_inequality(&[1e-6, 1e6], &rho2));
    }

    #[test]
    fn norm_monotonicity_examples() {
        assert!(check_norm_monotonicity(&[3.0, 4.0], 2.0, 1.0));
        assert!(check_norm_monotonicity(&[1.0, 0.0, 0.0], 3.0, 1.0));
        let z = [2.5, -9.1, 0.3, 7.7, -0.02, 4.4, -6.0, 1.9];
        assert!(check_norm_monotonicity(&z, 3.0, 1.5));
    }

    #[test]
    fn sign_modes() {
        assert_eq!(SignMode::Exact.apply(0.0), 0.0);
        assert_eq!(SignMode::Exact.apply(-3.0), -1.0);
        let bl = SignMode::BoundaryLayer { width: 1e-3 };
        assert_eq!(bl.apply(5e-4), 0.5);
        assert_eq!(bl.apply(-2.0), -1.0);
    }
}
