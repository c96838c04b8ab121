//! Protocol right-hand sides and gain-condition validators.
//!
//! Two stages: a distributed observer that reconstructs the leader state at
//! every follower from neighbor estimates, and a per-agent sliding-mode
//! controller that drives the follower onto its own estimate. Both come in an
//! autonomous variant (constant gains) and a non-autonomous variant (the
//! bounded time-varying gains of [`crate::scaling`]).
//!
//! Everything here is a pure function of `(state, t, params)`; integration
//! lives in [`crate::sim`].

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, sin};

use crate::fixed_time::{
    controller_constants, signed_pow, ControllerConstants, FixedTimeParams, ParamError,
    SignMode,
};
use crate::graph::ConnectionMatrices;
use crate::scaling::GainSchedule;

/// A scalar time signal with a closed-form amplitude bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    Constant { value: f64 },
    /// `amplitude * sin(omega*t + phase)`.
    Sine { amplitude: f64, omega: f64, phase: f64 },
    /// `amplitude * cos(omega*t + phase)`.
    Cosine { amplitude: f64, omega: f64, phase: f64 },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Signal::Constant { value } => value,
            Signal::Sine { amplitude, omega, phase } => amplitude * sin(omega * t + phase),
            Signal::Cosine { amplitude, omega, phase } => amplitude * cos(omega * t + phase),
        }
    }

    /// A bound on `|signal(t)|`, tight for the three supported shapes.
    pub fn amplitude_bound(&self) -> f64 {
        match *self {
            Signal::Constant { value } => value.abs(),
            Signal::Sine { amplitude, .. } | Signal::Cosine { amplitude, .. } => {
                amplitude.abs()
            }
        }
    }
}

/// Leader dynamics: double integrator driven by a known bounded input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderModel {
    pub u0: Signal,
    /// Declared bound with `|u0(t)| <= u0_max`.
    pub u0_max: f64,
    pub x0_init: f64,
    pub v0_init: f64,
}

impl LeaderModel {
    pub fn at_rest(x0: f64) -> Self {
        Self { u0: Signal::Constant { value: 0.0 }, u0_max: 0.0, x0_init: x0, v0_init: 0.0 }
    }
}

/// Per-agent matched disturbances with their declared bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceModel {
    pub signals: Vec<Signal>,
    /// `delta_i` with `|Delta_i(t)| <= delta_i`.
    pub bounds: Vec<f64>,
}

impl DisturbanceModel {
    pub fn none(n: usize) -> Self {
        Self { signals: vec![Signal::Constant { value: 0.0 }; n], bounds: vec![0.0; n] }
    }

    pub fn eval(&self, agent: usize, t: f64) -> f64 {
        self.signals[agent].eval(t)
    }
}

/// Distributed-observer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverParams {
    /// The shared `rho = (alpha, beta, p, q, k)` of both observer channels.
    pub core: FixedTimeParams,
    pub zeta_x: f64,
    pub zeta_v: f64,
    /// Per-agent position-channel gains.
    pub kappa_x: Vec<f64>,
    /// Per-agent velocity-channel gains.
    pub kappa_v: Vec<f64>,
    /// Predefined settling scale of the velocity phase.
    pub t_c1: f64,
    /// Predefined settling scale of the position phase.
    pub t_c2: f64,
}

impl ObserverParams {
    /// Observer convergence bound `T_o = T_c1 + T_c2`.
    pub fn t_o(&self) -> f64 {
        self.t_c1 + self.t_c2
    }
}

/// Sliding-mode tracking-controller parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub alpha1: f64,
    pub beta1: f64,
    /// `(alpha2, beta2, p', q', k')` of the reaching phase.
    pub reaching: FixedTimeParams,
    pub that_c1: f64,
    pub that_c2: f64,
    /// Per-agent robustness gains `zeta_i`.
    pub zeta: Vec<f64>,
    pub constants: ControllerConstants,
}

impl ControllerParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha1: f64,
        beta1: f64,
        alpha2: f64,
        beta2: f64,
        p: f64,
        q: f64,
        k: f64,
        that_c1: f64,
        that_c2: f64,
        zeta: Vec<f64>,
    ) -> Result<Self, ParamError> {
        if !(that_c1 > 0.0) {
            return Err(ParamError::NonPositive { name: "that_c1", value: that_c1 });
        }
        if !(that_c2 > 0.0) {
            return Err(ParamError::NonPositive { name: "that_c2", value: that_c2 });
        }
        let constants = controller_constants(alpha1, beta1, alpha2, beta2, p, q, k)?;
        let reaching = FixedTimeParams::new(alpha2, beta2, p, q, k)?;
        Ok(Self { alpha1, beta1, reaching, that_c1, that_c2, zeta, constants })
    }
}

/// When the tracking controller switches on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerStart {
    /// Active from `t = 0`, together with the observer.
    Immediate,
    /// Active from the observer convergence bound `T_o` on.
    AfterObserver,
}

/// The three chained gain windows of the non-autonomous variant.
///
/// `rho1` scales the observer velocity channel on `[t0, t0 + eta1*T_c1)`,
/// `rho2` the position channel on the following window, and `rho3` the
/// controller on a window starting at the controller start time `T'_o`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonAutoParams {
    pub rho1: GainSchedule,
    pub rho2: GainSchedule,
    pub rho3: GainSchedule,
}

impl NonAutoParams {
    /// Chains `rho2` right after `rho1`'s window and places `rho3` at
    /// `controller_t0` (pass `t0` for an immediate start, or
    /// [`observer_ubst`](Self::observer_ubst)-style chaining for
    /// start-after-observer).
    pub fn chained(rho1: GainSchedule, rho2: GainSchedule, rho3: GainSchedule,
                   controller_t0: f64) -> Self {
        let rho2 = rho2.chained_at(rho1.window_end());
        let rho3 = rho3.chained_at(controller_t0);
        Self { rho1, rho2, rho3 }
    }

    /// Observer convergence bound `T_o = t0 + eta1*T_c1 + eta2*T_c2`.
    pub fn observer_ubst(&self) -> f64 {
        self.rho2.window_end()
    }

    /// Controller activation time `T'_o`.
    pub fn tracking_start(&self) -> f64 {
        self.rho3.t0()
    }

    /// Tracking convergence bound `T_hat = T'_o + eta3*T_c3`.
    pub fn tracking_ubst(&self) -> f64 {
        self.rho3.window_end()
    }
}

/// Neighborhood consensus errors `e_1 = -M*(x_hat - x0*1)` and
/// `e_2 = -M*(v_hat - v0*1)`.
///
/// Component-wise this is
/// `e_{1,i} = sum_j a_ij*(x_hat_j - x_hat_i) + b_i*(x0 - x_hat_i)`.
pub fn consensus_errors(
    x_hat: &[f64],
    v_hat: &[f64],
    leader: (f64, f64),
    topo: &ConnectionMatrices,
) -> (Vec<f64>, Vec<f64>) {
    let n = topo.leader_matrix.n();
    assert_eq!(x_hat.len(), n, "estimate count must match topology");
    assert_eq!(v_hat.len(), n, "estimate count must match topology");
    let (x0, v0) = leader;
    let x_tilde: Vec<f64> = x_hat.iter().map(|&x| x - x0).collect();
    let v_tilde: Vec<f64> = v_hat.iter().map(|&v| v - v0).collect();
    let mut e1 = topo.leader_matrix.mul_vec(&x_tilde);
    let mut e2 = topo.leader_matrix.mul_vec(&v_tilde);
    for v in e1.iter_mut().chain(e2.iter_mut()) {
        *v = -*v;
    }
    (e1, e2)
}

/// Autonomous distributed observer:
///
/// ```text
/// dx_hat_i/dt = v_hat_i + kappa_{i,x} * [(a|e1|^p + b|e1|^q)^k + zeta_x] * sgn(e_{1,i})
/// dv_hat_i/dt =           kappa_{i,v} * [(a|e2|^p + b|e2|^q)^k + zeta_v] * sgn(e_{2,i})
/// ```
///
/// The correction terms push along `sign(e) = -sign((M*err)_i)`, which is the
/// stabilizing direction for positive definite `M` (in the scalar case
/// `e_2 = -v_tilde`, so `dv_hat = -sqrt(3)` for `v_tilde = 1` with unit
/// parameters).
pub fn observer_rhs_autonomous(
    x_hat: &[f64],
    v_hat: &[f64],
    leader: (f64, f64),
    params: &ObserverParams,
    topo: &ConnectionMatrices,
    sign_mode: SignMode,
) -> (Vec<f64>, Vec<f64>) {
    let (e1, e2) = consensus_errors(x_hat, v_hat, leader, topo);
    let n = e1.len();
    let mut dx = vec![0.0; n];
    let mut dv = vec![0.0; n];
    for i in 0..n {
        dx[i] = v_hat[i]
            + params.kappa_x[i]
                * (params.core.power_term(e1[i]) + params.zeta_x)
                * sign_mode.apply(e1[i]);
        dv[i] = params.kappa_v[i]
            * (params.core.power_term(e2[i]) + params.zeta_v)
            * sign_mode.apply(e2[i]);
    }
    (dx, dv)
}

/// Non-autonomous observer: the nonlinear term of the velocity channel is
/// scaled by `rho1(t)`, the position channel by `rho2(t)`; the `zeta` terms
/// enter unscaled. For `t` past both windows this coincides with
/// [`observer_rhs_autonomous`].
#[allow(clippy::too_many_arguments)]
pub fn observer_rhs_nonautonomous(
    x_hat: &[f64],
    v_hat: &[f64],
    leader: (f64, f64),
    params: &ObserverParams,
    na: &NonAutoParams,
    topo: &ConnectionMatrices,
    t: f64,
    sign_mode: SignMode,
) -> (Vec<f64>, Vec<f64>) {
    let (e1, e2) = consensus_errors(x_hat, v_hat, leader, topo);
    let g1 = na.rho1.kappa(t);
    let g2 = na.rho2.kappa(t);
    let n = e1.len();
    let mut dx = vec![0.0; n];
    let mut dv = vec![0.0; n];
    for i in 0..n {
        dx[i] = v_hat[i]
            + params.kappa_x[i]
                * (g2 * params.core.power_term(e1[i]) + params.zeta_x)
                * sign_mode.apply(e1[i]);
        dv[i] = params.kappa_v[i]
            * (g1 * params.core.power_term(e2[i]) + params.zeta_v)
            * sign_mode.apply(e2[i]);
    }
    (dx, dv)
}

/// Sliding variable
/// `sigma = e_v + <<e_v>^2 + (g1^2/Tc1^2)*(a1*<e_x> + b1*<e_x>^3)>^{1/2}`,
/// where `<x>^r` is the signed power.
pub fn sliding_variable(e_x: f64, e_v: f64, params: &ControllerParams) -> f64 {
    let g1 = params.constants.gamma1;
    let c = g1 * g1 / (params.that_c1 * params.that_c1);
    let inner = signed_pow(e_v, 2.0)
        + c * (params.alpha1 * e_x + params.beta1 * signed_pow(e_x, 3.0));
    e_v + signed_pow(inner, 0.5)
}

/// Autonomous tracking controller for one agent:
///
/// ```text
/// u = -[(g2/Tc2)*(a2|s|^p' + b2|s|^q')^k' + (g1^2/(2 Tc1^2))*(a1 + 3 b1 e_x^2)
///       + zeta_i] * sgn(s)
/// ```
pub fn control_autonomous(
    e_x: f64,
    e_v: f64,
    params: &ControllerParams,
    zeta_i: f64,
    sign_mode: SignMode,
) -> f64 {
    let sigma = sliding_variable(e_x, e_v, params);
    let s = sign_mode.apply(sigma);
    if s == 0.0 {
        return 0.0;
    }
    let g1 = params.constants.gamma1;
    let g2 = params.constants.gamma2;
    let reach = g2 / params.that_c2 * params.reaching.power_term(sigma);
    let equiv = g1 * g1 / (2.0 * params.that_c1 * params.that_c1)
        * (params.alpha1 + 3.0 * params.beta1 * e_x * e_x);
    -(reach + equiv + zeta_i) * s
}

/// Non-autonomous tracking controller:
/// `u = rho3(t)^2 * v(e_x, e_v/rho3(t)) + rho3_dot(t)/rho3(t) * e_v`
/// inside the controller window, where `v` is [`control_autonomous`];
/// identical to the autonomous law past the window (`rho3 = 1`,
/// `rho3_dot = 0`); `0` before the activation time.
#[allow(clippy::too_many_arguments)]
pub fn control_nonautonomous(
    e_x: f64,
    e_v: f64,
    params: &ControllerParams,
    zeta_i: f64,
    na: &NonAutoParams,
    t: f64,
    sign_mode: SignMode,
) -> f64 {
    if t < na.tracking_start() {
        return 0.0;
    }
    let g = na.rho3.kappa(t);
    let g_dot = na.rho3.kappa_dot(t);
    g * g * control_autonomous(e_x, e_v / g, params, zeta_i, sign_mode)
        + g_dot / g * e_v
}

/// Convergence conditions on the observer gains, plus the minimal
/// compliant values implied by the topology and leader bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGainReport {
    /// Settling bound `gamma(rho)` of the shared scalar system.
    pub gamma_rho: f64,
    /// Minimal compliant `kappa_x = N*gamma(rho)/(lambda_min*T_c2)`.
    pub kappa_x_star: f64,
    /// Minimal compliant `kappa_v = N*gamma(rho)/(lambda_min*T_c1)`.
    pub kappa_v_star: f64,
    /// Minimal compliant `zeta_v = u0_max / min_i kappa_{i,v}`.
    pub zeta_v_star: f64,
    pub kappa_x_ok: bool,
    pub kappa_v_ok: bool,
    pub zeta_v_ok: bool,
}

impl ObserverGainReport {
    pub fn all_ok(&self) -> bool {
        self.kappa_x_ok && self.kappa_v_ok && self.zeta_v_ok
    }
}

/// Checks the three observer gain inequalities
/// `kappa_x >= N*gamma/(lambda_min*T_c2)`,
/// `kappa_v >= N*gamma/(lambda_min*T_c1)` and
/// `kappa_v*zeta_v >= u0_max` (each against the per-agent minimum), and
/// reports the minimal compliant values.
pub fn validate_observer_gains(
    params: &ObserverParams,
    topo: &ConnectionMatrices,
    leader: &LeaderModel,
) -> ObserverGainReport {
    let n = topo.leader_matrix.n() as f64;
    let gamma_rho = crate::fixed_time::settling_bound(&params.core);
    let kappa_x_star = n * gamma_rho / (topo.lambda_min * params.t_c2);
    let kappa_v_star = n * gamma_rho / (topo.lambda_min * params.t_c1);
    let min_kx = params.kappa_x.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_kv = params.kappa_v.iter().cloned().fold(f64::INFINITY, f64::min);
    let zeta_v_star = if leader.u0_max == 0.0 { 0.0 } else { leader.u0_max / min_kv };
    ObserverGainReport {
        gamma_rho,
        kappa_x_star,
        kappa_v_star,
        zeta_v_star,
        kappa_x_ok: min_kx >= kappa_x_star,
        kappa_v_ok: min_kv >= kappa_v_star,
        zeta_v_ok: min_kv * params.zeta_v >= leader.u0_max,
    }
}

/// Controller gain check: `zeta_i >= u0_max + delta_i` per agent, exponent
/// constraints (already enforced by construction), and the autonomous
/// tracking bound `T_hat_c = T'_o + T_hat_c1 + T_hat_c2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGainReport {
    /// Per-agent minimal `zeta_i = u0_max + delta_i`.
    pub zeta_star: Vec<f64>,
    pub zeta_ok: Vec<bool>,
    /// `T'_o + T_hat_c1 + T_hat_c2`.
    pub that_c: f64,
}

impl ControllerGainReport {
    pub fn all_ok(&self) -> bool {
        self.zeta_ok.iter().all(|&b| b)
    }
}

pub fn validate_controller_gains(
    params: &ControllerParams,
    leader: &LeaderModel,
    disturbance: &DisturbanceModel,
    t_prime_o: f64,
) -> ControllerGainReport {
    let n = params.zeta.len();
    let mut zeta_star = vec![0.0; n];
    let mut zeta_ok = vec![false; n];
    for i in 0..n {
        zeta_star[i] = leader.u0_max + disturbance.bounds[i];
        zeta_ok[i] = params.zeta[i] >= zeta_star[i];
    }
    ControllerGainReport {
        zeta_star,
        zeta_ok,
        that_c: t_prime_o + params.that_c1 + params.that_c2,
    }
}
