//! TOML scenario configuration: parsing, defaults, cross-section validation,
//! and resolution into the core `Scenario` / `SimConfig` types.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use ftc_core::fixed_time::{FixedTimeParams, SignMode};
use ftc_core::graph::{build_matrices, TopologySpec};
use ftc_core::protocols::{
    validate_controller_gains, validate_observer_gains, ControllerParams, ControllerStart,
    DisturbanceModel, LeaderModel, NonAutoParams, ObserverParams, Signal,
};
use ftc_core::scaling::{GainProfile, GainSchedule};
use ftc_core::sim::{Integrator, Scenario, SimConfig};

/// Signal expression tags; the closed set keeps amplitude bounds verifiable
/// by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalConfig {
    Constant { value: f64 },
    Sine { amplitude: f64, omega: f64, #[serde(default)] phase: f64 },
    Cosine { amplitude: f64, omega: f64, #[serde(default)] phase: f64 },
}

impl SignalConfig {
    fn to_signal(self) -> Signal {
        match self {
            SignalConfig::Constant { value } => Signal::Constant { value },
            SignalConfig::Sine { amplitude, omega, phase } => {
                Signal::Sine { amplitude, omega, phase }
            }
            SignalConfig::Cosine { amplitude, omega, phase } => {
                Signal::Cosine { amplitude, omega, phase }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub n_followers: usize,
    /// Undirected weighted edges `[i, j, weight]`, zero-based follower ids.
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64)>,
    /// Per-follower leader-link weights `b_i`.
    pub leader_links: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderConfig {
    pub u0: SignalConfig,
    /// Defaults to the amplitude bound of `u0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0_max: Option<f64>,
    pub x0: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub signals: Vec<SignalConfig>,
    /// Defaults to the per-signal amplitude bounds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
}

/// One scalar or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerAgent {
    fn resolve(&self, n: usize, section: &str, key: &str) -> Result<Vec<f64>> {
        match self {
            PerAgent::Uniform(v) => Ok(vec![*v; n]),
            PerAgent::Each(vs) => {
                if vs.len() != n {
                    bail!("[{section}] {key}: expected {n} values, got {}", vs.len());
                }
                Ok(vs.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub k: f64,
    pub t_c1: f64,
    pub t_c2: f64,
    /// Omitted gains resolve to the minimal values satisfying the
    /// convergence conditions for this topology and leader.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_x: Option<PerAgent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_v: Option<PerAgent>,
    #[serde(default)]
    pub zeta_x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_v: Option<f64>,
}

fn default_start() -> String {
    "immediate".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub p: f64,
    pub q: f64,
    pub k: f64,
    pub that_c1: f64,
    pub that_c2: f64,
    /// Omitted: resolves to `u0_max + delta_i` per agent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<PerAgent>,
    /// `immediate` or `after_observer`.
    #[serde(default = "default_start")]
    pub start: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonAutoConfig {
    /// Velocity-channel profile rate and shaping time.
    pub rate1: f64,
    pub t_alpha: f64,
    /// Position-channel profile.
    pub rate2: f64,
    pub t_beta: f64,
    /// Controller profile; its settling scale is `that_c1 + that_c2`.
    pub rate3: f64,
    pub t_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    /// `rk4` or `euler`.
    pub integrator: IntegratorTag,
    /// `exact` or a boundary-layer width.
    pub sign_mode: SignModeConfig,
    pub record_stride: usize,
    pub eps_settle: f64,
}

// toml round-trips &str poorly inside Copy structs; a tiny wrapper keeps the
// section `Copy` while still serializing as a plain string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorTag(#[serde(with = "integrator_string")] pub Integrator);

mod integrator_string {
    use super::Integrator;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Integrator, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match v {
            Integrator::Rk4 => "rk4",
            Integrator::Euler => "euler",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Integrator, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "rk4" => Ok(Integrator::Rk4),
            "euler" => Ok(Integrator::Euler),
            other => Err(serde::de::Error::custom(format!(
                "integrator must be \"rk4\" or \"euler\", got \"{other}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignModeConfig {
    Exact(ExactTag),
    BoundaryLayer { boundary_layer: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExactTag {
    #[serde(rename = "exact")]
    Exact,
}

impl SignModeConfig {
    fn to_sign_mode(self) -> SignMode {
        match self {
            SignModeConfig::Exact(_) => SignMode::Exact,
            SignModeConfig::BoundaryLayer { boundary_layer } => {
                SignMode::BoundaryLayer { width: boundary_layer }
            }
        }
    }
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            horizon: 3.0,
            integrator: IntegratorTag(Integrator::Rk4),
            sign_mode: SignModeConfig::Exact(ExactTag::Exact),
            record_stride: 10,
            eps_settle: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
}

/// The full on-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologyConfig,
    pub leader: LeaderConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceConfig>,
    pub observer: ObserverConfig,
    pub controller: ControllerConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonautonomous: Option<NonAutoConfig>,
    #[serde(default)]
    pub sim: SimSection,
    pub initial: InitialConfig,
}

/// A fully validated scenario plus the sim settings and gain reports.
#[derive(Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub sim: SimConfig,
    /// Human-readable warnings (non-compliant gains with `--strict` off).
    pub warnings: Vec<String>,
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg: ScenarioConfig = toml::from_str(&text)
        .with_context(|| format!("cannot parse config {}", path.display()))?;
    Ok(cfg)
}

#[cfg_attr(not(test), allow(dead_code))]
pub fn save_scenario(cfg: &ScenarioConfig, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(cfg).context("cannot serialize config")?;
    std::fs::write(path, text)
        .with_context(|| format!("cannot write config {}", path.display()))?;
    Ok(())
}

impl ScenarioConfig {
    /// Validates every section, applies defaults, derives omitted gains, and
    /// builds the simulation-ready scenario. With `strict`, non-compliant
    /// explicitly-given gains are errors instead of warnings.
    pub fn resolve(&self, strict: bool) -> Result<Resolved> {
        let n = self.topology.n_followers;
        let spec = TopologySpec::new(
            n,
            self.topology.edges.clone(),
            self.topology.leader_links.clone(),
        )
        .map_err(|e| anyhow!("[topology]: {e}"))?;
        let matrices = build_matrices(&spec);

        let u0 = self.leader.u0.to_signal();
        let u0_bound = u0.amplitude_bound();
        let u0_max = self.leader.u0_max.unwrap_or(u0_bound);
        if u0_max < u0_bound {
            bail!("[leader] u0_max = {u0_max} is below the declared signal amplitude {u0_bound}");
        }
        let leader = LeaderModel {
            u0,
            u0_max,
            x0_init: self.leader.x0,
            v0_init: self.leader.v0,
        };

        let disturbance = match &self.disturbance {
            None => DisturbanceModel::none(n),
            Some(d) => {
                if d.signals.len() != n {
                    bail!(
                        "[disturbance] signals: expected {n} entries, got {}",
                        d.signals.len()
                    );
                }
                let signals: Vec<Signal> = d.signals.iter().map(|s| s.to_signal()).collect();
                let bounds = match &d.bounds {
                    None => signals.iter().map(|s| s.amplitude_bound()).collect(),
                    Some(b) => {
                        if b.len() != n {
                            bail!("[disturbance] bounds: expected {n} entries, got {}", b.len());
                        }
                        for (i, (&bi, s)) in b.iter().zip(signals.iter()).enumerate() {
                            if bi < s.amplitude_bound() {
                                bail!(
                                    "[disturbance] bounds[{i}] = {bi} is below the signal amplitude {}",
                                    s.amplitude_bound()
                                );
                            }
                        }
                        b.clone()
                    }
                };
                DisturbanceModel { signals, bounds }
            }
        };

        let o = &self.observer;
        let core = FixedTimeParams::new(o.alpha, o.beta, o.p, o.q, o.k)
            .map_err(|e| anyhow!("[observer]: {e}"))?;
        if !(o.t_c1 > 0.0) {
            bail!("[observer] t_c1 must be > 0, got {}", o.t_c1);
        }
        if !(o.t_c2 > 0.0) {
            bail!("[observer] t_c2 must be > 0, got {}", o.t_c2);
        }
        if o.zeta_x < 0.0 {
            bail!("[observer] zeta_x must be >= 0, got {}", o.zeta_x);
        }

        // A probe with placeholder gains yields the minimal compliant values.
        let probe = ObserverParams {
            core,
            zeta_x: o.zeta_x,
            zeta_v: 0.0,
            kappa_x: vec![1.0; n],
            kappa_v: vec![1.0; n],
            t_c1: o.t_c1,
            t_c2: o.t_c2,
        };
        let minimal = validate_observer_gains(&probe, &matrices, &leader);
        // Tiny headroom so "minimal" gains pass their own >= checks after
        // rounding.
        let margin = 1.0 + 1e-9;
        let kappa_x = match &o.kappa_x {
            None => vec![minimal.kappa_x_star * margin; n],
            Some(p) => p.resolve(n, "observer", "kappa_x")?,
        };
        let kappa_v = match &o.kappa_v {
            None => vec![minimal.kappa_v_star * margin; n],
            Some(p) => p.resolve(n, "observer", "kappa_v")?,
        };
        for (key, vals) in [("kappa_x", &kappa_x), ("kappa_v", &kappa_v)] {
            if let Some(v) = vals.iter().find(|v| !(**v > 0.0)) {
                bail!("[observer] {key}: gains must be > 0, got {v}");
            }
        }
        let min_kv = kappa_v.iter().cloned().fold(f64::INFINITY, f64::min);
        let zeta_v = match o.zeta_v {
            None => {
                if u0_max == 0.0 {
                    0.0
                } else {
                    u0_max / min_kv * margin
                }
            }
            Some(z) => {
                if z < 0.0 {
                    bail!("[observer] zeta_v must be >= 0, got {z}");
                }
                z
            }
        };
        let observer = ObserverParams {
            core,
            zeta_x: o.zeta_x,
            zeta_v,
            kappa_x,
            kappa_v,
            t_c1: o.t_c1,
            t_c2: o.t_c2,
        };

        let mut warnings = Vec::new();
        let obs_report = validate_observer_gains(&observer, &matrices, &leader);
        if !obs_report.all_ok() {
            let msg = format!(
                "[observer] gains do not satisfy the convergence conditions \
                 (kappa_x ok: {}, kappa_v ok: {}, kappa_v*zeta_v >= u0_max: {}); \
                 minimal compliant: kappa_x = {:.6}, kappa_v = {:.6}, zeta_v = {:.6}",
                obs_report.kappa_x_ok,
                obs_report.kappa_v_ok,
                obs_report.zeta_v_ok,
                obs_report.kappa_x_star,
                obs_report.kappa_v_star,
                obs_report.zeta_v_star
            );
            if strict {
                bail!("{msg}");
            }
            warnings.push(msg);
        }

        let c = &self.controller;
        let zeta = match &c.zeta {
            None => disturbance.bounds.iter().map(|d| u0_max + d).collect(),
            Some(p) => p.resolve(n, "controller", "zeta")?,
        };
        let controller = ControllerParams::new(
            c.alpha1, c.beta1, c.alpha2, c.beta2, c.p, c.q, c.k, c.that_c1, c.that_c2, zeta,
        )
        .map_err(|e| anyhow!("[controller]: {e}"))?;
        let controller_start = match c.start.as_str() {
            "immediate" => ControllerStart::Immediate,
            "after_observer" => ControllerStart::AfterObserver,
            other => bail!(
                "[controller] start must be \"immediate\" or \"after_observer\", got \"{other}\""
            ),
        };

        let ctrl_report = validate_controller_gains(&controller, &leader, &disturbance, 0.0);
        if !ctrl_report.all_ok() {
            let msg = format!(
                "[controller] zeta does not dominate u0_max + delta_i for all agents \
                 (minimal: {:?})",
                ctrl_report.zeta_star
            );
            if strict {
                bail!("{msg}");
            }
            warnings.push(msg);
        }

        let non_auto = match &self.nonautonomous {
            None => None,
            Some(na) => {
                for (key, v) in [
                    ("rate1", na.rate1),
                    ("t_alpha", na.t_alpha),
                    ("rate2", na.rate2),
                    ("t_beta", na.t_beta),
                    ("rate3", na.rate3),
                    ("t_gamma", na.t_gamma),
                ] {
                    if !(v > 0.0) {
                        bail!("[nonautonomous] {key} must be > 0, got {v}");
                    }
                }
                let rho1 = GainSchedule::new(
                    GainProfile::Exponential { rate: na.rate1 },
                    0.0,
                    o.t_c1,
                    na.t_alpha,
                );
                let rho2 = GainSchedule::new(
                    GainProfile::Exponential { rate: na.rate2 },
                    0.0,
                    o.t_c2,
                    na.t_beta,
                );
                let rho3 = GainSchedule::new(
                    GainProfile::Exponential { rate: na.rate3 },
                    0.0,
                    c.that_c1 + c.that_c2,
                    na.t_gamma,
                );
                let controller_t0 = match controller_start {
                    ControllerStart::Immediate => 0.0,
                    ControllerStart::AfterObserver => rho1.window_end() + rho2.eta() * o.t_c2,
                };
                Some(NonAutoParams::chained(rho1, rho2, rho3, controller_t0))
            }
        };

        for (key, vals) in [
            ("x", &self.initial.x),
            ("v", &self.initial.v),
            ("x_hat", &self.initial.x_hat),
            ("v_hat", &self.initial.v_hat),
        ] {
            if vals.len() != n {
                bail!("[initial] {key}: expected {n} entries, got {}", vals.len());
            }
            if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                bail!("[initial] {key}: values must be finite, got {v}");
            }
        }

        if !(self.sim.dt > 0.0) {
            bail!("[sim] dt must be > 0, got {}", self.sim.dt);
        }
        if self.sim.record_stride == 0 {
            bail!("[sim] record_stride must be >= 1");
        }
        if !(self.sim.eps_settle > 0.0) {
            bail!("[sim] eps_settle must be > 0, got {}", self.sim.eps_settle);
        }
        let sim = SimConfig {
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            integrator: self.sim.integrator.0,
            sign_mode: self.sim.sign_mode.to_sign_mode(),
            record_stride: self.sim.record_stride,
            eps_settle: self.sim.eps_settle,
        };

        let scenario = Scenario {
            matrices,
            leader,
            disturbance,
            observer,
            controller,
            controller_start,
            non_auto,
            x_init: self.initial.x.clone(),
            v_init: self.initial.v.clone(),
            x_hat_init: self.initial.x_hat.clone(),
            v_hat_init: self.initial.v_hat.clone(),
        };
        if !(sim.horizon > scenario.tracking_ubst().max(scenario.observer_ubst())) {
            bail!(
                "[sim] horizon = {} must exceed every configured settling bound (max {})",
                sim.horizon,
                scenario.tracking_ubst().max(scenario.observer_ubst())
            );
        }
        Ok(Resolved { scenario, sim, warnings })
    }

    /// Field-by-field comparison of the shared-scenario sections (everything
    /// except gains, time-varying profiles and sim settings). Returns the
    /// names of mismatched fields.
    pub fn shared_scenario_mismatches(&self, other: &ScenarioConfig) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.topology != other.topology {
            out.push("topology");
        }
        if self.leader != other.leader {
            out.push("leader");
        }
        if self.disturbance != other.disturbance {
            out.push("disturbance");
        }
        if self.initial != other.initial {
            out.push("initial");
        }
        out
    }
}
