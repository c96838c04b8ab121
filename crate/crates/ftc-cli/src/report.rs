//! Run summaries: detected settling times against the configured bounds.

use std::fmt::Write as _;

use ftc_core::protocols::{
    validate_controller_gains, validate_observer_gains, ControllerGainReport, ObserverGainReport,
};
use ftc_core::sim::{RunOutput, Scenario, SimConfig};

/// One settling channel: what the run detected vs. the configured bound.
#[derive(Debug, Clone, Copy)]
pub struct ChannelReport {
    pub name: &'static str,
    pub detected: Option<f64>,
    pub bound: f64,
}

impl ChannelReport {
    /// Positive slack means the channel settled inside its bound.
    pub fn slack(&self) -> Option<f64> {
        self.detected.map(|t| self.bound - t)
    }

    pub fn ok(&self) -> bool {
        matches!(self.slack(), Some(s) if s >= 0.0)
    }
}

/// Everything the `run` and `compare` commands print about one scenario.
pub struct RunReport {
    pub eps: f64,
    pub channels: [ChannelReport; 3],
    pub controller_start: f64,
    /// For time-varying runs: the hard end of the controller gain window,
    /// an upper cap independent of the settling-bound formula.
    pub tracking_window_cap: Option<f64>,
    pub observer_gains: ObserverGainReport,
    pub controller_gains: ControllerGainReport,
}

impl RunReport {
    pub fn new(scn: &Scenario, _cfg: &SimConfig, out: &RunOutput) -> Self {
        let s = &out.settling;
        let channels = [
            ChannelReport {
                name: "v_tilde",
                detected: s.v_tilde,
                bound: scn.velocity_ubst(),
            },
            ChannelReport {
                name: "x_tilde",
                detected: s.x_tilde,
                bound: scn.observer_ubst(),
            },
            ChannelReport {
                name: "tracking",
                detected: s.tracking,
                bound: scn.tracking_ubst(),
            },
        ];
        RunReport {
            eps: s.eps,
            channels,
            controller_start: scn.controller_start_time(),
            tracking_window_cap: scn
                .non_auto
                .as_ref()
                .map(|na| na.tracking_start() + na.rho3.t_c()),
            observer_gains: validate_observer_gains(&scn.observer, &scn.matrices, &scn.leader),
            controller_gains: validate_controller_gains(
                &scn.controller,
                &scn.leader,
                &scn.disturbance,
                scn.controller_start_time(),
            ),
        }
    }

    /// Aligned human-readable table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "settling threshold eps = {:e}", self.eps);
        let _ = writeln!(s, "controller active from t = {:.6}", self.controller_start);
        let _ = writeln!(
            s,
            "{:<10} {:>14} {:>14} {:>14}  status",
            "channel", "detected", "bound", "slack"
        );
        for c in &self.channels {
            match c.detected {
                Some(t) => {
                    let _ = writeln!(
                        s,
                        "{:<10} {:>14.6} {:>14.6} {:>14.6}  {}",
                        c.name,
                        t,
                        c.bound,
                        c.bound - t,
                        if c.ok() { "within bound" } else { "BOUND VIOLATED" }
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{:<10} {:>14} {:>14.6} {:>14}  NOT SETTLED",
                        c.name, "-", c.bound, "-"
                    );
                }
            }
        }
        if let Some(cap) = self.tracking_window_cap {
            let _ = writeln!(
                s,
                "tracking gain window closes at t = {:.6} (hard cap on the tracking phase)",
                cap
            );
        }
        let og = &self.observer_gains;
        let _ = writeln!(
            s,
            "observer gains: kappa_x {} (min {:.6}), kappa_v {} (min {:.6}), \
             kappa_v*zeta_v >= u0_max {} (min zeta_v {:.6})",
            pass(og.kappa_x_ok),
            og.kappa_x_star,
            pass(og.kappa_v_ok),
            og.kappa_v_star,
            pass(og.zeta_v_ok),
            og.zeta_v_star,
        );
        let cg = &self.controller_gains;
        let all = cg.zeta_ok.iter().all(|&b| b);
        let _ = writeln!(
            s,
            "controller gains: zeta dominates u0_max + delta_i {} (minima {:?})",
            pass(all),
            cg.zeta_star,
        );
        s
    }

    /// Machine-readable `key=value` lines.
    pub fn render_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eps={:e}", self.eps);
        let _ = writeln!(s, "controller_start={:e}", self.controller_start);
        for c in &self.channels {
            match c.detected {
                Some(t) => {
                    let _ = writeln!(s, "{}_detected={:e}", c.name, t);
                    let _ = writeln!(s, "{}_slack={:e}", c.name, c.bound - t);
                }
                None => {
                    let _ = writeln!(s, "{}_detected=none", c.name);
                }
            }
            let _ = writeln!(s, "{}_bound={:e}", c.name, c.bound);
            let _ = writeln!(s, "{}_ok={}", c.name, c.ok());
        }
        if let Some(cap) = self.tracking_window_cap {
            let _ = writeln!(s, "tracking_window_cap={:e}", cap);
        }
        let _ = writeln!(s, "observer_gains_ok={}", self.observer_gains.all_ok());
        let _ = writeln!(s, "controller_gains_ok={}", self.controller_gains.all_ok());
        s
    }

    pub fn all_within_bounds(&self) -> bool {
        self.channels.iter().all(|c| c.ok())
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

/// Side-by-side slack comparison for two runs over the same plant.
pub fn render_comparison(label_a: &str, a: &RunReport, label_b: &str, b: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:>16} {:>16} {:>16} {:>16}",
        "channel",
        format!("{label_a} detected"),
        format!("{label_a} slack"),
        format!("{label_b} detected"),
        format!("{label_b} slack"),
    );
    for (ca, cb) in a.channels.iter().zip(b.channels.iter()) {
        let cell = |v: Option<f64>| match v {
            Some(t) => format!("{t:.6}"),
            None => "-".into(),
        };
        let _ = writeln!(
            s,
            "{:<10} {:>16} {:>16} {:>16} {:>16}",
            ca.name,
            cell(ca.detected),
            cell(ca.slack()),
            cell(cb.detected),
            cell(cb.slack()),
        );
    }
    s
}
