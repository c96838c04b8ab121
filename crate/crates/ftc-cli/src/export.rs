//! Trajectory CSV export and gnuplot scripts for the standard figures.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use ftc_core::sim::Trajectory;

use crate::report::RunReport;

/// Columns per agent appended after `t, x0, v0`.
const AGENT_CHANNELS: [&str; 9] = [
    "x", "v", "x_hat", "v_hat", "x_tilde", "v_tilde", "e_x", "e_v", "sigma",
];

/// 1-based CSV column of `channel` for agent `i` (0-based).
fn column(i: usize, channel: usize) -> usize {
    4 + AGENT_CHANNELS.len() * i + channel
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    if traj.is_empty() {
        bail!("trajectory is empty; nothing to export");
    }
    let n = traj.x[0].len();
    let mut s = String::new();
    s.push_str("t,x0,v0");
    for i in 0..n {
        for ch in AGENT_CHANNELS {
            let _ = write!(s, ",{}_{}", ch, i + 1);
        }
    }
    s.push('\n');
    for k in 0..traj.len() {
        let _ = write!(s, "{:.16e},{:.16e},{:.16e}", traj.times[k], traj.x0[k], traj.v0[k]);
        for i in 0..n {
            for col in [
                &traj.x, &traj.v, &traj.x_hat, &traj.v_hat, &traj.x_tilde, &traj.v_tilde,
                &traj.e_x, &traj.e_v, &traj.sigma,
            ] {
                let _ = write!(s, ",{:.16e}", col[k][i]);
            }
        }
        s.push('\n');
    }
    Ok(s)
}

struct PlotSpec {
    file: &'static str,
    title: &'static str,
    ylabel: &'static str,
    /// (channel index into AGENT_CHANNELS, legend prefix)
    channels: &'static [(usize, &'static str)],
    /// Leader columns to include: (csv column, legend).
    leader: &'static [(usize, &'static str)],
    /// Vertical markers: (label, time).
    markers: Vec<(String, f64)>,
}

fn script(spec: &PlotSpec, n: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set xlabel 't [s]'");
    let _ = writeln!(s, "set ylabel '{}'", spec.ylabel);
    let _ = writeln!(s, "set title '{}'", spec.title);
    let _ = writeln!(s, "set grid");
    for (label, t) in &spec.markers {
        let _ = writeln!(
            s,
            "set arrow from {t:.12}, graph 0 to {t:.12}, graph 1 nohead dt 2 lc 'gray40'"
        );
        let _ = writeln!(s, "set label '{label}' at {t:.12}, graph 1.02 center");
    }
    let mut terms = Vec::new();
    for &(col, legend) in spec.leader {
        terms.push(format!("'trajectory.csv' using 1:{col} with lines lw 2 title '{legend}'"));
    }
    for &(ch, prefix) in spec.channels {
        for i in 0..n {
            terms.push(format!(
                "'trajectory.csv' using 1:{} with lines title '{}_{}'",
                column(i, ch),
                prefix,
                i + 1
            ));
        }
    }
    let _ = writeln!(s, "plot \\\n  {}", terms.join(", \\\n  "));
    s
}

/// Writes `trajectory.csv` plus the four standard gnuplot scripts into `dir`.
pub fn write_run_artifacts(dir: &Path, traj: &Trajectory, report: &RunReport) -> Result<()> {
    let csv = trajectory_csv(traj)?;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    std::fs::write(dir.join("trajectory.csv"), csv).context("cannot write trajectory.csv")?;

    let n = traj.x[0].len();
    let t_c1 = report.channels[0].bound;
    let t_o = report.channels[1].bound;
    let t_hat = report.channels[2].bound;
    let specs = [
        PlotSpec {
            file: "estimates.gp",
            title: "Leader state and observer estimates",
            ylabel: "state",
            channels: &[(2, "xhat"), (3, "vhat")],
            leader: &[(2, "x0"), (3, "v0")],
            markers: vec![("T_o".into(), t_o)],
        },
        PlotSpec {
            file: "observer_errors.gp",
            title: "Observer errors",
            ylabel: "error",
            channels: &[(4, "xtilde"), (5, "vtilde")],
            leader: &[],
            markers: vec![("T_c1".into(), t_c1), ("T_o".into(), t_o)],
        },
        PlotSpec {
            file: "tracking_errors.gp",
            title: "Tracking errors",
            ylabel: "error",
            channels: &[(6, "ex"), (7, "ev")],
            leader: &[],
            markers: vec![("T".into(), t_hat)],
        },
        PlotSpec {
            file: "trajectories.gp",
            title: "Leader and follower positions",
            ylabel: "position",
            channels: &[(0, "x")],
            leader: &[(2, "x0")],
            markers: vec![("T".into(), t_hat)],
        },
    ];
    for spec in &specs {
        std::fs::write(dir.join(spec.file), script(spec, n))
            .with_context(|| format!("cannot write {}", spec.file))?;
    }
    Ok(())
}
