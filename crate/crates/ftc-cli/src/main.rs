//! `ftc`: run, validate, and compare fixed-time consensus scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use ftc_cli::config::{load_scenario, PerAgent, Resolved, ScenarioConfig};
use ftc_core::sim::{run_scenario, RunOutput};
use ftc_cli::report::{self, RunReport};
use ftc_cli::export;

#[derive(Parser)]
#[command(name = "ftc", version, about = "Fixed-time leader-follower consensus simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and report detected settling times vs. bounds.
    Run {
        config: PathBuf,
        /// Write trajectory.csv and gnuplot scripts here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat non-compliant gains as errors instead of warnings.
        #[arg(long)]
        strict: bool,
        /// Emit machine-readable key=value lines instead of the table.
        #[arg(long)]
        kv: bool,
    },
    /// Validate a scenario's gains without simulating.
    Gains { config: PathBuf },
    /// Run two scenarios over the same plant and compare their slacks.
    Compare { a: PathBuf, b: PathBuf },
    /// Re-run a scenario with one parameter swept over several values.
    Sweep {
        config: PathBuf,
        /// One of: sim.dt, sim.eps_settle, observer.kappa_x, observer.kappa_v,
        /// observer.zeta_v, controller.zeta, controller.that_c1,
        /// controller.that_c2.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

/// Exit 2 on configuration errors, 3 on numerical aborts mid-run.
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, out, strict, kv } => cmd_run(&config, out.as_deref(), strict, kv),
        Cmd::Gains { config } => cmd_gains(&config),
        Cmd::Compare { a, b } => cmd_compare(&a, &b),
        Cmd::Sweep { config, param, values } => cmd_sweep(&config, &param, &values),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn resolve(path: &Path, strict: bool) -> Result<(ScenarioConfig, Resolved)> {
    let cfg = load_scenario(path)?;
    let resolved = cfg.resolve(strict)?;
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
    Ok((cfg, resolved))
}

/// Runs the simulation; on a numerical abort prints the failure and returns
/// the dedicated exit code instead of an error.
fn simulate(r: &Resolved) -> Result<RunOutput, ExitCode> {
    run_scenario(&r.scenario, &r.sim).map_err(|abort| {
        eprintln!("numerical failure: {abort}");
        ExitCode::from(EXIT_NUMERIC)
    })
}

fn cmd_run(path: &Path, out_dir: Option<&Path>, strict: bool, kv: bool) -> Result<ExitCode> {
    let (_, resolved) = resolve(path, strict)?;
    let output = match simulate(&resolved) {
        Ok(o) => o,
        Err(code) => return Ok(code),
    };
    let report = RunReport::new(&resolved.scenario, &resolved.sim, &output);
    print!("{}", if kv { report.render_kv() } else { report.render() });
    if let Some(dir) = out_dir {
        export::write_run_artifacts(dir, &output.trajectory, &report)?;
        println!("artifacts written to {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gains(path: &Path) -> Result<ExitCode> {
    let (_, resolved) = resolve(path, false)?;
    let scn = &resolved.scenario;
    let og = ftc_core::protocols::validate_observer_gains(&scn.observer, &scn.matrices, &scn.leader);
    let cg = ftc_core::protocols::validate_controller_gains(
        &scn.controller,
        &scn.leader,
        &scn.disturbance,
        scn.controller_start_time(),
    );
    println!("lambda_min = {:.12}", scn.matrices.lambda_min);
    println!("scaled settling constant gamma_rho = {:.12}", og.gamma_rho);
    println!(
        "kappa_x: min required {:.6}, ok: {}",
        og.kappa_x_star, og.kappa_x_ok
    );
    println!(
        "kappa_v: min required {:.6}, ok: {}",
        og.kappa_v_star, og.kappa_v_ok
    );
    println!(
        "zeta_v:  min required {:.6}, ok: {}",
        og.zeta_v_star, og.zeta_v_ok
    );
    println!("controller zeta minima: {:?}", cg.zeta_star);
    println!("controller zeta ok: {:?}", cg.zeta_ok);
    println!("tracking settling bound = {:.6}", scn.tracking_ubst());
    println!("observer settling bound = {:.6}", scn.observer_ubst());
    let ok = og.all_ok() && cg.all_ok();
    println!("all conditions satisfied: {ok}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(path_a: &Path, path_b: &Path) -> Result<ExitCode> {
    let (cfg_a, res_a) = resolve(path_a, false)?;
    let (cfg_b, res_b) = resolve(path_b, false)?;
    let mismatches = cfg_a.shared_scenario_mismatches(&cfg_b);
    if !mismatches.is_empty() {
        bail!(
            "scenarios disagree on the shared plant sections: {}",
            mismatches.join(", ")
        );
    }
    let out_a = match simulate(&res_a) {
        Ok(o) => o,
        Err(code) => return Ok(code),
    };
    let out_b = match simulate(&res_b) {
        Ok(o) => o,
        Err(code) => return Ok(code),
    };
    let rep_a = RunReport::new(&res_a.scenario, &res_a.sim, &out_a);
    let rep_b = RunReport::new(&res_b.scenario, &res_b.sim, &out_b);
    let label = |r: &Resolved| {
        if r.scenario.non_auto.is_some() {
            "time-varying"
        } else {
            "constant"
        }
    };
    print!("{}", report::render_comparison(label(&res_a), &rep_a, label(&res_b), &rep_b));
    for (name, rep) in [(label(&res_a), &rep_a), (label(&res_b), &rep_b)] {
        if let Some(cap) = rep.tracking_window_cap {
            println!(
                "{name}: tracking bound {:.6} (formula), gain window closes at {:.6}",
                rep.channels[2].bound, cap
            );
        }
        if !rep.all_within_bounds() {
            println!("{name}: BOUND VIOLATED in at least one channel");
        }
        if !rep.observer_gains.all_ok() || !rep.controller_gains.all_ok() {
            println!("{name}: gain conditions not satisfied (see `ftc gains`)");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn set_param(cfg: &mut ScenarioConfig, key: &str, v: f64) -> Result<()> {
    match key {
        "sim.dt" => cfg.sim.dt = v,
        "sim.eps_settle" => cfg.sim.eps_settle = v,
        "observer.kappa_x" => cfg.observer.kappa_x = Some(PerAgent::Uniform(v)),
        "observer.kappa_v" => cfg.observer.kappa_v = Some(PerAgent::Uniform(v)),
        "observer.zeta_v" => cfg.observer.zeta_v = Some(v),
        "controller.zeta" => cfg.controller.zeta = Some(PerAgent::Uniform(v)),
        "controller.that_c1" => cfg.controller.that_c1 = v,
        "controller.that_c2" => cfg.controller.that_c2 = v,
        other => bail!("unsupported sweep parameter \"{other}\""),
    }
    Ok(())
}

fn cmd_sweep(path: &Path, param: &str, values: &[f64]) -> Result<ExitCode> {
    let base = load_scenario(path)?;
    println!(
        "{:>14} {:>12} {:>12} {:>12}",
        param, "v_tilde", "x_tilde", "tracking"
    );
    for &v in values {
        let mut cfg = base.clone();
        set_param(&mut cfg, param, v)?;
        let resolved = cfg.resolve(false)?;
        let cell = |t: Option<f64>| match t {
            Some(t) => format!("{t:.6}"),
            None => "-".into(),
        };
        match run_scenario(&resolved.scenario, &resolved.sim) {
            Ok(out) => {
                let s = &out.settling;
                println!(
                    "{:>14.6} {:>12} {:>12} {:>12}",
                    v,
                    cell(s.v_tilde),
                    cell(s.x_tilde),
                    cell(s.tracking)
                );
            }
            Err(abort) => {
                println!("{:>14.6} diverged at t = {:.6} in {}", v, abort.t, abort.channel);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
