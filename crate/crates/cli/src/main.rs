//! `heomsync` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure
//! (including a failed truncation check without `--force`), 4 validation
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heomsync::config::RunConfig;
use heomsync::output::{write_csv, write_json};
use heomsync::run::{self, RunOutput};
use heomsync::validate::validate;
use heomsync::Error;

#[derive(Parser, Debug)]
#[command(name = "heomsync", version, about = "Driven two-level system in a Drude-Lorentz bath: HEOM runs, sweeps and synchronization diagnostics")]
struct Cli {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sweep worker threads; 0 uses every core (overrides `workers`).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Proceed even if the hierarchy truncation check fails.
    #[arg(long, global = true)]
    force: bool,
    /// Override one configuration key, e.g. `--set depth=6`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// One trajectory from `initial_state`: timeseries.csv.
    Simulate,
    /// One trajectory per entry of `initial_states`: trajectory_<i>.csv.
    Trajectories,
    /// Q fields at `snapshot_times` plus the Q argmax series.
    Qsnapshot,
    /// Windowed max-sync over the (Omega, omega) grid, plus rrc_lines.csv.
    SweepDrive,
    /// Windowed max-sync over the (lambda, gamma) grid at the configured drive.
    SweepBath,
    /// Closed-system Floquet quasienergies along `frequency_axis`.
    Floquet,
    /// Rotating-frame Fourier coefficients and their quadrature check.
    Fourier,
    /// Run the oracle suite and write validation.json.
    Validate,
}

enum Failure {
    Config(String),
    Solver(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (key, value) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.force |= cli.force;
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", cfg.out.display())))?;
    Ok(cfg)
}

fn report_run(name: &str, r: &RunOutput) {
    let conv = match &r.convergence {
        Some(c) => format!("depth dev {:.2e}, Matsubara dev {:.2e}", c.depth_deviation, c.matsubara_deviation),
        None => "truncation check skipped".into(),
    };
    println!(
        "{name}: windowed max-sync {:.6} (phi* {:.4}) at t = {}; {conv}; depth {}, {} ADOs, {} steps",
        r.window.value, r.window.phi_star, r.window.center, r.depth, r.diagnostics.n_ados, r.diagnostics.stats.accepted
    );
    if !r.diagnostics.is_clean() {
        eprintln!("warning: {name}: solver hygiene thresholds exceeded: {:?}", r.diagnostics);
    }
}

fn execute(command: Command, cfg: &RunConfig) -> Result<(), Failure> {
    let out = cfg.out.as_path();
    let file = |name: &str| -> PathBuf { out.join(name) };
    write_json(&file("config.json"), cfg)?;
    match command {
        Command::Simulate => {
            let r = run::run_single(cfg)?;
            write_csv(&file("timeseries.csv"), &r.rows)?;
            write_json(&file("simulate.json"), &r)?;
            report_run("simulate", &r);
        }
        Command::Trajectories => {
            let runs = run::trajectories(cfg)?;
            for (i, r) in runs.iter().enumerate() {
                write_csv(&file(&format!("trajectory_{i}.csv")), &r.rows)?;
                report_run(&format!("trajectory {i}"), r);
            }
            write_json(&file("trajectories.json"), &runs)?;
        }
        Command::Qsnapshot => {
            let snap = run::qsnapshot(cfg)?;
            for (i, f) in snap.fields.iter().enumerate() {
                write_csv(&file(&format!("q_snapshot_{i}.csv")), &f.rows)?;
            }
            write_csv(&file("q_argmax.csv"), &snap.argmax)?;
            write_csv(&file("timeseries.csv"), &snap.run.rows)?;
            let times: Vec<f64> = snap.fields.iter().map(|f| f.t).collect();
            write_json(&file("qsnapshot.json"), &serde_json::json!({ "snapshot_times": times, "run": snap.run }))?;
            report_run("qsnapshot", &snap.run);
        }
        Command::SweepDrive | Command::SweepBath => {
            let (grid, stem) = if let Command::SweepDrive = command {
                write_csv(&file("rrc_lines.csv"), &run::rrc_lines(&cfg.amplitude_axis.values())?)?;
                (run::sweep_drive(cfg)?, "sweep_drive")
            } else {
                (run::sweep_bath(cfg)?, "sweep_bath")
            };
            write_csv(&file(&format!("{stem}.csv")), &grid.rows())?;
            write_json(&file(&format!("{stem}.json")), &grid)?;
            let (n1, n2) = grid.shape();
            let unconverged = grid.converged.iter().filter(|c| !**c).count();
            println!("{stem}: {n1}x{n2} cells, {} failed, {unconverged} without a passing truncation check", grid.failures.len());
            for f in &grid.failures {
                eprintln!("warning: cell ({}, {}) = ({}, {}) failed: {}", f.i, f.j, f.axis1, f.axis2, f.message);
            }
        }
        Command::Floquet => {
            let scan = run::floquet_scan(cfg)?;
            write_csv(&file("floquet.csv"), &scan.rows)?;
            write_json(&file("floquet.json"), &scan)?;
            println!(
                "floquet: splitting {:.3e} at omega_rrc = {:.6}; contrast against +/-{} detuning {:.3e}",
                scan.rrc.splitting, scan.rrc.omega, cfg.floquet_detuning, scan.contrast
            );
        }
        Command::Fourier => {
            let table = run::fourier_table(cfg)?;
            write_csv(&file("fourier.csv"), &table)?;
            let worst = table.iter().map(|r| r.oracle_error).fold(0.0, f64::max);
            println!("fourier: {} coefficients, worst quadrature deviation {worst:.3e}", table.len());
        }
        Command::Validate => {
            let report = validate(cfg);
            write_json(&file("validation.json"), &report)?;
            for o in &report.oracles {
                let measured = o.measured.map_or("-".to_string(), |m| format!("{m:.3e}"));
                let tol = o.tolerance.map_or("-".to_string(), |t| format!("{t:.1e}"));
                println!("{:<24} {:<15} measured {measured:<10} tol {tol:<8} {}", o.name, serde_json::to_value(o.status).unwrap().as_str().unwrap_or("?"), o.detail);
            }
            if !report.passed {
                return Err(Failure::Validation("one or more oracles failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli).map_err(Failure::from).and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(4)
        }
    }
}
