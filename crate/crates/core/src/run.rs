//! Pipelines behind the command-line tool: single runs, trajectory sets,
//! Q snapshots, the two parameter sweeps, and the Floquet and Fourier
//! tables.
//!
//! Every propagation ends at `t_max + w/2`, the right edge of the
//! averaging window, whatever else is sampled on the way. The integrator
//! picks its steps from the end time alone and serves intermediate
//! outputs by dense interpolation, so a sweep cell and a single run at the
//! same parameters produce bit-identical windowed values.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathParams;
use crate::config::RunConfig;
use crate::drive::{
    floquet_default_tolerance, floquet_quasienergies, fourier_component, fourier_component_quadrature, DriveParams,
};
use crate::error::{Error, Result};
use crate::heom::{convergence_check, ConvergenceReport, Diagnostics, HeomSolver, SolverConfig, TrajectoryPoint};
use crate::math::{bessel_j0_zero, Mat2};
use crate::phase_space::{husimi_q, max_sync, q_argmax, window_average, DensityMatrix};

/// One row of a time-series table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub t: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub p: f64,
    pub re_c: f64,
    pub im_c: f64,
    pub s_max: f64,
    pub phi_star: f64,
    pub trace_dev: f64,
}

impl From<&TrajectoryPoint> for TimeRow {
    fn from(pt: &TrajectoryPoint) -> Self {
        let s = max_sync(&pt.rho);
        Self {
            t: pt.t,
            mx: pt.bloch.x,
            my: pt.bloch.y,
            mz: pt.bloch.z,
            p: pt.p,
            re_c: pt.c.re,
            im_c: pt.c.im,
            s_max: s.value,
            phi_star: s.phi_star,
            trace_dev: pt.rho.trace_deviation(),
        }
    }
}

/// Max-sync averaged over the window `[center − width/2, center + width/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedSync {
    pub center: f64,
    pub width: f64,
    pub value: f64,
    /// `−arg` of the window-averaged coherence, in `[0, 2π)`.
    pub phi_star: f64,
}

/// Result of one propagation from one initial state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutput {
    pub drive: DriveParams,
    pub bath: BathParams,
    pub initial_bloch: [f64; 3],
    /// Hierarchy depth actually used, after any deepening by the probe.
    pub depth: usize,
    #[serde(skip)]
    pub rows: Vec<TimeRow>,
    pub window: WindowedSync,
    pub convergence: Option<ConvergenceReport>,
    pub diagnostics: Diagnostics,
}

struct Propagated {
    samples: Vec<TrajectoryPoint>,
    extra: Vec<TrajectoryPoint>,
    window: WindowedSync,
    diagnostics: Diagnostics,
}

#[derive(Clone, Copy)]
enum Slot {
    Sample,
    Window,
    Extra,
}

fn window_grid(cfg: &RunConfig, drive: &DriveParams) -> Result<(f64, Vec<f64>)> {
    let width = cfg.window_width_for(drive.period());
    let start = cfg.t_max - 0.5 * width;
    if start < 0.0 {
        return Err(Error::Config(format!("averaging window of width {width} extends before t = 0")));
    }
    if width == 0.0 {
        return Ok((0.0, vec![cfg.t_max]));
    }
    let n = cfg.window_samples - 1;
    Ok((width, (0..=n).map(|i| start + width * i as f64 / n as f64).collect()))
}

fn propagate_windowed(
    cfg: &RunConfig,
    solver: &HeomSolver,
    drive: &DriveParams,
    rho0: &DensityMatrix,
    samples: &[f64],
    extra: &[f64],
) -> Result<Propagated> {
    let (width, window) = window_grid(cfg, drive)?;
    let mut slots: Vec<(f64, Slot)> = samples.iter().map(|&t| (t, Slot::Sample)).collect();
    slots.extend(window.iter().map(|&t| (t, Slot::Window)));
    slots.extend(extra.iter().map(|&t| (t, Slot::Extra)));
    slots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let times: Vec<f64> = slots.iter().map(|s| s.0).collect();

    let traj = solver.propagate(rho0, &times)?;
    let mut out = Propagated {
        samples: Vec::with_capacity(samples.len()),
        extra: Vec::with_capacity(extra.len()),
        window: WindowedSync { center: cfg.t_max, width, value: 0.0, phi_star: 0.0 },
        diagnostics: traj.diagnostics,
    };
    let mut win = Vec::with_capacity(window.len());
    for (pt, (_, slot)) in traj.points.into_iter().zip(&slots) {
        match slot {
            Slot::Sample => out.samples.push(pt),
            Slot::Window => win.push(pt),
            Slot::Extra => out.extra.push(pt),
        }
    }
    let wt: Vec<f64> = win.iter().map(|p| p.t).collect();
    let avg = |f: &dyn Fn(&TrajectoryPoint) -> f64| {
        let v: Vec<f64> = win.iter().map(f).collect();
        window_average(&wt, &v, cfg.t_max, width)
    };
    out.window.value = avg(&|p| max_sync(&p.rho).value)?;
    let c = C64::new(avg(&|p| p.c.re)?, avg(&|p| p.c.im)?);
    out.window.phi_star = if c.norm() == 0.0 { 0.0 } else { (-c.arg()).rem_euclid(TAU) % TAU };
    Ok(out)
}

/// Runs the truncation probe unless disabled. While the probe fails and
/// `depth < max_depth`, the hierarchy is deepened one level and probed
/// again; the solver settings that passed are returned. A probe that still
/// fails is an error unless `force` is set.
fn precheck(
    cfg: &RunConfig,
    drive: &DriveParams,
    bath: &BathParams,
    rho0: &DensityMatrix,
) -> Result<(Option<ConvergenceReport>, SolverConfig)> {
    let mut solver = cfg.solver();
    if !cfg.check_convergence {
        return Ok((None, solver));
    }
    let horizon = cfg.convergence_horizon.min(cfg.t_max);
    let mut report = convergence_check(drive, bath, &solver, rho0, horizon);
    while !report.converged && solver.depth < cfg.max_depth {
        solver.depth += 1;
        report = convergence_check(drive, bath, &solver, rho0, horizon);
    }
    if !report.converged && !cfg.force {
        return Err(Error::NotConverged {
            depth_deviation: report.depth_deviation,
            matsubara_deviation: report.matsubara_deviation,
        });
    }
    Ok((Some(report), solver))
}

fn run_state(
    cfg: &RunConfig,
    drive: &DriveParams,
    bath: &BathParams,
    rho0: &DensityMatrix,
    extra: &[f64],
) -> Result<(RunOutput, Vec<TrajectoryPoint>)> {
    let (convergence, settings) = precheck(cfg, drive, bath, rho0)?;
    let solver = HeomSolver::new(drive, bath, &settings)?;
    let prop = propagate_windowed(cfg, &solver, drive, rho0, &cfg.sample_times(), extra)?;
    let b = rho0.bloch();
    let out = RunOutput {
        drive: *drive,
        bath: *bath,
        initial_bloch: [b.x, b.y, b.z],
        depth: settings.depth,
        rows: prop.samples.iter().map(TimeRow::from).collect(),
        window: prop.window,
        convergence,
        diagnostics: prop.diagnostics,
    };
    Ok((out, prop.extra))
}

/// Propagates `cfg.initial_state` and tabulates the observables at the
/// configured samples. Fails fast on any error.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutput> {
    let rho0 = cfg.initial_state.density_matrix()?;
    Ok(run_state(cfg, &cfg.drive()?, &cfg.bath(), &rho0, &[])?.0)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// One run per entry of `cfg.initial_states`, on a shared time grid.
pub fn trajectories(cfg: &RunConfig) -> Result<Vec<RunOutput>> {
    let (drive, bath) = (cfg.drive()?, cfg.bath());
    let states = cfg.initial_states.iter().map(|s| s.density_matrix()).collect::<Result<Vec<_>>>()?;
    pool(cfg.workers)?.install(|| {
        states.par_iter().map(|rho0| run_state(cfg, &drive, &bath, rho0, &[]).map(|r| r.0)).collect()
    })
}

/// One point of a sampled Q field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QRow {
    pub theta: f64,
    pub phi: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QField {
    pub t: f64,
    pub rows: Vec<QRow>,
}

/// Location of the Q maximum at one output time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxRow {
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QSnapshots {
    pub fields: Vec<QField>,
    pub argmax: Vec<ArgmaxRow>,
    pub run: RunOutput,
}

/// Q on a uniform `q_theta × q_phi` grid (poles included in θ, `[0, 2π)`
/// in φ).
pub fn q_field(rho: &DensityMatrix, t: f64, n_theta: usize, n_phi: usize) -> QField {
    let mut rows = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = PI * i as f64 / (n_theta - 1) as f64;
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            rows.push(QRow { theta, phi, q: husimi_q(rho, theta, phi) });
        }
    }
    QField { t, rows }
}

/// Q fields at `cfg.snapshot_times()` and the Q argmax at every sample.
pub fn qsnapshot(cfg: &RunConfig) -> Result<QSnapshots> {
    let rho0 = cfg.initial_state.density_matrix()?;
    let times = cfg.snapshot_times();
    if times.iter().any(|t| !(0.0..=cfg.t_max).contains(t)) {
        return Err(Error::Config(format!("snapshot times must lie in [0, {}]", cfg.t_max)));
    }
    let (run, extra) = run_state(cfg, &cfg.drive()?, &cfg.bath(), &rho0, &times)?;
    // `extra` comes back sorted by time; restore the requested order
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut fields = vec![QField { t: 0.0, rows: Vec::new() }; times.len()];
    for (pt, &k) in extra.iter().zip(&order) {
        fields[k] = q_field(&pt.rho, times[k], cfg.q_theta, cfg.q_phi);
    }
    let argmax = run
        .rows
        .iter()
        .map(|r| {
            let rho = DensityMatrix::from_matrix_unchecked(Mat2::from_pauli(0.5, 0.5 * r.mx, 0.5 * r.my, 0.5 * r.mz));
            let a = q_argmax(&rho);
            ArgmaxRow { t: r.t, theta: a.theta, phi: a.phi }
        })
        .collect();
    Ok(QSnapshots { fields, argmax, run })
}

/// A sweep cell that failed; its value is recorded as NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub i: usize,
    pub j: usize,
    pub axis1: f64,
    pub axis2: f64,
    pub message: String,
}

/// One row of a grid table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub axis1: f64,
    pub axis2: f64,
    pub value: f64,
    pub converged: bool,
}

/// Windowed max-sync on a rectangular parameter grid, stored row-major
/// with `axis1` as the slow index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub axis1_label: String,
    pub axis2_label: String,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub values: Vec<f64>,
    pub phi_star: Vec<f64>,
    /// Truncation probe passed for this cell. `false` also when the probe
    /// was disabled or the cell failed.
    pub converged: Vec<bool>,
    pub failures: Vec<CellFailure>,
    pub diagnostics: Diagnostics,
}

impl SweepGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2.len() + j]
    }

    pub fn rows(&self) -> Vec<GridRow> {
        let n2 = self.axis2.len();
        (0..self.values.len())
            .map(|k| GridRow {
                axis1: self.axis1[k / n2],
                axis2: self.axis2[k % n2],
                value: self.values[k],
                converged: self.converged[k],
            })
            .collect()
    }

    /// Index along `axis2` of the largest finite value in row `i`.
    pub fn row_argmax(&self, i: usize) -> Option<usize> {
        (0..self.axis2.len())
            .filter(|&j| self.value(i, j).is_finite())
            .max_by(|&a, &b| self.value(i, a).total_cmp(&self.value(i, b)))
    }
}

/// Outcome of one sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub window: WindowedSync,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

/// Windowed max-sync from `cfg.initial_state` at one parameter point.
/// The depth is fixed at `cfg.depth`: a failed truncation probe only clears
/// the flag; it never deepens the hierarchy or aborts.
pub fn evaluate_cell(cfg: &RunConfig, drive: &DriveParams, bath: &BathParams) -> Result<CellResult> {
    let rho0 = cfg.initial_state.density_matrix()?;
    let converged = cfg.check_convergence
        && convergence_check(drive, bath, &cfg.solver(), &rho0, cfg.convergence_horizon.min(cfg.t_max)).converged;
    let solver = HeomSolver::new(drive, bath, &cfg.solver())?;
    let prop = propagate_windowed(cfg, &solver, drive, &rho0, &[], &[])?;
    Ok(CellResult { window: prop.window, converged, diagnostics: prop.diagnostics })
}

fn sweep(
    cfg: &RunConfig,
    labels: (&str, &str),
    axis1: Vec<f64>,
    axis2: Vec<f64>,
    params: impl Fn(f64, f64) -> Result<(DriveParams, BathParams)> + Sync,
) -> Result<SweepGrid> {
    let n2 = axis2.len();
    let n = axis1.len() * n2;
    let cells: Vec<Result<CellResult>> = pool(cfg.workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let (drive, bath) = params(axis1[k / n2], axis2[k % n2])?;
                evaluate_cell(cfg, &drive, &bath)
            })
            .collect()
    });
    let mut grid = SweepGrid {
        axis1_label: labels.0.into(),
        axis2_label: labels.1.into(),
        values: vec![f64::NAN; n],
        phi_star: vec![f64::NAN; n],
        converged: vec![false; n],
        failures: Vec::new(),
        diagnostics: Diagnostics::default(),
        axis1,
        axis2,
    };
    for (k, cell) in cells.into_iter().enumerate() {
        match cell {
            Ok(c) => {
                grid.values[k] = c.window.value;
                grid.phi_star[k] = c.window.phi_star;
                grid.converged[k] = c.converged;
                grid.diagnostics = grid.diagnostics.merge(&c.diagnostics);
            }
            Err(e) => grid.failures.push(CellFailure {
                i: k / n2,
                j: k % n2,
                axis1: grid.axis1[k / n2],
                axis2: grid.axis2[k % n2],
                message: e.to_string(),
            }),
        }
    }
    Ok(grid)
}

/// Windowed max-sync over the `(Ω, ω)` grid.
pub fn sweep_drive(cfg: &RunConfig) -> Result<SweepGrid> {
    let bath = cfg.bath();
    sweep(cfg, ("Omega", "omega"), cfg.amplitude_axis.values(), cfg.frequency_axis.values(), |amp, freq| {
        Ok((cfg.drive_at(amp, Some(freq))?, bath))
    })
}

/// Windowed max-sync over the `(λ, γ)` grid at the configured drive.
pub fn sweep_bath(cfg: &RunConfig) -> Result<SweepGrid> {
    let drive = cfg.drive()?;
    sweep(cfg, ("lambda", "gamma"), cfg.lambda_axis.values(), cfg.gamma_axis.values(), |lambda, gamma| {
        Ok((drive, BathParams::new(lambda, gamma, cfg.temperature)))
    })
}

/// Reference line `ω = Ω / z_k` for one amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrcLine {
    pub k: usize,
    pub z_k: f64,
    pub omega_rrc: f64,
    #[serde(rename = "Omega")]
    pub amplitude: f64,
}

/// The first three resonant-ratio lines at every amplitude of the sweep.
pub fn rrc_lines(amplitudes: &[f64]) -> Result<Vec<RrcLine>> {
    let mut out = Vec::with_capacity(3 * amplitudes.len());
    for k in 1..=3 {
        let z = bessel_j0_zero(k)?;
        for &a in amplitudes {
            out.push(RrcLine { k, z_k: z, omega_rrc: a / z, amplitude: a });
        }
    }
    Ok(out)
}

/// Closed-system quasienergies at one drive frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetRow {
    pub omega: f64,
    pub lower: f64,
    pub upper: f64,
    pub splitting: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloquetScan {
    pub rows: Vec<FloquetRow>,
    pub rrc: FloquetRow,
    pub below: FloquetRow,
    pub above: FloquetRow,
    /// `splitting(ω_rrc) / min(splitting(ω_rrc ± detuning))`.
    pub contrast: f64,
}

fn floquet_row(drive: &DriveParams) -> Result<FloquetRow> {
    let q = floquet_quasienergies(drive, &floquet_default_tolerance())?;
    Ok(FloquetRow {
        omega: drive.frequency,
        lower: q.lower,
        upper: q.upper,
        splitting: q.splitting(),
        degenerate: q.is_degenerate(drive.omega0),
    })
}

/// Quasienergies along `frequency_axis` at the configured amplitude, plus
/// the RRC and its `± floquet_detuning` neighbours.
pub fn floquet_scan(cfg: &RunConfig) -> Result<FloquetScan> {
    let rrc = cfg.drive_at(cfg.amplitude, None)?;
    let at = |f: f64| cfg.drive_at(cfg.amplitude, Some(f)).and_then(|d| floquet_row(&d));
    let rows = cfg.frequency_axis.values().into_iter().map(at).collect::<Result<Vec<_>>>()?;
    let rrc_row = floquet_row(&rrc)?;
    let below = at(rrc.frequency - cfg.floquet_detuning)?;
    let above = at(rrc.frequency + cfg.floquet_detuning)?;
    let contrast = rrc_row.splitting / below.splitting.min(above.splitting);
    Ok(FloquetScan { rows, rrc: rrc_row, below, above, contrast })
}

/// Rotating-frame Fourier coefficient `H_n`, with its deviation from the
/// trapezoid-quadrature oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRow {
    pub n: i32,
    pub re_00: f64,
    pub im_00: f64,
    pub re_01: f64,
    pub im_01: f64,
    pub re_10: f64,
    pub im_10: f64,
    pub re_11: f64,
    pub im_11: f64,
    pub oracle_error: f64,
}

/// `H_n` for `|n| ≤ fourier_orders` at the configured drive.
pub fn fourier_table(cfg: &RunConfig) -> Result<Vec<FourierRow>> {
    let drive = cfg.drive()?;
    (-cfg.fourier_orders..=cfg.fourier_orders)
        .map(|n| {
            let h = fourier_component(n, &drive)?.operator;
            let q = fourier_component_quadrature(n, &drive, cfg.fourier_nodes)?;
            let [a, b, c, d] = h.0;
            Ok(FourierRow {
                n,
                re_00: a.re,
                im_00: a.im,
                re_01: b.re,
                im_01: b.im,
                re_10: c.re,
                im_10: c.im,
                re_11: d.re,
                im_11: d.im,
                oracle_error: (h - q).max_abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Axis;

    fn quick() -> RunConfig {
        RunConfig {
            matsubara_terms: 1,
            depth: 3,
            t_max: 2.0,
            samples: 21,
            check_convergence: false,
            amplitude: 10.0,
            ..RunConfig::default()
        }
    }

    #[test]
    fn window_grid_cases() {
        let cfg = quick();
        let d = cfg.drive().unwrap();
        let (w, g) = window_grid(&cfg, &d).unwrap();
        assert_eq!(w, d.period());
        assert_eq!(g.len(), cfg.window_samples);
        assert!((g[0] - (2.0 - 0.5 * w)).abs() < 1e-15 && (g[64] - (2.0 + 0.5 * w)).abs() < 1e-12);
        let zero = RunConfig { window_width: Some(0.0), ..cfg.clone() };
        assert_eq!(window_grid(&zero, &d).unwrap(), (0.0, vec![2.0]));
        let wide = RunConfig { window_width: Some(5.0), ..cfg };
        assert!(matches!(window_grid(&wide, &d), Err(Error::Config(_))));
    }

    #[test]
    fn single_run_table_shape() {
        let out = run_single(&quick()).unwrap();
        assert_eq!(out.rows.len(), 21);
        assert_eq!(out.rows[0].t, 0.0);
        assert_eq!(out.rows[20].t, 2.0);
        assert_eq!((out.rows[0].mx, out.rows[0].s_max), (1.0, 0.125));
        assert!(out.window.value > 0.0 && out.window.value <= 0.125);
        assert!(out.convergence.is_none());
    }

    #[test]
    fn sweep_cell_reproduces_single_run() {
        let cfg = quick();
        let single = run_single(&cfg).unwrap();
        let freq = cfg.drive().unwrap().frequency;
        let swept = RunConfig {
            amplitude_axis: Axis::Values(vec![cfg.amplitude]),
            frequency_axis: Axis::Values(vec![freq]),
            ..cfg.clone()
        };
        let grid = sweep_drive(&swept).unwrap();
        assert_eq!(grid.values, vec![single.window.value]);
        let bath = RunConfig {
            lambda_axis: Axis::Values(vec![cfg.lambda]),
            gamma_axis: Axis::Values(vec![cfg.gamma]),
            ..cfg
        };
        assert_eq!(sweep_bath(&bath).unwrap().values, vec![single.window.value]);
    }

    #[test]
    fn failing_cells_are_recorded() {
        // γ = 2πT puts the Drude pole on the first Matsubara frequency
        let cfg = RunConfig {
            lambda_axis: Axis::Values(vec![0.5]),
            gamma_axis: Axis::Values(vec![0.5, PI]),
            ..quick()
        };
        let grid = sweep_bath(&cfg).unwrap();
        assert!(grid.values[0].is_finite());
        assert!(grid.values[1].is_nan());
        assert_eq!(grid.failures.len(), 1);
        assert_eq!((grid.failures[0].i, grid.failures[0].j), (0, 1));
        assert_eq!(grid.converged, vec![false, false]);
        assert_eq!(grid.row_argmax(0), Some(0));
    }

    #[test]
    fn unconverged_single_run_is_rejected_without_force() {
        let cfg = RunConfig { check_convergence: true, depth: 1, max_depth: 1, matsubara_terms: 0, ..quick() };
        assert!(matches!(run_single(&cfg), Err(Error::NotConverged { .. })));
        let forced = RunConfig { force: true, ..cfg };
        let out = run_single(&forced).unwrap();
        assert!(!out.convergence.unwrap().converged);
    }

    #[test]
    fn failing_probe_deepens_single_runs_only() {
        let cfg = RunConfig { check_convergence: true, depth: 1, lambda: 0.3, matsubara_terms: 3, ..quick() };
        let out = run_single(&cfg).unwrap();
        assert!(out.convergence.unwrap().converged);
        assert!(out.depth > 1 && out.depth <= cfg.max_depth);
        let cell = evaluate_cell(&cfg, &cfg.drive().unwrap(), &cfg.bath()).unwrap();
        assert!(!cell.converged);
        assert_ne!(cell.window.value, out.window.value);
    }

    #[test]
    fn q_snapshot_at_start_is_closed_form() {
        let cfg = RunConfig { q_theta: 17, q_phi: 16, snapshot_times: Some(vec![1.0, 0.0]), ..quick() };
        let snap = qsnapshot(&cfg).unwrap();
        assert_eq!(snap.fields[1].t, 0.0);
        assert_eq!(snap.fields[0].t, 1.0);
        for r in &snap.fields[1].rows {
            let want = (1.0 + r.theta.sin() * r.phi.cos()) / (4.0 * PI);
            assert!((r.q - want).abs() < 1e-10);
        }
        assert_eq!(snap.argmax.len(), cfg.samples);
        assert_eq!((snap.argmax[0].theta, snap.argmax[0].phi), (PI / 2.0, 0.0));
    }

    #[test]
    fn rrc_line_table() {
        let lines = rrc_lines(&[24.0, 60.0]).unwrap();
        assert_eq!(lines.len(), 6);
        assert!((lines[1].omega_rrc - 60.0 / 2.404825557695773).abs() < 1e-12);
        assert!((lines[5].z_k - 8.653727912911013).abs() < 1e-12);
    }

    #[test]
    fn floquet_and_fourier_tables() {
        let cfg = RunConfig { amplitude: 60.0, frequency_axis: Axis::range(20.0, 30.0, 3), ..RunConfig::default() };
        let scan = floquet_scan(&cfg).unwrap();
        assert_eq!(scan.rows.len(), 3);
        assert!(scan.rrc.degenerate && scan.contrast < 0.1);
        let table = fourier_table(&cfg).unwrap();
        assert_eq!(table.len(), 15);
        assert!(table.iter().all(|r| r.oracle_error < 1e-8));
        assert_eq!(table[7].n, 0);
    }
}
