//! Hierarchical equations of motion for a driven qubit coupled through
//! `σx` to a Drude–Lorentz bath.
//!
//! For every auxiliary density operator (ADO) `ρ_n`, with `n` a multi-index
//! over the exponential terms `c_k e^{−ν_k t}` of the bath correlation
//! function,
//!
//! ```text
//! dρ_n/dt = −i[H(t), ρ_n] − (Σ_k n_k ν_k) ρ_n − i Σ_k [σx, ρ_{n+e_k}]
//!           − i Σ_k n_k (c_k σx ρ_{n−e_k} − c̄_k ρ_{n−e_k} σx)
//!           − Δ_K [σx, [σx, ρ_n]]
//! ```
//!
//! The last term is the Markovian terminator for the Matsubara tail that
//! the truncated expansion drops. With scaling enabled, each ADO is divided
//! by `√(Π_k n_k! |c_k|^{n_k})`, which balances the magnitudes across the
//! hierarchy without changing the physical ADO.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bath::{matsubara_expansion, BathParams, ExponentialExpansion};
use crate::drive::{hamiltonian, DriveParams};
use crate::error::{Error, Result};
use crate::math::{integrate_with_observer, IntegrationStats, Mat2, OdeTolerance};
use crate::phase_space::{BlochVector, DensityMatrix};

/// Sentinel in the neighbor tables for an index outside the hierarchy.
pub const NO_NEIGHBOR: u32 = u32::MAX;
/// Default ADO budget; roughly 64 bytes per ADO plus integrator scratch.
pub const DEFAULT_MAX_ADOS: usize = 200_000;
/// Bloch-trajectory deviation above which a truncation is flagged.
pub const CONVERGENCE_TOL: f64 = 1e-3;

/// Truncation and integration settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Number of Matsubara terms `K` (the Drude term is always present).
    pub matsubara_terms: usize,
    /// Hierarchy depth `L`.
    pub depth: usize,
    pub tolerance: OdeTolerance,
    pub use_scaling: bool,
    pub use_terminator: bool,
    pub max_ados: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            matsubara_terms: 4,
            depth: 7,
            tolerance: OdeTolerance { atol: 1e-10, rtol: 1e-9, max_step: 0.1, min_step: 1e-12 },
            use_scaling: true,
            use_terminator: true,
            max_ados: DEFAULT_MAX_ADOS,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::InvalidInput("hierarchy depth must be at least 1".into()));
        }
        self.tolerance.validate()
    }

    /// ADO count `binom(L + K + 1, K + 1)`, saturating on overflow.
    pub fn ado_count(&self) -> usize {
        ado_count(self.matsubara_terms, self.depth)
    }
}

/// `binom(depth + modes, modes)` with `modes = k_terms + 1`.
pub fn ado_count(k_terms: usize, depth: usize) -> usize {
    let modes = k_terms as u128 + 1;
    let mut acc: u128 = 1;
    for i in 1..=modes {
        acc = acc * (depth as u128 + i) / i;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// A multi-index `(n_0, …, n_K)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HierarchyIndex(pub Vec<u16>);

impl HierarchyIndex {
    pub fn depth(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }
}

/// All multi-indices with `|n| ≤ L` in graded lexicographic order, with
/// `n ± e_k` neighbor tables.
///
/// Within each depth the order is lexicographically descending, so the
/// sequence starts `(0,…,0), (1,0,…), (0,1,0,…), …`.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    modes: usize,
    depth: usize,
    indices: Vec<u16>,
    up: Vec<u32>,
    down: Vec<u32>,
}

impl Hierarchy {
    pub fn new(k_terms: usize, depth: usize, max_ados: usize) -> Result<Self> {
        if depth < 1 {
            return Err(Error::InvalidInput("hierarchy depth must be at least 1".into()));
        }
        let count = ado_count(k_terms, depth);
        if count > max_ados || count >= NO_NEIGHBOR as usize {
            return Err(Error::BudgetExceeded { requested: count, budget: max_ados });
        }
        if depth > u16::MAX as usize {
            return Err(Error::OutOfRange(format!("depth {depth} too large")));
        }
        let modes = k_terms + 1;
        let mut indices = Vec::with_capacity(count * modes);
        let mut scratch = vec![0u16; modes];
        for d in 0..=depth {
            compositions(d as u16, 0, &mut scratch, &mut indices);
        }
        debug_assert_eq!(indices.len(), count * modes);

        let lookup: HashMap<&[u16], u32> =
            indices.chunks_exact(modes).enumerate().map(|(i, n)| (n, i as u32)).collect();
        let mut up = vec![NO_NEIGHBOR; count * modes];
        let mut down = vec![NO_NEIGHBOR; count * modes];
        let mut probe = vec![0u16; modes];
        for (i, n) in indices.chunks_exact(modes).enumerate() {
            for k in 0..modes {
                probe.copy_from_slice(n);
                probe[k] += 1;
                if let Some(&j) = lookup.get(probe.as_slice()) {
                    up[i * modes + k] = j;
                }
                if n[k] > 0 {
                    probe.copy_from_slice(n);
                    probe[k] -= 1;
                    down[i * modes + k] = lookup[probe.as_slice()];
                }
            }
        }
        Ok(Self { modes, depth, indices, up, down })
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of exponential modes, `K + 1`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn index(&self, i: usize) -> &[u16] {
        &self.indices[i * self.modes..(i + 1) * self.modes]
    }

    pub fn indices(&self) -> impl Iterator<Item = HierarchyIndex> + '_ {
        self.indices.chunks_exact(self.modes).map(|n| HierarchyIndex(n.to_vec()))
    }

    /// Position of `n + e_k`, if inside the hierarchy.
    pub fn up(&self, i: usize, k: usize) -> Option<usize> {
        let j = self.up[i * self.modes + k];
        (j != NO_NEIGHBOR).then_some(j as usize)
    }

    /// Position of `n − e_k`, if `n_k > 0`.
    pub fn down(&self, i: usize, k: usize) -> Option<usize> {
        let j = self.down[i * self.modes + k];
        (j != NO_NEIGHBOR).then_some(j as usize)
    }
}

// Appends all compositions of `rest` into `slot[pos..]`, lexicographically
// descending.
fn compositions(rest: u16, pos: usize, slot: &mut [u16], out: &mut Vec<u16>) {
    if pos + 1 == slot.len() {
        slot[pos] = rest;
        out.extend_from_slice(slot);
        return;
    }
    for v in (0..=rest).rev() {
        slot[pos] = v;
        compositions(rest - v, pos + 1, slot, out);
    }
    slot[pos] = 0;
}

/// The full set of ADOs, four complex numbers each, physical ADO first.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyState {
    data: Vec<C64>,
}

impl HierarchyState {
    pub fn zeros(n_ados: usize) -> Self {
        Self { data: vec![C64::new(0.0, 0.0); 4 * n_ados] }
    }

    /// Factorized initial condition: `ρ` in the physical slot, zeros elsewhere.
    pub fn from_physical(rho: &DensityMatrix, n_ados: usize) -> Self {
        let mut s = Self::zeros(n_ados.max(1));
        s.set_ado(0, rho.matrix());
        s
    }

    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        if data.len() % 4 != 0 {
            return Err(Error::DimensionMismatch { expected: data.len().next_multiple_of(4), got: data.len() });
        }
        Ok(Self { data })
    }

    pub fn n_ados(&self) -> usize {
        self.data.len() / 4
    }

    pub fn ado(&self, i: usize) -> Mat2 {
        load(&self.data, i)
    }

    pub fn set_ado(&mut self, i: usize, m: &Mat2) {
        self.data[4 * i..4 * i + 4].copy_from_slice(&m.0);
    }

    pub fn physical(&self) -> Mat2 {
        self.ado(0)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

#[inline(always)]
fn load(y: &[C64], i: usize) -> Mat2 {
    Mat2(ado(y, i))
}

#[inline(always)]
fn ado(y: &[C64], i: usize) -> [C64; 4] {
    let s = &y[4 * i..4 * i + 4];
    [s[0], s[1], s[2], s[3]]
}

// [σx, ρ] for ρ = [a, b, c, d] row-major.
#[inline(always)]
fn sx_commutator([a, b, c, d]: [C64; 4]) -> [C64; 4] {
    [c - b, d - a, a - d, b - c]
}

// {σx, ρ}
#[inline(always)]
fn sx_anticommutator([a, b, c, d]: [C64; 4]) -> [C64; 4] {
    [c + b, d + a, a + d, b + c]
}

/// One solver instance: hierarchy tables and precomputed link weights for a
/// fixed drive, bath expansion and truncation. Not shared between threads
/// while integrating; construct one per concurrent run.
#[derive(Clone, Debug)]
pub struct HeomSolver {
    drive: DriveParams,
    expansion: ExponentialExpansion,
    config: SolverConfig,
    hierarchy: Hierarchy,
    decay: Vec<f64>,
    terminator: f64,
    // CSR link lists per ADO. Up links carry the weight of `[σx, ρ_up]`;
    // down links carry `a` of `a σx ρ − ā ρ σx`, split into real and
    // imaginary parts.
    up_start: Vec<u32>,
    up_links: Vec<(u32, f64)>,
    down_start: Vec<u32>,
    down_links: Vec<(u32, f64, f64)>,
}

impl HeomSolver {
    pub fn new(drive: &DriveParams, bath: &BathParams, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let expansion = matsubara_expansion(bath, config.matsubara_terms)?;
        Self::with_expansion(drive, expansion, config)
    }

    /// Builds a solver from an explicit expansion, which must carry
    /// `config.matsubara_terms` Matsubara terms.
    pub fn with_expansion(
        drive: &DriveParams,
        expansion: ExponentialExpansion,
        config: &SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_drive(drive)?;
        if expansion.matsubara_count() != config.matsubara_terms {
            return Err(Error::DimensionMismatch {
                expected: config.matsubara_terms + 1,
                got: expansion.terms.len(),
            });
        }
        let hierarchy = Hierarchy::new(config.matsubara_terms, config.depth, config.max_ados)?;
        let modes = hierarchy.modes();
        let n = hierarchy.len();
        let mut decay = Vec::with_capacity(n);
        let (mut up_start, mut up_links) = (Vec::with_capacity(n + 1), Vec::new());
        let (mut down_start, mut down_links) = (Vec::with_capacity(n + 1), Vec::new());
        for i in 0..n {
            let idx = hierarchy.index(i);
            decay.push(idx.iter().zip(&expansion.terms).map(|(&nk, e)| nk as f64 * e.rate).sum());
            up_start.push(up_links.len() as u32);
            down_start.push(down_links.len() as u32);
            for k in 0..modes {
                let nk = idx[k] as f64;
                let ck = expansion.terms[k].coefficient;
                // Scaled links carry √|c_k| on both sides, so a vanishing
                // coefficient decouples its mode entirely.
                if let Some(j) = hierarchy.up(i, k) {
                    let w = if config.use_scaling { ((nk + 1.0) * ck.norm()).sqrt() } else { 1.0 };
                    up_links.push((j as u32, w));
                }
                if let Some(j) = hierarchy.down(i, k) {
                    let a = if !config.use_scaling {
                        ck * nk
                    } else if ck.norm() == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        ck * (nk / ck.norm()).sqrt()
                    };
                    down_links.push((j as u32, a.re, a.im));
                }
            }
        }
        up_start.push(up_links.len() as u32);
        down_start.push(down_links.len() as u32);
        let terminator = if config.use_terminator { expansion.residual } else { 0.0 };

        Ok(Self {
            drive: *drive,
            expansion,
            config: *config,
            hierarchy,
            decay,
            terminator,
            up_start,
            up_links,
            down_start,
            down_links,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn expansion(&self) -> &ExponentialExpansion {
        &self.expansion
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Length of the flattened state vector.
    pub fn state_len(&self) -> usize {
        4 * self.hierarchy.len()
    }

    /// Time derivative of a hierarchy state.
    pub fn derivative(&self, t: f64, state: &HierarchyState) -> Result<HierarchyState> {
        if state.data.len() != self.state_len() {
            return Err(Error::DimensionMismatch { expected: self.state_len(), got: state.data.len() });
        }
        let mut out = HierarchyState::zeros(self.hierarchy.len());
        self.rhs(t, &state.data, &mut out.data);
        Ok(out)
    }

    /// Unchecked right-hand side on flat slices of length [`Self::state_len`].
    pub fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        // H(t) is real symmetric: [[h0, h1], [h1, h3]].
        let h = hamiltonian(t, &self.drive);
        debug_assert!(h.0.iter().all(|z| z.im == 0.0));
        let (h0, h1, h3) = (h.0[0].re, h.0[1].re, h.0[3].re);
        let two_delta = 2.0 * self.terminator;
        let i_unit = C64::new(0.0, 1.0);
        for i in 0..self.hierarchy.len() {
            let [a, b, c, d] = ado(y, i);
            // [H, ρ]
            let mut acc = [
                (c - b) * h1,
                b * (h0 - h3) + (d - a) * h1,
                c * (h3 - h0) + (a - d) * h1,
                (b - c) * h1,
            ];
            for &(j, w) in &self.up_links[self.up_start[i] as usize..self.up_start[i + 1] as usize] {
                let x = sx_commutator(ado(y, j as usize));
                for m in 0..4 {
                    acc[m] += x[m] * w;
                }
            }
            // a σxρ − ā ρσx = Re a [σx, ρ] + i Im a {σx, ρ}
            for &(j, re, im) in &self.down_links[self.down_start[i] as usize..self.down_start[i + 1] as usize] {
                let r = ado(y, j as usize);
                let x = sx_commutator(r);
                if im == 0.0 {
                    for m in 0..4 {
                        acc[m] += x[m] * re;
                    }
                } else {
                    let n = sx_anticommutator(r);
                    for m in 0..4 {
                        acc[m] += x[m] * re + n[m] * (i_unit * im);
                    }
                }
            }
            let decay = self.decay[i];
            // ρ − σx ρ σx
            let dd = [a - d, b - c, c - b, d - a];
            let rho = [a, b, c, d];
            let out = &mut dy[4 * i..4 * i + 4];
            for m in 0..4 {
                // −i·z = (z.im, −z.re)
                out[m] = C64::new(acc[m].im, -acc[m].re) - rho[m] * decay - dd[m] * two_delta;
            }
        }
    }

    /// Integrates from the factorized state `rho0 ⊗ ρ_B` at `t = 0` and
    /// records the physical ADO at each output time. No trace
    /// renormalization is applied; drift is reported in the diagnostics.
    pub fn propagate(&self, rho0: &DensityMatrix, output_times: &[f64]) -> Result<Trajectory> {
        self.propagate_with(rho0, output_times, |_, _| {})
    }

    /// Like [`Self::propagate`], also handing every recorded point to
    /// `on_point` as it is produced.
    pub fn propagate_with(
        &self,
        rho0: &DensityMatrix,
        output_times: &[f64],
        mut on_point: impl FnMut(usize, &TrajectoryPoint),
    ) -> Result<Trajectory> {
        rho0.validate()?;
        let mut tol = self.config.tolerance;
        if self.drive.amplitude != 0.0 && self.drive.frequency > 0.0 {
            tol = tol.with_max_step_cap(self.drive.period() / 50.0);
        }
        let y0 = HierarchyState::from_physical(rho0, self.hierarchy.len());
        let mut points = Vec::with_capacity(output_times.len());
        let mut diag = Diagnostics { n_ados: self.hierarchy.len(), ..Diagnostics::default() };
        let stats = integrate_with_observer(
            |t, y, dy| self.rhs(t, y, dy),
            &y0.data,
            0.0,
            output_times,
            &tol,
            |i, t, y| {
                let p = TrajectoryPoint::new(t, load(y, 0));
                diag.record(&p.rho);
                on_point(i, &p);
                points.push(p);
            },
        )?;
        diag.stats = stats.into();
        Ok(Trajectory { points, diagnostics: diag })
    }
}

fn check_drive(d: &DriveParams) -> Result<()> {
    let ok = [d.omega0, d.delta, d.amplitude, d.frequency].iter().all(|v| v.is_finite()) && d.omega0 >= 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("invalid drive parameters {d:?}")))
    }
}

/// HEOM time derivative for a one-off state; builds a solver internally.
pub fn heom_rhs(
    t: f64,
    state: &HierarchyState,
    drive: &DriveParams,
    expansion: &ExponentialExpansion,
    config: &SolverConfig,
) -> Result<HierarchyState> {
    HeomSolver::with_expansion(drive, expansion.clone(), config)?.derivative(t, state)
}

/// Builds a solver and propagates `rho0` to each of `output_times`.
pub fn propagate(
    rho0: &DensityMatrix,
    drive: &DriveParams,
    bath: &BathParams,
    config: &SolverConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    HeomSolver::new(drive, bath, config)?.propagate(rho0, output_times)
}

/// The reduced state and its observables at one output time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub rho: DensityMatrix,
    pub bloch: BlochVector,
    pub p: f64,
    pub c: C64,
}

impl TrajectoryPoint {
    pub fn new(t: f64, m: Mat2) -> Self {
        let rho = DensityMatrix::from_matrix_unchecked(m);
        Self { t, bloch: rho.bloch(), p: rho.p(), c: rho.c(), rho }
    }
}

/// Work counters, serializable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl From<IntegrationStats> for StepStats {
    fn from(s: IntegrationStats) -> Self {
        Self { accepted: s.accepted, rejected: s.rejected, rhs_evals: s.rhs_evals }
    }
}

/// Numerical-hygiene record of one propagation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub n_ados: usize,
    pub stats: StepStats,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            max_trace_deviation: 0.0,
            max_hermiticity_deviation: 0.0,
            min_eigenvalue: f64::INFINITY,
            n_ados: 0,
            stats: StepStats::default(),
        }
    }
}

/// Thresholds applied by [`Diagnostics::is_clean`].
pub const TRACE_DRIFT_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-8;
pub const POSITIVITY_FLOOR: f64 = -1e-6;

impl Diagnostics {
    fn record(&mut self, rho: &DensityMatrix) {
        self.max_trace_deviation = self.max_trace_deviation.max(rho.trace_deviation());
        self.max_hermiticity_deviation = self.max_hermiticity_deviation.max(rho.hermiticity_deviation());
        self.min_eigenvalue = self.min_eigenvalue.min(rho.min_eigenvalue());
    }

    /// Trace drift and Hermiticity below `1e-8`, eigenvalues above `−1e-6`.
    pub fn is_clean(&self) -> bool {
        self.max_trace_deviation < TRACE_DRIFT_TOL
            && self.max_hermiticity_deviation < HERMITICITY_TOL
            && self.min_eigenvalue > POSITIVITY_FLOOR
    }

    /// Worst-case merge of two records.
    pub fn merge(&self, o: &Self) -> Self {
        Self {
            max_trace_deviation: self.max_trace_deviation.max(o.max_trace_deviation),
            max_hermiticity_deviation: self.max_hermiticity_deviation.max(o.max_hermiticity_deviation),
            min_eigenvalue: self.min_eigenvalue.min(o.min_eigenvalue),
            n_ados: self.n_ados.max(o.n_ados),
            stats: StepStats {
                accepted: self.stats.accepted + o.stats.accepted,
                rejected: self.stats.rejected + o.stats.rejected,
                rhs_evals: self.stats.rhs_evals + o.stats.rhs_evals,
            },
        }
    }
}

/// Output of a propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn bloch(&self) -> Vec<BlochVector> {
        self.points.iter().map(|p| p.bloch).collect()
    }

    /// Largest Bloch-vector distance to another trajectory on the same grid.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        if self.points.len() != other.points.len() {
            return Err(Error::DimensionMismatch { expected: self.points.len(), got: other.points.len() });
        }
        Ok(self.points.iter().zip(&other.points).map(|(a, b)| a.bloch.distance(&b.bloch)).fold(0.0, f64::max))
    }
}

/// Truncation self-consistency report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Max Bloch deviation between depth `L` and `L + 1`.
    pub depth_deviation: f64,
    /// Max Bloch deviation between `K` and `K + 1` Matsubara terms.
    pub matsubara_deviation: f64,
    pub horizon: f64,
    pub converged: bool,
}

/// Default propagation length of the convergence probe.
pub const DEFAULT_PROBE_HORIZON: f64 = 5.0;

/// Repeats a propagation over `[0, horizon]` at `(L, K)`, `(L + 1, K)` and
/// `(L, K + 1)` and compares Bloch trajectories. Failures of the individual
/// runs are reported as infinite deviation rather than errors.
pub fn convergence_check(
    drive: &DriveParams,
    bath: &BathParams,
    config: &SolverConfig,
    probe: &DensityMatrix,
    horizon: f64,
) -> ConvergenceReport {
    let n = ((horizon / 0.05).ceil() as usize).clamp(20, 2000);
    let times: Vec<f64> = (1..=n).map(|i| horizon * i as f64 / n as f64).collect();
    let run = |cfg: SolverConfig| propagate(probe, drive, bath, &cfg, &times);
    let base = run(*config);
    let deeper = run(SolverConfig { depth: config.depth + 1, ..*config });
    let wider = run(SolverConfig { matsubara_terms: config.matsubara_terms + 1, ..*config });
    let dev = |other: &Result<Trajectory>| match (&base, other) {
        (Ok(a), Ok(b)) => a.max_deviation(b).unwrap_or(f64::INFINITY),
        _ => f64::INFINITY,
    };
    let (depth_deviation, matsubara_deviation) = (dev(&deeper), dev(&wider));
    ConvergenceReport {
        depth_deviation,
        matsubara_deviation,
        horizon,
        converged: depth_deviation < CONVERGENCE_TOL && matsubara_deviation < CONVERGENCE_TOL,
    }
}
