//! Run configuration: a single flat JSON object. Every key is optional and
//! falls back to the operating point `Δ = 0, Ω = 60, ω = ω_rrc, λ = 1,
//! γ = 0.5, T = 0.5, t_max = 30` (all in units of ω0).
//!
//! ```
//! use heomsync::config::RunConfig;
//!
//! let mut cfg = RunConfig::from_json_str(r#"{ "amplitude": 40.0, "t_max": 10.0 }"#).unwrap();
//! cfg.set("depth", "5").unwrap();
//! assert_eq!(cfg.depth, 5);
//! assert!((cfg.drive().unwrap().frequency - 40.0 / 2.404825557695773).abs() < 1e-12);
//! assert!(cfg.set("no_such_key", "1").is_err());
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bath::BathParams;
use crate::drive::{rrc_frequency, DriveParams};
use crate::error::{Error, Result};
use crate::heom::{SolverConfig, DEFAULT_MAX_ADOS};
use crate::math::ode::OdeTolerance;
use crate::phase_space::{BlochVector, DensityMatrix};

/// Named initial states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    Excited,
    Ground,
    Mixed,
}

/// Initial state: a name such as `"plus_x"` or a Bloch vector `[mx, my, mz]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(NamedState),
    Bloch([f64; 3]),
}

impl InitialState {
    pub fn bloch(&self) -> BlochVector {
        let [x, y, z] = match self {
            InitialState::Bloch(v) => *v,
            InitialState::Named(n) => match n {
                NamedState::PlusX => [1.0, 0.0, 0.0],
                NamedState::MinusX => [-1.0, 0.0, 0.0],
                NamedState::PlusY => [0.0, 1.0, 0.0],
                NamedState::MinusY => [0.0, -1.0, 0.0],
                NamedState::Excited => [0.0, 0.0, 1.0],
                NamedState::Ground => [0.0, 0.0, -1.0],
                NamedState::Mixed => [0.0, 0.0, 0.0],
            },
        };
        BlochVector::new(x, y, z)
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_bloch(self.bloch())
    }
}

/// Pure state in the xz-plane with the given `m_x ≥ 0` and `m_z ≥ 0`.
fn xz_state(mx: f64) -> InitialState {
    InitialState::Bloch([mx, 0.0, (1.0 - mx * mx).sqrt()])
}

/// One sweep axis: an evenly spaced range or an explicit list of values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { min: f64, max: f64, count: usize },
    Values(Vec<f64>),
}

impl Axis {
    pub fn range(min: f64, max: f64, count: usize) -> Self {
        Axis::Range { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { min, count: 1, .. } => vec![*min],
            Axis::Range { min, max, count } => {
                (0..*count).map(|i| min + (max - min) * i as f64 / (*count - 1) as f64).collect()
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = match self {
            Axis::Range { min, max, count } => {
                *count == 0 || !min.is_finite() || !max.is_finite() || max < min || (*count == 1 && max != min)
            }
            Axis::Values(v) => v.is_empty() || v.iter().any(|x| !x.is_finite()),
        };
        if bad {
            return Err(Error::Config(format!("axis `{name}` must be non-empty and finite with min <= max")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // drive
    pub omega0: f64,
    pub delta: f64,
    pub amplitude: f64,
    /// `null` pins the drive to the resonant-ratio condition of order `rrc_order`.
    pub drive_frequency: Option<f64>,
    pub rrc_order: usize,
    // bath
    pub lambda: f64,
    pub gamma: f64,
    pub temperature: f64,
    // solver
    pub matsubara_terms: usize,
    pub depth: usize,
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub use_scaling: bool,
    pub use_terminator: bool,
    pub max_ados: usize,
    // states and sampling
    pub initial_state: InitialState,
    pub initial_states: Vec<InitialState>,
    pub t_max: f64,
    /// Evenly spaced output samples on `[0, t_max]`.
    pub samples: usize,
    /// Averaging window centred at `t_max`; `null` means one drive period.
    pub window_width: Option<f64>,
    pub window_samples: usize,
    // sweeps
    pub amplitude_axis: Axis,
    pub frequency_axis: Axis,
    pub lambda_axis: Axis,
    pub gamma_axis: Axis,
    // Q snapshots; `null` means `[0, t_max/2, t_max]`
    pub snapshot_times: Option<Vec<f64>>,
    pub q_theta: usize,
    pub q_phi: usize,
    // truncation gate
    pub check_convergence: bool,
    pub convergence_horizon: f64,
    /// Single runs deepen the hierarchy up to this depth until the probe passes.
    pub max_depth: usize,
    pub force: bool,
    // execution
    /// Sweep worker threads; 0 uses all available cores.
    pub workers: usize,
    pub seed: u64,
    pub out: PathBuf,
    // validation and tables
    pub fault_c0_scale: f64,
    pub fourier_orders: i32,
    pub fourier_nodes: usize,
    pub floquet_detuning: f64,
    pub random_states: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            omega0: 1.0,
            delta: 0.0,
            amplitude: 60.0,
            drive_frequency: None,
            rrc_order: 1,
            lambda: 1.0,
            gamma: 0.5,
            temperature: 0.5,
            matsubara_terms: solver.matsubara_terms,
            depth: solver.depth,
            atol: solver.tolerance.atol,
            rtol: solver.tolerance.rtol,
            max_step: solver.tolerance.max_step,
            min_step: solver.tolerance.min_step,
            use_scaling: solver.use_scaling,
            use_terminator: solver.use_terminator,
            max_ados: DEFAULT_MAX_ADOS,
            initial_state: InitialState::Named(NamedState::PlusX),
            initial_states: vec![xz_state(0.8), xz_state(0.5), xz_state(0.0)],
            t_max: 30.0,
            samples: 301,
            window_width: None,
            window_samples: 65,
            amplitude_axis: Axis::range(20.0, 80.0, 9),
            frequency_axis: Axis::range(5.0, 45.0, 9),
            lambda_axis: Axis::range(0.25, 2.0, 5),
            gamma_axis: Axis::range(0.25, 2.0, 5),
            snapshot_times: None,
            q_theta: 64,
            q_phi: 128,
            check_convergence: true,
            convergence_horizon: 5.0,
            max_depth: 12,
            force: false,
            workers: 0,
            seed: 0,
            out: PathBuf::from("out"),
            fault_c0_scale: 1.0,
            fourier_orders: 7,
            fourier_nodes: 256,
            floquet_detuning: 10.0,
            random_states: 1000,
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Overrides one key. `raw` is parsed as JSON and, failing that, taken
    /// as a string, so `--set out=runs/a` and `--set depth=6` both work.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut obj = serde_json::to_value(&*self).expect("config serializes");
        let map = obj.as_object_mut().expect("config is an object");
        if !map.contains_key(key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.to_string(), value);
        let cfg: Self = serde_json::from_value(obj).map_err(|e| Error::Config(format!("`{key}`: {e}")))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.drive().map_err(cfg_err)?.validate().map_err(cfg_err)?;
        self.bath().validate().map_err(cfg_err)?;
        self.solver().validate().map_err(cfg_err)?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.samples < 2 {
            return Err(Error::Config("samples must be at least 2".into()));
        }
        if let Some(w) = self.window_width {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("window_width must be >= 0, got {w}")));
            }
        }
        if self.window_samples < 2 {
            return Err(Error::Config("window_samples must be at least 2".into()));
        }
        for s in std::iter::once(&self.initial_state).chain(&self.initial_states) {
            s.density_matrix().map_err(cfg_err)?;
        }
        if self.initial_states.is_empty() {
            return Err(Error::Config("initial_states must not be empty".into()));
        }
        self.amplitude_axis.validate("amplitude_axis")?;
        self.frequency_axis.validate("frequency_axis")?;
        self.lambda_axis.validate("lambda_axis")?;
        self.gamma_axis.validate("gamma_axis")?;
        if let Some(ts) = &self.snapshot_times {
            if ts.iter().any(|t| !(0.0..=self.t_max).contains(t)) {
                return Err(Error::Config(format!("snapshot times must lie in [0, {}]", self.t_max)));
            }
        }
        if self.q_theta < 2 || self.q_phi < 1 {
            return Err(Error::Config("Q grid needs q_theta >= 2 and q_phi >= 1".into()));
        }
        if !(self.convergence_horizon > 0.0) {
            return Err(Error::Config("convergence_horizon must be positive".into()));
        }
        if !(self.fault_c0_scale.is_finite() && self.floquet_detuning > 0.0) {
            return Err(Error::Config("fault_c0_scale must be finite and floquet_detuning positive".into()));
        }
        if self.fourier_orders < 0 || self.fourier_nodes == 0 || self.random_states == 0 {
            return Err(Error::Config("fourier_orders, fourier_nodes and random_states must be positive".into()));
        }
        Ok(())
    }

    /// Drive parameters with `amplitude` and, if set, `drive_frequency`.
    pub fn drive(&self) -> Result<DriveParams> {
        self.drive_at(self.amplitude, self.drive_frequency)
    }

    /// Drive parameters at an explicit point; `None` selects the RRC.
    pub fn drive_at(&self, amplitude: f64, frequency: Option<f64>) -> Result<DriveParams> {
        let frequency = match frequency {
            Some(f) => f,
            None => rrc_frequency(self.rrc_order, amplitude)?,
        };
        Ok(DriveParams::new(self.omega0, self.delta, amplitude, frequency))
    }

    pub fn bath(&self) -> BathParams {
        BathParams::new(self.lambda, self.gamma, self.temperature)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            matsubara_terms: self.matsubara_terms,
            depth: self.depth,
            tolerance: OdeTolerance { atol: self.atol, rtol: self.rtol, max_step: self.max_step, min_step: self.min_step },
            use_scaling: self.use_scaling,
            use_terminator: self.use_terminator,
            max_ados: self.max_ados,
        }
    }

    /// Evenly spaced output times on `[0, t_max]`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.samples - 1;
        (0..=n).map(|i| self.t_max * i as f64 / n as f64).collect()
    }

    /// Averaging window width for a drive of the given period.
    pub fn window_width_for(&self, period: f64) -> f64 {
        self.window_width.unwrap_or(if period.is_finite() { period } else { 0.0 })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_times.clone().unwrap_or_else(|| vec![0.0, 0.5 * self.t_max, self.t_max])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(RunConfig::from_json_str("{}").unwrap(), cfg);
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis::range(5.0, 45.0, 9).values(), vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0]);
        assert_eq!(Axis::range(2.0, 2.0, 1).values(), vec![2.0]);
        assert_eq!(Axis::Values(vec![1.0, 0.5]).values(), vec![1.0, 0.5]);
        assert!(Axis::range(3.0, 1.0, 4).validate("a").is_err());
        assert!(Axis::Values(vec![]).validate("a").is_err());
    }

    #[test]
    fn initial_state_forms() {
        let cfg = RunConfig::from_json_str(r#"{"initial_state": [0.6, 0.0, 0.8], "initial_states": ["minus_x", "mixed"]}"#)
            .unwrap();
        assert_eq!(cfg.initial_state.bloch(), BlochVector::new(0.6, 0.0, 0.8));
        assert_eq!(cfg.initial_states[0], InitialState::Named(NamedState::MinusX));
        assert!(RunConfig::from_json_str(r#"{"initial_state": [1.0, 1.0, 0.0]}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"initial_state": "sideways"}"#).is_err());
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for bad in [
            r#"{"t_max": 0}"#,
            r#"{"t_max": -3}"#,
            r#"{"samples": 1}"#,
            r#"{"lambda": -1}"#,
            r#"{"gamma": 0}"#,
            r#"{"frequency_axis": {"min": 1, "max": 2, "count": 0}}"#,
            r#"{"snapshot_times": [31.0]}"#,
            r#"{"amplitude": 0}"#,
            r#"{"typo_key": 1}"#,
            r#"{"depth": "deep"}"#,
        ] {
            match RunConfig::from_json_str(bad) {
                Err(Error::Config(_)) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.set("out", "runs/a").unwrap();
        assert_eq!(cfg.out, PathBuf::from("runs/a"));
        cfg.set("drive_frequency", "25.0").unwrap();
        assert_eq!(cfg.drive().unwrap().frequency, 25.0);
        cfg.set("frequency_axis", "[10, 20]").unwrap();
        assert_eq!(cfg.frequency_axis.values(), vec![10.0, 20.0]);
        assert!(cfg.set("t_max", "-1").is_err());
        assert_eq!(cfg.t_max, 30.0);
    }

    #[test]
    fn derived_quantities() {
        let cfg = RunConfig { samples: 4, t_max: 3.0, ..RunConfig::default() };
        assert_eq!(cfg.sample_times(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(cfg.snapshot_times(), vec![0.0, 1.5, 3.0]);
        assert_eq!(cfg.window_width_for(0.25), 0.25);
        let s = cfg.solver();
        assert_eq!((s.matsubara_terms, s.depth), (4, 7));
    }
}
