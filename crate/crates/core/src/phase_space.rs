//! Phase-space diagnostics on the Bloch sphere: Husimi Q, the phase
//! synchronization measure `S(φ)`, and helpers for long-time averages.
//!
//! States are written in the `(e, g)` basis with `σz|e⟩ = |e⟩`, so
//! `ρ = [[p, c], [c̄, 1 − p]]` and `c = (m_x − i m_y)/2`.

use std::f64::consts::{FRAC_1_PI, PI, TAU};

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::quadrature::gauss_legendre;
use crate::math::Mat2;

/// Tolerance on the smallest eigenvalue when validating a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Tolerance on `|tr ρ − 1|` and `‖ρ − ρ†‖` when validating.
pub const TRACE_TOL: f64 = 1e-10;
/// Below this Bloch-vector length the Q function is considered uniform.
pub const DEGENERATE_BLOCH: f64 = 1e-9;
/// Minimum number of θ nodes accepted by [`sync_measure_integral`].
pub const MIN_THETA_NODES: usize = 64;

/// A qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(m: Mat2) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without checks; used for propagated states whose
    /// drift is reported separately.
    pub fn from_matrix_unchecked(m: Mat2) -> Self {
        Self(m)
    }

    /// From excited population `p` and coherence `c = ⟨e|ρ|g⟩`.
    pub fn from_populations(p: f64, c: C64) -> Result<Self> {
        Self::new(Mat2::new(p.into(), c, c.conj(), (1.0 - p).into()))
    }

    pub fn from_bloch(m: BlochVector) -> Result<Self> {
        if m.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!("Bloch vector length {} > 1", m.norm())));
        }
        Self::new(Mat2::from_pauli(0.5, 0.5 * m.x, 0.5 * m.y, 0.5 * m.z))
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: [C64; 2]) -> Result<Self> {
        let n = psi[0].norm_sqr() + psi[1].norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state norm² {n} ≠ 1")));
        }
        let [a, b] = psi;
        Self::new(Mat2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj()))
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat2::identity().scale_re(0.5))
    }

    /// The `σx = +1` eigenstate.
    pub fn plus_x() -> Self {
        Self(Mat2::from_real(0.5, 0.5, 0.5, 0.5))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if m.0.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite(f64::NAN));
        }
        let dev = m.hermiticity_deviation();
        if dev > TRACE_TOL {
            return Err(Error::NotHermitian { deviation: dev, tolerance: TRACE_TOL });
        }
        let tr = self.trace_deviation();
        if tr > TRACE_TOL {
            return Err(Error::InvalidInput(format!("trace deviates from 1 by {tr:e}")));
        }
        let lo = self.min_eigenvalue();
        if lo < -POSITIVITY_TOL {
            return Err(Error::InvalidInput(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// Excited-state population.
    pub fn p(&self) -> f64 {
        self.0.get(0, 0).re
    }

    /// Coherence `⟨e|ρ|g⟩`.
    pub fn c(&self) -> C64 {
        self.0.get(0, 1)
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_vector(self)
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.0.trace() - 1.0).norm()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.0.hermiticity_deviation()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()).scale_re(0.5);
        h.eigvals_hermitian()[0]
    }
}

/// Cartesian Bloch vector `m_i = tr(ρ σ_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector at polar angle `theta` and azimuth `phi`.
    pub fn direction(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, ct)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn distance(&self, o: &Self) -> f64 {
        let d = Self::new(self.x - o.x, self.y - o.y, self.z - o.z);
        d.norm()
    }
}

pub fn bloch_vector(rho: &DensityMatrix) -> BlochVector {
    let [_, x, y, z] = rho.0.pauli_coords();
    // pauli_coords gives ρ = a0 I + Σ a_i σ_i, and m_i = 2 a_i
    BlochVector::new(2.0 * x, 2.0 * y, 2.0 * z)
}

/// Spin coherent state `cos(θ/2)|e⟩ + e^{iφ} sin(θ/2)|g⟩`, the `+1`
/// eigenvector of `σ·n(θ, φ)`.
pub fn coherent_state(theta: f64, phi: f64) -> [C64; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [C64::new(c, 0.0), C64::from_polar(s, phi)]
}

/// `Q(θ, φ) = ⟨ψ(θ,φ)|ρ|ψ(θ,φ)⟩ / 2π`, normalized against `sinθ dθ dφ`.
pub fn husimi_q(rho: &DensityMatrix, theta: f64, phi: f64) -> f64 {
    let psi = coherent_state(theta, phi);
    let r = rho.0.apply(psi);
    let amp = psi[0].conj() * r[0] + psi[1].conj() * r[1];
    amp.re / TAU
}

/// Samples a density matrix uniformly from the Bloch ball.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let r: f64 = rng.gen::<f64>().cbrt();
    let theta = rng.gen::<f64>().mul_add(2.0, -1.0).acos();
    let phi = rng.gen::<f64>() * TAU;
    let d = BlochVector::direction(theta, phi);
    DensityMatrix::from_matrix_unchecked(Mat2::from_pauli(0.5, 0.5 * r * d.x, 0.5 * r * d.y, 0.5 * r * d.z))
}

/// `S(φ) = ¼ (Re c cos φ − Im c sin φ)`.
pub fn sync_measure_closed(rho: &DensityMatrix, phi: f64) -> f64 {
    let c = rho.c();
    let (s, co) = phi.sin_cos();
    0.25 * (c.re * co - c.im * s)
}

/// `S(φ) = ∫₀^π dθ sinθ Q(θ, φ) − 1/2π` by quadrature over the θ nodes of
/// `grid`.
pub fn sync_measure_integral(rho: &DensityMatrix, phi: f64, grid: &SphereGrid) -> Result<f64> {
    if grid.theta.len() < MIN_THETA_NODES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_THETA_NODES} θ nodes, grid has {}",
            grid.theta.len()
        )));
    }
    let marginal: f64 = grid
        .theta
        .iter()
        .zip(&grid.theta_weights)
        .map(|(&th, &w)| w * husimi_q(rho, th, phi))
        .sum();
    Ok(marginal - 0.5 * FRAC_1_PI)
}

/// Maximum of `S(φ)` over φ and its location.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxSync {
    pub phi_star: f64,
    pub value: f64,
}

/// `max_φ S = |c|/4` at `φ* = −arg c (mod 2π)`; `φ* = 0` when `c = 0`.
pub fn max_sync(rho: &DensityMatrix) -> MaxSync {
    let c = rho.c();
    let value = 0.25 * c.norm();
    let phi_star = if c.norm() == 0.0 { 0.0 } else { (-c.arg()).rem_euclid(TAU) };
    // rem_euclid can round up to exactly 2π
    let phi_star = if phi_star >= TAU { 0.0 } else { phi_star };
    MaxSync { phi_star, value }
}

/// Circular distance between two angles, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Location of the maximum of Q on the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QArgmax {
    pub theta: f64,
    pub phi: f64,
    /// True when Q is uniform (or φ is undefined at a pole); the reported
    /// angle defaults to 0.
    pub degenerate: bool,
}

/// Q is maximal along the Bloch vector.
pub fn q_argmax(rho: &DensityMatrix) -> QArgmax {
    let m = bloch_vector(rho);
    let r = m.norm();
    if r <= DEGENERATE_BLOCH {
        return QArgmax { theta: 0.0, phi: 0.0, degenerate: true };
    }
    let theta = (m.z / r).clamp(-1.0, 1.0).acos();
    let rho_xy = m.x.hypot(m.y);
    if rho_xy <= DEGENERATE_BLOCH {
        return QArgmax { theta, phi: 0.0, degenerate: true };
    }
    let phi = m.y.atan2(m.x).rem_euclid(TAU);
    QArgmax { theta, phi: if phi >= TAU { 0.0 } else { phi }, degenerate: false }
}

/// Tensor-product quadrature on the sphere for the measure `sinθ dθ dφ`.
///
/// θ uses Gauss–Legendre nodes on `[0, π]` with the `sinθ` factor folded
/// into the weights, φ the uniform trapezoid rule on `[0, 2π)`. Both
/// directions then integrate trigonometric polynomials spectrally, which
/// is what the Q marginal is.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    pub theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_weight: f64,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidInput("sphere grid needs at least one node per axis".into()));
        }
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|&x| 0.5 * PI * (x + 1.0)).collect();
        let theta_weights = theta.iter().zip(&w).map(|(&th, &w)| 0.5 * PI * w * th.sin()).collect();
        Ok(Self {
            theta,
            theta_weights,
            phi: (0..n_phi).map(|j| TAU * j as f64 / n_phi as f64).collect(),
            phi_weight: TAU / n_phi as f64,
        })
    }

    /// Sum of all weights; `4π` up to quadrature error.
    pub fn total_weight(&self) -> f64 {
        self.theta_weights.iter().sum::<f64>() * self.phi_weight * self.phi.len() as f64
    }

    /// `∫ f(θ, φ) sinθ dθ dφ`.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (&th, &w) in self.theta.iter().zip(&self.theta_weights) {
            let row: f64 = self.phi.iter().map(|&ph| f(th, ph)).sum();
            acc += w * row;
        }
        acc * self.phi_weight
    }
}

/// Mean of a sampled series over `[t_center − width/2, t_center + width/2]`,
/// integrating the piecewise-linear interpolant (trapezoidal weighting).
///
/// `width = 0` returns the sample nearest to `t_center`.
pub fn window_average(times: &[f64], values: &[f64], t_center: f64, width: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
    }
    if !(width >= 0.0) || !t_center.is_finite() {
        return Err(Error::InvalidInput(format!("bad window ({t_center}, {width})")));
    }
    let (a, b) = (t_center - 0.5 * width, t_center + 0.5 * width);
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(Error::EmptyWindow { start: a, end: b });
    };
    let slack = 1e-9 * (1.0 + last.abs());
    if a < first - slack || b > last + slack {
        return Err(Error::EmptyWindow { start: a, end: b });
    }
    if width == 0.0 {
        let i = times
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - t_center).abs().total_cmp(&(y.1 - t_center).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        return Ok(values[i]);
    }
    let (a, b) = (a.max(first), b.min(last));
    let mut acc = 0.0;
    for i in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[i], times[i + 1]);
        let (lo, hi) = (t0.max(a), t1.min(b));
        if hi <= lo || t1 <= t0 {
            continue;
        }
        let lerp = |t: f64| values[i] + (values[i + 1] - values[i]) * (t - t0) / (t1 - t0);
        acc += 0.5 * (hi - lo) * (lerp(lo) + lerp(hi));
    }
    if b <= a {
        return Err(Error::EmptyWindow { start: a, end: b });
    }
    Ok(acc / (b - a))
}
