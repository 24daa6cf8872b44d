//! The periodically driven two-level system.
//!
//! The lab-frame Hamiltonian (ħ = 1, energies in units of ω0) is
//!
//! ```text
//! H(t) = (ω0/2) σz + (Δ/2) σx + (Ω/2) cos(ωt) σx
//! ```
//!
//! Moving to the frame generated by `U_r(t) = exp(−i (Ω/2ω) sin(ωt) σx)`
//! removes the drive term and leaves a periodic Hamiltonian whose Fourier
//! components carry Bessel-function weights `J_n(Ω/ω)`. Its static part
//! `(ω0/2) J0(Ω/ω) σz + (Δ/2) σx` loses the σz term whenever `Ω/ω` sits on a
//! zero of `J0`; those drive frequencies are the resonant-ratio conditions
//! returned by [`rrc_frequency`].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{bessel_j, bessel_j0_zero, expm_su2, integrate_adaptive, Mat2, OdeTolerance};
use crate::math::{SIGMA_X, SIGMA_Y, SIGMA_Z};

/// Parameters of the driven two-level Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Level splitting ω0.
    pub omega0: f64,
    /// Static bias Δ (as a multiple of ħω0).
    pub delta: f64,
    /// Drive amplitude Ω.
    pub amplitude: f64,
    /// Drive frequency ω.
    pub frequency: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        Self { omega0: 1.0, delta: 0.0, amplitude: 0.0, frequency: 1.0 }
    }
}

impl DriveParams {
    pub fn new(omega0: f64, delta: f64, amplitude: f64, frequency: f64) -> Self {
        Self { omega0, delta, amplitude, frequency }
    }

    /// Checks `ω0 > 0` and that every field is finite.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega0, self.delta, self.amplitude, self.frequency]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput(format!("non-finite drive parameter in {self:?}")));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::InvalidInput(format!("omega0 must be positive, got {}", self.omega0)));
        }
        Ok(())
    }

    fn require_periodic(&self) -> Result<()> {
        if self.frequency > 0.0 && self.frequency.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "drive frequency must be positive for periodic-drive operations, got {}",
                self.frequency
            )))
        }
    }

    /// Drive period `2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.frequency
    }

    /// Bessel argument `Ω/ω`.
    pub fn ratio(&self) -> f64 {
        self.amplitude / self.frequency
    }

    /// `min(ω, Ω) / √(ω0² + Δ²)`: how deep the drive sits in the regime
    /// where the static approximation applies. Values well above 1 are
    /// required; no quantitative error bound is attached.
    pub fn static_validity_ratio(&self) -> f64 {
        self.frequency.min(self.amplitude) / self.omega0.hypot(self.delta)
    }

    /// The undriven part `(ω0/2) σz + (Δ/2) σx`.
    pub fn static_part(&self) -> Mat2 {
        (0.5 * self.omega0) * SIGMA_Z + (0.5 * self.delta) * SIGMA_X
    }
}

/// Lab-frame Hamiltonian `H(t)`.
pub fn hamiltonian(t: f64, p: &DriveParams) -> Mat2 {
    let x = 0.5 * (p.delta + p.amplitude * (p.frequency * t).cos());
    let z = 0.5 * p.omega0;
    Mat2::from_real(z, x, x, -z)
}

/// `U_r(t) = exp(−i (Ω/2ω) sin(ωt) σx)`.
pub fn rotating_frame_unitary(t: f64, p: &DriveParams) -> Result<Mat2> {
    p.require_periodic()?;
    let angle = 0.5 * p.ratio() * (p.frequency * t).sin();
    expm_su2(&SIGMA_X, angle)
}

/// `U_r†(t) V U_r(t)` computed by direct conjugation, where `V` is the
/// undriven Hamiltonian. This is the exact rotating-frame Hamiltonian.
pub fn rotating_hamiltonian_exact(t: f64, p: &DriveParams) -> Result<Mat2> {
    let u = rotating_frame_unitary(t, p)?;
    Ok(u.adjoint() * p.static_part() * u)
}

/// One operator-valued Fourier coefficient of the rotating-frame Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierComponent {
    pub order: i32,
    pub operator: Mat2,
}

/// Fourier coefficient `H_n` with `H_r(t) = Σ_n H_n e^{−inωt}`:
///
/// * even `n`: `(ω0/2) J_n(Ω/ω) σz + δ_{n,0} (Δ/2) σx`
/// * odd `n`: `i (ω0/2) J_n(Ω/ω) σy`
pub fn fourier_component(n: i32, p: &DriveParams) -> Result<FourierComponent> {
    p.require_periodic()?;
    let weight = 0.5 * p.omega0 * bessel_j(n, p.ratio());
    let operator = if n % 2 == 0 {
        let mut op = weight * SIGMA_Z;
        if n == 0 {
            op += (0.5 * p.delta) * SIGMA_X;
        }
        op
    } else {
        SIGMA_Y.scale(C64::new(0.0, weight))
    };
    Ok(FourierComponent { order: n, operator })
}

/// Independent check of [`fourier_component`]: trapezoid quadrature of
/// `U_r† V U_r e^{+inωt}` over one period with `nodes` points, spectrally
/// accurate because the integrand is smooth and periodic.
pub fn fourier_component_quadrature(n: i32, p: &DriveParams, nodes: usize) -> Result<Mat2> {
    p.require_periodic()?;
    if nodes == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node".into()));
    }
    let period = p.period();
    let mut acc = Mat2::zero();
    for j in 0..nodes {
        let t = period * j as f64 / nodes as f64;
        let h = rotating_hamiltonian_exact(t, p)?;
        acc += h.scale(C64::from_polar(1.0, n as f64 * p.frequency * t));
    }
    Ok(acc.scale_re(1.0 / nodes as f64))
}

/// Truncated Fourier sum `Σ_{|n| ≤ n_max} H_n e^{−inωt}`.
pub fn rotating_hamiltonian(t: f64, p: &DriveParams, n_max: u32) -> Result<Mat2> {
    let mut h = fourier_component(0, p)?.operator;
    let phase = p.frequency * t;
    for n in 1..=n_max as i32 {
        let plus = fourier_component(n, p)?.operator;
        let minus = fourier_component(-n, p)?.operator;
        let e = C64::from_polar(1.0, -(n as f64) * phase);
        h += plus.scale(e) + minus.scale(e.conj());
    }
    Ok(h)
}

/// Static approximation `(ω0/2) J0(Ω/ω) σz + (Δ/2) σx`.
pub fn static_hamiltonian(p: &DriveParams) -> Result<Mat2> {
    p.require_periodic()?;
    Ok((0.5 * p.omega0 * bessel_j(0, p.ratio())) * SIGMA_Z + (0.5 * p.delta) * SIGMA_X)
}

/// Resonant-ratio drive frequency `Ω / z_k` for the `k`-th zero of `J0`.
pub fn rrc_frequency(k: usize, amplitude: f64) -> Result<f64> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidInput(format!("drive amplitude must be positive, got {amplitude}")));
    }
    Ok(amplitude / bessel_j0_zero(k)?)
}

/// Splitting below which two quasienergies count as degenerate (units of ω0).
pub const DEGENERACY_TOL: f64 = 1e-3;

/// Floquet quasienergies folded into `[−ω/2, ω/2)`, sorted ascending.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quasienergies {
    pub lower: f64,
    pub upper: f64,
    /// Zone width ω used for folding.
    pub zone: f64,
}

impl Quasienergies {
    /// Distance between the two quasienergies on the Brillouin circle.
    pub fn splitting(&self) -> f64 {
        let d = (self.upper - self.lower).abs();
        d.min(self.zone - d)
    }

    pub fn is_degenerate(&self, omega0: f64) -> bool {
        self.splitting() < DEGENERACY_TOL * omega0
    }
}

/// One-period Schrödinger propagator `U(t0 + T, t0)` of the lab-frame
/// Hamiltonian.
pub fn monodromy(p: &DriveParams, t0: f64, tol: &OdeTolerance) -> Result<Mat2> {
    p.require_periodic()?;
    let period = p.period();
    let tol = tol.with_max_step_cap(period / 50.0);
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |t: f64, u: &[C64], du: &mut [C64]| {
        let h = hamiltonian(t, p);
        let m = Mat2([u[0], u[1], u[2], u[3]]);
        let d = (h * m).scale(minus_i);
        du.copy_from_slice(&d.0);
    };
    let id = Mat2::identity();
    let out = integrate_adaptive(rhs, &id.0, t0, &[t0 + period], &tol)?;
    let u = &out[0];
    Ok(Mat2([u[0], u[1], u[2], u[3]]))
}

/// Quasienergies `ε = (i/T) log λ` of the monodromy eigenvalues `λ`, on the
/// principal branch.
pub fn floquet_quasienergies(p: &DriveParams, tol: &OdeTolerance) -> Result<Quasienergies> {
    floquet_quasienergies_from(p, 0.0, tol)
}

/// [`floquet_quasienergies`] with the period starting at `t0`.
pub fn floquet_quasienergies_from(p: &DriveParams, t0: f64, tol: &OdeTolerance) -> Result<Quasienergies> {
    let m = monodromy(p, t0, tol)?;
    let period = p.period();
    let mut eps = m.eigvals().map(|lam| -lam.arg() / period);
    eps.sort_by(f64::total_cmp);
    Ok(Quasienergies { lower: eps[0], upper: eps[1], zone: p.frequency })
}

/// Tolerance used by the Floquet routines when the caller has no preference.
pub fn floquet_default_tolerance() -> OdeTolerance {
    OdeTolerance { atol: 1e-13, rtol: 1e-13, max_step: 1.0, min_step: 1e-14 }
}
