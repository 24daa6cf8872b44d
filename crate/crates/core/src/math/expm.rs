//! Closed-form exponentials of 2×2 Hermitian generators.

use num_complex::Complex64 as C64;

use super::mat2::{Mat2, PAULI_I, SIGMA_X, SIGMA_Y, SIGMA_Z};
use crate::error::{Error, Result};

/// Hermiticity deviation tolerated by [`expm_su2`].
pub const EXPM_HERMITIAN_TOL: f64 = 1e-9;

/// `exp(−i s H)` for Hermitian `H = a0 + a·σ`:
/// `e^{−i s a0} (cos(s|a|) − i sin(s|a|) â·σ)`.
pub fn expm_su2(h: &Mat2, s: f64) -> Result<Mat2> {
    let deviation = h.hermiticity_deviation();
    if deviation > EXPM_HERMITIAN_TOL || !deviation.is_finite() {
        return Err(Error::NotHermitian { deviation, tolerance: EXPM_HERMITIAN_TOL });
    }
    let [a0, ax, ay, az] = h.pauli_coords();
    let r = (ax * ax + ay * ay + az * az).sqrt();
    let phase = C64::from_polar(1.0, -s * a0);
    if r == 0.0 {
        return Ok(PAULI_I.scale(phase));
    }
    let (sin, cos) = (s * r).sin_cos();
    let axis = (ax / r) * SIGMA_X + (ay / r) * SIGMA_Y + (az / r) * SIGMA_Z;
    Ok((cos * PAULI_I + axis.scale(C64::new(0.0, -sin))).scale(phase))
}
