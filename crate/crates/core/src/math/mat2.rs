//! Dense 2×2 complex matrices, row-major `[a00, a01, a10, a11]`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used by [`Mat2::is_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance used by [`Mat2::is_unitary`].
pub const UNITARY_TOL: f64 = 1e-10;

/// A 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2(pub [C64; 4]);

impl Mat2 {
    pub const fn new(a00: C64, a01: C64, a10: C64, a11: C64) -> Self {
        Self([a00, a01, a10, a11])
    }

    pub const fn zero() -> Self {
        Self([ZERO; 4])
    }

    pub const fn identity() -> Self {
        PAULI_I
    }

    pub fn from_real(a00: f64, a01: f64, a10: f64, a11: f64) -> Self {
        Self([a00.into(), a01.into(), a10.into(), a11.into()])
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self([a, ZERO, ZERO, b])
    }

    /// Entry at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[2 * row + col]
    }

    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    pub fn det(&self) -> C64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    /// `self · other` as an explicit 2×2 product.
    #[inline]
    pub fn matmul(&self, o: &Self) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Self([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    /// `[self, other]`.
    pub fn commutator(&self, o: &Self) -> Self {
        self.matmul(o) - o.matmul(self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL
    }

    /// `‖U†U − 1‖` in the max-entry norm.
    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint().matmul(self) - Self::identity()).max_abs()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= UNITARY_TOL
    }

    /// Real Pauli coordinates `(a0, ax, ay, az)` with `self = a0·1 + a·σ`.
    ///
    /// Only the Hermitian part is represented; for a Hermitian matrix the
    /// decomposition is exact.
    pub fn pauli_coords(&self) -> [f64; 4] {
        let [a, b, c, d] = self.0;
        [
            0.5 * (a + d).re,
            0.5 * (b + c).re,
            0.5 * (c - b).im,
            0.5 * (a - d).re,
        ]
    }

    /// Builds `a0·1 + ax σx + ay σy + az σz`.
    pub fn from_pauli(a0: f64, ax: f64, ay: f64, az: f64) -> Self {
        Self([
            C64::new(a0 + az, 0.0),
            C64::new(ax, -ay),
            C64::new(ax, ay),
            C64::new(a0 - az, 0.0),
        ])
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn eigvals_hermitian(&self) -> [f64; 2] {
        let [a0, ax, ay, az] = self.pauli_coords();
        let r = (ax * ax + ay * ay + az * az).sqrt();
        [a0 - r, a0 + r]
    }

    /// Eigenvalues of a general 2×2 matrix (roots of the characteristic
    /// polynomial), in no particular order.
    pub fn eigvals(&self) -> [C64; 2] {
        let half_tr = 0.5 * self.trace();
        let disc = (half_tr * half_tr - self.det()).sqrt();
        [half_tr + disc, half_tr - disc]
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let [a, b, c, d] = self.0;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    /// `σx · self` (row swap).
    #[inline]
    pub fn sx_left(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([c, d, a, b])
    }

    /// `self · σx` (column swap).
    #[inline]
    pub fn sx_right(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([b, a, d, c])
    }

    /// `[σx, self]` without multiplications.
    #[inline]
    pub fn sx_commutator(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([c - b, d - a, a - d, b - c])
    }
}

impl Add for Mat2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }
}

impl Sub for Mat2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2], self.0[3] - o.0[3]])
    }
}

impl Neg for Mat2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|z| -z))
    }
}

impl Mul for Mat2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        self.matmul(&o)
    }
}

impl Mul<Mat2> for C64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m.scale(self)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m.scale_re(self)
    }
}

pub const PAULI_I: Mat2 = Mat2([ONE, ZERO, ZERO, ONE]);
pub const SIGMA_X: Mat2 = Mat2([ZERO, ONE, ONE, ZERO]);
pub const SIGMA_Y: Mat2 = Mat2([ZERO, C64::new(0.0, -1.0), I, ZERO]);
pub const SIGMA_Z: Mat2 = Mat2([ONE, ZERO, ZERO, C64::new(-1.0, 0.0)]);

/// The Pauli basis `(1, σx, σy, σz)`.
pub struct PauliBasis;

impl PauliBasis {
    pub const IDENTITY: Mat2 = PAULI_I;
    pub const X: Mat2 = SIGMA_X;
    pub const Y: Mat2 = SIGMA_Y;
    pub const Z: Mat2 = SIGMA_Z;

    /// `[σx, σy, σz]`.
    pub const fn sigma() -> [Mat2; 3] {
        [SIGMA_X, SIGMA_Y, SIGMA_Z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Mat2, b: Mat2) -> bool {
        (a - b).max_abs() < 1e-15
    }

    #[test]
    fn pauli_algebra() {
        for s in PauliBasis::sigma() {
            assert!(close(s * s, PAULI_I));
            assert!(s.is_hermitian());
            assert!(s.is_unitary());
        }
        assert!(close(SIGMA_X * SIGMA_Y, I * SIGMA_Z));
        assert!(close(SIGMA_Y * SIGMA_Z, I * SIGMA_X));
        assert!(close(SIGMA_Z * SIGMA_X, I * SIGMA_Y));
    }

    #[test]
    fn sigma_x_shortcuts_match_products() {
        let m = Mat2::new(
            C64::new(0.3, 0.1),
            C64::new(-1.2, 0.7),
            C64::new(0.4, -2.0),
            C64::new(0.9, 0.5),
        );
        assert!(close(m.sx_left(), SIGMA_X * m));
        assert!(close(m.sx_right(), m * SIGMA_X));
        assert!(close(m.sx_commutator(), SIGMA_X.commutator(&m)));
    }

    #[test]
    fn pauli_coords_round_trip() {
        let m = Mat2::from_pauli(0.5, -0.2, 0.7, 0.1);
        let [a0, ax, ay, az] = m.pauli_coords();
        assert!((a0 - 0.5).abs() < 1e-15);
        assert!((ax + 0.2).abs() < 1e-15);
        assert!((ay - 0.7).abs() < 1e-15);
        assert!((az - 0.1).abs() < 1e-15);
        let built = 0.5 * PAULI_I + (-0.2) * SIGMA_X + 0.7 * SIGMA_Y + 0.1 * SIGMA_Z;
        assert!(close(m, built));
    }

    #[test]
    fn non_hermitian_detected() {
        let m = Mat2::new(ONE, ONE, ZERO, ONE);
        assert!(!m.is_hermitian());
        assert!(Mat2::diag(C64::new(1.0, 1e-9), ONE).hermiticity_deviation() > HERMITIAN_TOL);
    }

    #[test]
    fn hermitian_eigvals() {
        let m = Mat2::from_pauli(0.2, 0.3, 0.0, 0.4);
        let [lo, hi] = m.eigvals_hermitian();
        assert!((lo - (0.2 - 0.5)).abs() < 1e-14);
        assert!((hi - (0.2 + 0.5)).abs() < 1e-14);
    }
}
