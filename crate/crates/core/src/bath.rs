//! Drude–Lorentz bosonic bath: spectral density, correlation function and
//! its Matsubara exponential decomposition.
//!
//! The bath correlation function is normalized as
//!
//! ```text
//! C(t) = (1/π) ∫₀^∞ dω J(ω) [coth(ω/2T) cos ωt − i sin ωt]
//! J(ω) = 2λγω / (ω² + γ²)
//! ```
//!
//! for which the Drude pole contributes `λγ(cot(γ/2T) − i) e^{−γt}` and the
//! Matsubara poles `ν_k = 2πkT` contribute real terms
//! `4λγT ν_k / (ν_k² − γ²) e^{−ν_k t}`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::quadrature::integrate_panels;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Coupling strength λ.
    pub lambda: f64,
    /// Cutoff frequency γ.
    pub gamma: f64,
    /// Temperature in units of ħω0/k_B.
    pub temperature: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        Self { lambda: 1.0, gamma: 0.5, temperature: 0.5 }
    }
}

impl BathParams {
    pub fn new(lambda: f64, gamma: f64, temperature: f64) -> Self {
        Self { lambda, gamma, temperature }
    }

    /// `λ ≥ 0`, `γ > 0`, `T > 0`, all finite.
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda >= 0.0
            && self.gamma > 0.0
            && self.temperature > 0.0
            && [self.lambda, self.gamma, self.temperature].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "bath needs lambda >= 0, gamma > 0, temperature > 0, got {self:?}"
            )))
        }
    }

    /// Integral of `Re C(t)` over `t ≥ 0`, i.e. `2λT/γ`.
    pub fn markovian_weight(&self) -> f64 {
        2.0 * self.lambda * self.temperature / self.gamma
    }
}

/// `J(ω) = 2λγω/(ω² + γ²)`, odd in ω.
pub fn spectral_density(w: f64, b: &BathParams) -> f64 {
    2.0 * b.lambda * b.gamma * w / (w * w + b.gamma * b.gamma)
}

fn spectral_density_d1(w: f64, b: &BathParams) -> f64 {
    let g2 = b.gamma * b.gamma;
    let s = w * w + g2;
    2.0 * b.lambda * b.gamma * (g2 - w * w) / (s * s)
}

fn spectral_density_d2(w: f64, b: &BathParams) -> f64 {
    let g2 = b.gamma * b.gamma;
    let s = w * w + g2;
    2.0 * b.lambda * b.gamma * 2.0 * w * (w * w - 3.0 * g2) / (s * s * s)
}

/// `J(ω) coth(ω/2T)`, continuous at ω = 0.
fn thermal_density(w: f64, b: &BathParams) -> f64 {
    let x = w / (2.0 * b.temperature);
    if x.abs() < 1e-8 {
        // J ≈ 2λω/γ and coth x ≈ 1/x
        return 4.0 * b.lambda * b.temperature / b.gamma;
    }
    spectral_density(w, b) / x.tanh()
}

/// Upper frequency cutoff for the truncated Fourier integrals; the
/// remainder is handled by an asymptotic tail expansion.
fn frequency_cutoff(t: f64, b: &BathParams) -> f64 {
    (2e4 / t.abs()).max(200.0 * b.gamma).max(100.0 * b.temperature).max(50.0)
}

/// Panel breakpoints on `[0, w_max]`: half-periods of the oscillation
/// refined around the Lorentzian peak.
fn breakpoints(t: f64, w_max: f64, b: &BathParams) -> Vec<f64> {
    let half_period = PI / t.abs();
    let mut pts = vec![0.0];
    for s in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let w = s * b.gamma;
        if w < w_max.min(half_period) {
            pts.push(w);
        }
    }
    let mut w = half_period;
    while w < w_max {
        pts.push(w);
        w += half_period;
    }
    pts.push(w_max);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

const QUAD_REL: f64 = 1e-11;

/// Bath correlation function `C(t)` by direct quadrature of its spectral
/// representation. Serves as the reference against which exponential
/// expansions are checked.
///
/// `C(−t) = conj C(t)` holds by construction. At `t = 0` the real part
/// diverges logarithmically for the Drude–Lorentz density, which is
/// reported as a quadrature failure.
pub fn correlation_quadrature(t: f64, b: &BathParams) -> Result<C64> {
    b.validate()?;
    if b.lambda == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    if t == 0.0 {
        return Err(Error::Quadrature(
            "Re C(t) diverges logarithmically at t = 0 for a Drude-Lorentz density".into(),
        ));
    }
    let w_max = frequency_cutoff(t, b);
    let pts = breakpoints(t, w_max, b);
    let scale = b.lambda * b.gamma;

    let re = integrate_panels(
        &mut |w: f64| thermal_density(w, b) * (w * t).cos(),
        &pts,
        1e-12 * scale,
        QUAD_REL,
        pts.len() * 64,
    )?
    .value;
    let im = integrate_panels(
        &mut |w: f64| spectral_density(w, b) * (w * t).sin(),
        &pts,
        1e-12 * scale,
        QUAD_REL,
        pts.len() * 64,
    )?
    .value;

    // Tails on [w_max, ∞) where coth = 1 to double precision, from three
    // integrations by parts.
    let (s, c) = (w_max * t).sin_cos();
    let (f0, f1, f2) =
        (spectral_density(w_max, b), spectral_density_d1(w_max, b), spectral_density_d2(w_max, b));
    let re_tail = -f0 * s / t - f1 * c / (t * t) + f2 * s / (t * t * t);
    let im_tail = f0 * c / t - f1 * s / (t * t) - f2 * c / (t * t * t);

    Ok(C64::new(re + re_tail, -(im + im_tail)) / PI)
}

/// Exact pure-dephasing exponent
/// `Γ(t) = (4/π) ∫₀^∞ dω J(ω) coth(ω/2T) (1 − cos ωt)/ω²`.
///
/// For a coupling operator with eigenvalues ±1 that commutes with the
/// system Hamiltonian, the coherence between its eigenstates decays as
/// `exp(−Γ(t))`.
pub fn dephasing_exponent(t: f64, b: &BathParams) -> Result<f64> {
    b.validate()?;
    if b.lambda == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let w_max = frequency_cutoff(t, b);
    let pts = breakpoints(t, w_max, b);
    let body = integrate_panels(
        &mut |w: f64| {
            if w == 0.0 {
                return thermal_density(0.0, b) * 0.5 * t * t;
            }
            let s = (0.5 * w * t).sin();
            thermal_density(w, b) * 2.0 * s * s / (w * w)
        },
        &pts,
        1e-15,
        QUAD_REL,
        pts.len() * 64,
    )?
    .value;
    // ∫_W^∞ J/ω² exactly, minus the oscillating part to leading orders.
    let smooth_tail = (b.lambda / b.gamma) * (b.gamma * b.gamma / (w_max * w_max)).ln_1p();
    let h = spectral_density(w_max, b) / (w_max * w_max);
    let h1 = spectral_density_d1(w_max, b) / (w_max * w_max) - 2.0 * h / w_max;
    let (s, c) = (w_max * t).sin_cos();
    let cos_tail = -h * s / t - h1 * c / (t * t);
    Ok(4.0 / PI * (body + smooth_tail - cos_tail))
}

/// One exponential `c e^{−ν t}` of a correlation-function decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coefficient: C64,
    pub rate: f64,
}

/// `C(t) ≈ Σ_k c_k e^{−ν_k t}` plus the Markovian weight of the dropped
/// terms, consumed by the solver's terminator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialExpansion {
    pub terms: Vec<ExpTerm>,
    pub residual: f64,
}

impl ExponentialExpansion {
    /// Number of Matsubara terms (entries after the Drude term).
    pub fn matsubara_count(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    /// `Σ_k c_k e^{−ν_k t}`.
    pub fn evaluate(&self, t: f64) -> C64 {
        self.terms.iter().map(|e| e.coefficient * (-e.rate * t).exp()).sum()
    }

    /// Copy with coefficient `index` multiplied by `factor`; used to check
    /// that the validation oracles detect a corrupted expansion.
    pub fn with_scaled_coefficient(&self, index: usize, factor: f64) -> Self {
        let mut out = self.clone();
        if let Some(term) = out.terms.get_mut(index) {
            term.coefficient *= factor;
        }
        out
    }

    /// `true` when every coefficient vanishes (decoupled bath).
    pub fn is_decoupled(&self) -> bool {
        self.terms.iter().all(|e| e.coefficient == C64::new(0.0, 0.0)) && self.residual == 0.0
    }
}

/// Drude pole plus `K` Matsubara terms.
pub fn matsubara_expansion(b: &BathParams, k_terms: usize) -> Result<ExponentialExpansion> {
    b.validate()?;
    let (lambda, gamma, temp) = (b.lambda, b.gamma, b.temperature);
    let x = gamma / (2.0 * temp);
    let m = (x / PI).round();
    if m >= 1.0 && (x - m * PI).abs() <= 1e-9 * x.max(1.0) {
        return Err(Error::MatsubaraPole(format!(
            "gamma = {gamma} coincides with Matsubara frequency nu_{m} = 2*pi*{m}*T (cot(gamma/2T) is singular)"
        )));
    }
    let mut terms = Vec::with_capacity(k_terms + 1);
    terms.push(ExpTerm { coefficient: C64::new(lambda * gamma / x.tan(), -lambda * gamma), rate: gamma });
    for k in 1..=k_terms {
        let nu = 2.0 * PI * k as f64 * temp;
        let c = 4.0 * lambda * gamma * temp * nu / (nu * nu - gamma * gamma);
        terms.push(ExpTerm { coefficient: C64::new(c, 0.0), rate: nu });
    }
    let captured: f64 = terms.iter().map(|e| e.coefficient.re / e.rate).sum();
    let residual = if lambda == 0.0 { 0.0 } else { b.markovian_weight() - captured };
    Ok(ExponentialExpansion { terms, residual })
}

/// Magnitude of the Matsubara terms beyond `k_terms` at time `t > 0`,
/// `Σ_{k>K} c_k e^{−ν_k t}`; the natural error band of a `K`-term expansion.
pub fn truncation_tail(t: f64, b: &BathParams, k_terms: usize) -> f64 {
    let mut sum = 0.0;
    for k in k_terms + 1..k_terms + 200_000 {
        let nu = 2.0 * PI * k as f64 * b.temperature;
        let term = 4.0 * b.lambda * b.gamma * b.temperature * nu / (nu * nu - b.gamma * b.gamma) * (-nu * t).exp();
        sum += term.abs();
        if term.abs() <= 1e-17 * sum.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPERATING: BathParams = BathParams { lambda: 1.0, gamma: 0.5, temperature: 0.5 };

    #[test]
    fn spectral_density_shape() {
        let b = BathParams::new(0.7, 1.3, 0.5);
        assert_eq!(spectral_density(0.0, &b), 0.0);
        assert!((spectral_density(b.gamma, &b) - b.lambda).abs() < 1e-15);
        assert_eq!(spectral_density(-2.0, &b), -spectral_density(2.0, &b));
        // grid scan for the maximum over w > 0
        let (mut best_w, mut best) = (0.0, f64::MIN);
        for i in 1..100_000 {
            let w = i as f64 * 1e-4;
            let v = spectral_density(w, &b);
            if v > best {
                best = v;
                best_w = w;
            }
        }
        assert!((best_w - b.gamma).abs() < 2e-4);
    }

    #[test]
    fn quadrature_imaginary_part_is_drude_decay() {
        // Im C(t) = −λγ e^{−γt} in closed form.
        for &t in &[0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 20.0] {
            let c = correlation_quadrature(t, &OPERATING).unwrap();
            let exact = -OPERATING.lambda * OPERATING.gamma * (-OPERATING.gamma * t).exp();
            assert!((c.im - exact).abs() < 1e-9 * OPERATING.lambda * OPERATING.gamma, "t={t}: {} vs {exact}", c.im);
        }
    }

    #[test]
    fn quadrature_decoupled_and_decay() {
        let off = BathParams { lambda: 0.0, ..OPERATING };
        assert_eq!(correlation_quadrature(2.0, &off).unwrap(), C64::new(0.0, 0.0));
        let t = 50.0 / OPERATING.gamma;
        let c = correlation_quadrature(t, &OPERATING).unwrap();
        assert!(c.norm() < 1e-6 * OPERATING.lambda * OPERATING.gamma);
        assert!(matches!(correlation_quadrature(0.0, &OPERATING), Err(Error::Quadrature(_))));
    }

    #[test]
    fn quadrature_conjugate_symmetry() {
        for &t in &[0.3, 1.7, 6.0] {
            let plus = correlation_quadrature(t, &OPERATING).unwrap();
            let minus = correlation_quadrature(-t, &OPERATING).unwrap();
            assert!((plus.re - minus.re).abs() < 1e-10);
            assert!((plus.im + minus.im).abs() < 1e-10);
        }
    }

    #[test]
    fn long_expansion_reproduces_quadrature() {
        // With many Matsubara terms the sum converges to C(t) for t > 0.
        let exp = matsubara_expansion(&OPERATING, 4000).unwrap();
        for &t in &[0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let q = correlation_quadrature(t, &OPERATING).unwrap();
            let e = exp.evaluate(t);
            assert!((q - e).norm() < 1e-8, "t={t}: {q} vs {e}");
        }
    }

    #[test]
    fn k4_reconstruction_within_residual_band() {
        let b = BathParams::new(1.0, 0.5, 0.5);
        let exp = matsubara_expansion(&b, 4).unwrap();
        let c0 = exp.evaluate(0.0).norm();
        let mut prev_err = Vec::new();
        for k in [1usize, 2, 4, 8] {
            let e = matsubara_expansion(&b, k).unwrap();
            let errs: Vec<f64> = (1..=40)
                .map(|i| {
                    let t = 0.5 * i as f64;
                    (correlation_quadrature(t, &b).unwrap() - e.evaluate(t)).norm()
                })
                .collect();
            if !prev_err.is_empty() {
                // compare above the quadrature noise floor only
                let worse = errs.iter().zip(&prev_err).filter(|(a, b)| **a > **b + 1e-10).count();
                assert_eq!(worse, 0, "K={k} not monotone");
            }
            prev_err = errs;
        }
        for i in 1..=200 {
            let t = 0.1 * i as f64; // (0, 10/γ]
            let q = correlation_quadrature(t, &b).unwrap();
            let err = (q - exp.evaluate(t)).norm();
            let tail = truncation_tail(t, &b, 4);
            assert!(err <= (1e-3 * c0).max(tail) + 1e-10, "t={t}: err {err:e} tail {tail:e}");
        }
    }

    #[test]
    fn expansion_structure() {
        let exp = matsubara_expansion(&OPERATING, 6).unwrap();
        assert_eq!(exp.terms.len(), 7);
        assert!((exp.terms[1].rate - 2.0 * PI * OPERATING.temperature).abs() < 1e-15);
        assert!(exp.terms[1..].windows(2).all(|w| w[0].rate < w[1].rate));
        assert!((exp.terms[0].coefficient.im + OPERATING.lambda * OPERATING.gamma).abs() < 1e-15);
        // residual shrinks with K and is small at K = 6
        let residuals: Vec<f64> =
            (0..=12).map(|k| matsubara_expansion(&OPERATING, k).unwrap().residual).collect();
        assert!(residuals.windows(2).all(|w| w[1] < w[0]));
        assert!(residuals.iter().all(|&r| r >= 0.0));
        assert!(residuals[6] < 0.05 * OPERATING.markovian_weight());
    }

    #[test]
    fn high_temperature_drude_coefficient() {
        let b = BathParams::new(0.8, 0.5, 20.0 * 0.5);
        let c0 = matsubara_expansion(&b, 0).unwrap().terms[0].coefficient;
        let limit = C64::new(2.0 * b.lambda * b.temperature, -b.lambda * b.gamma);
        assert!((c0 - limit).norm() < 0.05 * limit.norm());
    }

    #[test]
    fn pole_coincidence_rejected() {
        let t = 0.5;
        let b = BathParams::new(1.0, 2.0 * PI * t, t);
        assert!(matches!(matsubara_expansion(&b, 3), Err(Error::MatsubaraPole(_))));
        let b = BathParams::new(1.0, 2.0 * PI * 2.0 * t, t);
        assert!(matches!(matsubara_expansion(&b, 0), Err(Error::MatsubaraPole(_))));
    }

    #[test]
    fn decoupled_expansion() {
        let exp = matsubara_expansion(&BathParams { lambda: 0.0, ..OPERATING }, 4).unwrap();
        assert!(exp.is_decoupled());
    }

    #[test]
    fn dephasing_exponent_small_and_large_time() {
        let b = BathParams::new(0.25, 0.5, 0.5);
        // Short times: Γ ≈ 2 t² Re C(0⁺)-like growth is not finite for Drude,
        // so compare against the Markovian slope at long times instead:
        // Γ(t) → 4 (2λT/γ) t + const.
        let g1 = dephasing_exponent(30.0, &b).unwrap();
        let g2 = dephasing_exponent(40.0, &b).unwrap();
        let slope = (g2 - g1) / 10.0;
        assert!((slope - 4.0 * b.markovian_weight()).abs() < 1e-6 * slope, "slope {slope}");
        assert_eq!(dephasing_exponent(0.0, &b).unwrap(), 0.0);
        // Γ is the double time integral of 4 Re C; check by differentiating
        // twice numerically.
        let h = 1e-3;
        let t = 1.3;
        let d2 = (dephasing_exponent(t + h, &b).unwrap() - 2.0 * dephasing_exponent(t, &b).unwrap()
            + dephasing_exponent(t - h, &b).unwrap())
            / (h * h);
        let re_c = correlation_quadrature(t, &b).unwrap().re;
        assert!((d2 - 4.0 * re_c).abs() < 1e-4, "{d2} vs {}", 4.0 * re_c);
    }
}
