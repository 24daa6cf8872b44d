//! Adaptive Dormand–Prince 5(4) integration of complex vector ODEs with
//! PI step control and fourth-order dense output.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size controller settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeTolerance {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        Self { atol: 1e-9, rtol: 1e-7, max_step: 0.1, min_step: 1e-12 }
    }
}

impl OdeTolerance {
    pub fn new(atol: f64, rtol: f64, max_step: f64, min_step: f64) -> Result<Self> {
        let tol = Self { atol, rtol, max_step, min_step };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.atol > 0.0
            && self.rtol > 0.0
            && self.min_step > 0.0
            && self.min_step < self.max_step
            && self.max_step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "tolerances must be positive with min_step < max_step, got {self:?}"
            )))
        }
    }

    /// Copy with the step ceiling lowered to `cap` (never raised).
    pub fn with_max_step_cap(mut self, cap: f64) -> Self {
        self.max_step = self.max_step.min(cap);
        if self.min_step >= self.max_step {
            self.min_step = self.max_step * 1e-9;
        }
        self
    }
}

/// Work counters from one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const MAX_STEPS: usize = 50_000_000;
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
// Per-step change of h is confined to [FAC_MIN, FAC_MAX]·h.
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `dy/dt = rhs(t, y)` from `t0` and returns the state at every
/// entry of `output_times` (ascending, all `≥ t0`).
pub fn integrate_adaptive<F>(
    rhs: F,
    y0: &[C64],
    t0: f64,
    output_times: &[f64],
    tol: &OdeTolerance,
) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut out = Vec::with_capacity(output_times.len());
    integrate_with_observer(rhs, y0, t0, output_times, tol, |_, _, y| out.push(y.to_vec()))?;
    Ok(out)
}

/// Streaming variant of [`integrate_adaptive`]: `observer(i, t_i, y(t_i))`
/// is called once per output time, in order.
pub fn integrate_with_observer<F, O>(
    mut rhs: F,
    y0: &[C64],
    t0: f64,
    output_times: &[f64],
    tol: &OdeTolerance,
    mut observer: O,
) -> Result<IntegrationStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]),
{
    tol.validate()?;
    if output_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("output times must be non-decreasing".into()));
    }
    if let Some(&first) = output_times.first() {
        if first < t0 {
            return Err(Error::InvalidInput(format!("output time {first} precedes t0 = {t0}")));
        }
    }
    let mut stats = IntegrationStats::default();
    let n = y0.len();
    let mut next_out = 0;
    while next_out < output_times.len() && output_times[next_out] == t0 {
        observer(next_out, t0, y0);
        next_out += 1;
    }
    let Some(&t_end) = output_times.last() else {
        return Ok(stats);
    };
    if next_out == output_times.len() {
        return Ok(stats);
    }

    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut y_new = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![zero; n]);
    let mut dense = vec![zero; n];
    let mut t = t0;

    rhs(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = initial_step(&mut rhs, t, &y, &k[0], tol, t_end - t0, &mut tmp, &mut y_new);
    stats.rhs_evals += 1;

    let mut fac_old: f64;
    let mut last_rejected = false;
    let expo = 0.2 - BETA * 0.75;

    while next_out < output_times.len() {
        if stats.accepted + stats.rejected >= MAX_STEPS {
            return Err(Error::TooManySteps(MAX_STEPS));
        }
        h = h.min(tol.max_step);
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h < tol.min_step && !last {
            return Err(Error::StepUnderflow { t, step: h, min_step: tol.min_step });
        }

        let (k1, rest) = k.split_first_mut().expect("seven stages");
        let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, &tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, &tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, &tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, &tmp, k5);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, &tmp, k6);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, &y_new, k7);
        stats.rhs_evals += 6;

        // Max norm: components that stay identically zero do not dilute
        // the error estimate.
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            let r = e.norm() / sc;
            // f64::max would swallow a NaN
            err = if r.is_nan() { f64::INFINITY } else { err.max(r) };
        }
        if !err.is_finite() {
            if h <= tol.min_step {
                return Err(Error::NonFinite(t));
            }
            h *= 0.1;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            // Dense output for every requested time inside (t, t_new].
            let mut prepared = false;
            while next_out < output_times.len() && output_times[next_out] <= t_new {
                let t_out = output_times[next_out];
                if t_out == t_new {
                    observer(next_out, t_out, &y_new);
                } else {
                    if !prepared {
                        // Reuse tmp as r5 storage.
                        for i in 0..n {
                            tmp[i] = h
                                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i]
                                    + D6 * k6[i]
                                    + D7 * k7[i]);
                        }
                        prepared = true;
                    }
                    let theta = (t_out - t) / h;
                    let theta1 = 1.0 - theta;
                    for i in 0..n {
                        let ydiff = y_new[i] - y[i];
                        let bspl = h * k1[i] - ydiff;
                        let r4 = ydiff - h * k7[i] - bspl;
                        dense[i] = y[i]
                            + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * tmp[i])));
                    }
                    observer(next_out, t_out, &dense);
                }
                next_out += 1;
            }
            stats.accepted += 1;
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(k1, k7);
            if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(t));
            }

            fac_old = err.max(1e-4);
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            if h < tol.min_step {
                return Err(Error::StepUnderflow { t, step: h, min_step: tol.min_step });
            }
        }
    }
    Ok(stats)
}

/// Starting step after Hairer–Nørsett–Wanner, clipped to the tolerance
/// window and the integration span.
#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    tol: &OdeTolerance,
    span: f64,
    y1: &mut [C64],
    f1: &mut [C64],
) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let scale = |i: usize| tol.atol + tol.rtol * y[i].norm();
    let norm = |v: &mut dyn Iterator<Item = (usize, C64)>| v.map(|(i, z)| z.norm() / scale(i)).fold(0.0, f64::max);
    let d0 = norm(&mut y.iter().copied().enumerate());
    let d1 = norm(&mut f0.iter().copied().enumerate());
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(tol.max_step).min(span).max(tol.min_step);
    for i in 0..y.len() {
        y1[i] = y[i] + h0 * f0[i];
    }
    rhs(t + h0, y1, f1);
    let d2 = norm(&mut f1.iter().zip(f0).map(|(a, b)| a - b).enumerate()) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(tol.max_step).min(span).max(tol.min_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn zero_rhs_is_constant() {
        let y0 = vec![C64::new(1.5, -2.0), c(3.0)];
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.7).collect();
        let out =
            integrate_adaptive(|_, _, dy: &mut [C64]| dy.fill(c(0.0)), &y0, 0.0, &ts, &OdeTolerance::default())
                .unwrap();
        assert!(out.iter().all(|y| y == &y0));
    }

    #[test]
    fn exponential_decay() {
        let tol = OdeTolerance::new(1e-10, 1e-10, 1.0, 1e-12).unwrap();
        let out = integrate_adaptive(
            |_, y: &[C64], dy: &mut [C64]| dy[0] = -y[0],
            &[c(1.0)],
            0.0,
            &[1.0],
            &tol,
        )
        .unwrap();
        assert!((out[0][0].re - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_linear_oscillator() {
        // y' = i w y has y(t) = e^{iwt}; check at many off-step times.
        let w = 3.0;
        let tol = OdeTolerance::new(1e-10, 1e-10, 10.0, 1e-12).unwrap();
        let ts: Vec<f64> = (0..=400).map(|i| i as f64 * 0.0237).collect();
        let out = integrate_adaptive(
            |_, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, w) * y[0],
            &[c(1.0)],
            0.0,
            &ts,
            &tol,
        )
        .unwrap();
        let worst = ts
            .iter()
            .zip(&out)
            .map(|(t, y)| (y[0] - C64::from_polar(1.0, w * t)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst {worst:e}");
    }

    #[test]
    fn step_underflow_is_reported() {
        // Finite-time blow-up y' = y^2, y(0)=1 at t=1.
        let tol = OdeTolerance::new(1e-10, 1e-10, 0.1, 1e-6).unwrap();
        let r = integrate_adaptive(
            |_, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0],
            &[c(1.0)],
            0.0,
            &[2.0],
            &tol,
        );
        assert!(matches!(r, Err(Error::StepUnderflow { .. }) | Err(Error::NonFinite(_))), "{r:?}");
    }

    #[test]
    fn rejects_bad_tolerance_and_times() {
        assert!(OdeTolerance::new(1e-8, 1e-8, 1e-3, 1e-2).is_err());
        assert!(OdeTolerance::new(0.0, 1e-8, 1.0, 1e-6).is_err());
        let r = integrate_adaptive(|_, _, _: &mut [C64]| {}, &[c(0.0)], 1.0, &[0.5], &OdeTolerance::default());
        assert!(r.is_err());
    }

    #[test]
    fn linear_system_global_error_within_ten_times_tolerance() {
        // Rotation generator plus damping: y' = A y with known propagator.
        let tol = OdeTolerance::new(1e-8, 1e-8, 1.0, 1e-12).unwrap();
        let (a, b) = (-0.3, 2.0);
        let ts: Vec<f64> = (1..=50).map(|i| i as f64 * 0.2).collect();
        let out = integrate_adaptive(
            |_, y: &[C64], dy: &mut [C64]| {
                dy[0] = a * y[0] - b * y[1];
                dy[1] = b * y[0] + a * y[1];
            },
            &[c(1.0), c(0.0)],
            0.0,
            &ts,
            &tol,
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&out) {
            let e = (a * t).exp();
            let exact = [e * (b * t).cos(), e * (b * t).sin()];
            for j in 0..2 {
                let scale = tol.atol + tol.rtol * exact[j].abs();
                assert!((y[j].re - exact[j]).abs() < 10.0 * scale.max(tol.atol), "t={t}");
            }
        }
    }
}
