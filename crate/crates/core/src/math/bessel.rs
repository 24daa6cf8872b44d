//! Bessel functions of the first kind of integer order and the zeros of J0.

use crate::error::{Error, Result};

/// Largest `k` accepted by [`bessel_j0_zero`].
pub const MAX_J0_ZERO: usize = 16;

const SERIES_RADIUS: f64 = 2.0;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_n(x)` for any integer order and finite real argument.
///
/// Small arguments use the ascending power series; everything else uses
/// Miller's downward recurrence normalized by `J0 + 2 Σ J_2k = 1`.
/// Negative orders go through `J_{-n}(x) = (-1)^n J_n(x)`, so the
/// reflection identity holds bit-for-bit.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        // J_n(-x) = (-1)^n J_n(x)
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_RADIUS {
        series(n as u32, x)
    } else {
        miller(n as u32, x)
    }
}

fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    for m in 1..200u32 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let top = (n as f64).max(x);
    let mut start = (top + 25.0 + 15.0 * top.cbrt()).ceil() as u32;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-30; // J_k, arbitrary seed
    let mut norm = 0.0;
    let mut value = 0.0;
    let mut k = start;
    loop {
        if k == n {
            value = j_cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j_cur } else { 2.0 * j_cur };
        }
        if k == 0 {
            break;
        }
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        k -= 1;
        if j_cur.abs() > RESCALE_ABOVE {
            j_cur *= RESCALE_BY;
            j_next *= RESCALE_BY;
            norm *= RESCALE_BY;
            value *= RESCALE_BY;
        }
    }
    value / norm
}

/// The `k`-th positive zero of `J0`, `1 ≤ k ≤ 16`.
///
/// Brackets the root around the McMahon estimate `(k − 1/4)π` and bisects
/// until the bracket cannot shrink further in double precision.
pub fn bessel_j0_zero(k: usize) -> Result<f64> {
    if k == 0 || k > MAX_J0_ZERO {
        return Err(Error::OutOfRange(format!(
            "J0 zero index {k} outside supported range 1..={MAX_J0_ZERO}"
        )));
    }
    let guess = (k as f64 - 0.25) * std::f64::consts::PI;
    let (mut lo, mut hi) = (guess - 0.6, guess + 0.6);
    let mut f_lo = bessel_j(0, lo);
    debug_assert!(f_lo * bessel_j(0, hi) < 0.0, "zero {k} not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = bessel_j(0, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (bessel_j(0, lo).abs(), bessel_j(0, hi).abs());
    Ok(if a <= b { lo } else { hi })
}

/// The first `count` zeros of `J0`.
pub fn bessel_j0_zeros(count: usize) -> Result<Vec<f64>> {
    (1..=count).map(bessel_j0_zero).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Trapezoid rule on the periodic integrand of
    /// `J_n(x) = (1/2π) ∫ cos(nθ − x sinθ) dθ`; exponentially convergent
    /// once the node count exceeds `|n| + |x|` comfortably.
    fn integral_oracle(n: i32, x: f64) -> f64 {
        let nodes = 4096;
        let h = 2.0 * PI / nodes as f64;
        (0..nodes)
            .map(|i| {
                let th = i as f64 * h;
                (n as f64 * th - x * th.sin()).cos()
            })
            .sum::<f64>()
            / nodes as f64
    }

    /// Sign-change bisection on J0 within a caller-supplied bracket.
    fn bisect_j0(mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (integral_oracle(0, mid) > 0.0) == (integral_oracle(0, lo) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn j0_at_origin() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(5, 0.0), 0.0);
    }

    #[test]
    fn j1_of_one_matches_integral_oracle() {
        // Frozen from the trapezoid oracle: J_1(1) = 0.44005058574493355.
        let frozen = 0.440_050_585_744_933_5;
        assert!((integral_oracle(1, 1.0) - frozen).abs() < 1e-15);
        assert!((bessel_j(1, 1.0) - frozen).abs() < 1e-14);
    }

    #[test]
    fn matches_integral_oracle_on_grid() {
        let mut worst: f64 = 0.0;
        for n in -32..=32 {
            for &x in &[0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 3.7, 7.5, 12.5, 24.95, 40.0, 80.0, 133.3, 200.0] {
                let d = (bessel_j(n, x) - integral_oracle(n, x)).abs();
                worst = worst.max(d);
            }
        }
        assert!(worst < 1e-12, "worst deviation {worst:e}");
    }

    #[test]
    fn reflection_is_exact() {
        for n in 0..=32 {
            for i in 0..50 {
                let x = -100.0 + 4.1 * i as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(bessel_j(-n, x), sign * bessel_j(n, x));
            }
        }
        assert_eq!(bessel_j(-3, 1.7), -bessel_j(3, 1.7));
    }

    #[test]
    fn sum_rule() {
        for i in 0..=120 {
            let x = 0.5 * i as f64;
            let s: f64 = bessel_j(0, x).powi(2)
                + 2.0 * (1..=80).map(|n| bessel_j(n, x).powi(2)).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-10, "x={x} sum={s}");
        }
    }

    #[test]
    fn first_zeros_match_bisection_oracle() {
        let z1 = bisect_j0(2.0, 3.0);
        let z2 = bisect_j0(5.0, 6.0);
        assert!((z1 - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((z2 - 5.520_078_110_286_311).abs() < 1e-12);
        assert!((bessel_j0_zero(1).unwrap() - z1).abs() < 1e-12);
        assert!((bessel_j0_zero(2).unwrap() - z2).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_roots_and_increasing() {
        let zs = bessel_j0_zeros(MAX_J0_ZERO).unwrap();
        for (k, z) in zs.iter().enumerate() {
            assert!(bessel_j(0, *z).abs() < 1e-12, "k={} J0={:e}", k + 1, bessel_j(0, *z));
        }
        assert!(zs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_index_out_of_range() {
        assert!(bessel_j0_zero(0).is_err());
        assert!(bessel_j0_zero(MAX_J0_ZERO + 1).is_err());
    }
}
