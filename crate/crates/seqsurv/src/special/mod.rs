//! Scalar special functions: `erf`, `erfcx`, and `dawson`.
//!
//! These three cover every transcendental the hazard integrals need. The
//! accuracy contract is 1e-13 relative for |x| <= 6 and 1e-10 relative
//! beyond (the frozen oracle table in `tests/data/special_oracle.csv` checks
//! both at 1e-12 / 1e-10). Each function is assembled from three regimes:
//!
//! * Taylor series near zero, where the leading term dominates and the
//!   alternating tails are benign;
//! * Chebyshev series in y = 4/(4+x) for the mid range (tables generated by
//!   `tools/gen_special_tables.py` from 40-digit references; the y-map is the
//!   one the Faddeeva package uses, which converges much faster than fitting
//!   in x directly);
//! * the divergent-but-usable asymptotic series for x > 12, truncated at the
//!   first negligible term (smallest term is ~exp(-x^2) sized, far below f64
//!   resolution at x = 12).
//!
//! Negative arguments go through exact reflections (`erf` and `dawson` are
//! odd; `erfcx(-x) = 2 exp(x^2) - erfcx(x)`), so oddness holds bitwise.
//!
//! `erfi` is deliberately not exposed: `exp(C) * erfi(tau)` overflows for
//! moderate `tau`, which is exactly the failure mode the hazard-integral
//! code avoids by working with `dawson` and `erfcx` instead.

mod tables;

use tables::ChebInterval;

/// 2 / sqrt(pi)
const TWO_OVER_SQRT_PI: f64 = 1.1283791670955126;
/// 1 / sqrt(pi)
const FRAC_1_SQRT_PI: f64 = 0.5641895835477563;

/// Error function.
///
/// Odd; `erf(x) -> ±1` as `x -> ±inf`. Relative accuracy ~1e-15 across the
/// real line (saturates to exactly 1.0 for x >= 6.5 where `1 - erf(x)` is
/// below f64 resolution).
pub fn erf(x: f64) -> f64 {
    let a = x.abs();
    let pos = if a <= 0.84 {
        // Maclaurin series: erf(a) = 2/sqrt(pi) * sum (-1)^n a^(2n+1) / (n! (2n+1)).
        let a2 = a * a;
        let mut term = a; // a^(2n+1) / n!
        let mut sum = a; // n = 0 contribution: a / 1
        let mut n = 1u32;
        loop {
            term *= a2 / n as f64;
            let contrib = term / (2 * n + 1) as f64;
            sum += if n % 2 == 1 { -contrib } else { contrib };
            if contrib < 1e-18 * sum.abs() || n > 40 {
                break;
            }
            n += 1;
        }
        TWO_OVER_SQRT_PI * sum
    } else {
        // erf(a) = 1 - exp(-a^2) erfcx(a); no cancellation since erf(0.84) > 0.76.
        1.0 - (-a * a).exp() * erfcx_nonneg(a)
    };
    if x.is_sign_negative() {
        -pos
    } else {
        pos
    }
}

/// Scaled complementary error function `erfcx(x) = exp(x^2) erfc(x)`.
///
/// Strictly positive and decreasing; `erfcx(0) = 1`, `erfcx(x) ~ 1/(x
/// sqrt(pi))` for large x. For x below about -26.6 the true value exceeds
/// f64 range and the function overflows to `+inf`, matching `exp`'s own
/// behavior.
pub fn erfcx(x: f64) -> f64 {
    if x >= 0.0 {
        erfcx_nonneg(x)
    } else if x.is_nan() {
        f64::NAN
    } else {
        // Reflection: erfcx(-a) = 2 exp(a^2) - erfcx(a). The subtrahend is
        // at most 1, so there is no cancellation; overflow of exp(a^2)
        // propagates as +inf, which is the honest f64 answer.
        let a = -x;
        2.0 * (a * a).exp() - erfcx_nonneg(a)
    }
}

fn erfcx_nonneg(x: f64) -> f64 {
    debug_assert!(!(x < 0.0));
    if x > 12.0 {
        // Asymptotic series: erfcx(x) = 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2x^2)^k.
        FRAC_1_SQRT_PI / x * asymptotic_sum(x, true)
    } else {
        // Chebyshev branch, y = 4/(4+x) in [0.25, 1]. The fitted quantity is
        // F(x) = (1 + 2x/sqrt(pi)) erfcx(x), bounded in [2/pi, 1], so the
        // absolute fit error is a relative error on erfcx.
        let y = 4.0 / (4.0 + x);
        let f = cheb_eval(tables::ERFCX_CHEB, y);
        f / (1.0 + TWO_OVER_SQRT_PI * x)
    }
}

/// Dawson integral `D(x) = exp(-x^2) * Int_0^x exp(t^2) dt`.
///
/// Odd; rises to its maximum 0.54104... at x = 0.92414... and decays like
/// `1/(2x)`. Bounded on the whole real line, which is what makes it the
/// right building block for the growing-hazard integral branch.
pub fn dawson(x: f64) -> f64 {
    let a = x.abs();
    let pos = if a <= 1.0 {
        // Maclaurin series: D(a) = sum_n (-1)^n (2a^2)^n / (2n+1)!! * a.
        let r = 2.0 * a * a;
        let mut term = a;
        let mut sum = a;
        let mut n = 1u32;
        loop {
            term *= -r / (2 * n + 1) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() || n > 40 {
                break;
            }
            n += 1;
        }
        sum
    } else if a <= 12.0 {
        // Chebyshev branch fits H(x) = 2x D(x), bounded in [1.0, 1.2].
        let y = 4.0 / (4.0 + a);
        cheb_eval(tables::DAWSON_CHEB, y) / (2.0 * a)
    } else {
        // Asymptotic series: D(x) = 1/(2x) * sum_k (2k-1)!! / (2x^2)^k.
        0.5 / a * asymptotic_sum(a, false)
    };
    if x.is_sign_negative() {
        -pos
    } else {
        pos
    }
}

/// `sum_k s^k (2k-1)!! / (2x^2)^k` with `s = -1` (erfcx) or `+1` (dawson).
///
/// Only called for x > 12 where the terms shrink to below 1e-17 well before
/// the divergent tail turns around (smallest term near k = x^2 > 144).
fn asymptotic_sum(x: f64, alternating: bool) -> f64 {
    let w = 0.5 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1u32;
    loop {
        term *= (2 * k - 1) as f64 * w;
        if alternating && k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        if term < 1e-17 || k > 40 {
            break;
        }
        k += 1;
    }
    sum
}

fn cheb_eval(intervals: &[ChebInterval], y: f64) -> f64 {
    let iv = intervals
        .iter()
        .find(|iv| y <= iv.y_hi)
        .unwrap_or_else(|| intervals.last().expect("non-empty table"));
    // Clenshaw recurrence on [y_lo, y_hi] mapped to [-1, 1].
    let u = (2.0 * y - iv.y_lo - iv.y_hi) / (iv.y_hi - iv.y_lo);
    let u2 = 2.0 * u;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in iv.coefs.iter().skip(1).rev() {
        let next = c + u2 * b1 - b2;
        b2 = b1;
        b1 = next;
    }
    iv.coefs[0] + u * b1 - b2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(got: f64, want: f64) -> f64 {
        if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        }
    }

    #[test]
    fn pinned_reference_values() {
        // 40-digit references rounded to f64 (tools/gen_special_oracle.py).
        assert!(rel_err(erf(1.0), 0.8427007929497149) < 1e-14);
        assert!(rel_err(erf(-1.0), -0.8427007929497149) < 1e-14);
        assert_eq!(erfcx(0.0), 1.0);
        assert!(rel_err(erfcx(1.0), 0.427583576155807) < 1e-14);
        assert!(rel_err(erfcx(10.0), 0.05614099274382259) < 1e-14);
        assert!(rel_err(dawson(1.0), 0.5380795069127684) < 1e-14);
        assert!(rel_err(dawson(100.0), 0.005000250037509378) < 1e-14);
    }

    #[test]
    fn erf_saturates_and_bounds() {
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erf(7.0), 1.0);
        assert_eq!(erf(-7.0), -1.0);
        assert_eq!(erf(f64::INFINITY), 1.0);
        for i in 0..1000 {
            let x = -8.0 + i as f64 * 0.016;
            let v = erf(x);
            assert!((-1.0..=1.0).contains(&v), "erf({x}) = {v} out of range");
        }
    }

    #[test]
    fn oddness_is_exact() {
        for i in 0..2000 {
            let x = 1e-3 * (i as f64 + 0.37) * 6.0;
            assert_eq!(erf(-x), -erf(x));
            assert_eq!(dawson(-x), -dawson(x));
        }
    }

    #[test]
    fn erfcx_positive_and_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=2000 {
            let x = -26.0 + i as f64 * (26.0 + 60.0) / 2000.0;
            let v = erfcx(x);
            assert!(v > 0.0, "erfcx({x}) = {v}");
            assert!(v < prev, "erfcx not decreasing at {x}");
            prev = v;
        }
        // Past the representable range the reflection overflows to +inf.
        assert_eq!(erfcx(-27.0), f64::INFINITY);
    }

    #[test]
    fn erfcx_consistent_with_erf() {
        // erfcx(x) exp(-x^2) = 1 - erf(x) ties the Chebyshev branch to the
        // Taylor branch.  Stop at x = 0.84 on the right: beyond that the
        // subtraction 1 - erf(x) cancels and the *test expression* (not the
        // implementation) loses digits.
        for i in 0..=384 {
            let x = -3.0 + i as f64 * 0.01;
            let lhs = erfcx(x) * (-x * x).exp();
            let rhs = 1.0 - erf(x);
            assert!(
                (lhs - rhs).abs() <= 1e-13 * rhs.abs(),
                "identity broken at x = {x}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn dawson_derivative_identity() {
        // D'(x) = 1 - 2x D(x), checked against central differences.
        let h = 1e-5;
        for &x in &[0.3, 0.7, 0.9241, 1.3, 2.0, 3.5, 5.0, 8.0] {
            let numeric = (dawson(x + h) - dawson(x - h)) / (2.0 * h);
            let analytic = 1.0 - 2.0 * x * dawson(x);
            let scale = analytic.abs().max(1e-3);
            assert!(
                ((numeric - analytic) / scale).abs() < 1e-6,
                "D'({x}): numeric {numeric} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn dawson_peak_location() {
        // Max value ~0.54104 attained near x* = 0.92414; the function must
        // be increasing before and decreasing after.
        let peak = dawson(0.9241388730);
        assert!((peak - 0.5410442246351816).abs() < 1e-12);
        assert!(dawson(0.8) < peak && dawson(1.1) < peak);
        assert!(dawson(0.9) > dawson(0.5));
        assert!(dawson(2.0) < dawson(1.2));
    }

    #[test]
    fn branch_seams_are_continuous() {
        // Adjacent evaluations across every regime switch agree to ~1 ulp
        // relative; a table or reduction bug would show up as a jump.
        for &seam in &[0.84, 1.0, 12.0] {
            for f in [erf as fn(f64) -> f64, erfcx, dawson] {
                let lo = f(seam - 1e-9);
                let hi = f(seam + 1e-9);
                assert!(
                    rel_err(hi, lo) < 1e-8,
                    "seam at {seam}: {lo} vs {hi}"
                );
            }
        }
    }
}
