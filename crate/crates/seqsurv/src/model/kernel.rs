//! Scalar kernel for one trajectory piece.
//!
//! Within a single velocity bin the squared distance between two nodes is a
//! quadratic in time, so the hazard integral over a piece `[p, p + len]`
//! reduces to error-function-family primitives.  Writing `dx` and `dv` for
//! the relative position (at the piece start) and relative velocity,
//!
//! ```text
//! nv  = |dv|,   rho = <dv, dx> / nv,     tau(u) = nv u + rho,
//! d2(u) = (|dx|^2 - rho^2) + tau(u)^2,
//! g(u)  = exp(bias + s d2(u)) = exp(C + s tau(u)^2),   C = bias + s (|dx|^2 - rho^2).
//! ```
//!
//! The kernel returns the raw moments of `g` over the piece:
//!
//! ```text
//! I0 = int g du,   I1 = int u g du,   I2 = int u^2 g du,
//! ```
//!
//! `I0` is the cumulative hazard; `I1`/`I2` appear in its gradient through
//! `d I0/d dx = 2s (I0 dx + I1 dv)` and `d I0/d dv = 2s (I1 dx + I2 dv)`.
//!
//! Three regimes keep every branch fully in range of f64:
//!
//! * **degenerate** (`nv <= 1e-9`): the hazard is constant to within
//!   O(nv len^2); use the midpoint value.
//! * **narrow** (`phi = max(|tau_mid| theta, theta^2/4) <= 1e-3`, with
//!   `theta = nv len`): the closed forms below subtract nearly equal
//!   endpoint quantities; switch to an even/odd Taylor expansion of
//!   `exp(a z + b z^2)` about the piece midpoint, truncated where the next
//!   term is below ~1e-12 relative.
//! * **closed form** otherwise, with every exponential absorbed into a
//!   hazard endpoint value so nothing overflows before the result would:
//!   `s = +1` uses the Dawson function, `s = -1` uses erfcx when both
//!   endpoints share a sign (cancellation-safe) and a plain erf difference
//!   when the interval straddles zero (no cancellation there).
//!
//! The moment identities for the closed regime follow from integrating
//! `tau exp(s tau^2)` and `tau^2 exp(s tau^2)` by parts:
//!
//! ```text
//! I1 = (lam_q - lam_p) s / (2 nv^2) - (rho / nv) I0
//! I2 = [ (tau_b lam_q - tau_a lam_p - nv I0) s/2 - rho s (lam_q - lam_p)
//!        + rho^2 nv I0 ] / nv^3
//! ```

use crate::special::{dawson, erf, erfcx};

/// Below this relative speed a piece is treated as motionless.
pub(crate) const DEGENERATE_SPEED: f64 = 1e-9;
/// Switch to the midpoint series when the closed form would cancel.
const SERIES_THRESHOLD: f64 = 1e-3;

const SQRT_PI_OVER_2: f64 = 0.8862269254527580;

#[derive(Debug, Clone, Copy)]
pub(crate) struct PieceMoments {
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for k in 0..a.len() {
        acc += a[k] * b[k];
    }
    acc
}

/// Cumulative hazard over one piece. `sign` is the state as a float (+-1).
pub(crate) fn piece_integral(sign: f64, bias: f64, dx: &[f64], dv: &[f64], len: f64) -> f64 {
    piece_kernel(sign, bias, dx, dv, len, false).i0
}

/// Cumulative hazard plus its first and second raw moments in `u`.
pub(crate) fn piece_moments(
    sign: f64,
    bias: f64,
    dx: &[f64],
    dv: &[f64],
    len: f64,
) -> PieceMoments {
    piece_kernel(sign, bias, dx, dv, len, true)
}

fn piece_kernel(
    sign: f64,
    bias: f64,
    dx: &[f64],
    dv: &[f64],
    len: f64,
    want_moments: bool,
) -> PieceMoments {
    debug_assert!(sign == 1.0 || sign == -1.0);
    debug_assert!(len >= 0.0);
    let dx2 = dot(dx, dx);
    let nv2 = dot(dv, dv);
    let nv = nv2.sqrt();

    if nv <= DEGENERATE_SPEED {
        let mid2 = dx2 + len * dot(dx, dv) + 0.25 * len * len * nv2;
        let lam = (bias + sign * mid2).exp();
        return PieceMoments {
            i0: lam * len,
            i1: lam * len * len * 0.5,
            i2: lam * len * len * len / 3.0,
        };
    }

    let rho = dot(dx, dv) / nv;
    let q2 = (dx2 - rho * rho).max(0.0); // Cauchy-Schwarz up to roundoff
    let c = bias + sign * q2;
    let theta = nv * len;
    let tau_a = rho;
    let tau_b = rho + theta;
    let tau_m = rho + 0.5 * theta;
    let phi = (tau_m.abs() * theta).max(0.25 * theta * theta);

    if phi <= SERIES_THRESHOLD {
        return series_moments(sign, c, nv, nv2, tau_m, len, want_moments);
    }

    let lam_p = (c + sign * tau_a * tau_a).exp();
    let lam_q = (c + sign * tau_b * tau_b).exp();
    let i0 = if sign > 0.0 {
        (lam_q * dawson(tau_b) - lam_p * dawson(tau_a)) / nv
    } else if tau_a >= 0.0 {
        SQRT_PI_OVER_2 / nv * (lam_p * erfcx(tau_a) - lam_q * erfcx(tau_b))
    } else if tau_b <= 0.0 {
        SQRT_PI_OVER_2 / nv * (lam_q * erfcx(-tau_b) - lam_p * erfcx(-tau_a))
    } else {
        // The interval straddles zero: erf terms have opposite signs, so the
        // plain difference is addition and cannot cancel.  C <= bias here
        // (sign = -1, q2 >= 0), hence exp(c) cannot overflow by itself.
        SQRT_PI_OVER_2 / nv * c.exp() * (erf(tau_b) - erf(tau_a))
    };
    if !want_moments {
        return PieceMoments { i0, i1: 0.0, i2: 0.0 };
    }
    let dlam = lam_q - lam_p;
    let i1 = 0.5 * sign * dlam / nv2 - rho / nv * i0;
    let i2 = ((tau_b * lam_q - tau_a * lam_p - nv * i0) * 0.5 * sign - rho * sign * dlam
        + rho * rho * nv * i0)
        / (nv2 * nv);
    PieceMoments { i0, i1, i2 }
}

/// Midpoint expansion for nearly-uniform pieces.  With `z = u - len/2` in
/// `[-h, h]`, the integrand is `lam_mid exp(a z + b z^2)`; expanding into
/// even coefficients `c0..c6` and odd `d1..d5` gives the three moments by
/// termwise integration of polynomials.
fn series_moments(
    sign: f64,
    c: f64,
    nv: f64,
    nv2: f64,
    tau_m: f64,
    len: f64,
    want_moments: bool,
) -> PieceMoments {
    let lam_m = (c + sign * tau_m * tau_m).exp();
    let a = 2.0 * sign * tau_m * nv;
    let b = sign * nv2;
    let h = 0.5 * len;
    let h2 = h * h;
    let a2 = a * a;
    let b2 = b * b;

    let c0 = 1.0;
    let c2 = b + 0.5 * a2;
    let c4 = 0.5 * b2 + 0.5 * a2 * b + a2 * a2 / 24.0;
    let c6 = b * b2 / 6.0 + 0.25 * a2 * b2 + a2 * a2 * b / 24.0 + a2 * a2 * a2 / 720.0;

    let even = 2.0 * h * (c0 + h2 * (c2 / 3.0 + h2 * (c4 / 5.0 + h2 * c6 / 7.0)));
    let i0 = lam_m * even;
    if !want_moments {
        return PieceMoments { i0, i1: 0.0, i2: 0.0 };
    }

    let d1 = a;
    let d3 = a * b + a * a2 / 6.0;
    let d5 = 0.5 * a * b2 + a * a2 * b / 6.0 + a * a2 * a2 / 120.0;

    // int z g dz / lam_m and int z^2 g dz / lam_m over [-h, h].
    let odd = 2.0 * h2 * h * (d1 / 3.0 + h2 * (d3 / 5.0 + h2 * d5 / 7.0));
    let zsq = 2.0 * h2 * h * (c0 / 3.0 + h2 * (c2 / 5.0 + h2 * (c4 / 7.0 + h2 * c6 / 9.0)));

    let i1 = lam_m * odd + h * i0;
    let i2 = lam_m * zsq + 2.0 * h * lam_m * odd + h2 * i0;
    PieceMoments { i0, i1, i2 }
}
