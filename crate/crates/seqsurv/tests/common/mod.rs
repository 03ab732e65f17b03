//! Independent numerical oracles shared by the integration suites.
//!
//! Nothing in here reuses the library's own integration or statistics code:
//! the whole point is to cross-check the crate against textbook methods
//! (adaptive Gauss-Kronrod quadrature, the Kolmogorov-Smirnov test, and the
//! closed-form flip-count law of an alternating renewal process).
#![allow(dead_code)]

/// 15-point Kronrod abscissae on [-1, 1] (non-negative half; symmetric).
/// Standard QUADPACK constants.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_7,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// 7-point Gauss weights for the odd-indexed abscissae of `XGK`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7-15 panel over `[a, b]`: returns the K15 estimate and
/// the |K15 - G7| error gauge.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = WGK[7] * f(mid);
    let mut gauss = WG[3] * f(mid);
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(mid - dx) + f(mid + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * half, (kron - gauss).abs() * half)
}

/// Adaptive quadrature of `f` over `[a, b]` by recursive panel bisection,
/// refining until each panel's Gauss/Kronrod discrepancy is below
/// `rel_tol` relative to the running total (with a tiny absolute floor).
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        err: f64,
        scale: f64,
        rel_tol: f64,
        depth: usize,
    ) -> f64 {
        if depth == 0 || err <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            return whole;
        }
        let mid = 0.5 * (a + b);
        let (left, el) = gk15(f, a, mid);
        let (right, er) = gk15(f, mid, b);
        let scale = scale.max(left.abs() + right.abs());
        recurse(f, a, mid, left, el, scale, rel_tol, depth - 1)
            + recurse(f, mid, b, right, er, scale, rel_tol, depth - 1)
    }
    let (whole, err) = gk15(f, a, b);
    recurse(f, a, b, whole, err, whole.abs(), rel_tol, 52)
}

/// Two-sided Kolmogorov-Smirnov statistic `D_n` of a sample against a
/// continuous CDF. `sample` need not be sorted.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("sample values must be comparable"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let u = cdf(x);
        d = d.max((i + 1) as f64 / n - u).max(u - i as f64 / n);
    }
    d
}

/// Asymptotic two-sided KS p-value via the Kolmogorov distribution
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)` with the
/// Stephens small-sample correction on `lambda`.
pub fn ks_p_value(n: usize, d: f64) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    // The alternating series only converges quickly for moderate lambda;
    // below 0.2 the p-value is 1 to within ~5e-13 (dual theta series).
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Flip-count law of an alternating renewal process that starts in the gap
/// state: holding times are exponential with rate `rate_gap` in the gap
/// state and `rate_link` in the linked state. Returns `P(M = m)` for
/// `m = 0, 1, 2` flips within `[0, horizon]`, by the closed forms obtained
/// from integrating the holding-time densities directly.
pub fn renewal_flip_pmf(rate_gap: f64, rate_link: f64, horizon: f64) -> [f64; 3] {
    let (a, b, t) = (rate_gap, rate_link, horizon);
    assert!(a > 0.0 && b > 0.0 && t > 0.0 && a != b);
    let p0 = (-a * t).exp();
    let p1 = a * (-b * t).exp() * (1.0 - (-(a - b) * t).exp()) / (a - b);
    let p2 = a * b * (-a * t).exp() / (b - a) * (t - (1.0 - (-(b - a) * t).exp()) / (b - a));
    [p0, p1, p2]
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn quadrature_reproduces_elementary_integrals() {
        let got = adaptive_quadrature(&|x: f64| x.cos(), 0.0, 1.0, 1e-13);
        assert!((got - 1.0f64.sin()).abs() < 1e-13);
        // A sharp peak: int_0^1 exp(-1000 (x - 0.3)^2) dx ~ sqrt(pi/1000).
        let got = adaptive_quadrature(&|x: f64| (-1000.0 * (x - 0.3_f64).powi(2)).exp(), 0.0, 1.0, 1e-13);
        let wolfram = 0.056_049_912_163_979_29; // erf-based closed form
        assert!((got - wolfram).abs() / wolfram < 1e-12);
    }

    #[test]
    fn ks_of_the_exact_cdf_grid_is_tiny_and_pvalue_endpoints_make_sense() {
        // Sample = exact quantiles of U(0,1) -> D_n = 1/(2n) after the grid
        // offset; p-value should be ~1.
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&sample, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert!(ks_p_value(n, d) > 0.999999);
        // A grossly wrong CDF gives p ~ 0.
        let d = ks_statistic(&sample, |x| (x * x * x).clamp(0.0, 1.0));
        assert!(ks_p_value(n, d) < 1e-12);
    }

    #[test]
    fn flip_pmf_sums_below_one_and_matches_reference_point() {
        let [p0, p1, p2] = renewal_flip_pmf(1.3, 0.7, 2.0);
        assert!((p0 - 0.074_273_578_214_333_88).abs() < 1e-15);
        assert!((p1 - 0.373_367_335_742_423_96).abs() < 1e-12);
        assert!((p2 - 0.210_298_704_449_348_5).abs() < 1e-12);
        assert!(p0 + p1 + p2 < 1.0);
    }
}
