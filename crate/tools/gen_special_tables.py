#!/usr/bin/env python3
"""Generate Chebyshev coefficient tables for the mid-range branches of
erfcx(x) and dawson(x), and emit them as Rust source.

Strategy (mirrors src/special/mod.rs):

* erfcx, 0 <= x <= 12: fit F(x) = (1 + 2x/sqrt(pi)) * erfcx(x) as a
  Chebyshev series in y = 4/(4+x). F is bounded in [2/pi, 1], so absolute
  fit error translates directly into relative error of erfcx.
* dawson, 1 <= x <= 12: fit H(x) = 2x * dawson(x) in the same y variable.
  H stays within [1.0, 1.2] on this range.

The rational map y = 4/(4+x) (used by the Faddeeva package for the same
purpose) gives fast Chebyshev convergence; intervals are subdivided
automatically until the float64-rounded series evaluates within the target
relative error against mpmath at 40 significant digits.

Run from the repository root:

    python3 tools/gen_special_tables.py > crates/seqsurv/src/special/tables.rs
"""

import sys

from mpmath import mp, mpf

mp.dps = 40

SQRT_PI = mp.sqrt(mp.pi)

# Maximum relative error of the assembled f64 evaluation against mpmath,
# measured on a dense grid. The library-wide accuracy contract is 1e-13;
# the tables themselves must sit well below that.
F64_TARGET = 5.0e-15
# Fit target in exact arithmetic, before coefficients are rounded to f64.
MP_TARGET = mpf("1e-18")
MAX_DEGREE = 56


def erfcx_mp(x):
    return mp.exp(x * x) * mp.erfc(x)


def dawson_mp(x):
    # D(x) = sqrt(pi)/2 * exp(-x^2) * erfi(x)
    return SQRT_PI / 2 * mp.exp(-x * x) * mp.erfi(x)


def f_target(y):
    """F(y) for erfcx: bounded, smooth on y in (0, 1]."""
    x = 4 * (1 - y) / y
    return (1 + 2 * x / SQRT_PI) * erfcx_mp(x)


def h_target(y):
    """H(y) for dawson."""
    x = 4 * (1 - y) / y
    return 2 * x * dawson_mp(x)


def cheb_fit(f, a, b, n):
    """Chebyshev interpolation coefficients (n terms) on [a, b]."""
    nodes = [mp.cos(mp.pi * (2 * k + 1) / (2 * n)) for k in range(n)]
    vals = [f((a + b) / 2 + (b - a) / 2 * u) for u in nodes]
    coefs = []
    for j in range(n):
        cj = mpf(2) / n * mp.fsum(
            vals[k] * mp.cos(mp.pi * j * (2 * k + 1) / (2 * n)) for k in range(n)
        )
        coefs.append(cj)
    coefs[0] /= 2
    return coefs


def clenshaw_f64(coefs, a, b, x):
    """Evaluate the series in plain float64, as the Rust code will."""
    u = (2.0 * float(x) - float(a) - float(b)) / (float(b) - float(a))
    u2 = 2.0 * u
    b1 = 0.0
    b2 = 0.0
    for c in reversed(coefs[1:]):
        b1, b2 = float(c) + u2 * b1 - b2, b1
    return float(coefs[0]) + u * b1 - b2


def clenshaw_mp(coefs, a, b, x):
    u = (2 * x - a - b) / (b - a)
    u2 = 2 * u
    b1 = mpf(0)
    b2 = mpf(0)
    for c in reversed(coefs[1:]):
        b1, b2 = c + u2 * b1 - b2, b1
    return coefs[0] + u * b1 - b2


def fit_interval(f, a, b):
    """Find the smallest coefficient count meeting MP_TARGET on [a, b]."""
    probe = [a + (b - a) * mpf(k) / 400 for k in range(401)]
    for n in range(8, MAX_DEGREE + 1, 4):
        coefs = cheb_fit(f, a, b, n)
        err = max(
            abs(clenshaw_mp(coefs, a, b, y) - f(y)) / abs(f(y)) for y in probe
        )
        if err < MP_TARGET:
            # Drop negligible trailing terms.
            while len(coefs) > 8 and abs(coefs[-1]) < mpf("1e-19"):
                coefs.pop()
            return coefs
    return None


def fit_piecewise(f, a, b):
    """Fit on [a, b], subdividing until every piece meets MP_TARGET."""
    pieces = []
    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        coefs = fit_interval(f, lo, hi)
        if coefs is None:
            mid = (lo + hi) / 2
            stack.append((mid, hi))
            stack.append((lo, mid))
        else:
            pieces.append((lo, hi, coefs))
    pieces.sort(key=lambda p: p[0])
    return pieces


def verify(name, pieces, f_exact, xs):
    """Check the f64-rounded evaluation of the assembled pieces."""
    worst = 0.0
    for x in xs:
        y = 4 / (4 + x)
        for lo, hi, coefs in pieces:
            if lo <= y <= hi or (y > hi and hi == pieces[-1][1]):
                pass
        piece = None
        for lo, hi, coefs in pieces:
            if y <= hi:
                piece = (lo, hi, coefs)
                break
        if piece is None:
            piece = pieces[-1]
        lo, hi, coefs = piece
        approx = clenshaw_f64(coefs, lo, hi, y)
        exact = f_exact(y)
        rel = abs(mpf(approx) - exact) / abs(exact)
        worst = max(worst, float(rel))
    print(f"// {name}: max rel err of f64-rounded series = {worst:.3e}", file=sys.stderr)
    if worst > F64_TARGET:
        raise SystemExit(f"{name}: fit misses the f64 target ({worst:.3e})")


def emit(name, pieces):
    print(f"pub(super) static {name}: &[ChebInterval] = &[")
    for lo, hi, coefs in pieces:
        print("    ChebInterval {")
        print(f"        y_lo: {float(lo)!r},")
        print(f"        y_hi: {float(hi)!r},")
        print("        coefs: &[")
        for c in coefs:
            print(f"            {float(c)!r},")
        print("        ],")
        print("    },")
    print("];")
    print()


def main():
    erfcx_pieces = fit_piecewise(f_target, mpf("0.25"), mpf(1))
    dawson_pieces = fit_piecewise(h_target, mpf("0.25"), mpf("0.8"))

    # Validation grids in x-space (dense plus endpoints).
    xs_erfcx = [mpf(k) / 200 * 12 for k in range(201)]
    xs_dawson = [1 + mpf(k) / 200 * 11 for k in range(201)]
    verify("ERFCX", erfcx_pieces, f_target, xs_erfcx)
    verify("DAWSON", dawson_pieces, h_target, xs_dawson)

    print("// Chebyshev tables for the mid-range branches of erfcx and dawson.")
    print("// Generated by tools/gen_special_tables.py — do not edit by hand.")
    print("//")
    print("// Series variable: y = 4/(4+x). Coefficients are Chebyshev-T on")
    print("// [y_lo, y_hi], evaluated by Clenshaw recurrence in f64.")
    print()
    print("pub(super) struct ChebInterval {")
    print("    pub y_lo: f64,")
    print("    pub y_hi: f64,")
    print("    pub coefs: &'static [f64],")
    print("}")
    print()
    emit("ERFCX_CHEB", erfcx_pieces)
    emit("DAWSON_CHEB", dawson_pieces)
    n_erfcx = sum(len(c) for _, _, c in erfcx_pieces)
    n_dawson = sum(len(c) for _, _, c in dawson_pieces)
    print(
        f"// {len(erfcx_pieces)} erfcx interval(s), {n_erfcx} coefficients; "
        f"{len(dawson_pieces)} dawson interval(s), {n_dawson} coefficients.",
    )


if __name__ == "__main__":
    main()
