#!/usr/bin/env python3
"""Generate the frozen oracle table for erf / erfcx / dawson.

Reference values come from mpmath at 40 significant digits, rounded to the
nearest f64. Points are drawn from a fixed-seed RNG so the table is
reproducible; per-function there are 10_000 points with |x| <= 6 (checked at
1e-12 relative) plus extended-range points (checked at 1e-10 relative).

Run from the repository root:

    python3 tools/gen_special_oracle.py > crates/seqsurv/tests/data/special_oracle.csv
"""

import numpy as np
from mpmath import mp

mp.dps = 40

SQRT_PI = mp.sqrt(mp.pi)
CORE_RTOL = "1e-12"
EXT_RTOL = "1e-10"


def erf_mp(x):
    return mp.erf(x)


def erfcx_mp(x):
    return mp.exp(mp.mpf(x) ** 2) * mp.erfc(x)


def dawson_mp(x):
    x = mp.mpf(x)
    return SQRT_PI / 2 * mp.exp(-x * x) * mp.erfi(x)


def log_uniform(rng, lo, hi, size, signed=True):
    mags = np.exp(rng.uniform(np.log(lo), np.log(hi), size))
    if signed:
        mags *= rng.choice([-1.0, 1.0], size)
    return mags


def core_points(rng, negative_ok=True):
    """10_000 points with |x| <= 6: uniform bulk, switch-region and
    tiny-magnitude refinement."""
    pts = [
        rng.uniform(-6.0 if negative_ok else 0.0, 6.0, 5000),
        rng.uniform(0.5, 1.5, 1500) * rng.choice([-1.0, 1.0], 1500)
        if negative_ok
        else rng.uniform(0.5, 1.5, 1500),
        log_uniform(rng, 1e-300, 1e-1, 2000, signed=negative_ok),
        rng.uniform(5.5, 6.0, 750) * (rng.choice([-1.0, 1.0], 750) if negative_ok else 1.0),
        rng.uniform(-0.2, 0.2, 750),
    ]
    x = np.concatenate(pts)
    assert x.size == 10_000
    return x


def main():
    rng = np.random.RandomState(20260817)
    rows = []

    for name, fn, neg_lo in (
        ("erf", erf_mp, -60.0),
        ("erfcx", erfcx_mp, -26.0),
        ("dawson", dawson_mp, -1e8),
    ):
        for x in core_points(rng):
            rows.append((name, float(x), fn(float(x)), CORE_RTOL))
        # Extended range: 6 < |x|, staying clear of erfcx's negative-side
        # overflow (x < -26.64 overflows f64).
        ext = np.concatenate(
            [
                rng.uniform(6.0, 26.0, 500) * rng.choice([-1.0, 1.0], 500),
                log_uniform(rng, 26.0, 1e8, 500, signed=False),
                -log_uniform(rng, 6.0, -neg_lo, 500, signed=False),
            ]
        )
        for x in ext:
            rows.append((name, float(x), fn(float(x)), EXT_RTOL))

    print("function,x,expected,rtol")
    for name, x, val, rtol in rows:
        print(f"{name},{x!r},{float(val)!r},{rtol}")


if __name__ == "__main__":
    main()
