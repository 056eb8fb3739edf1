#!/usr/bin/env python3
"""Regenerate the Chebyshev coefficients frozen in infotaxis.bessel.

The large-argument branch of K0 is evaluated as

    K0(x) = exp(-x) / sqrt(x) * C(t),   t = 4/x - 1  in (-1, 1]  for x >= 2,

where C is a Chebyshev expansion fitted here against arbitrary-precision
values from mpmath.  Run this script and paste the printed table into
bessel.py if the coefficient count or fit domain ever needs to change.
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 60

M = 44  # nodes / coefficients before trimming


def f(t):
    # target: exp(x) * sqrt(x) * K0(x) on the mapped interval
    x = 4 / (t + 1)
    return mp.besselk(0, x) * mp.exp(x) * mp.sqrt(x)


def chebyshev_fit():
    nodes = [mp.cos(mp.pi * (i + mp.mpf(1) / 2) / M) for i in range(M)]
    vals = [f(t) for t in nodes]
    coeffs = []
    for j in range(M):
        acc = mp.mpf(0)
        for i in range(M):
            acc += vals[i] * mp.cos(mp.pi * j * (i + mp.mpf(1) / 2) / M)
        coeffs.append(2 * acc / M)
    return coeffs


def clenshaw(t, c):
    b1 = b2 = 0.0
    for cj in c[:0:-1]:
        b1, b2 = 2.0 * t * b1 - b2 + cj, b1
    return t * b1 - b2 + 0.5 * c[0]


def k0_series(x):
    # power series with log term, double precision (x <= 2)
    q = x * x / 4.0
    term = 1.0
    psi = -0.57721566490153286061
    log_half = np.log(2.0 / x)
    acc = psi + log_half
    for k in range(1, 32):
        term *= q / (k * k)
        psi += 1.0 / k
        acc += term * (psi + log_half)
    return acc


def main():
    coeffs = chebyshev_fit()
    trimmed = [float(c) for c in coeffs]
    while abs(trimmed[-1]) < 1e-19:
        trimmed.pop()
    print(f"# {len(trimmed)} coefficients, t = 4/x - 1, x in [2, inf)")
    for c in trimmed:
        print(f"    {c!r},")

    # validate the double-precision evaluation against mpmath
    worst = 0.0
    for x in np.geomspace(1e-3, 700.0, 4000):
        if x <= 2.0:
            approx = k0_series(x)
        else:
            approx = clenshaw(4.0 / x - 1.0, trimmed) * np.exp(-x) / np.sqrt(x)
        exact = mp.besselk(0, x)
        if exact != 0:
            rel = abs((mp.mpf(approx) - exact) / exact)
            worst = max(worst, float(rel))
    print(f"# max relative error on [1e-3, 700], 4000 log-spaced points: {worst:.3e}")


if __name__ == "__main__":
    main()
