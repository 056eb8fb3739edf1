"""Inner numerical kernels for the belief/policy hot loop.

Everything here is exact double-precision arithmetic with a fixed
summation order, so results are reproducible run to run.  Numba supplies
the fast path; setting INFOTAXIS_DISABLE_NUMBA=1 (or a missing numba)
falls back to vectorized numpy versions of the same math.

The central quantity is the family of weighted power sums over source
hypotheses used by the expected-entropy evaluation.  For a candidate
sensing position with per-hypothesis expected counts w = R*dt:

    u_k = p * exp(-w) * w^k          (unnormalized posterior after k hits)
    Z_k = sum u_k
    A_k = sum u_k * (ln p - w)
    B_k = sum u_k * ln w

from which the posterior entropy is S_k = ln Z_k - (A_k + k*B_k) / Z_k.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = bool(os.environ.get("INFOTAXIS_DISABLE_NUMBA"))
try:
    if _DISABLED:
        raise ImportError("numba disabled by environment")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag
    HAVE_NUMBA = False


def _poisson_kmax_impl(h, theta):
    """Smallest K with cumulative Poisson(h) mass over k<=K reaching theta."""
    if h <= 0.0:
        return 0
    cap = int(h + 12.0 * math.sqrt(h) + 60.0)
    r = math.exp(-h)
    if r > 0.0:
        cum = r
        k = 0
        while cum < theta and k < cap:
            k += 1
            r *= h / k
            cum += r
        return k
    # extreme means underflow exp(-h); accumulate terms in log space
    cum = 0.0
    lh = math.log(h)
    for k in range(cap + 1):
        cum += math.exp(k * lh - h - math.lgamma(k + 1.0))
        if cum >= theta:
            return k
    return cap


def _poisson_pmf_impl(h, kmax, out):
    """Fill out[0..kmax] with Poisson(h) probabilities."""
    if h <= 0.0:
        for k in range(kmax + 1):
            out[k] = 0.0
        out[0] = 1.0
        return
    r = math.exp(-h)
    if r > 0.0:
        out[0] = r
        for k in range(1, kmax + 1):
            r *= h / k
            out[k] = r
    else:
        lh = math.log(h)
        for k in range(kmax + 1):
            out[k] = math.exp(k * lh - h - math.lgamma(k + 1.0))


def _entropy_numba(p, lnp):
    # Kahan-compensated sum of p*ln(p); lnp is finite everywhere by contract
    s = 0.0
    comp = 0.0
    h, w = p.shape
    for i in range(h):
        for j in range(w):
            term = p[i, j] * lnp[i, j]
            y = term - comp
            t = s + y
            comp = (t - s) - y
            s = t
    return -s


def _entropy_numpy(p, lnp):
    return -float(np.einsum("ij,ij->", p, lnp))


def _move_stats_numba(p, lnp, et, wt, lt, oy, ox, kmax, Z, A, B):
    h, w = p.shape
    U = np.empty((h, w))
    Ww = np.empty((h, w))
    Cc = np.empty((h, w))
    Bb = np.empty((h, w))
    z0 = 0.0
    a0 = 0.0
    b0 = 0.0
    for i in range(h):
        for j in range(w):
            wij = wt[oy + i, ox + j]
            u = p[i, j] * et[oy + i, ox + j]
            c = lnp[i, j] - wij
            b = lt[oy + i, ox + j]
            U[i, j] = u
            Ww[i, j] = wij
            Cc[i, j] = c
            Bb[i, j] = b
            z0 += u
            a0 += u * c
            b0 += u * b
    Z[0] = z0
    A[0] = a0
    B[0] = b0
    for k in range(1, kmax + 1):
        zk = 0.0
        ak = 0.0
        bk = 0.0
        for i in range(h):
            for j in range(w):
                u = U[i, j] * Ww[i, j]
                U[i, j] = u
                zk += u
                ak += u * Cc[i, j]
                bk += u * Bb[i, j]
        Z[k] = zk
        A[k] = ak
        B[k] = bk


def _move_stats_numpy(p, lnp, et, wt, lt, oy, ox, kmax, Z, A, B):
    h, w = p.shape
    Ww = wt[oy:oy + h, ox:ox + w]
    U = p * et[oy:oy + h, ox:ox + w]
    Cc = lnp - Ww
    Bb = lt[oy:oy + h, ox:ox + w]
    Z[0] = U.sum()
    A[0] = np.einsum("ij,ij->", U, Cc)
    B[0] = np.einsum("ij,ij->", U, Bb)
    for k in range(1, kmax + 1):
        U = U * Ww
        Z[k] = U.sum()
        A[k] = np.einsum("ij,ij->", U, Cc)
        B[k] = np.einsum("ij,ij->", U, Bb)


if HAVE_NUMBA:
    poisson_kmax = njit(cache=True)(_poisson_kmax_impl)
    poisson_pmf = njit(cache=True)(_poisson_pmf_impl)
    entropy_neg_plogp = njit(cache=True)(_entropy_numba)
    move_stats = njit(cache=True, fastmath=True)(_move_stats_numba)
else:
    poisson_kmax = _poisson_kmax_impl
    poisson_pmf = _poisson_pmf_impl
    entropy_neg_plogp = _entropy_numpy
    move_stats = _move_stats_numpy
