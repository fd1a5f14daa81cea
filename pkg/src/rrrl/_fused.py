"""Compiled single-pass kernels for the RRRL update of one 2-D plane.

The numpy formulation in :mod:`rrrl.solvers` and :mod:`rrrl.stencil` walks
the image a dozen times per step and allocates a fresh array for most of
those walks. These loops compute the same quantities in two sweeps. They
are used only when numba is importable; ``AVAILABLE`` says whether it is.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

AVAILABLE = njit is not None

#: Smoothness penaliser codes understood by :func:`rrrl_combine`.
PSI_CODES = {"whittaker-tikhonov": 0, "total-variation": 1, "perona-malik": 2}


def _data_weights(hu, f, q, eps, identity):
    """Return ``(w, w * q)`` with ``w = Phi'(r_f(hu))``."""
    h, wd = hu.shape
    w = np.empty((h, wd))
    wq = np.empty((h, wd))
    for i in range(h):
        for j in range(wd):
            if identity:
                wij = 1.0
            else:
                f0 = f[i, j]
                t = hu[i, j] / f0
                r = f0 * ((t - 1.0) - math.log(t))
                if r < 0.0:
                    r = 0.0
                wij = 0.5 / math.sqrt(r + eps)
            w[i, j] = wij
            wq[i, j] = wij * q[i, j]
    return w, wq


def _psi_weight(s2, code, param):
    if code == 0:
        return 1.0
    if code == 1:
        return 0.5 / math.sqrt(s2 + param)
    return 1.0 / (1.0 + s2 * param)


def _rrrl_combine(u, num, den, alpha, code, param):
    """Return ``(num + alpha [D]_+) / (den - alpha [D]_-) * u`` and the smallest denominator.

    ``D`` is the flux divergence of ``Psi'(|grad u|^2) grad u`` on the
    reflecting half-point stencil; ``param`` is ``eps**2`` for total
    variation and ``1 / lam**2`` for Perona-Malik.
    """
    h, wd = u.shape
    g = np.empty((h, wd))
    for i in range(h):
        for j in range(wd):
            c = u[i, j]
            s = 0.0
            if i > 0:
                d = c - u[i - 1, j]
                s += 0.5 * (d * d)
            if i < h - 1:
                d = u[i + 1, j] - c
                s += 0.5 * (d * d)
            if j > 0:
                d = c - u[i, j - 1]
                s += 0.5 * (d * d)
            if j < wd - 1:
                d = u[i, j + 1] - c
                s += 0.5 * (d * d)
            g[i, j] = _psi_weight(s, code, param)
    out = np.empty((h, wd))
    low = np.inf
    for i in range(h):
        for j in range(wd):
            c = u[i, j]
            gc = g[i, j]
            dv = 0.0
            if i < h - 1:
                dv += 0.5 * (gc + g[i + 1, j]) * (u[i + 1, j] - c)
            if i > 0:
                dv -= 0.5 * (g[i - 1, j] + gc) * (c - u[i - 1, j])
            if j < wd - 1:
                dv += 0.5 * (gc + g[i, j + 1]) * (u[i, j + 1] - c)
            if j > 0:
                dv -= 0.5 * (g[i, j - 1] + gc) * (c - u[i, j - 1])
            ad = alpha * dv
            n0 = num[i, j]
            d0 = den[i, j]
            if ad > 0.0:
                n0 += ad
            else:
                d0 -= ad
            if d0 < low:
                low = d0
            out[i, j] = n0 / d0 * c
    return out, low


if AVAILABLE:
    _psi_weight = njit(cache=True, inline="always")(_psi_weight)
    data_weights = njit(cache=True)(_data_weights)
    rrrl_combine = njit(cache=True)(_rrrl_combine)
else:  # pragma: no cover
    data_weights = rrrl_combine = None


def psi_param(p) -> float:
    """Scalar parameter of ``p`` in the form :func:`rrrl_combine` expects."""
    if p.kind == "total-variation":
        return p.eps**2
    if p.kind == "perona-malik":
        return 1.0 / p.lam**2
    return 0.0
