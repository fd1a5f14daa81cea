"""Brute-force reference implementations used by the tests.

Everything here is written with explicit Python loops over pixels and kernel
taps, independently of the vectorised code paths in the package.
"""

import math

import mpmath
import numpy as np


def reflect_index(i, n):
    """Half-sample symmetric extension: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ..."""
    while i < 0 or i >= n:
        if i < 0:
            i = -1 - i
        if i >= n:
            i = 2 * n - 1 - i
    return i


def cyclic_index(i, n):
    return i % n


def _idx(mode):
    return cyclic_index if mode == "cyclic" else reflect_index


def blur_matrix(h, w, kernel, mode):
    """Dense matrix A with (A u)[x] = sum_z k(z) u[m(x - z)] on the flattened grid."""
    idx = _idx(mode)
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    A = np.zeros((h * w, h * w))
    for y in range(h):
        for x in range(w):
            for i in range(kh):
                for j in range(kw):
                    sy = idx(y - (i - ry), h)
                    sx = idx(x - (j - rx), w)
                    A[y * w + x, sy * w + sx] += kernel[i, j]
    return A


def direct_convolve(u, kernel, mode):
    """Quadruple-loop direct sum, channel by channel."""
    idx = _idx(mode)
    u = np.asarray(u, dtype=float)
    u3 = u[:, :, None] if u.ndim == 2 else u
    h, w, c = u3.shape
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros_like(u3)
    for ch in range(c):
        for y in range(h):
            for x in range(w):
                s = 0.0
                for i in range(kh):
                    for j in range(kw):
                        s += kernel[i, j] * u3[idx(y - (i - ry), h), idx(x - (j - rx), w), ch]
                out[y, x, ch] = s
    return out.reshape(u.shape)


def direct_adjoint(v, kernel, mode):
    """Scatter form of the transpose: every tap sends its weight back to its source pixel."""
    idx = _idx(mode)
    v = np.asarray(v, dtype=float)
    v3 = v[:, :, None] if v.ndim == 2 else v
    h, w, c = v3.shape
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    out = np.zeros_like(v3)
    for ch in range(c):
        for y in range(h):
            for x in range(w):
                for i in range(kh):
                    for j in range(kw):
                        sy = idx(y - (i - ry), h)
                        sx = idx(x - (j - rx), w)
                        out[sy, sx, ch] += kernel[i, j] * v3[y, x, ch]
    return out.reshape(v.shape)


def psi_prime_scalar(s2, kind, lam=15.0, eps=1e-3):
    if kind == "whittaker-tikhonov":
        return 1.0
    if kind == "total-variation":
        return 1.0 / (2.0 * math.sqrt(s2 + eps * eps))
    return 1.0 / (1.0 + s2 / (lam * lam))


def direct_s2(u2):
    """Per-pixel mean of squared one-sided differences, summed over both axes."""
    h, w = u2.shape
    s2 = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w:
                    acc += 0.5 * (u2[yy, xx] - u2[y, x]) ** 2
            s2[y, x] = acc
    return s2


def direct_divergence(u, kind, coupled=True, **kw):
    """Assemble div(g grad u) flux by flux from the half-point stencil."""
    u = np.asarray(u, dtype=float)
    u3 = u[:, :, None] if u.ndim == 2 else u
    h, w, c = u3.shape
    s2 = [direct_s2(u3[:, :, ch]) for ch in range(c)]
    if coupled:
        G = sum(s2)
        g = [np.vectorize(lambda s: psi_prime_scalar(s, kind, **kw))(G)] * c
    else:
        g = [np.vectorize(lambda s: psi_prime_scalar(s, kind, **kw))(s) for s in s2]
    out = np.zeros_like(u3)
    for ch in range(c):
        uc, gc = u3[:, :, ch], g[ch]
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        acc += 0.5 * (gc[y, x] + gc[yy, xx]) * (uc[yy, xx] - uc[y, x])
                out[y, x, ch] = acc
    return out.reshape(u.shape)


def rf_scalar(w, f):
    """Evaluated at 40 digits so cancellation near ``w = f`` does not leak into comparisons."""
    with mpmath.workdps(40):
        w, f = mpmath.mpf(float(w)), mpmath.mpf(float(f))
        return float(w - f - f * mpmath.log(w / f))


def phi_prime_scalar(s, eps):
    """Robust-sqrt weight; ``eps=None`` means the identity penaliser."""
    return 1.0 if eps is None else 1.0 / (2.0 * math.sqrt(s + eps))


def composed_rrrl_step(u, f, kernel, mode, alpha, phi_eps, psi_kind, psi_kw=None,
                       coupled=True, denominator_one=False, scale=1.0):
    """RRRL update assembled from the loop oracles above.

    ``phi_eps=None`` gives identity Phi; ``denominator_one`` replaces
    ``H* Phi'`` by 1 (regularised RL). ``scale`` multiplies the arguments of
    Phi' and Psi' (used for replicated-channel checks).
    """
    psi_kw = psi_kw or {}
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    u3 = u[:, :, None] if u.ndim == 2 else u
    f3 = f[:, :, None] if f.ndim == 2 else f
    h, w, c = u3.shape
    hu = direct_convolve(u3, kernel, mode)
    R = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            R[y, x] = sum(rf_scalar(hu[y, x, ch], f3[y, x, ch]) for ch in range(c))
    wgt = np.vectorize(lambda s: phi_prime_scalar(scale * s, phi_eps))(R)
    num = np.stack([direct_adjoint(wgt * f3[:, :, ch] / hu[:, :, ch], kernel, mode) for ch in range(c)], axis=2)
    den = np.ones((h, w)) if denominator_one else direct_adjoint(wgt, kernel, mode)
    if alpha > 0:
        if scale != 1.0:
            s2 = sum(direct_s2(u3[:, :, ch]) for ch in range(c))
            g = np.vectorize(lambda s: psi_prime_scalar(scale * s, psi_kind, **psi_kw))(s2)
            D = np.zeros_like(u3)
            for ch in range(c):
                uc = u3[:, :, ch]
                for y in range(h):
                    for x in range(w):
                        acc = 0.0
                        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                            yy, xx = y + dy, x + dx
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += 0.5 * (g[y, x] + g[yy, xx]) * (uc[yy, xx] - uc[y, x])
                        D[y, x, ch] = acc
        else:
            D = direct_divergence(u3, psi_kind, coupled=coupled, **psi_kw)
    else:
        D = np.zeros_like(u3)
    out = np.zeros_like(u3)
    for ch in range(c):
        for y in range(h):
            for x in range(w):
                d = D[y, x, ch]
                plus = 0.5 * (d + abs(d))
                minus = 0.5 * (d - abs(d))
                out[y, x, ch] = (num[y, x, ch] + alpha * plus) / (den[y, x] - alpha * minus) * u3[y, x, ch]
    return out.reshape(u.shape)


def denominator_only_step(u, f, op, alpha, div):
    """Regularised RL with the whole divergence in the denominator.

    ``u' = H*(f / H u) u / (1 - alpha D)``; nothing keeps the denominator
    positive, which is what the negative-example tests exercise.
    """
    return op.adjoint(f / op.forward(u)) * u / (1.0 - alpha * div)
