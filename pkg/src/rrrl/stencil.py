"""Nonlinear diffusion stencil for ``div(Psi'(|grad u|^2) grad u)``.

Grid spacing is one pixel and boundaries are reflecting (zero flux).

* ``|grad u|^2`` at a pixel is, per axis, the mean of the two squared
  one-sided differences; a difference that would cross the boundary is zero
  under mirroring.
* The diffusivity ``Psi'`` is evaluated at pixels and averaged arithmetically
  onto the half-points between neighbours.
* The divergence is the difference of the two half-point fluxes along each
  axis.

With these choices ``-2 * divergence_term`` is the exact gradient of the
discrete regulariser ``sum Psi(|grad u|^2)``.
"""

from __future__ import annotations

import numpy as np

from .penalisers import SmoothnessPenaliser, psi_prime, psi_weight


def _as3(u):
    return u[:, :, None] if u.ndim == 2 else u


def _differences(u):
    return np.diff(u, axis=0), np.diff(u, axis=1)


def _s2_from_differences(shape, dy, dx):
    s2 = np.zeros(shape)
    hy = 0.5 * dy * dy
    hx = 0.5 * dx * dx
    s2[:-1] += hy
    s2[1:] += hy
    s2[:, :-1] += hx
    s2[:, 1:] += hx
    return s2


def _flux_from_differences(shape, g, dy, dx):
    out = np.zeros(shape)
    fy = 0.5 * (g[:-1] + g[1:]) * dy
    fx = 0.5 * (g[:, :-1] + g[:, 1:]) * dx
    out[:-1] += fy
    out[1:] -= fy
    out[:, :-1] += fx
    out[:, 1:] -= fx
    return out


def squared_gradient(u: np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel ``|grad u|^2``; same shape as ``u``."""
    u = np.asarray(u, dtype=np.float64)
    return _s2_from_differences(u.shape, *_differences(u))


def coupled_squared_gradient(u: np.ndarray) -> np.ndarray:
    """Channel sum ``G = sum_i |grad u_i|^2`` with shape ``(height, width)``."""
    return _as3(squared_gradient(u)).sum(axis=2)


def diffusivity(u: np.ndarray, p: SmoothnessPenaliser, coupled: bool = True) -> np.ndarray:
    """``Psi'`` at every pixel, broadcast to the shape of ``u``."""
    if coupled and u.ndim == 3:
        g = psi_prime(coupled_squared_gradient(u), p)
        return np.broadcast_to(g[:, :, None], u.shape)
    return psi_prime(squared_gradient(u), p)


def flux_divergence(u: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``div(g grad u)`` for a given pixel diffusivity ``g`` (broadcastable to ``u``)."""
    u = np.asarray(u, dtype=np.float64)
    return _flux_from_differences(u.shape, g, *_differences(u))


def divergence_term(u: np.ndarray, p: SmoothnessPenaliser, coupled: bool = True) -> np.ndarray:
    """Evaluate ``div(Psi'(|grad u|^2) grad u)`` with reflecting boundaries.

    Parameters
    ----------
    u : ndarray
        Image of shape ``(H, W)`` or ``(H, W, C)``.
    p : SmoothnessPenaliser
        Supplies ``Psi'``.
    coupled : bool
        For multi-channel input, use the shared diffusivity
        ``Psi'(sum_i |grad u_i|^2)`` instead of one per channel. Has no effect
        on single-channel input.

    Returns
    -------
    ndarray
        Same shape as ``u``. Each channel sums to zero over the image.
    """
    u = np.asarray(u, dtype=np.float64)
    dy, dx = _differences(u)
    s2 = _s2_from_differences(u.shape, dy, dx)
    if coupled and u.ndim == 3 and u.shape[2] > 1:
        s2 = s2.sum(axis=2, keepdims=True)
    # s2 is a sum of squares, so the domain check can be skipped
    return _flux_from_differences(u.shape, psi_weight(s2, p), dy, dx)
