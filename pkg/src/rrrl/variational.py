"""Explicit gradient descent for robust variational deconvolution.

The descent direction is

    -dE/du = H*(Phi'((f - H u)^2) (f - H u)) + alpha div(Psi'(|grad u|^2) grad u)

with the regularised L1 penaliser ``Phi(s^2) = sqrt(s^2 + eps^2) - eps``.
The positivity-constrained variant multiplies the direction by ``u``, which
is the multiplicative gradient of the same energy.
"""

from __future__ import annotations

import logging

import numpy as np

from .blur import BoundaryMode, as_operator
from .config import DescentConfig
from .errors import DivergenceError, DomainError, ShapeError, StepSizeError
from .solvers import IterationTrace, TraceRecord
from .stencil import coupled_squared_gradient, divergence_term

logger = logging.getLogger(__name__)

#: Consecutive energy increases that trigger a step-size warning.
INCREASE_WINDOW = 10


def _as3(u):
    return u[:, :, None] if u.ndim == 2 else u


def _direction(u, f, op, cfg: DescentConfig):
    """Return ``(-dE/du, energy(u))`` sharing one forward blur."""
    u3, f3 = _as3(u), _as3(f)
    res = f3 - op.forward(u3)
    res2 = (res**2).sum(axis=2, keepdims=True)
    pen = cfg.data_penaliser
    d = op.adjoint(pen.prime(res2) * res)
    e = 0.5 * float(np.sum(pen.value(res2)))
    if cfg.alpha > 0:
        d = d + cfg.alpha * divergence_term(u3, cfg.smoothness_penaliser, coupled=True)
        G = coupled_squared_gradient(u3)
        e += 0.5 * cfg.alpha * float(np.sum(cfg.smoothness_penaliser.value(G)))
    return d.reshape(u.shape), e


def negative_gradient(u, f, psf, cfg: DescentConfig, mode=BoundaryMode.REFLECT) -> np.ndarray:
    """``-dE/du`` of :func:`rrrl.metrics.variational_energy` (additive gradient)."""
    u = np.asarray(u, dtype=np.float64)
    return _direction(u, np.asarray(f, dtype=np.float64), as_operator(psf, mode), cfg)[0]


def _apply(u, d, cfg):
    if not cfg.constrained:
        return u + cfg.tau * d
    out = u + cfg.tau * u * d
    if not np.all(out > 0):
        raise StepSizeError(
            f"constrained descent step left the positive range (min {float(out.min()):.3g}); "
            f"use a smaller tau than {cfg.tau}"
        )
    return out


def descent_step(u, f, psf, cfg: DescentConfig, mode=BoundaryMode.REFLECT) -> np.ndarray:
    """One explicit Euler step, ``u + tau d`` or, constrained, ``u + tau u d``."""
    u = np.asarray(u, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if u.shape != f.shape:
        raise ShapeError(f"iterate and data differ in shape: {u.shape} vs {f.shape}")
    if cfg.constrained and not np.all(u > 0):
        raise DomainError("constrained descent needs a strictly positive iterate")
    d, _ = _direction(u, f, as_operator(psf, mode), cfg)
    return _apply(u, d, cfg)


def run_descent(f, psf, cfg: DescentConfig, mode=BoundaryMode.REFLECT, callback=None):
    """Iterate the explicit scheme from ``u^0 = f`` for ``cfg.iterations`` steps.

    The trace records the energy of every ``cfg.record_energy_every``-th
    iterate. A run of :data:`INCREASE_WINDOW` consecutive energy increases
    adds a step-size warning to the trace.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim not in (2, 3):
        raise ShapeError(f"images must be 2-D or 3-D, got shape {f.shape}")
    if cfg.constrained and not np.all(f > 0):
        raise DomainError("constrained descent needs strictly positive data; lift zeros first")
    op = as_operator(psf, mode)
    trace = IterationTrace()
    u = f.copy()
    d, e = _direction(u, f, op, cfg)
    trace.records.append(TraceRecord(0, float(u.min()), 0.0, e))
    increases = 0
    prev_e = e
    warned = False
    # overflow is caught below as a non-finite iterate
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, cfg.iterations + 1):
            u_new = _apply(u, d, cfg)
            if not np.all(np.isfinite(u_new)):
                raise DivergenceError(f"descent iteration {k} produced non-finite values", iteration=k)
            change = float(np.abs(u_new - u).sum() / np.abs(u).sum())
            u = u_new
            d, e = _direction(u, f, op, cfg)
            rec = TraceRecord(k, float(u.min()), change)
            if k % cfg.record_energy_every == 0 or k == cfg.iterations:
                rec.energy = e
            trace.records.append(rec)
            increases = increases + 1 if e > prev_e else 0
            prev_e = e
            if increases >= INCREASE_WINDOW and not warned:
                msg = f"energy increased for {increases} consecutive steps at iteration {k}; tau={cfg.tau} is too large"
                trace.warnings.append(msg)
                logger.warning(msg)
                warned = True
            if callback is not None:
                callback(k, u)
    return u, trace
