"""Richardson-Lucy fixed-point solvers: standard, regularised, robust and RRRL.

All updates are multiplicative, ``u' = M(u) * u``, with a multiplier ``M``
that is positive by construction. The regulariser contribution
``D = div(Psi'(|grad u|^2) grad u)`` is lagged (evaluated at ``u^k``) and split
by sign: ``[D]_+`` goes to the numerator of ``M`` and ``-[D]_-`` to the
denominator, so neither can change sign.

The blur argument of every function is either a :class:`PointSpreadFunction`
(applied with reflecting boundaries) or any object with ``forward`` and
``adjoint`` methods.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _fused
from .blur import BoundaryMode, as_operator
from .config import VARIANTS, SolverConfig
from .errors import DivergenceError, DomainError, ShapeError, StabilityError
from .metrics import energy
from .penalisers import phi_weight, rf_unchecked
from .stencil import divergence_term

logger = logging.getLogger(__name__)

#: Lower bound on ``H u`` in the quotient ``f / (H u)``.
QUOTIENT_FLOOR = 1e-12


@dataclass
class TraceRecord:
    iteration: int
    min_value: float
    rel_change: float
    energy: float | None = None


@dataclass
class IterationTrace:
    """Per-iteration diagnostics of a solver run.

    Iteration 0 is the initial image. ``floored_pixels`` counts quotient
    evaluations where ``H u`` had to be raised to :data:`QUOTIENT_FLOOR`;
    a nonzero count indicates a misconfiguration.
    """

    records: list[TraceRecord] = field(default_factory=list)
    floored_pixels: int = 0
    stopped_early: bool = False
    warnings: list[str] = field(default_factory=list)

    def __len__(self):
        return sum(1 for r in self.records if r.iteration > 0)

    @property
    def iterations(self) -> list[int]:
        return [r.iteration for r in self.records]

    @property
    def min_values(self) -> np.ndarray:
        return np.array([r.min_value for r in self.records])

    @property
    def energies(self) -> list[tuple[int, float]]:
        return [(r.iteration, r.energy) for r in self.records if r.energy is not None]

    @property
    def energy_initial(self) -> float:
        return self.energies[0][1]

    @property
    def energy_final(self) -> float:
        return self.energies[-1][1]


def _check_pair(u, f):
    u = np.asarray(u, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if u.shape != f.shape:
        raise ShapeError(f"iterate and data differ in shape: {u.shape} vs {f.shape}")
    if u.ndim not in (2, 3):
        raise ShapeError(f"images must be 2-D or 3-D, got shape {u.shape}")
    return u, f


def _quotient(f, hu):
    low = hu < QUOTIENT_FLOOR
    n = int(np.count_nonzero(low))
    if n:
        hu = np.where(low, QUOTIENT_FLOOR, hu)
    return f / hu, hu, n


def _sign_split(d, alpha):
    """Return ``(alpha [d]_+, -alpha [d]_-)``, both nonnegative."""
    return alpha * np.maximum(d, 0.0), -alpha * np.minimum(d, 0.0)


# --------------------------------------------------------------------------
# single steps; the underscored versions also report floored quotient pixels


def _rl(u, f, op):
    q, _, n = _quotient(f, op.forward(u))
    return op.adjoint(q) * u, n


def _regularised(u, f, op, cfg):
    if cfg.alpha == 0:
        return _rl(u, f, op)
    q, _, n = _quotient(f, op.forward(u))
    plus, minus = _sign_split(divergence_term(u, cfg.smoothness_penaliser, coupled=True), cfg.alpha)
    return (op.adjoint(q) + plus) / (1.0 + minus) * u, n


def _rrrl_plane(u, f, op, cfg):
    """RRRL update of a 2-D plane through the compiled kernels."""
    q, hu, n = _quotient(f, op.forward(u))
    dp, sp = cfg.data_penaliser, cfg.smoothness_penaliser
    w, wq = _fused.data_weights(hu, f, q, dp.eps, dp.is_identity)
    num = op.adjoint(wq)
    den = op.adjoint(w)
    out, low = _fused.rrrl_combine(
        u, num, den, cfg.alpha, _fused.PSI_CODES[sp.kind], _fused.psi_param(sp)
    )
    if not low > 0:
        # rerun in numpy for the diagnostic
        return _rrrl_coupled(u, f, op, cfg, fused=False)
    return out, n


def _rrrl_coupled(u, f, op, cfg, fused=None):
    """RRRL update; a ``(H, W, C)`` image has its data and smoothness terms coupled over channels."""
    if fused is None:
        fused = _fused.AVAILABLE
    if fused and u.ndim == 2:
        return _rrrl_plane(np.ascontiguousarray(u), np.ascontiguousarray(f), op, cfg)
    q, hu, n = _quotient(f, op.forward(u))
    if cfg.data_penaliser.is_identity:
        w = np.ones(u.shape[:2] + (1,) * (u.ndim - 2))
    else:
        # hu > 0 after the quotient floor and f > 0 is checked by run()
        r = rf_unchecked(hu, f)
        if u.ndim == 3:
            r = r.sum(axis=2, keepdims=True)
        w = phi_weight(r, cfg.data_penaliser)
    num = op.adjoint(w * q)
    den = op.adjoint(w)
    if den.shape != u.shape:
        den = np.broadcast_to(den, u.shape).copy()
    if cfg.alpha > 0:
        # num += alpha [D]_+ and den += alpha [D]_-, reusing one buffer
        ad = divergence_term(u, cfg.smoothness_penaliser, coupled=True)
        ad *= cfg.alpha
        part = np.maximum(ad, 0.0)
        num += part
        np.minimum(ad, 0.0, out=part)
        den -= part
    if not np.all(den > 0):
        where = np.unravel_index(np.argmin(np.broadcast_to(den, u.shape)), u.shape)
        channel = f", channel={where[2]}" if u.ndim == 3 else ""
        raise StabilityError(
            f"RRRL denominator {float(np.min(den)):.3g} <= 0 at pixel (y={where[0]}, "
            f"x={where[1]}{channel}) with alpha={cfg.alpha}"
        )
    num /= den
    num *= u
    return num, n


def _rrrl_channelwise(u, f, op, cfg):
    if u.ndim == 2:
        return _rrrl_coupled(u, f, op, cfg)
    outs, total = [], 0
    for c in range(u.shape[2]):
        out, n = _rrrl_coupled(
            np.ascontiguousarray(u[:, :, c]), np.ascontiguousarray(f[:, :, c]), op, cfg
        )
        outs.append(out)
        total += n
    return np.stack(outs, axis=2), total


def _rrrl_multichannel(u, f, op, cfg):
    if u.ndim == 2:
        return _rrrl_channelwise(u, f, op, cfg)
    return _rrrl_coupled(u, f, op, cfg)


def rl_step(u, f, psf, mode=BoundaryMode.REFLECT) -> np.ndarray:
    """Standard Richardson-Lucy update ``u' = H*(f / H u) * u``.

    Multi-channel images are processed channel by channel.
    """
    u, f = _check_pair(u, f)
    return _rl(u, f, as_operator(psf, mode))[0]


def regularised_rl_step(u, f, psf, cfg: SolverConfig, mode=BoundaryMode.REFLECT) -> np.ndarray:
    """Regularised RL update.

    ``u' = (H*(f / H u) + alpha [D]_+) / (1 - alpha [D]_-) * u``

    Multi-channel images share the diffusivity ``Psi'(sum_i |grad u_i|^2)``.
    With ``alpha = 0`` this is exactly :func:`rl_step`.
    """
    u, f = _check_pair(u, f)
    return _regularised(u, f, as_operator(psf, mode), cfg)[0]


def rrrl_step(u, f, psf, cfg: SolverConfig, mode=BoundaryMode.REFLECT) -> np.ndarray:
    """Robust and regularised RL update; channels of a multi-channel image are independent.

    ``u' = (H*(Phi'(r) f / H u) + alpha [D]_+) / (H* Phi'(r) - alpha [D]_-) * u``
    with ``r = r_f(H u)``.

    Raises
    ------
    StabilityError
        If the denominator is not positive somewhere (only possible with a
        user-supplied operator whose adjoint does not preserve positivity).
    """
    u, f = _check_pair(u, f)
    return _rrrl_channelwise(u, f, as_operator(psf, mode), cfg)[0]


def rrrl_step_multichannel(u, f, psf, cfg: SolverConfig, mode=BoundaryMode.REFLECT) -> np.ndarray:
    """Multi-channel RRRL update with channel-coupled weights.

    The robust weight ``Phi'(R)`` with ``R = sum_i r_{f_i}(H u_i)`` and the
    diffusivity ``Psi'(G)`` with ``G = sum_i |grad u_i|^2`` are shared by all
    channels. For one channel this equals :func:`rrrl_step`.
    """
    u, f = _check_pair(u, f)
    return _rrrl_multichannel(u, f, as_operator(psf, mode), cfg)[0]


_STEPS = {
    "rl": lambda u, f, op, cfg: _rl(u, f, op),
    "regularised": _regularised,
    "robust": _rrrl_multichannel,
    "rrrl": _rrrl_multichannel,
}


def run(
    f,
    psf,
    cfg: SolverConfig,
    variant: str = "rrrl",
    mode=BoundaryMode.REFLECT,
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, IterationTrace]:
    """Iterate a solver variant from ``u^0 = f``.

    Parameters
    ----------
    f : ndarray
        Strictly positive degraded image, ``(H, W)`` or ``(H, W, C)``.
    psf : PointSpreadFunction or operator
        Blur model.
    cfg : SolverConfig
        Iteration count, weights and penalisers. Parts a variant does not use
        are ignored (see :meth:`SolverConfig.for_variant`).
    variant : {'rl', 'regularised', 'robust', 'rrrl'}
    callback : callable, optional
        Called as ``callback(k, u_k)`` after every iteration.

    Returns
    -------
    u : ndarray
        Final iterate.
    trace : IterationTrace
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    f = np.asarray(f, dtype=np.float64)
    if f.ndim not in (2, 3):
        raise ShapeError(f"images must be 2-D or 3-D, got shape {f.shape}")
    if not np.all(f > 0) or not np.all(np.isfinite(f)):
        raise DomainError("data image must be finite and strictly positive; lift zeros first")
    op = as_operator(psf, mode)
    eff = cfg.for_variant(variant)
    step = _STEPS[variant]

    trace = IterationTrace()
    u = f.copy()
    trace.records.append(TraceRecord(0, float(u.min()), 0.0, energy(u, f, op, eff)))
    every = cfg.record_energy_every
    last = cfg.iterations
    # overflow is caught below as a non-finite iterate
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, cfg.iterations + 1):
            u_new, n = step(u, f, op, eff)
            trace.floored_pixels += n
            if not np.all(np.isfinite(u_new)):
                raise DivergenceError(f"{variant} iteration {k} produced non-finite values", iteration=k)
            change = float(np.abs(u_new - u).sum() / np.abs(u).sum())
            u = u_new
            rec = TraceRecord(k, float(u.min()), change)
            if every is not None and k % every == 0:
                rec.energy = energy(u, f, op, eff)
            trace.records.append(rec)
            if callback is not None:
                callback(k, u)
            if cfg.stop_rel_change is not None and change < cfg.stop_rel_change:
                trace.stopped_early = True
                last = k
                break
    final = trace.records[-1]
    if final.energy is None:
        final.energy = energy(u, f, op, eff)
    if trace.floored_pixels:
        msg = f"{trace.floored_pixels} quotient evaluations hit the floor {QUOTIENT_FLOOR:g}"
        trace.warnings.append(msg)
        logger.warning(msg)
    logger.debug("%s finished after %d iterations, min %.4g", variant, last, final.min_value)
    return u, trace
