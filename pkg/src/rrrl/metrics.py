"""Restoration quality and energy functionals.

Energy conventions
------------------
The solvers carry ``Psi'`` and ``Phi'`` with respect to squared arguments and
drop the factor 2 that differentiating a square produces. The discrete
energies below are scaled so that the solvers' update directions are their
exact gradients:

* :func:`energy` is ``sum Phi(r_f(H u)) + (alpha / 2) Psi(|grad u|^2)``; its
  gradient is ``H*(Phi' (1 - f / H u)) - alpha div(Psi' grad u)``, which
  vanishes exactly at fixed points of the RRRL iteration.
* :func:`variational_energy` is ``(1/2) sum [Phi((f - H u)^2) + alpha Psi(|grad u|^2)]``;
  its negative gradient is the explicit descent direction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .blur import BoundaryMode, as_operator
from .errors import DomainError, ShapeError
from .penalisers import rf
from .stencil import coupled_squared_gradient

CSV_FIELDS = ("method", "variant", "alpha", "iterations", "snr_db", "energy_final", "wall_s")


def snr(u: np.ndarray, g: np.ndarray) -> float:
    """Signal-to-noise ratio ``10 log10(var(g) / var(g - u))`` in dB.

    Variances are taken jointly over all pixels and channels. Returns
    ``inf`` when ``g - u`` is constant, up to the rounding of the subtraction.
    """
    u = np.asarray(u, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if u.shape != g.shape:
        raise ShapeError(f"shape mismatch: {u.shape} vs {g.shape}")
    vg = np.var(g)
    if vg == 0:
        raise DomainError("SNR undefined for a constant reference image")
    d = g - u
    scale = max(float(np.abs(g).max()), float(np.abs(u).max()))
    # a shift like (g + c) - g is only constant up to a few ulps of the inputs
    if np.ptp(d) <= 8 * np.finfo(np.float64).eps * scale:
        return float("inf")
    ve = np.var(d)
    if ve == 0:
        return float("inf")
    return float(10.0 * np.log10(vg / ve))


def _as3(u):
    return u[:, :, None] if u.ndim == 2 else u


def energy(u, f, psf, cfg, mode=BoundaryMode.REFLECT) -> float:
    """Discrete robust-regularised divergence energy of ``u``.

    Multi-channel images use the coupled forms: ``Phi`` of the channel sum of
    divergences and ``Psi`` of the channel sum of squared gradients.
    ``cfg`` needs ``alpha``, ``data_penaliser`` and ``smoothness_penaliser``.
    """
    op = as_operator(psf, mode)
    u3 = _as3(np.asarray(u, dtype=np.float64))
    f3 = _as3(np.asarray(f, dtype=np.float64))
    R = rf(op.forward(u3), f3).sum(axis=2)
    total = float(np.sum(cfg.data_penaliser.value(R)))
    if cfg.alpha > 0:
        G = coupled_squared_gradient(u3)
        total += 0.5 * cfg.alpha * float(np.sum(cfg.smoothness_penaliser.value(G)))
    return total


def variational_energy(u, f, psf, cfg, mode=BoundaryMode.REFLECT) -> float:
    """Discrete robust variational energy; ``cfg`` is a :class:`DescentConfig`."""
    op = as_operator(psf, mode)
    u3 = _as3(np.asarray(u, dtype=np.float64))
    f3 = _as3(np.asarray(f, dtype=np.float64))
    res2 = ((f3 - op.forward(u3)) ** 2).sum(axis=2)
    total = 0.5 * float(np.sum(cfg.data_penaliser.value(res2)))
    if cfg.alpha > 0:
        G = coupled_squared_gradient(u3)
        total += 0.5 * cfg.alpha * float(np.sum(cfg.smoothness_penaliser.value(G)))
    return total


@dataclass
class BenchRecord:
    """One row of a benchmark table."""

    method: str
    variant: str
    alpha: float
    iterations: int
    snr_db: float
    energy_initial: float
    energy_final: float
    wall_s: float | None
    min_value: float = float("nan")

    def csv_row(self, timing: bool = True) -> dict:
        return {
            "method": self.method,
            "variant": self.variant,
            "alpha": f"{self.alpha:g}",
            "iterations": str(self.iterations),
            "snr_db": f"{self.snr_db:.4f}",
            "energy_final": f"{self.energy_final:.6e}",
            "wall_s": "NA" if self.wall_s is None or not timing else f"{self.wall_s:.3f}",
        }

    def as_dict(self) -> dict:
        return asdict(self)


def records_to_csv(records, timing: bool = True) -> str:
    """CSV text with one row per record; ``timing=False`` writes every wall time as ``NA``."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.csv_row(timing))
    return buf.getvalue()
