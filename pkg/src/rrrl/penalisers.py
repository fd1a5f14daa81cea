"""Penaliser functions and their derivatives.

Derivatives of ``Psi`` and of the quadratic-argument data penaliser are
taken with respect to the *squared* argument, e.g. ``Psi'(s^2)``, which is the
form that appears inside ``div(Psi'(|grad u|^2) grad u)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DATA_KINDS = ("identity", "robust-sqrt")
SMOOTHNESS_KINDS = ("whittaker-tikhonov", "total-variation", "perona-malik")


def _check_nonneg(x, name):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError(f"{name} must be nonnegative")
    return x


def rf(w, f):
    """Information divergence ``r_f(w) = w - f - f ln(w / f)``.

    Nonnegative and strictly convex in ``w`` with its minimum 0 at ``w = f``.
    Broadcasts over arrays; both arguments must be strictly positive.
    """
    w = np.asarray(w, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if np.any(~(w > 0)) or np.any(~(f > 0)):
        raise DomainError("information divergence needs w > 0 and f > 0")
    out = rf_unchecked(w, f)
    return out if out.ndim else float(out)


def rf_unchecked(w, f):
    """:func:`rf` without the domain check, for callers that guarantee positivity."""
    q = w / f
    # w - f - f ln q == f (q - 1 - ln q); the latter keeps the result >= 0
    return np.maximum(f * ((q - 1.0) - np.log(q)), 0.0)


def rf_prime(w, f):
    """Derivative ``d r_f / d w = 1 - f / w``."""
    return 1.0 - np.asarray(f, dtype=np.float64) / np.asarray(w, dtype=np.float64)


@dataclass(frozen=True)
class DataPenaliser:
    """Penaliser ``Phi`` applied to the divergence ``r_f``.

    ``robust-sqrt`` is ``Phi(s) = sqrt(s + eps) - sqrt(eps)`` which grows
    sub-linearly and has ``Phi'(s) = 1 / (2 sqrt(s + eps))``.
    """

    kind: str = "robust-sqrt"
    eps: float = 1e-2

    def __post_init__(self):
        if self.kind not in DATA_KINDS:
            raise ValueError(f"unknown data penaliser {self.kind!r}; choose from {DATA_KINDS}")
        if not self.eps > 0:
            raise ValueError("data penaliser eps must be positive")

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def value(self, s):
        s = _check_nonneg(s, "divergence value")
        if self.is_identity:
            return s
        return np.sqrt(s + self.eps) - np.sqrt(self.eps)

    def prime(self, s):
        return phi_prime(s, self)


IDENTITY = DataPenaliser("identity")


@dataclass(frozen=True)
class SmoothnessPenaliser:
    """Regulariser ``Psi(|grad u|^2)``.

    ``lam`` is the Perona-Malik contrast parameter in grey-values; ``eps``
    regularises the total-variation derivative at zero gradient.
    """

    kind: str = "perona-malik"
    lam: float = 15.0
    eps: float = 1e-3

    def __post_init__(self):
        if self.kind not in SMOOTHNESS_KINDS:
            raise ValueError(
                f"unknown smoothness penaliser {self.kind!r}; choose from {SMOOTHNESS_KINDS}"
            )
        if not self.lam > 0 or not self.eps > 0:
            raise ValueError("smoothness penaliser lam and eps must be positive")

    def value(self, s2):
        s2 = _check_nonneg(s2, "squared gradient")
        if self.kind == "whittaker-tikhonov":
            return s2
        if self.kind == "total-variation":
            return np.sqrt(s2 + self.eps**2) - self.eps
        lam2 = self.lam**2
        return lam2 * np.log1p(s2 / lam2)

    def prime(self, s2):
        return psi_prime(s2, self)


def phi_prime(s, p: DataPenaliser):
    """Weight ``Phi'(s)`` given to a pixel with divergence value ``s``."""
    return phi_weight(_check_nonneg(s, "divergence value"), p)


def phi_weight(s, p: DataPenaliser):
    """:func:`phi_prime` without the domain check."""
    if p.is_identity:
        return np.ones_like(s)
    return 0.5 / np.sqrt(s + p.eps)


def psi_prime(s2, p: SmoothnessPenaliser):
    """Diffusivity ``Psi'(s2)``."""
    return psi_weight(_check_nonneg(s2, "squared gradient"), p)


def psi_weight(s2, p: SmoothnessPenaliser):
    """:func:`psi_prime` without the domain check."""
    if p.kind == "whittaker-tikhonov":
        return np.ones_like(s2)
    if p.kind == "total-variation":
        return 0.5 / np.sqrt(s2 + p.eps**2)
    return 1.0 / (1.0 + s2 * (1.0 / p.lam**2))


@dataclass(frozen=True)
class RegularisedL1:
    """Residual penaliser ``Phi(s^2) = sqrt(s^2 + eps^2) - eps`` of the variational baseline."""

    eps: float = 1e-1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("L1 eps must be positive")

    def value(self, s2):
        s2 = _check_nonneg(s2, "squared residual")
        return np.sqrt(s2 + self.eps**2) - self.eps

    def prime(self, s2):
        s2 = _check_nonneg(s2, "squared residual")
        return 0.5 / np.sqrt(s2 + self.eps**2)
