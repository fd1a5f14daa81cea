"""Solver configuration records."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .penalisers import IDENTITY, DataPenaliser, RegularisedL1, SmoothnessPenaliser

VARIANTS = ("rl", "regularised", "robust", "rrrl")

#: Default explicit time steps. The constrained step is scaled by ``u`` (up to
#: 255), so it needs a proportionally smaller ``tau`` to stay energy-monotone.
DEFAULT_TAU = 0.25
DEFAULT_TAU_CONSTRAINED = 0.003


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the Richardson-Lucy family of fixed-point solvers.

    ``stop_rel_change`` enables an early stop once
    ``|u^{k+1} - u^k|_1 / |u^k|_1`` falls below it. ``record_energy_every``
    adds energy evaluations to the trace every so many iterations (the first
    and last iterate are always evaluated).
    """

    iterations: int = 100
    alpha: float = 0.0
    data_penaliser: DataPenaliser = field(default_factory=DataPenaliser)
    smoothness_penaliser: SmoothnessPenaliser = field(default_factory=SmoothnessPenaliser)
    stop_rel_change: float | None = None
    record_energy_every: int | None = None

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.stop_rel_change is not None and not 0 < self.stop_rel_change < 1:
            raise ValueError("stop_rel_change must lie in (0, 1)")
        if self.record_energy_every is not None and self.record_energy_every < 1:
            raise ValueError("record_energy_every must be >= 1")

    def for_variant(self, variant: str) -> SolverConfig:
        """The configuration a given solver variant actually uses.

        ``rl`` drops both the robust penaliser and the regulariser,
        ``regularised`` drops the robust penaliser, ``robust`` drops the
        regulariser and ``rrrl`` keeps both.
        """
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
        if variant == "rl":
            return replace(self, alpha=0.0, data_penaliser=IDENTITY)
        if variant == "regularised":
            return replace(self, data_penaliser=IDENTITY)
        if variant == "robust":
            return replace(self, alpha=0.0)
        return self


@dataclass(frozen=True)
class DescentConfig:
    """Parameters of the explicit variational gradient descent.

    ``tau=None`` selects :data:`DEFAULT_TAU` or :data:`DEFAULT_TAU_CONSTRAINED`.
    """

    tau: float | None = None
    iterations: int = 1500
    alpha: float = 0.06
    data_penaliser_l1_eps: float = 1e-1
    smoothness_penaliser: SmoothnessPenaliser = field(default_factory=SmoothnessPenaliser)
    constrained: bool = False
    record_energy_every: int = 1

    def __post_init__(self):
        if self.tau is None:
            object.__setattr__(
                self, "tau", DEFAULT_TAU_CONSTRAINED if self.constrained else DEFAULT_TAU
            )
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.record_energy_every < 1:
            raise ValueError("record_energy_every must be >= 1")

    @property
    def data_penaliser(self) -> RegularisedL1:
        return RegularisedL1(self.data_penaliser_l1_eps)
