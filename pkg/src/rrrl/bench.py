"""Benchmark presets: degrade the bundled test image and run every method on it.

Each preset fixes a blur kernel, an impulse-noise fraction and a method list
with iteration counts and regularisation weights. The noise seed is the only
free input, so a preset plus a seed determines every number in the table
except the wall-clock times.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .blur import BoundaryMode
from .config import DescentConfig, SolverConfig
from .degrade import NoiseSpec, add_noise, synth_blur
from .errors import ImageIOError
from .image import PointSpreadFunction, lift_floor, load_image, load_psf
from .metrics import BenchRecord, snr
from .penalisers import SmoothnessPenaliser
from .solvers import run
from .variational import run_descent

logger = logging.getLogger(__name__)

TEST_IMAGE = "cameraman256.pgm"
#: Regulariser shared by every regularised method of the presets.
PRESET_SMOOTHNESS = SmoothnessPenaliser("perona-malik", lam=15.0)


@dataclass(frozen=True)
class MethodSpec:
    method: str
    variant: str
    iterations: int
    alpha: float = 0.0

    @property
    def is_descent(self) -> bool:
        return self.variant.startswith("descent")


@dataclass(frozen=True)
class Preset:
    name: str
    psf_file: str
    noise_fraction: float
    methods: tuple[MethodSpec, ...]


PRESETS = {
    "fig1": Preset(
        "fig1",
        "psf_fig1.txt",
        0.15,
        (
            MethodSpec("RL", "rl", 10),
            MethodSpec("regularised RL", "regularised", 100, 0.1),
            MethodSpec("robust RL", "robust", 50),
            MethodSpec("RRRL", "rrrl", 200, 0.005),
            MethodSpec("RRRL", "rrrl", 2000, 0.005),
            MethodSpec("variational", "descent", 1500, 0.06),
            MethodSpec("variational positive", "descent-constrained", 1500, 0.06),
        ),
    ),
    "fig2": Preset(
        "fig2",
        "psf_fig2.txt",
        0.30,
        (
            MethodSpec("RL", "rl", 10),
            MethodSpec("regularised RL", "regularised", 100, 0.05),
            MethodSpec("robust RL", "robust", 100),
            MethodSpec("RRRL", "rrrl", 400, 0.003),
            MethodSpec("variational", "descent", 1500, 0.06),
            MethodSpec("variational positive", "descent-constrained", 1500, 0.09),
        ),
    ),
}


def _asset(name):
    path = files("rrrl") / "data" / name
    if not path.is_file():
        raise ImageIOError(f"bundled asset {name!r} is missing")
    return path


def preset_data(name: str, seed: int) -> tuple[np.ndarray, np.ndarray, PointSpreadFunction]:
    """Return ``(ground_truth, degraded, psf)`` for a preset.

    The degraded image is blurred on a periodic domain, hit by impulse noise
    and lifted to the positive floor, ready for the solvers.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    preset = PRESETS[name]
    g = load_image(_asset(TEST_IMAGE))
    psf = load_psf(_asset(preset.psf_file))
    noisy = add_noise(synth_blur(g, psf), NoiseSpec("impulse-uniform", preset.noise_fraction, seed=seed))
    f, _ = lift_floor(noisy)
    return g, f, psf


def run_method(spec: MethodSpec, f, psf, mode=BoundaryMode.REFLECT):
    """Run one preset method; returns ``(u, trace)``."""
    if spec.is_descent:
        cfg = DescentConfig(
            iterations=spec.iterations,
            alpha=spec.alpha,
            smoothness_penaliser=PRESET_SMOOTHNESS,
            constrained=spec.variant == "descent-constrained",
        )
        return run_descent(f, psf, cfg, mode)
    cfg = SolverConfig(iterations=spec.iterations, alpha=spec.alpha, smoothness_penaliser=PRESET_SMOOTHNESS)
    return run(f, psf, cfg, spec.variant, mode)


@dataclass
class BenchResult:
    record: BenchRecord
    spec: MethodSpec
    trace: object


def bench_preset(name: str, seed: int, methods=None) -> list[BenchResult]:
    """Run a preset's methods in order and time each.

    ``methods`` optionally restricts the run to a subset of the preset's
    :class:`MethodSpec` entries.
    """
    g, f, psf = preset_data(name, seed)
    out = []
    for spec in methods if methods is not None else PRESETS[name].methods:
        t0 = time.perf_counter()
        u, trace = run_method(spec, f, psf)
        wall = time.perf_counter() - t0
        rec = BenchRecord(
            method=spec.method,
            variant=spec.variant,
            alpha=spec.alpha,
            iterations=spec.iterations,
            snr_db=snr(u, g),
            energy_initial=trace.energy_initial,
            energy_final=trace.energy_final,
            wall_s=wall,
            min_value=float(trace.min_values.min()),
        )
        logger.info("%s %s@%d: %.2f dB in %.1f s", name, spec.method, spec.iterations, rec.snr_db, wall)
        out.append(BenchResult(rec, spec, trace))
    return out
