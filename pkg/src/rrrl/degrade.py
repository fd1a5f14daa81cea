"""Synthetic degradation: periodic blur and seeded noise.

All randomness comes from numpy's counter-based Philox generator seeded with
the integer in :class:`NoiseSpec`, so the same seed gives bit-identical noise
on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blur import BoundaryMode, convolve
from .image import GREY_FLOOR, PointSpreadFunction, as_image

NOISE_KINDS = ("impulse-uniform", "gaussian", "poisson")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "impulse-uniform"
    fraction: float = 0.15
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; choose from {NOISE_KINDS}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def synth_blur(g: np.ndarray, psf: PointSpreadFunction) -> np.ndarray:
    """Blur ``g`` on a periodic domain.

    This is deliberately a different discretisation from the reflecting
    convolution the solvers use, so restoration is never tested on data
    produced by its own forward model.
    """
    return convolve(as_image(g), psf, BoundaryMode.CYCLIC)


def add_noise(img: np.ndarray, spec: NoiseSpec, return_mask: bool = False):
    """Degrade ``img`` with noise described by ``spec``.

    impulse-uniform
        Each pixel is independently, with probability ``spec.fraction``,
        replaced by a uniform draw on [0, 255] (all channels of that pixel).
    gaussian
        Additive with standard deviation ``spec.sigma``, clamped to
        ``[GREY_FLOOR, 255]``.
    poisson
        Each value drawn from a Poisson law with the pixel value as mean,
        floored at ``GREY_FLOOR``.

    With ``return_mask`` the boolean map of replaced pixels is returned as
    well (all-False for the non-impulse kinds).
    """
    img = as_image(img)
    rng = rng_for(spec.seed)
    mask = np.zeros(img.shape[:2], dtype=bool)
    if spec.kind == "impulse-uniform":
        mask = rng.random(img.shape[:2]) < spec.fraction
        values = 255.0 * rng.random(img.shape)
        sel = mask if img.ndim == 2 else mask[:, :, None]
        out = np.where(sel, values, img)
    elif spec.kind == "gaussian":
        out = np.clip(img + spec.sigma * rng.standard_normal(img.shape), GREY_FLOOR, 255.0)
    else:
        out = np.maximum(rng.poisson(np.maximum(img, 0.0)).astype(np.float64), GREY_FLOOR)
    return (out, mask) if return_mask else out
