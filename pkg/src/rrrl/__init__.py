"""Richardson-Lucy deconvolution with robust data terms and positivity-preserving regularisation."""

from .blur import BlurOperator, BoundaryMode, adjoint_convolve, convolve
from .config import DescentConfig, SolverConfig
from .degrade import NoiseSpec, add_noise, synth_blur
from .errors import (
    DivergenceError,
    DomainError,
    ImageIOError,
    NumericalError,
    RRRLError,
    ShapeError,
    StabilityError,
    StepSizeError,
)
from .image import PointSpreadFunction, lift_floor, load_image, load_psf, save_image, save_psf
from .metrics import energy, snr, variational_energy
from .penalisers import DataPenaliser, RegularisedL1, SmoothnessPenaliser, rf
from .solvers import IterationTrace, regularised_rl_step, rl_step, rrrl_step, rrrl_step_multichannel, run
from .stencil import divergence_term
from .variational import descent_step, negative_gradient, run_descent

__all__ = [
    "BlurOperator", "BoundaryMode", "adjoint_convolve", "convolve",
    "DescentConfig", "SolverConfig",
    "NoiseSpec", "add_noise", "synth_blur",
    "DivergenceError", "DomainError", "ImageIOError", "NumericalError", "RRRLError",
    "ShapeError", "StabilityError", "StepSizeError",
    "PointSpreadFunction", "lift_floor", "load_image", "load_psf", "save_image", "save_psf",
    "energy", "snr", "variational_energy",
    "DataPenaliser", "RegularisedL1", "SmoothnessPenaliser", "rf",
    "IterationTrace", "regularised_rl_step", "rl_step", "rrrl_step", "rrrl_step_multichannel", "run",
    "divergence_term",
    "descent_step", "negative_gradient", "run_descent",
]
