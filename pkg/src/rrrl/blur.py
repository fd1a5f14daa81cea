"""Space-invariant blur operator ``H`` and its adjoint ``H*``.

``convolve`` evaluates ``(H u)(x) = sum_z h(z) u(x - z)`` where indices
leaving the grid are mapped back by a boundary rule:

* ``cyclic``: periodic wrap-around. Used only to synthesise blurred data.
* ``reflect``: half-sample mirror extension (``u[-1] = u[0]``), used by every
  restoration solver.

``adjoint_convolve`` is the exact transpose of ``convolve`` for the same
boundary rule. In the interior it is convolution with the point-reflected
kernel; near a reflecting boundary the contributions that the forward
operator pulled in from mirrored positions are scattered back onto the pixels
they came from.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .image import PointSpreadFunction

# Kernels with more taps than this are applied through FFTs.
DIRECT_TAPS_MAX = 25


class BoundaryMode(str, enum.Enum):
    CYCLIC = "cyclic"
    REFLECT = "reflect"


def index_map(n: int, r: int, mode: BoundaryMode | str) -> np.ndarray:
    """Source index for each extended coordinate ``-r .. n - 1 + r``."""
    e = np.arange(-r, n + r)
    if BoundaryMode(mode) is BoundaryMode.CYCLIC:
        return e % n
    p = e % (2 * n)
    return np.where(p < n, p, 2 * n - 1 - p)


def pad(img: np.ndarray, ry: int, rx: int, mode: BoundaryMode | str) -> np.ndarray:
    """Extend ``img`` by ``ry`` rows and ``rx`` columns on each side."""
    h, w = img.shape[:2]
    out = np.take(img, index_map(h, ry, mode), axis=0)
    return np.take(out, index_map(w, rx, mode), axis=1)


def fold(ext: np.ndarray, h: int, w: int, mode: BoundaryMode | str) -> np.ndarray:
    """Transpose of :func:`pad`: sum extended values back onto their sources."""
    ry = (ext.shape[0] - h) // 2
    rx = (ext.shape[1] - w) // 2
    out = _fold_axis(ext, h, ry, mode, axis=0)
    return _fold_axis(out, w, rx, mode, axis=1)


def _fold_axis(ext, n, r, mode, axis):
    if r == 0:
        return ext
    m = index_map(n, r, mode)
    ext = np.moveaxis(ext, axis, 0)
    out = ext[r : r + n].copy()
    for band in (np.arange(r), np.arange(n + r, n + 2 * r)):
        dest = m[band]
        if len(np.unique(dest)) == len(dest):
            out[dest] += ext[band]
        else:  # kernel wider than the image: one band wraps onto a pixel twice
            np.add.at(out, dest, ext[band])
    return np.moveaxis(out, 0, axis)


def correlate_valid(padded: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """``out[x] = sum_i kernel[i] * padded[x + i]`` over positions where the kernel fits.

    Operates on the two leading axes; trailing (channel) axes are carried along.
    """
    kh, kw = kernel.shape
    oh = padded.shape[0] - kh + 1
    ow = padded.shape[1] - kw + 1
    if kernel.size <= DIRECT_TAPS_MAX:
        out = np.zeros((oh, ow) + padded.shape[2:])
        for i in range(kh):
            for j in range(kw):
                wij = kernel[i, j]
                if wij != 0.0:
                    out += wij * padded[i : i + oh, j : j + ow]
        return out
    if padded.ndim > 2:
        return _per_plane(lambda p: correlate_valid(p, kernel), padded)
    # circular convolution over the padded size is exact on the valid region
    fshape = tuple(sfft.next_fast_len(n, True) for n in padded.shape[:2])
    spec = _kernel_spectrum(np.ascontiguousarray(kernel[::-1, ::-1]).tobytes(), kernel.shape, fshape)
    full = sfft.irfft2(sfft.rfft2(padded, s=fshape) * spec, s=fshape)
    return full[kh - 1 : kh - 1 + oh, kw - 1 : kw - 1 + ow]


@lru_cache(maxsize=64)
def _kernel_spectrum(kbytes: bytes, kshape: tuple[int, int], fshape: tuple[int, int]) -> np.ndarray:
    k = np.frombuffer(kbytes, dtype=np.float64).reshape(kshape)
    spec = sfft.rfft2(k, s=fshape)
    spec.setflags(write=False)
    return spec


def _per_plane(fn, arr):
    """Apply a 2-D map to each contiguous channel plane of ``arr``.

    Padding, folding and FFTs are all markedly faster on contiguous 2-D
    arrays than on the strided planes of an ``(H, W, C)`` array.
    """
    planes = [fn(np.ascontiguousarray(arr[..., c])) for c in range(arr.shape[2])]
    return np.stack(planes, axis=2)


def convolve(img: np.ndarray, psf: PointSpreadFunction, mode: BoundaryMode | str) -> np.ndarray:
    """Blur ``img`` with ``psf``; each channel independently."""
    if img.ndim == 3 and psf.weights.size > DIRECT_TAPS_MAX:
        return _per_plane(lambda p: convolve(p, psf, mode), img)
    ry, rx = psf.radius
    return correlate_valid(pad(img, ry, rx, mode), psf.weights[::-1, ::-1])


def adjoint_convolve(img: np.ndarray, psf: PointSpreadFunction, mode: BoundaryMode | str) -> np.ndarray:
    """Apply ``H*``, the transpose of :func:`convolve` under the same boundary rule."""
    if img.ndim == 3 and psf.weights.size > DIRECT_TAPS_MAX:
        return _per_plane(lambda p: adjoint_convolve(p, psf, mode), img)
    if BoundaryMode(mode) is BoundaryMode.CYCLIC:
        return convolve(img, psf.reflected(), mode)
    ry, rx = psf.radius
    h, w = img.shape[:2]
    widths = [(2 * ry, 2 * ry), (2 * rx, 2 * rx)] + [(0, 0)] * (img.ndim - 2)
    full = correlate_valid(np.pad(img, widths), psf.weights)
    return fold(full, h, w, mode)


def conservation_defect(psf: PointSpreadFunction, width: int, height: int,
                        mode: BoundaryMode | str) -> np.ndarray:
    """``H* 1`` on a ``height x width`` grid; equals 1 wherever energy is conserved."""
    return adjoint_convolve(np.ones((height, width)), psf, mode)


class BlurOperator:
    """Linear image-to-image operator with adjoint, as consumed by the solvers.

    Only the space-invariant case is provided; anything exposing ``forward``
    and ``adjoint`` with the same semantics can be passed to the solvers
    instead.
    """

    def __init__(self, psf: PointSpreadFunction, mode: BoundaryMode | str = BoundaryMode.REFLECT):
        self.psf = psf
        self.mode = BoundaryMode(mode)

    def forward(self, u: np.ndarray) -> np.ndarray:
        return convolve(u, self.psf, self.mode)

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        return adjoint_convolve(v, self.psf, self.mode)

    def __repr__(self):
        return f"BlurOperator(shape={self.psf.shape}, mode={self.mode.value})"


def as_operator(psf_or_op, mode: BoundaryMode | str = BoundaryMode.REFLECT):
    if isinstance(psf_or_op, PointSpreadFunction):
        return BlurOperator(psf_or_op, mode)
    if hasattr(psf_or_op, "forward") and hasattr(psf_or_op, "adjoint"):
        return psf_or_op
    raise TypeError(f"expected a PointSpreadFunction or blur operator, got {type(psf_or_op).__name__}")
