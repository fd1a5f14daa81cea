"""Image and kernel containers, grey-value conventions and Netpbm/PSF file I/O.

Images are plain ``numpy`` float64 arrays on the 8-bit grey-value scale
[0, 255], shaped ``(height, width)`` for scalar images or
``(height, width, channels)`` for multi-channel ones. Solvers never rescale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ImageIOError, ShapeError

#: Floor applied to zero (or tiny) intensities before deconvolution. The
#: information divergence contains ``ln(w / f)`` and the multiplicative
#: iterations need ``f > 0``.
GREY_FLOOR = 0.1

_WS = b" \t\r\n\v\f"


def as_image(data, copy=False) -> np.ndarray:
    """Validate ``data`` as an image array and return it as float64."""
    arr = np.array(data, dtype=np.float64, copy=copy or None)
    if arr.ndim not in (2, 3):
        raise ShapeError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"image has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("image contains non-finite values")
    return arr


def channels(img: np.ndarray) -> int:
    return 1 if img.ndim == 2 else img.shape[2]


def lift_floor(img: np.ndarray, floor: float = GREY_FLOOR) -> tuple[np.ndarray, int]:
    """Raise intensities below ``floor`` to ``floor``.

    Returns the lifted image and the number of values that were changed, so
    callers can report the perturbation.
    """
    img = as_image(img)
    low = img < floor
    return np.where(low, floor, img), int(low.sum())


# --------------------------------------------------------------------------
# Point-spread function


@dataclass(frozen=True)
class PointSpreadFunction:
    """Nonnegative, unit-mass kernel with odd dimensions anchored at its centre.

    ``weights[i, j]`` is the blur weight for the offset
    ``(i - ry, j - rx)``, i.e. ``h(x - y)`` with ``x - y`` measured from the
    centre. Weights are normalised to unit sum on construction.
    """

    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim == 0:
            w = w.reshape(1, 1)
        elif w.ndim == 1:
            w = w.reshape(1, -1)
        if w.ndim != 2:
            raise ShapeError(f"PSF must be 2-D, got shape {w.shape}")
        kh, kw = w.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeError(f"PSF dimensions must be odd, got {kh}x{kw}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("PSF weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise DomainError("degenerate kernel: all weights are zero")
        w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def radius(self) -> tuple[int, int]:
        kh, kw = self.weights.shape
        return kh // 2, kw // 2

    @property
    def anchor(self) -> tuple[int, int]:
        return self.radius

    def reflected(self) -> PointSpreadFunction:
        """Point-reflected kernel ``h(-z)``, the kernel of the adjoint operator."""
        return PointSpreadFunction(self.weights[::-1, ::-1])

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.weights, self.weights[::-1, ::-1]))

    @classmethod
    def delta(cls) -> PointSpreadFunction:
        return cls(np.ones((1, 1)))


# --------------------------------------------------------------------------
# Netpbm


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Read one header token starting at ``pos``, skipping whitespace and comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            end = buf.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        elif c in _WS:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WS and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageIOError("malformed header: unexpected end of file", start)
    return buf[start:pos], pos


def _parse_netpbm(buf: bytes) -> tuple[bytes, int, int, int, int]:
    """Parse a binary P5/P6 header. Returns (magic, width, height, maxval, data offset)."""
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageIOError(f"unsupported magic number {magic!r}, expected P5 or P6", 0)
    pos = 2
    values = []
    for name in ("width", "height", "maxval"):
        start = pos
        tok, pos = _next_token(buf, pos)
        if not tok.isdigit():
            raise ImageIOError(f"malformed header: {name} is {tok!r}", start)
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1:
        raise ImageIOError(f"malformed header: size {width}x{height}", 2)
    if not 1 <= maxval <= 255:
        raise ImageIOError(f"unsupported maxval {maxval} (only 8-bit files)", pos)
    if pos >= len(buf) or buf[pos : pos + 1] not in _WS:
        raise ImageIOError("malformed header: missing whitespace after maxval", pos)
    return magic, width, height, maxval, pos + 1


def load_image(path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6) file.

    Byte values are returned verbatim as float64 grey-values; P5 gives a
    ``(height, width)`` array, P6 a ``(height, width, 3)`` array.
    """
    buf = Path(path).read_bytes()
    magic, width, height, _, offset = _parse_netpbm(buf)
    nch = 1 if magic == b"P5" else 3
    expected = width * height * nch
    payload = buf[offset : offset + expected]
    if len(payload) < expected:
        raise ImageIOError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            offset + len(payload),
        )
    data = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    if nch == 1:
        return data.reshape(height, width)
    return data.reshape(height, width, 3)


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half-up."""
    return np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)


def save_image(img, path) -> None:
    """Write a 1-channel image as P5 or a 3-channel image as P6."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ShapeError(f"unsupported channel count for Netpbm output: shape {img.shape}")
    height, width = img.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    Path(path).write_bytes(header + to_uint8(img).tobytes())


# --------------------------------------------------------------------------
# PSF files


def parse_psf_text(text: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(t) for t in line.split()])
        except ValueError as exc:
            raise ImageIOError(f"PSF line {lineno}: {exc}") from None
    if not rows:
        raise ImageIOError("PSF file contains no weights")
    if len({len(r) for r in rows}) != 1:
        raise ShapeError("PSF rows have unequal length")
    return np.array(rows, dtype=np.float64)


def load_psf(path) -> PointSpreadFunction:
    """Load a kernel from a whitespace-separated text file or a P5 image.

    The result is normalised to unit mass.
    """
    buf = Path(path).read_bytes()
    if buf[:2] == b"P5":
        weights = load_image(path)
    else:
        try:
            text = buf.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ImageIOError("PSF text file is not ASCII", exc.start) from None
        weights = parse_psf_text(text)
    return PointSpreadFunction(weights)


def save_psf(psf: PointSpreadFunction, path) -> None:
    lines = [" ".join(repr(float(v)) for v in row) for row in psf.weights]
    Path(path).write_text("\n".join(lines) + "\n")

