"""Regenerate the bundled benchmark assets in src/rrrl/data/.

The test image is scikit-image's public-domain ``camera`` picture reduced to
256x256 by 2x2 block averaging. The kernels are synthetic camera-shake paths.
"""

from pathlib import Path

import numpy as np
from skimage import data

from rrrl.image import save_image

OUT = Path(__file__).resolve().parents[1] / "src" / "rrrl" / "data"


def shake_kernel(size, points, width=0.6, samples=4000):
    """Rasterise a smooth path through ``points`` (kernel-centred coordinates)."""
    pts = np.asarray(points, dtype=float)
    t = np.linspace(0, 1, len(pts))
    s = np.linspace(0, 1, samples)
    ys = np.interp(s, t, pts[:, 0])
    xs = np.interp(s, t, pts[:, 1])
    # dwell varies along the path so the kernel is not uniform
    dwell = 0.6 + 0.4 * np.cos(3.0 * np.pi * s) ** 2
    r = size // 2
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    k = np.zeros((size, size))
    for y, x, w in zip(ys[::20], xs[::20], dwell[::20]):
        k += w * np.exp(-((yy - y) ** 2 + (xx - x) ** 2) / (2 * width**2))
    k[k < 1e-3 * k.max()] = 0.0
    return k / k.sum()


def write_kernel(k, path):
    lines = [" ".join(f"{v:.6f}" for v in row) for row in k]
    path.write_text("\n".join(lines) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    cam = data.camera().astype(float)
    small = cam.reshape(256, 2, 256, 2).mean(axis=(1, 3))
    save_image(small, OUT / "cameraman256.pgm")
    fig1 = shake_kernel(11, [(-3, -4), (-1, -1), (2, -2), (3, 1), (1, 4), (-2, 3)])
    write_kernel(fig1, OUT / "psf_fig1.txt")
    fig2 = shake_kernel(
        25, [(-9, -10), (-6, -3), (-7, 4), (-2, 9), (4, 7), (6, 0), (9, -6)], width=0.7
    )
    write_kernel(fig2, OUT / "psf_fig2.txt")


if __name__ == "__main__":
    main()
