"""Rasteriser for the standard ten-ellipse head phantom.

Uses the modified intensity set whose pixel values stay inside [0, 1]
(skull ring at 1, brain tissue around 0.2, small inserts 0.1 above
their background).
"""

from __future__ import annotations

import numpy as np

# additive value, semi-axis along x, semi-axis along y, centre x,
# centre y, rotation in degrees (counter-clockwise)
_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def pixel_centers(r1: int, r2: int):
    """Pixel-centre coordinates on the [-1, 1]^2 field of view.

    Returns ``(xs, ys)`` where ``xs[j]`` is the x of column ``j`` (left
    to right) and ``ys[i]`` the y of row ``i`` (top to bottom).
    """
    xs = -1.0 + (np.arange(r1) + 0.5) * (2.0 / r1)
    ys = 1.0 - (np.arange(r2) + 0.5) * (2.0 / r2)
    return xs, ys


def shepp_logan(r1: int, r2: int) -> np.ndarray:
    """Sample the phantom on an ``r2 x r1`` grid (rows x columns).

    Each pixel takes the sum of the intensities of the ellipses whose
    interior (boundary included) contains its centre. Row 0 is the top
    of the image.
    """
    if r1 < 8 or r2 < 8:
        raise ValueError("grid must be at least 8 x 8")
    xs, ys = pixel_centers(r1, r2)
    X = xs[np.newaxis, :]
    Y = ys[:, np.newaxis]
    img = np.zeros((r2, r1), dtype=np.float64)
    for ampl, a, b, x0, y0, phi in _ELLIPSES:
        rad = np.deg2rad(phi)
        ct, st = np.cos(rad), np.sin(rad)
        xr = (X - x0) * ct + (Y - y0) * st
        yr = -(X - x0) * st + (Y - y0) * ct
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += ampl
    # regions whose intensities cancel (1 - 0.8 - 0.2) would otherwise
    # keep a residue of about -3e-17 and violate nonnegativity
    np.maximum(img, 0.0, out=img)
    return img
