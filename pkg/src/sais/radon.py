"""Discrete line-integral projector on the [-1, 1]^2 field of view.

Rays are parametrised by a view angle and a signed detector offset;
the weight of a pixel in a ray's row is the exact length of the
ray segment inside that pixel, found by collecting the parameter
values where the ray crosses the grid lines.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class SparseRowMatrix:
    """Immutable CSR triple with per-row access and fast products.

    The dense products are delegated to scipy; the raw int64/float64
    arrays stay exposed for the jit kernels.
    """

    def __init__(self, indptr, indices, data, shape):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        m, n = int(shape[0]), int(shape[1])
        self.shape = (m, n)
        if self.indptr.shape != (m + 1,):
            raise ValueError("indptr must have one entry per row plus one")
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.shape[0]:
            raise ValueError("indptr must start at 0 and end at nnz")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be nondecreasing")
        if self.indices.shape != self.data.shape:
            raise ValueError("indices and data must have equal length")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValueError("column index out of range")
        self._csr = sp.csr_matrix((self.data, self.indices, self.indptr),
                                  shape=self.shape)

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._csr @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self._csr.T @ y

    def row(self, i: int):
        """Views of the column indices and weights of row ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def row_dot(self, i: int, x: np.ndarray) -> float:
        cols, vals = self.row(i)
        return float(np.dot(vals, x[cols]))

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()


def ray_grid_intersections(theta: float, t: float, r1: int, r2: int):
    """Pixel indices and segment lengths for one ray.

    The ray is ``p(s) = t*(cos, sin) + s*(-sin, cos)`` with angle
    ``theta``; it is clipped to the field of view and cut at every
    crossing of a pixel edge. Returns ``(cols, lens)`` with flat pixel
    indices ``i*r1 + j`` (row-major from the top-left) and the lengths
    of the segments inside those pixels. Rays missing the field of
    view return empty arrays.
    """
    ct, st = np.cos(theta), np.sin(theta)
    ox, oy = t * ct, t * st
    dx, dy = -st, ct

    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    eps = 1e-12
    smin, smax = -np.inf, np.inf
    for o, d in ((ox, dx), (oy, dy)):
        if abs(d) > eps:
            s1 = (-1.0 - o) / d
            s2 = (1.0 - o) / d
            if s1 > s2:
                s1, s2 = s2, s1
            smin = max(smin, s1)
            smax = min(smax, s2)
        elif not -1.0 <= o <= 1.0:
            return empty
    if not smax > smin:
        return empty

    crossings = [np.array([smin, smax])]
    if abs(dx) > eps:
        sx = (-1.0 + np.arange(r1 + 1) * (2.0 / r1) - ox) / dx
        crossings.append(sx[(sx > smin) & (sx < smax)])
    if abs(dy) > eps:
        sy = (1.0 - np.arange(r2 + 1) * (2.0 / r2) - oy) / dy
        crossings.append(sy[(sy > smin) & (sy < smax)])
    s = np.sort(np.concatenate(crossings))
    lens = np.diff(s)
    mids = 0.5 * (s[:-1] + s[1:])

    keep = lens > 1e-14
    lens = lens[keep]
    mids = mids[keep]
    if lens.size == 0:
        return empty

    px = ox + mids * dx
    py = oy + mids * dy
    j = np.floor((px + 1.0) / (2.0 / r1)).astype(np.int64)
    i = np.floor((1.0 - py) / (2.0 / r2)).astype(np.int64)
    np.clip(j, 0, r1 - 1, out=j)
    np.clip(i, 0, r2 - 1, out=i)
    return i * r1 + j, lens


def build_radon(r1: int, r2: int, n_views: int, n_bins: int) -> SparseRowMatrix:
    """Assemble the projector for a parallel view/bin layout.

    View ``v`` has angle ``v * pi / n_views``; bin ``d`` sits at offset
    ``-1 + (d + 0.5) * 2 / n_bins``. Row ``v * n_bins + d`` holds the
    ray of bin ``d`` under view ``v``.
    """
    if min(r1, r2, n_views, n_bins) < 1:
        raise ValueError("grid and detector sizes must be positive")
    m = n_views * n_bins
    cols_parts = []
    lens_parts = []
    counts = np.zeros(m + 1, dtype=np.int64)
    row = 0
    for v in range(n_views):
        theta = v * np.pi / n_views
        for d in range(n_bins):
            t = -1.0 + (d + 0.5) * (2.0 / n_bins)
            cols, lens = ray_grid_intersections(theta, t, r1, r2)
            cols_parts.append(cols)
            lens_parts.append(lens)
            counts[row + 1] = cols.shape[0]
            row += 1
    indptr = np.cumsum(counts)
    indices = np.concatenate(cols_parts) if cols_parts else np.empty(0, np.int64)
    data = np.concatenate(lens_parts) if lens_parts else np.empty(0, np.float64)
    return SparseRowMatrix(indptr, indices, data, (m, r1 * r2))
