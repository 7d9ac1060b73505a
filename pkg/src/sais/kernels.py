"""Hot numeric kernels, jit-compiled when numba is usable.

Three operations dominate the reconstruction runtime: the sequential
subgradient sweep over the rows of a sparse system, the isotropic
total-variation value, and its subgradient. Each exists in a plain
numpy form (``*_numpy``) and, when numba imports cleanly, a compiled
form (``*_numba``). The public names ``l1_string_pass``, ``tv_value``
and ``tv_subgradient`` are bound to one variant at import time.

Set the environment variable ``SAIS_DISABLE_NUMBA=1`` before import to
force the numpy path; both variants stay importable for benchmarking.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    flag = os.environ.get("SAIS_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and not _numba_disabled()


def l1_string_pass_numpy(x, indptr, indices, data, b, order, lam):
    """Run sequential subgradient steps for the rows listed in ``order``.

    Each step treats one component ``|<row_i, x> - b[i]|`` of a sparse
    absolute-residual sum and moves ``x`` in place by ``-lam`` times the
    component subgradient, evaluated at the current (already updated)
    point. A zero residual contributes a zero subgradient and leaves
    ``x`` unchanged.

    Parameters
    ----------
    x : ndarray
        Current point, modified in place.
    indptr, indices, data : ndarray
        CSR arrays of the sparse system matrix.
    b : ndarray
        Right-hand side.
    order : ndarray of int64
        Row indices visited sequentially.
    lam : float
        Step size, must be nonnegative.
    """
    for i in order:
        lo = indptr[i]
        hi = indptr[i + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        r = np.dot(vals, x[cols]) - b[i]
        if r > 0.0:
            x[cols] -= lam * vals
        elif r < 0.0:
            x[cols] += lam * vals


def _l1_string_pass_loops(x, indptr, indices, data, b, order, lam):
    for t in range(order.shape[0]):
        i = order[t]
        lo = indptr[i]
        hi = indptr[i + 1]
        r = -b[i]
        for p in range(lo, hi):
            r += data[p] * x[indices[p]]
        if r > 0.0:
            for p in range(lo, hi):
                x[indices[p]] -= lam * data[p]
        elif r < 0.0:
            for p in range(lo, hi):
                x[indices[p]] += lam * data[p]


def tv_value_numpy(img):
    """Isotropic total variation of a 2-D image.

    Sum over pixels of sqrt(dv^2 + dh^2) where dv/dh are backward
    differences against the upper and left neighbour; neighbours
    outside the grid count as zero, so border pixels compare against
    an implicit zero frame on the top and left.
    """
    dv = img.copy()
    dv[1:, :] -= img[:-1, :]
    dh = img.copy()
    dh[:, 1:] -= img[:, :-1]
    return float(np.sqrt(dv * dv + dh * dh).sum())


def _tv_value_loops(img):
    r2, r1 = img.shape
    total = 0.0
    for i in range(r2):
        for j in range(r1):
            xij = img[i, j]
            up = img[i - 1, j] if i > 0 else 0.0
            left = img[i, j - 1] if j > 0 else 0.0
            dv = xij - up
            dh = xij - left
            total += np.sqrt(dv * dv + dh * dh)
    return total


def tv_subgradient_numpy(img):
    """Subgradient of the isotropic total variation at ``img``.

    Each pixel collects three parcels: its own difference term and the
    contributions it makes to the terms of the pixel below and the
    pixel to the right. Parcels whose denominator vanishes are dropped
    (zero is a valid choice inside the subdifferential there), and
    parcels referring to pixels outside the grid are absent.
    """
    dv = img.copy()
    dv[1:, :] -= img[:-1, :]
    dh = img.copy()
    dh[:, 1:] -= img[:, :-1]
    den = np.sqrt(dv * dv + dh * dh)
    mask = den > 0.0

    g = np.zeros_like(img)
    np.divide(dv + dh, den, out=g, where=mask)
    frac_h = np.zeros_like(img)
    np.divide(dh, den, out=frac_h, where=mask)
    g[:, :-1] -= frac_h[:, 1:]
    frac_v = np.zeros_like(img)
    np.divide(dv, den, out=frac_v, where=mask)
    g[:-1, :] -= frac_v[1:, :]
    return g


def _tv_subgradient_loops(img):
    r2, r1 = img.shape
    g = np.zeros_like(img)
    for i in range(r2):
        for j in range(r1):
            xij = img[i, j]
            up = img[i - 1, j] if i > 0 else 0.0
            left = img[i, j - 1] if j > 0 else 0.0
            dv = xij - up
            dh = xij - left
            acc = 0.0
            den = np.sqrt(dv * dv + dh * dh)
            if den > 0.0:
                acc += (dv + dh) / den
            if i + 1 < r2:
                below = img[i + 1, j]
                left_b = img[i + 1, j - 1] if j > 0 else 0.0
                dvb = below - xij
                dhb = below - left_b
                den = np.sqrt(dvb * dvb + dhb * dhb)
                if den > 0.0:
                    acc -= dvb / den
            if j + 1 < r1:
                right = img[i, j + 1]
                up_r = img[i - 1, j + 1] if i > 0 else 0.0
                dvr = right - up_r
                dhr = right - xij
                den = np.sqrt(dvr * dvr + dhr * dhr)
                if den > 0.0:
                    acc -= dhr / den
            g[i, j] = acc
    return g


if NUMBA_ENABLED:
    l1_string_pass_numba = _njit(cache=True, nogil=True)(_l1_string_pass_loops)
    tv_value_numba = _njit(cache=True, nogil=True)(_tv_value_loops)
    tv_subgradient_numba = _njit(cache=True, nogil=True)(_tv_subgradient_loops)

    l1_string_pass = l1_string_pass_numba
    tv_value = tv_value_numba
    tv_subgradient = tv_subgradient_numba
else:
    l1_string_pass = l1_string_pass_numpy
    tv_value = tv_value_numpy
    tv_subgradient = tv_subgradient_numpy
