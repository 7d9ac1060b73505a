"""On-disk formats: sinogram files, 16-bit PGM images, JSON manifests.

The sinogram format is a one-line ASCII header ``SINO n_views n_bins``
followed by the raw little-endian float64 values, row-major by view.
Images go out as binary 16-bit PGM (big-endian samples, per the format)
plus a small text sidecar recording the float range used for
quantisation, so images round-trip up to the 16-bit grid.
"""

from __future__ import annotations

import json

import numpy as np

from .tomo import Sinogram

_SINO_MAGIC = b"SINO"


def write_sinogram(path, sino: Sinogram) -> None:
    header = f"SINO {sino.n_views} {sino.n_bins}\n".encode("ascii")
    body = np.ascontiguousarray(sino.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_sinogram(path) -> Sinogram:
    with open(path, "rb") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 3 or parts[0] != _SINO_MAGIC:
            raise ValueError(f"{path}: not a sinogram file")
        n_views, n_bins = int(parts[1]), int(parts[2])
        body = fh.read()
    expected = 8 * n_views * n_bins
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, "
                         f"got {len(body)}")
    values = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return Sinogram(values, n_views, n_bins)


def _sidecar_path(path) -> str:
    return str(path) + ".range"


def write_pgm16(path, image: np.ndarray) -> None:
    """Quantise a float image to the 16-bit grid spanned by its range.

    A constant image maps to all zeros. The sidecar ``<path>.range``
    stores the float min and max so ``read_pgm16`` can undo the scale.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("image must be 2-d")
    vmin = float(image.min())
    vmax = float(image.max())
    if vmax > vmin:
        q = np.rint((image - vmin) / (vmax - vmin) * 65535.0)
    else:
        q = np.zeros_like(image)
    q = q.astype(">u2")
    r2, r1 = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{r1} {r2}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())
    with open(_sidecar_path(path), "w", encoding="ascii") as fh:
        fh.write(f"{vmin!r} {vmax!r}\n")


def read_pgm16(path):
    """Read a 16-bit PGM written by ``write_pgm16``.

    Returns ``(image, vmin, vmax)`` with the image mapped back to the
    original float range.
    """
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        dims = fh.readline().split()
        r1, r2 = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 65535:
            raise ValueError(f"{path}: expected 16-bit samples")
        body = fh.read()
    q = np.frombuffer(body, dtype=">u2").reshape(r2, r1).astype(np.float64)
    with open(_sidecar_path(path), "r", encoding="ascii") as fh:
        smin, smax = fh.read().split()
    vmin, vmax = float(smin), float(smax)
    if vmax > vmin:
        image = vmin + q / 65535.0 * (vmax - vmin)
    else:
        image = np.full((r2, r1), vmin)
    return image, vmin, vmax


def write_manifest(path, mapping: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mapping, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
