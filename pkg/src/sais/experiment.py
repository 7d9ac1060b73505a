"""Experiment harness: configs, per-iteration metrics, CSV and image
emission, and the reproducibility manifest.

A run is fully described by an ExperimentConfig; the manifest written
next to the outputs echoes that config verbatim so the run can be
rebuilt from the manifest alone. Floats in the CSV are written with
``repr`` so parsing them back is lossless; reruns with the same config,
seed and thread cap produce byte-identical rows. The wall clock is
injectable: metrics keep their real timings by default, while tests
(and the determinism gate) can pass a logical clock to make the
elapsed column reproducible too.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .fileio import (read_sinogram, write_manifest, write_pgm16,
                     write_sinogram)
from .solver import SolverState, StepSizeSchedule, run
from .tomo import (TomoSetup, data_scaled_step, make_tomo_problem,
                   residual_l1, tv)

CSV_FIELDS = ("k", "elapsed_s", "f", "tv", "rse", "lambda", "cosine")


@dataclass(frozen=True)
class RunRecord:
    """Metrics of one iteration; ``k`` is the 0-based step index, so the
    row with k=0 describes the step taken with the base step size."""

    k: int
    elapsed_s: float
    f: float
    tv: float
    rse: float | None
    lam: float
    cosine: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings of one reconstruction run.

    ``kappa=None`` means noise-free data; ``tau=None`` means the TV
    budget is taken from the ground truth (only possible on simulated
    data). ``mu`` may be the literal strings "m" (component count) or
    "p" (string count) or a positive number. ``sinogram_path`` switches
    from simulation to file input.
    """

    r1: int = 64
    r2: int = 64
    n_views: int = 24
    n_bins: int = 64
    num_strings: int = 1
    seed: int = 1
    kappa: float | None = None
    tau: float | None = None
    nu: float = 1.0
    rho: float = 0.999
    alpha: float = 1.0
    s: float = 0.51
    mu: object = "m"
    lam0_scale: float = 1.0
    max_iters: int | None = None
    max_seconds: float | None = None
    threads: int = 1
    stride: int = 1
    sinogram_path: str | None = None
    outdir: str | None = None

    def __post_init__(self):
        if min(self.r1, self.r2, self.n_views, self.n_bins) < 1:
            raise ValueError("geometry counts must be positive")
        if self.num_strings < 1:
            raise ValueError("need at least one string")
        if self.kappa is not None and not self.kappa > 0.0:
            raise ValueError("kappa must be positive")
        if self.tau is not None and self.tau < 0.0:
            raise ValueError("tau must be nonnegative")
        if not 0.0 < self.nu < 2.0:
            raise ValueError("nu must lie in (0, 2)")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 < self.s <= 1.0:
            raise ValueError("s must lie in (0, 1]")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if not self.lam0_scale > 0.0:
            raise ValueError("lam0 scale must be positive")
        if isinstance(self.mu, str):
            if self.mu not in ("m", "p"):
                raise ValueError("mu must be 'm', 'p', or a positive number")
        elif not self.mu > 0:
            raise ValueError("mu must be 'm', 'p', or a positive number")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


def resolve_mu(config: ExperimentConfig, m: int) -> float:
    if config.mu == "m":
        return float(m)
    if config.mu == "p":
        return float(config.num_strings)
    return float(config.mu)


def rse(x: np.ndarray, x_true: np.ndarray) -> float:
    """Relative squared error ``||x - x_true||^2 / ||x_true||^2``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    t = np.asarray(x_true, dtype=np.float64).ravel()
    tsq = float(np.dot(t, t))
    if tsq == 0.0:
        raise ValueError("ground truth is all zero")
    d = x - t
    return float(np.dot(d, d)) / tsq


def profile_line(image: np.ndarray, column: int) -> np.ndarray:
    """Pixel values along one vertical line of the image."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("image must be 2-d")
    if not 0 <= column < image.shape[1]:
        raise ValueError("column out of range")
    return image[:, column].copy()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    setup: TomoSetup
    records: list
    state: SolverState
    lam0: float
    mu: float
    paths: dict

    @property
    def image(self) -> np.ndarray:
        return self.state.x.reshape(self.setup.shape)


def first_below(records, threshold: float, metric: str = "f"):
    """First recorded ``k`` whose metric is <= threshold, else None."""
    for rec in records:
        v = getattr(rec, metric)
        if v is not None and v <= threshold:
            return rec.k
    return None


def best_value(records, metric: str = "f") -> float:
    """Best (smallest) recorded value of a metric."""
    vals = [getattr(r, metric) for r in records if getattr(r, metric) is not None]
    if not vals:
        raise ValueError("no recorded values for " + metric)
    return min(vals)


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow([r.k, repr(r.elapsed_s), repr(r.f), repr(r.tv),
                        "" if r.rse is None else repr(r.rse),
                        repr(r.lam), repr(r.cosine)])


def read_records_csv(path):
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        records = []
        for row in reader:
            records.append(RunRecord(
                k=int(row[0]), elapsed_s=float(row[1]), f=float(row[2]),
                tv=float(row[3]), rse=float(row[4]) if row[4] else None,
                lam=float(row[5]), cosine=float(row[6])))
    return records


def _build_setup(config: ExperimentConfig) -> TomoSetup:
    sino = None
    if config.sinogram_path is not None:
        sino = read_sinogram(config.sinogram_path)
    return make_tomo_problem(
        config.r1, config.r2, config.n_views, config.n_bins,
        config.num_strings, config.seed, kappa=config.kappa, tau=config.tau,
        nu=config.nu, sinogram=sino)


def run_experiment(config: ExperimentConfig,
                   timer=time.perf_counter) -> ExperimentResult:
    """Build the problem from the config, run under budget, emit files.

    One RunRecord is kept per ``stride`` iterations (every iteration by
    default). When the config names an output directory, the metrics
    CSV, the reconstruction (plus, on simulated data, the scaled ground
    truth) as 16-bit PGM, and the JSON manifest land there.
    """
    if config.max_iters is None and config.max_seconds is None:
        raise ValueError("config needs max_iters and/or max_seconds")
    setup = _build_setup(config)
    op = setup.operator
    b = setup.sinogram.values
    mu = resolve_mu(config, op.shape[0])
    lam0 = data_scaled_step(op, b, setup.x0, mu, config.lam0_scale)
    schedule = StepSizeSchedule(lam0, config.rho, config.alpha, config.s,
                                config.num_strings)

    truth_flat = None if setup.x_true is None else setup.x_true.ravel()
    shape = setup.shape

    def observer(state: SolverState, elapsed: float):
        idx = state.k - 1
        if idx % config.stride != 0:
            return None
        f = residual_l1(op, b, state.x)
        tvv = tv(state.x.reshape(shape))
        err = None if truth_flat is None else rse(state.x, truth_flat)
        return RunRecord(k=idx, elapsed_s=elapsed, f=f, tv=tvv, rse=err,
                         lam=state.lam, cosine=state.c_used)

    state, records = run(setup.x0, setup.problem, schedule,
                         max_iters=config.max_iters,
                         max_seconds=config.max_seconds,
                         observer=observer, threads=config.threads,
                         timer=timer)

    result = ExperimentResult(config=config, setup=setup, records=records,
                              state=state, lam0=lam0, mu=mu, paths={})
    if config.outdir is not None:
        result.paths = _write_outputs(result)
    return result


def _manifest_dict(result: ExperimentResult) -> dict:
    setup = result.setup
    records = result.records
    final = {
        "iterations": result.state.k,
        "records": len(records),
        "elapsed_s": records[-1].elapsed_s if records else 0.0,
        "f": records[-1].f if records else None,
        "tv": records[-1].tv if records else None,
        "rse": records[-1].rse if records else None,
    }
    return {
        "config": asdict(result.config),
        "derived": {
            "lam0": result.lam0,
            "mu": result.mu,
            "tau": setup.tau,
            "rel_noise": setup.rel_noise,
            "rows": setup.operator.shape[0],
            "pixels": setup.operator.shape[1],
            "nnz": setup.operator.nnz,
            "backend": "numba" if kernels.NUMBA_ENABLED else "numpy",
        },
        "final": final,
    }


def _write_outputs(result: ExperimentResult) -> dict:
    outdir = result.config.outdir
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "csv": os.path.join(outdir, "metrics.csv"),
        "image": os.path.join(outdir, "recon.pgm"),
        "manifest": os.path.join(outdir, "manifest.json"),
        "sinogram": os.path.join(outdir, "data.sino"),
    }
    write_records_csv(paths["csv"], result.records)
    write_pgm16(paths["image"], result.image)
    write_sinogram(paths["sinogram"], result.setup.sinogram)
    if result.setup.x_true is not None:
        paths["truth"] = os.path.join(outdir, "truth.pgm")
        write_pgm16(paths["truth"], result.setup.x_true)
    write_manifest(paths["manifest"], _manifest_dict(result))
    return paths
