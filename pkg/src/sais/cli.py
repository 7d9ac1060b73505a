"""Command-line front end.

Subcommands: ``simulate`` (phantom + sinogram files), ``reconstruct``
(full experiment run), ``figure1`` (the 2-D feasibility trajectory
demo), ``phantom`` (head phantom image), ``check`` (invariant suites).

The default output directory comes from ``SAIS_OUTPUT_DIR`` (falling
back to ``./sais-out``). Exit codes: 0 success, 1 runtime failure with
a one-line diagnostic on stderr, 2 usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .checks import ALL_CHECKS
from .experiment import ExperimentConfig, run_experiment
from .feasibility import demo_constraints, demo_trajectory
from .fileio import write_pgm16, write_sinogram
from .phantom import shepp_logan
from .radon import build_radon
from .tomo import simulate_sinogram


def _default_outdir() -> str:
    return os.environ.get("SAIS_OUTPUT_DIR", "sais-out")


def _add_noise_flags(p: argparse.ArgumentParser):
    p.add_argument("--kappa", type=float, default=None,
                   help="photon count scale; enables Poisson noise")
    p.add_argument("--noise-free", action="store_true",
                   help="use exact line integrals (the default)")


def _resolve_kappa(args, parser) -> float | None:
    if args.kappa is not None and args.noise_free:
        parser.error("--kappa conflicts with --noise-free")
    return args.kappa


def _parse_mu(text: str):
    if text in ("m", "p"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "mu must be 'm', 'p', or a positive number")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sais",
        description="String-averaging incremental subgradient solver "
                    "with a TV-constrained tomography front end.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate",
                           help="write the phantom and its sinogram to disk")
    p_sim.add_argument("--size", type=int, default=64)
    p_sim.add_argument("--views", type=int, default=24)
    p_sim.add_argument("--bins", type=int, default=64)
    p_sim.add_argument("--seed", type=int, default=1)
    _add_noise_flags(p_sim)
    p_sim.add_argument("--out", default=None, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_rec = sub.add_parser("reconstruct", help="run a reconstruction")
    p_rec.add_argument("--size", type=int, default=64,
                       help="image side length in pixels")
    p_rec.add_argument("--views", type=int, default=24)
    p_rec.add_argument("--bins", type=int, default=64)
    p_rec.add_argument("--strings", type=int, default=1,
                       help="number of strings the components split into")
    p_rec.add_argument("--seed", type=int, default=1)
    p_rec.add_argument("--iters", type=int, default=None,
                       help="iteration budget (default 300 when no "
                            "--seconds is given)")
    p_rec.add_argument("--seconds", type=float, default=None,
                       help="wall-clock budget in seconds")
    _add_noise_flags(p_rec)
    p_rec.add_argument("--tau", type=float, default=None,
                       help="TV budget; defaults to the ground truth's TV")
    p_rec.add_argument("--nu", type=float, default=1.0,
                       help="relaxation of the TV projection step")
    p_rec.add_argument("--rho", type=float, default=0.999)
    p_rec.add_argument("--alpha", type=float, default=1.0)
    p_rec.add_argument("--step-exponent", type=float, default=0.51,
                       dest="step_exponent", metavar="S")
    p_rec.add_argument("--mu", type=_parse_mu, default="m",
                       help="step scale count: 'm', 'p', or a number")
    p_rec.add_argument("--lam0-scale", type=float, default=1.0,
                       dest="lam0_scale")
    p_rec.add_argument("--threads", type=int, default=None,
                       help="string-pass threads (default: cpu count, "
                            "capped at --strings)")
    p_rec.add_argument("--stride", type=int, default=1,
                       help="record metrics every this many iterations")
    p_rec.add_argument("--sinogram", default=None,
                       help="read data from this sinogram file instead "
                            "of simulating (requires --tau)")
    p_rec.add_argument("--out", default=None, help="output directory")
    p_rec.set_defaults(func=_cmd_reconstruct)

    p_fig = sub.add_parser("figure1",
                           help="print the feasibility trajectory demo "
                                "(ten projection rounds in 2-D)")
    p_fig.add_argument("--rounds", type=int, default=10)
    p_fig.set_defaults(func=_cmd_figure1)

    p_ph = sub.add_parser("phantom", help="write the head phantom as PGM")
    p_ph.add_argument("--size", type=int, default=256)
    p_ph.add_argument("--out", default=None, help="output directory")
    p_ph.set_defaults(func=_cmd_phantom)

    p_chk = sub.add_parser("check", help="run the invariant suites")
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.set_defaults(func=_cmd_check)

    return parser


def _cmd_simulate(args, parser) -> int:
    kappa = _resolve_kappa(args, parser)
    outdir = args.out or _default_outdir()
    os.makedirs(outdir, exist_ok=True)
    img = shepp_logan(args.size, args.size)
    op = build_radon(args.size, args.size, args.views, args.bins)
    sino, rel_noise = simulate_sinogram(op, img, args.views, args.bins,
                                        kappa, args.seed)
    phantom_path = os.path.join(outdir, "phantom.pgm")
    sino_path = os.path.join(outdir, "data.sino")
    write_pgm16(phantom_path, img)
    write_sinogram(sino_path, sino)
    print(f"wrote {phantom_path}")
    print(f"wrote {sino_path}")
    print(f"relative noise: {rel_noise:.6f}")
    return 0


def _cmd_reconstruct(args, parser) -> int:
    kappa = _resolve_kappa(args, parser)
    iters = args.iters
    if iters is None and args.seconds is None:
        iters = 300
    threads = args.threads
    if threads is None:
        threads = min(os.cpu_count() or 1, args.strings)
    config = ExperimentConfig(
        r1=args.size, r2=args.size, n_views=args.views, n_bins=args.bins,
        num_strings=args.strings, seed=args.seed, kappa=kappa, tau=args.tau,
        nu=args.nu, rho=args.rho, alpha=args.alpha, s=args.step_exponent,
        mu=args.mu, lam0_scale=args.lam0_scale, max_iters=iters,
        max_seconds=args.seconds, threads=threads, stride=args.stride,
        sinogram_path=args.sinogram, outdir=args.out or _default_outdir())
    result = run_experiment(config)
    last = result.records[-1] if result.records else None
    if last is not None:
        line = (f"iterations: {result.state.k}  f: {last.f:.6e}  "
                f"tv: {last.tv:.6e}")
        if last.rse is not None:
            line += f"  rse: {last.rse:.6e}"
        print(line)
    for name in sorted(result.paths):
        print(f"wrote {result.paths[name]}")
    return 0


def _cmd_figure1(args, parser) -> int:
    points = demo_trajectory(args.rounds)
    constraints = demo_constraints()
    print("round  x1  x2  max_violation")
    for t, x in enumerate(points):
        viol = max(max(h.value(x) for h in constraints), 0.0)
        print(f"{t} {float(x[0])!r} {float(x[1])!r} {viol:.3e}")
    final = points[-1]
    feasible = all(h.value(final) <= 1e-4 for h in constraints)
    print(f"final point feasible within 1e-4: {feasible}")
    return 0 if feasible else 1


def _cmd_phantom(args, parser) -> int:
    outdir = args.out or _default_outdir()
    os.makedirs(outdir, exist_ok=True)
    img = shepp_logan(args.size, args.size)
    path = os.path.join(outdir, "phantom.pgm")
    write_pgm16(path, img)
    print(f"wrote {path}")
    return 0


def _cmd_check(args, parser) -> int:
    failed = 0
    for name, fn in ALL_CHECKS:
        passed, detail = fn(args.seed)
        tag = "PASS" if passed else "FAIL"
        print(f"{tag} {name}: {detail}")
        if not passed:
            failed += 1
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # surface one line, keep exit codes stable
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
