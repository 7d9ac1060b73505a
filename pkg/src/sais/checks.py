"""Randomized invariant suites, shared by the CLI front end and the
acceptance tests.

Each suite returns ``(passed, detail)`` where the detail names the
worst observed slack or error so failures are diagnosable from the
command line.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .feasibility import (ConstraintFunction, demo_constraints,
                          subgradient_projection_step)
from .radon import SparseRowMatrix, build_radon
from .solver import (Problem, StepSizeSchedule, StringPartition, initial_state,
                     iterate, objective_value)
from .tomo import l1_components, tv, tv_subgradient


def check_adjoint(seed: int = 0, pairs: int = 100):
    """<Rx, y> == <x, R^T y> on random pairs at the desk geometry."""
    op = build_radon(64, 64, 24, 64)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        x = rng.normal(size=op.shape[1])
        y = rng.normal(size=op.shape[0])
        lhs = float(np.dot(op.matvec(x), y))
        rhs = float(np.dot(x, op.rmatvec(y)))
        denom = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst <= 1e-10, f"max relative adjoint mismatch {worst:.3e}"


def _l1_subgrad(x):
    return np.sign(x)


def _linf_subgrad(x):
    g = np.zeros_like(x)
    if x.shape[0] == 0:
        return g
    j = int(np.argmax(np.abs(x)))
    if x[j] != 0.0:
        g[j] = np.sign(x[j])
    return g


def _fejer_case_affine(rng):
    n = int(rng.integers(2, 7))
    a = rng.normal(size=n)
    beta = float(rng.normal())
    h = ConstraintFunction(lambda x, a=a, beta=beta: float(a @ x) - beta,
                           lambda x, a=a: a.copy(),
                           nu=float(rng.uniform(0.1, 1.9)))
    x = 3.0 * rng.normal(size=n)
    y = rng.normal(size=n)
    viol = float(a @ y) - beta
    if viol > 0.0:
        # overshoot the exact projection so rounding cannot leave the
        # violation at +1e-16
        margin = 1e-9 * (1.0 + abs(viol))
        y = y - ((viol + margin) / float(a @ a)) * a
    return x, y, h


def _fejer_case_l1(rng):
    n = int(rng.integers(2, 7))
    r = float(rng.uniform(0.5, 3.0))
    h = ConstraintFunction(lambda x, r=r: float(np.abs(x).sum()) - r,
                           lambda x: _l1_subgrad(x),
                           nu=float(rng.uniform(0.1, 1.9)))
    x = 3.0 * rng.normal(size=n)
    y = rng.normal(size=n)
    norm = float(np.abs(y).sum())
    if norm > r:
        y = y * (r * float(rng.random()) / norm)
    return x, y, h


def _fejer_case_linf(rng):
    n = int(rng.integers(2, 7))
    c = float(rng.uniform(0.5, 3.0))
    r = float(rng.uniform(0.5, 3.0))
    h = ConstraintFunction(
        lambda x, c=c, r=r: c * float(np.max(np.abs(x))) - r,
        lambda x, c=c: c * _linf_subgrad(x),
        nu=float(rng.uniform(0.1, 1.9)))
    x = 3.0 * rng.normal(size=n)
    y = rng.normal(size=n)
    norm = c * float(np.max(np.abs(y)))
    if norm > r:
        y = y * (r * float(rng.random()) / norm)
    return x, y, h


def _fejer_case_composite(rng):
    h = replace(demo_constraints()[2], nu=float(rng.uniform(0.1, 1.9)))
    x = 4.0 * rng.normal(size=2)
    y = 4.0 * rng.normal(size=2)
    for _ in range(80):
        if h.value(y) <= 0.0:
            break
        y = 0.5 * y  # the origin is strictly feasible, so this ends
    return x, y, h


_FEJER_FAMILIES = (
    ("affine", _fejer_case_affine),
    ("l1", _fejer_case_l1),
    ("linf", _fejer_case_linf),
    ("composite", _fejer_case_composite),
)


def check_fejer(seed: int = 0, cases: int = 1000):
    """Projection steps never move away from feasible points."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    worst_family = "-"
    for name, make_case in _FEJER_FAMILIES:
        for _ in range(cases):
            x, y, h = make_case(rng)
            if h.value(y) > 0.0:
                return False, f"{name}: case generator produced infeasible y"
            sx = subgradient_projection_step(x, h)
            dx = x - y
            ds = sx - y
            slack = float(dx @ dx) - float(ds @ ds)
            if slack < worst:
                worst = slack
                worst_family = name
    return worst >= -1e-10, f"worst slack {worst:.3e} ({worst_family})"


def _lemma2_instance(seed: int):
    rng = np.random.default_rng(seed)
    n, m, num_strings = 4, 8, 2
    a = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    comps = l1_components(_dense_rows(a), b)
    perm = rng.permutation(m).astype(np.int64)
    strings = [perm[: m // 2], perm[m // 2 :]]
    part = StringPartition(strings, [0.5, 0.5])
    problem = Problem(components=comps, partition=part)
    x0 = 2.0 * rng.normal(size=n)
    ys = 2.0 * rng.normal(size=(100, n))
    return a, b, problem, x0, ys


def _dense_rows(a):
    """Wrap a dense matrix in the row-access interface l1_components wants."""
    m, n = a.shape
    indptr = np.arange(m + 1, dtype=np.int64) * n
    indices = np.tile(np.arange(n, dtype=np.int64), m)
    return SparseRowMatrix(indptr, indices, a.ravel().astype(np.float64), (m, n))


def subgradient_sum_constants(a, partition: StringPartition):
    """Per-string norm bounds: C_i = ||a_i|| accumulated per the string
    layout. Returns (pair_term, weighted_norm_sum) where the first is
    sum_l w_l sum_{s>=2} C_s * (C_1 + .. + C_{s-1})."""
    norms = np.linalg.norm(a, axis=1)
    pair_term = 0.0
    weighted_sum = 0.0
    for w, s in zip(partition.weights, partition.strings):
        cs = norms[s]
        prefix = np.cumsum(cs)
        pair_term += w * float(np.dot(cs[1:], prefix[:-1]))
        weighted_sum += w * float(cs.sum())
    return pair_term, weighted_sum


def check_lemma2(seed: int = 0):
    """Per-iteration descent inequality with the analytic constant.

    On the documented 4-unknown, 8-component, 2-string instance, for
    every iterate x^k and random y:

        ||O(lam, x^k) - y||^2 <= ||x^k - y||^2
                                 - (2/P) * lam * (f(x^k) - f(y))
                                 + C * lam^2

    where C = 4 * pair_term + weighted_norm_sum^2. Also checks the move
    bound ||x^k - O(lam, x^k)|| <= lam * weighted_norm_sum.
    """
    a, b, problem, x0, ys = _lemma2_instance(seed)
    pair_term, weighted_sum = subgradient_sum_constants(a, problem.partition)
    big_c = 4.0 * pair_term + weighted_sum ** 2
    num_strings = problem.partition.num_strings

    schedule = StepSizeSchedule(lam0=0.5, rho=0.999, alpha=1.0, s=0.51,
                                num_strings=num_strings)
    f_y = np.array([objective_value(problem, y) for y in ys])

    state = initial_state(x0)
    worst = np.inf
    worst_move = np.inf
    for _ in range(20):
        new = iterate(state, problem, schedule)
        lam = new.lam
        x_k = state.x
        half = new.x_half
        f_x = objective_value(problem, x_k)
        move = float(np.linalg.norm(x_k - half))
        worst_move = min(worst_move, lam * weighted_sum - move)
        for y, fy in zip(ys, f_y):
            lhs = float(np.sum((half - y) ** 2))
            rhs = (float(np.sum((x_k - y) ** 2))
                   - (2.0 / num_strings) * lam * (f_x - fy)
                   + big_c * lam * lam)
            worst = min(worst, rhs - lhs)
        state = new
    passed = worst >= -1e-9 and worst_move >= -1e-12
    return passed, (f"worst inequality slack {worst:.3e}, "
                    f"worst move-bound slack {worst_move:.3e}")


def _smooth_test_image(rng, r2=8, r1=10):
    # strictly increasing ramp plus noise keeps every denominator away
    # from zero with overwhelming margin
    base = np.add.outer(np.arange(r2), np.arange(r1)) * 0.5
    img = base + rng.uniform(0.5, 1.5, size=(r2, r1))
    return img


def check_tv_subgradient(seed: int = 0, points: int = 50, pairs: int = 1000):
    """Finite-difference agreement at smooth points plus the global
    subgradient inequality."""
    rng = np.random.default_rng(seed)
    h = 1e-6
    worst_rel = 0.0
    for _ in range(points):
        img = _smooth_test_image(rng)
        g = tv_subgradient(img)
        fd = np.zeros_like(img)
        for i in range(img.shape[0]):
            for j in range(img.shape[1]):
                img[i, j] += h
                up = tv(img)
                img[i, j] -= 2 * h
                dn = tv(img)
                img[i, j] += h
                fd[i, j] = (up - dn) / (2 * h)
        rel = float(np.linalg.norm(fd - g)) / float(np.linalg.norm(fd))
        worst_rel = max(worst_rel, rel)

    worst_slack = np.inf
    for _ in range(pairs):
        x = _smooth_test_image(rng)
        z = rng.normal(size=x.shape) * 2.0
        g = tv_subgradient(x)
        slack = tv(z) - tv(x) - float(np.sum(g * (z - x)))
        worst_slack = min(worst_slack, slack)

    passed = worst_rel <= 1e-5 and worst_slack >= -1e-9
    return passed, (f"max fd relative error {worst_rel:.3e}, "
                    f"worst inequality slack {worst_slack:.3e}")


ALL_CHECKS = (
    ("adjoint", check_adjoint),
    ("fejer", check_fejer),
    ("lemma2", check_lemma2),
    ("tv-subgradient", check_tv_subgradient),
)
