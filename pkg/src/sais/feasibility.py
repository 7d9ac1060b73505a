"""Feasibility operators built from relaxed subgradient projections.

A constraint is encoded as a convex function ``h`` with the feasible
region ``h(x) <= 0``. One projection step moves a violating point
against a subgradient by ``nu * h(x)+ / ||g||^2``; with ``nu = 1`` this
is the classical Polyak step, and any ``nu`` in ``[sigma, 2 - sigma]``
keeps the operator strongly quasi-nonexpansive. Operators compose
either as a fixed sequential chain or as a uniform average of chained
sub-blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_SIGMA = 0.1


@dataclass(frozen=True)
class ConstraintFunction:
    """Convex constraint ``value(x) <= 0`` with a subgradient callback.

    ``nu`` is the relaxation weight of the projection step for this
    constraint.
    """

    value: Callable[[np.ndarray], float]
    subgrad: Callable[[np.ndarray], np.ndarray]
    nu: float = 1.0


class StallCounter:
    """Counts projection steps skipped because the subgradient vanished
    while the constraint was still violated. A nonzero count flags a
    modelling problem (a violated convex constraint with a zero
    subgradient has an empty feasible set nearby)."""

    def __init__(self):
        self.count = 0

    def bump(self):
        self.count += 1

    def reset(self):
        self.count = 0


STALLED = StallCounter()


def subgradient_projection_step(x: np.ndarray, h: ConstraintFunction,
                                counter: StallCounter = STALLED) -> np.ndarray:
    """One relaxed projection step for a single constraint.

    Feasible points (``h(x) <= 0``) are returned as the same object, so
    fixed points are bitwise fixed. A zero subgradient at a violated
    point bumps the stall counter and also returns ``x`` unchanged.
    """
    val = h.value(x)
    if val <= 0.0:
        return x
    g = h.subgrad(x)
    nsq = float(np.dot(g, g))
    if nsq == 0.0:
        counter.bump()
        return x
    return x - (h.nu * val / nsq) * g


class FeasibilityOperator:
    """Composition of relaxed projection steps over several constraints.

    mode ``"sequential"``
        The steps are chained in the given order.
    mode ``"averaged"``
        ``strings`` lists index blocks into ``steps``; each block is
        chained from the same input and the block results are averaged
        uniformly. Blocks may overlap but must jointly cover all steps.

    Every ``nu`` must lie in ``[sigma, 2 - sigma]``.
    """

    def __init__(self, steps: Sequence[ConstraintFunction], strings=None,
                 sigma: float = DEFAULT_SIGMA):
        if not 0.0 < sigma <= 1.0:
            raise ValueError("sigma must lie in (0, 1]")
        steps = list(steps)
        if not steps:
            raise ValueError("at least one constraint is required")
        for h in steps:
            if not sigma <= h.nu <= 2.0 - sigma:
                raise ValueError(
                    f"relaxation nu={h.nu} outside [{sigma}, {2.0 - sigma}]")
        self.steps = steps
        self.sigma = sigma
        if strings is None:
            self.strings = None
        else:
            self.strings = [np.asarray(s, dtype=np.int64) for s in strings]
            covered = set()
            for s in self.strings:
                if s.ndim != 1 or s.shape[0] == 0:
                    raise ValueError("averaging strings must be nonempty")
                if np.any(s < 0) or np.any(s >= len(steps)):
                    raise ValueError("averaging string index out of range")
                covered.update(int(i) for i in s)
            if covered != set(range(len(steps))):
                raise ValueError("averaging strings must cover every step")

    @property
    def mode(self) -> str:
        return "sequential" if self.strings is None else "averaged"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.strings is None:
            return apply_sequential(x, self)
        return apply_averaged(x, self)


def apply_sequential(x: np.ndarray, op: FeasibilityOperator) -> np.ndarray:
    """Chain all projection steps of a sequential operator."""
    if op.mode != "sequential":
        raise ValueError("operator is not sequential")
    y = x
    for h in op.steps:
        y = subgradient_projection_step(y, h)
    return y


def apply_averaged(x: np.ndarray, op: FeasibilityOperator) -> np.ndarray:
    """Average the chained sub-block results of an averaged operator.

    If every block leaves ``x`` untouched the same object comes back,
    which keeps fixed points bitwise fixed here as well.
    """
    if op.mode != "averaged":
        raise ValueError("operator is not averaged")
    results = []
    for s in op.strings:
        y = x
        for i in s:
            y = subgradient_projection_step(y, op.steps[i])
        results.append(y)
    if all(r is x for r in results):
        return x
    out = np.zeros_like(x, dtype=np.float64)
    for r in results:
        out += r
    out /= len(results)
    return out


def project_nonnegative(x: np.ndarray) -> np.ndarray:
    """Exact projection onto the nonnegative orthant."""
    return np.maximum(x, 0.0)


def _sign_lowest_max(x: np.ndarray) -> np.ndarray:
    # subgradient of the max-norm: indicator of the lowest-index
    # maximal coordinate, signed; zero vector at the origin
    g = np.zeros_like(x)
    j = int(np.argmax(np.abs(x)))
    if x[j] != 0.0:
        g[j] = np.sign(x[j])
    return g


def demo_constraints(nus=(0.5, 0.6, 0.7)):
    """Three 2-D constraints exercising the main subgradient shapes.

    h1(x) = <a, x> + 2 ||x||_1 - 1
    h2(x) = 3 ||x||_inf - 2.5
    h3(x) = ||A x - a||_1 + 2 ||B x - c||_2 - 10

    with a = (2, 1), c = (1, -2), A = [[2, 1], [-1, 3]],
    B = [[1, 0], [-2, 2]]. Subgradient choices at kinks: sign(0) = 0
    for the l1 terms, lowest-index maximal coordinate for the max norm,
    zero for the l2 term at its center. The origin is feasible for all
    three, so chained projections shrink norms monotonically.
    """
    a = np.array([2.0, 1.0])
    A = np.array([[2.0, 1.0], [-1.0, 3.0]])
    B = np.array([[1.0, 0.0], [-2.0, 2.0]])
    c = np.array([1.0, -2.0])

    def h1_value(x):
        return float(a @ x) + 2.0 * float(np.abs(x).sum()) - 1.0

    def h1_subgrad(x):
        return a + 2.0 * np.sign(x)

    def h2_value(x):
        return 3.0 * float(np.max(np.abs(x))) - 2.5

    def h2_subgrad(x):
        return 3.0 * _sign_lowest_max(x)

    def h3_value(x):
        return (float(np.abs(A @ x - a).sum())
                + 2.0 * float(np.linalg.norm(B @ x - c)) - 10.0)

    def h3_subgrad(x):
        g = A.T @ np.sign(A @ x - a)
        res = B @ x - c
        norm = float(np.linalg.norm(res))
        if norm > 0.0:
            g = g + B.T @ (2.0 * res / norm)
        return g

    return [ConstraintFunction(h1_value, h1_subgrad, nus[0]),
            ConstraintFunction(h2_value, h2_subgrad, nus[1]),
            ConstraintFunction(h3_value, h3_subgrad, nus[2])]


def demo_trajectory(rounds: int = 10):
    """Chain the demo constraints ``rounds`` times from (-3, -2.5).

    Returns the list of points including the start, so ``rounds`` new
    points follow the first entry.
    """
    op = FeasibilityOperator(demo_constraints())
    x = np.array([-3.0, -2.5])
    points = [x.copy()]
    for _ in range(rounds):
        x = np.array(op(x), dtype=np.float64, copy=True)
        points.append(x)
    return points
