"""String-averaging incremental subgradient engine.

The objective is a finite sum of convex components. Each iteration
splits the component indices into strings, runs sequential subgradient
steps along every string starting from the same point, averages the
string end points with fixed convex weights, and hands the average to
a feasibility operator. The step size shrinks like ``k**-s`` and is
additionally damped by the cosine of the angle between the optimality
move and the feasibility move of the previous iteration, which kicks
in when the two halves of the iteration start fighting each other.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1

# norms below this are treated as zero directions in the cosine factor
_TINY_NORM = 1e-300


@dataclass(frozen=True)
class ConvexComponent:
    """One summand of the objective: a value and a subgradient callback.

    ``subgrad(x)`` must return an element of the subdifferential at
    ``x``; any valid choice is acceptable where it is not unique.
    """

    value: Callable[[np.ndarray], float]
    subgrad: Callable[[np.ndarray], np.ndarray]


class StringPartition:
    """Disjoint cover of ``range(m)`` by ordered strings with convex weights.

    Parameters
    ----------
    strings : sequence of int sequences
        Each string lists component indices in their processing order.
        Strings must be nonempty, pairwise disjoint, and jointly cover
        ``0..m-1``.
    weights : sequence of float
        One weight per string; nonnegative and summing to 1 within
        1e-12.
    """

    def __init__(self, strings, weights):
        self.strings = [np.ascontiguousarray(s, dtype=np.int64) for s in strings]
        self.weights = np.asarray(weights, dtype=np.float64)
        if len(self.strings) == 0:
            raise ValueError("at least one string is required")
        if len(self.strings) != self.weights.shape[0]:
            raise ValueError("one weight per string is required")
        for s in self.strings:
            if s.ndim != 1 or s.shape[0] == 0:
                raise ValueError("strings must be nonempty 1-d index lists")
        flat = np.concatenate(self.strings)
        m = flat.shape[0]
        if not np.array_equal(np.sort(flat), np.arange(m, dtype=np.int64)):
            raise ValueError("strings must partition 0..m-1 without repeats")
        if np.any(self.weights < 0.0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.num_components = m

    @property
    def num_strings(self) -> int:
        return len(self.strings)


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _shuffled_indices(m: int, seed: int) -> np.ndarray:
    # Fisher-Yates driven by splitmix64 so the permutation is pinned to
    # the seed alone, not to any library's shuffle implementation.
    idx = np.arange(m, dtype=np.int64)
    state = seed & _MASK64
    for i in range(m - 1, 0, -1):
        state, z = _splitmix64(state)
        j = z % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def make_random_partition(m: int, num_strings: int, seed: int) -> StringPartition:
    """Shuffle ``0..m-1`` and cut the result into equal-weight strings.

    The shuffle is a seeded Fisher-Yates; the permutation is split into
    ``num_strings`` contiguous chunks whose lengths differ by at most
    one, longer chunks first. All weights are ``1/num_strings``.
    """
    if num_strings < 1 or num_strings > m:
        raise ValueError("need 1 <= num_strings <= m")
    perm = _shuffled_indices(m, seed)
    base = m // num_strings
    extra = m % num_strings
    strings = []
    pos = 0
    for ell in range(num_strings):
        size = base + (1 if ell < extra else 0)
        strings.append(perm[pos : pos + size])
        pos += size
    weights = np.full(num_strings, 1.0 / num_strings)
    return StringPartition(strings, weights)


def _identity(x: np.ndarray) -> np.ndarray:
    return x


@dataclass
class Problem:
    """Objective components, their partition, and the feasibility map.

    ``string_stepper``, when given, replaces the generic sequential
    component sweep with a fused implementation; it receives
    ``(x, string, lam)`` and must return the string end point without
    touching ``x``. It has to agree with ``string_pass`` over the same
    components.
    """

    components: Sequence[ConvexComponent]
    partition: StringPartition
    feasibility: Callable[[np.ndarray], np.ndarray] = _identity
    string_stepper: Callable[[np.ndarray, np.ndarray, float], np.ndarray] | None = None

    def __post_init__(self):
        if len(self.components) != self.partition.num_components:
            raise ValueError("partition must cover exactly the component indices")


def objective_value(problem: Problem, x: np.ndarray) -> float:
    """Weighted objective: num_strings * sum_l w_l * sum_{i in S_l} f_i(x)."""
    part = problem.partition
    total = 0.0
    for w, s in zip(part.weights, part.strings):
        sub = 0.0
        for i in s:
            sub += problem.components[i].value(x)
        total += w * sub
    return part.num_strings * total


def string_pass(x: np.ndarray, string: np.ndarray, lam: float, components) -> np.ndarray:
    """Sequential subgradient steps along one string, from a private copy.

    Component ``string[t]`` is stepped at the point produced by the
    previous step, not at the string's start point.
    """
    if lam < 0.0:
        raise ValueError("step size must be nonnegative")
    y = np.array(x, dtype=np.float64, copy=True)
    for i in string:
        g = components[i].subgrad(y)
        y = y - lam * g
    return y


def optimality_operator(x, lam, problem: Problem, map_fn=map) -> np.ndarray:
    """Average of the string end points, weights and order fixed.

    Every string starts from the same ``x``; results are combined in
    ascending string order so the float accumulation is reproducible.
    ``map_fn`` may be an executor map; it must preserve input order.
    """
    part = problem.partition
    stepper = problem.string_stepper
    if stepper is None:
        comps = problem.components

        def stepper(start, string, step):
            return string_pass(start, string, step, comps)

    ends = list(map_fn(lambda s: stepper(x, s, lam), part.strings))
    out = np.zeros_like(x, dtype=np.float64)
    for w, end in zip(part.weights, ends):
        out += w * end
    return out


@dataclass(frozen=True)
class StepSizeSchedule:
    """Diminishing, cosine-damped step-size rule.

    ``lam(k, c) = (1 - rho * c) * lam0 / (alpha * k**s / num_strings + 1)``

    with ``s in (0, 1]`` (the convergence theory wants ``s > 1/2``),
    ``rho in [0, 1)`` the damping weight, and ``c`` the cosine factor
    carried by the solver state (zero at the first iteration).
    """

    lam0: float
    rho: float = 0.999
    alpha: float = 1.0
    s: float = 0.51
    num_strings: int = 1

    def __post_init__(self):
        if not self.lam0 > 0.0:
            raise ValueError("lam0 must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.s <= 1.0:
            raise ValueError("step exponent must lie in (0, 1]")
        if self.num_strings < 1:
            raise ValueError("num_strings must be at least 1")


def next_step_size(schedule: StepSizeSchedule, k: int, c: float) -> float:
    """Step size for iteration ``k`` given the cosine factor ``c``."""
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    if not -1.0 <= c <= 1.0:
        raise ValueError("cosine factor must lie in [-1, 1]")
    decay = schedule.alpha * float(k) ** schedule.s / schedule.num_strings + 1.0
    return (1.0 - schedule.rho * c) * schedule.lam0 / decay


def initial_step_size(f0: float, g0: np.ndarray, mu: float,
                      scale: float = 1.0) -> float:
    """Base step ``scale * mu * f0 / ||g0||^2`` from the start point.

    ``f0`` is the objective there and ``g0`` a full objective
    subgradient. A zero ``f0`` gives a zero step (the start point is
    already optimal); a zero ``g0`` is an error the caller should treat
    as "stop, nothing to do".
    """
    if f0 < 0.0:
        raise ValueError("objective value must be nonnegative")
    if not mu > 0.0:
        raise ValueError("mu must be positive")
    if not scale > 0.0:
        raise ValueError("scale must be positive")
    gsq = float(np.dot(g0, g0))
    if gsq == 0.0:
        raise ValueError("zero subgradient: the start point already minimises f")
    return scale * mu * f0 / gsq


def cosine_factor(d_opt: np.ndarray, d_feas: np.ndarray) -> float:
    """Cosine of the angle between the two half-iteration moves.

    Returns 0 when either move is (numerically) zero; the result is
    clipped to [-1, 1] to absorb rounding.
    """
    n1 = float(np.linalg.norm(d_opt))
    n2 = float(np.linalg.norm(d_feas))
    if n1 < _TINY_NORM or n2 < _TINY_NORM:
        return 0.0
    c = float(np.dot(d_opt, d_feas)) / (n1 * n2)
    return min(1.0, max(-1.0, c))


@dataclass
class SolverState:
    """Snapshot of the iteration: current point plus the half point and
    previous points that the cosine factor is defined over.

    ``c`` is the cosine factor the *next* step size will use; ``lam``
    and ``c_used`` record what the step that produced ``x`` actually
    used (both zero before the first step).
    """

    x: np.ndarray
    k: int = 0
    c: float = 0.0
    lam: float = 0.0
    c_used: float = 0.0
    x_half: np.ndarray | None = None
    x_prev: np.ndarray | None = None
    x_half_prev: np.ndarray | None = None


def initial_state(x0: np.ndarray) -> SolverState:
    x = np.ascontiguousarray(x0, dtype=np.float64).copy()
    return SolverState(x=x)


def iterate(state: SolverState, problem: Problem, schedule: StepSizeSchedule,
            map_fn=map) -> SolverState:
    """One full iteration: optimality average, feasibility, cosine update."""
    lam = next_step_size(schedule, state.k, state.c)
    x_half = optimality_operator(state.x, lam, problem, map_fn)
    x_next = problem.feasibility(x_half)
    c_next = cosine_factor(x_half - state.x, x_next - x_half)
    return SolverState(x=x_next, k=state.k + 1, c=c_next, lam=lam,
                       c_used=state.c, x_half=x_half, x_prev=state.x,
                       x_half_prev=state.x_half)


def run(x0: np.ndarray, problem: Problem, schedule: StepSizeSchedule, *,
        max_iters: int | None = None, max_seconds: float | None = None,
        observer: Callable[[SolverState, float], object] | None = None,
        threads: int = 1, timer: Callable[[], float] = time.perf_counter):
    """Drive the iteration under an iteration and/or wall-clock budget.

    At least one budget must be given. The time budget is checked
    between iterations, so the final iteration may overshoot it. The
    observer is called after every iteration with the new state and the
    elapsed seconds; its non-None return values are collected and
    returned as the history. With ``threads > 1`` the string passes of
    one iteration run on a thread pool; results are combined in string
    order either way, so the iterates do not depend on the thread
    count.

    Returns ``(final_state, history)``.
    """
    if max_iters is None and max_seconds is None:
        raise ValueError("need max_iters and/or max_seconds")
    if max_iters is not None and max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    if max_seconds is not None and max_seconds < 0.0:
        raise ValueError("max_seconds must be nonnegative")

    state = initial_state(x0)
    history: list = []
    pool = None
    map_fn = map
    if threads > 1 and problem.partition.num_strings > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        map_fn = pool.map
    try:
        start = timer()
        while True:
            if max_iters is not None and state.k >= max_iters:
                break
            if max_seconds is not None and timer() - start >= max_seconds:
                break
            state = iterate(state, problem, schedule, map_fn)
            if observer is not None:
                rec = observer(state, timer() - start)
                if rec is not None:
                    history.append(rec)
    finally:
        if pool is not None:
            pool.shutdown()
    return state, history
