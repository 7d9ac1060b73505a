"""Core engine tests: partitions, string passes, step sizes, iteration."""

import numpy as np
import pytest

from sais.solver import (
    ConvexComponent,
    Problem,
    SolverState,
    StepSizeSchedule,
    StringPartition,
    cosine_factor,
    initial_state,
    initial_step_size,
    iterate,
    make_random_partition,
    next_step_size,
    objective_value,
    optimality_operator,
    run,
    string_pass,
)


def _abs_component(target, coord):
    """f(x) = |x[coord] - target| with the sign subgradient, sign(0) = 0."""

    def value(x):
        return abs(x[coord] - target)

    def subgrad(x):
        g = np.zeros_like(x)
        g[coord] = np.sign(x[coord] - target)
        return g

    return ConvexComponent(value=value, subgrad=subgrad)


def _linear_l1_components(a, b):
    comps = []
    for i in range(a.shape[0]):
        ai = a[i].copy()
        bi = float(b[i])
        comps.append(
            ConvexComponent(
                value=lambda x, ai=ai, bi=bi: abs(float(ai @ x) - bi),
                subgrad=lambda x, ai=ai, bi=bi: np.sign(float(ai @ x) - bi) * ai,
            )
        )
    return comps


# ---------------------------------------------------------------- partitions


def test_partition_rejects_bad_input():
    with pytest.raises(ValueError):
        StringPartition([], [])
    with pytest.raises(ValueError):
        StringPartition([[0, 1]], [0.5, 0.5])
    with pytest.raises(ValueError):
        StringPartition([[0], []], [0.5, 0.5])
    with pytest.raises(ValueError):
        StringPartition([[0, 1], [1]], [0.5, 0.5])  # repeat
    with pytest.raises(ValueError):
        StringPartition([[0, 2]], [1.0])  # gap
    with pytest.raises(ValueError):
        StringPartition([[0, 1]], [0.9])  # weights do not sum to 1
    with pytest.raises(ValueError):
        StringPartition([[0], [1]], [1.5, -0.5])


def test_partition_accepts_any_order():
    part = StringPartition([[2, 0], [1, 3]], [0.25, 0.75])
    assert part.num_components == 4
    assert part.num_strings == 2


def test_random_partition_single_string_is_permutation():
    part = make_random_partition(4, 1, seed=0)
    assert part.num_strings == 1
    assert sorted(part.strings[0].tolist()) == [0, 1, 2, 3]
    assert part.weights.tolist() == [1.0]


def test_random_partition_balances_sizes():
    part = make_random_partition(5, 2, seed=7)
    sizes = sorted(len(s) for s in part.strings)
    assert sizes == [2, 3]
    # longer chunk leads
    assert len(part.strings[0]) == 3
    assert np.allclose(part.weights, 0.5)


def test_random_partition_large_scale_sizes():
    part = make_random_partition(6144, 6, seed=1)
    assert [len(s) for s in part.strings] == [1024] * 6
    flat = np.sort(np.concatenate(part.strings))
    assert np.array_equal(flat, np.arange(6144))


def test_random_partition_deterministic_in_seed():
    p1 = make_random_partition(50, 3, seed=11)
    p2 = make_random_partition(50, 3, seed=11)
    p3 = make_random_partition(50, 3, seed=12)
    for s1, s2 in zip(p1.strings, p2.strings):
        assert np.array_equal(s1, s2)
    assert any(
        not np.array_equal(s1, s3) for s1, s3 in zip(p1.strings, p3.strings)
    )


def test_random_partition_rejects_bad_counts():
    with pytest.raises(ValueError):
        make_random_partition(4, 0, seed=0)
    with pytest.raises(ValueError):
        make_random_partition(4, 5, seed=0)


def test_problem_requires_matching_component_count():
    comps = [_abs_component(0.0, 0), _abs_component(0.0, 1)]
    with pytest.raises(ValueError):
        Problem(components=comps, partition=StringPartition([[0, 1, 2]], [1.0]))


# --------------------------------------------------------------- string pass


def test_string_pass_zero_step_returns_input_values():
    x = np.array([3.0, -1.0])
    comps = [_abs_component(2.0, 0)]
    out = string_pass(x, np.array([0]), 0.0, comps)
    assert np.array_equal(out, x)
    # the input itself is never mutated
    assert x[0] == 3.0


def test_string_pass_single_absolute_value():
    comps = [None, _abs_component(2.0, 0)]
    out = string_pass(np.zeros(2), np.array([1]), 1.0, comps)
    assert np.array_equal(out, np.array([1.0, 0.0]))


def test_string_pass_two_sequential_steps():
    # f_1 = |x1 - 2|, f_2 = |x2 + 1| stepped in order with lam = 0.5
    comps = [None, _abs_component(2.0, 0), _abs_component(-1.0, 1)]
    out = string_pass(np.zeros(2), np.array([1, 2]), 0.5, comps)
    assert np.array_equal(out, np.array([0.5, -0.5]))


def test_string_pass_uses_current_subiterate():
    # second step must see the output of the first, not the start point:
    # both components act on coordinate 0 with target 2; from 0 with lam=3
    # the first step lands at 3 and the second (now above target) at 0.
    comps = [_abs_component(2.0, 0), _abs_component(2.0, 0)]
    out = string_pass(np.zeros(1), np.array([0, 1]), 3.0, comps)
    assert out[0] == 0.0


def test_string_pass_rejects_negative_step():
    comps = [_abs_component(0.0, 0)]
    with pytest.raises(ValueError):
        string_pass(np.zeros(1), np.array([0]), -0.1, comps)


# ------------------------------------------------------- optimality operator


def test_optimality_zero_step_is_identity():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 4))
    b = rng.normal(size=6)
    prob = Problem(
        components=_linear_l1_components(a, b),
        partition=make_random_partition(6, 3, seed=5),
    )
    x = rng.normal(size=4)
    out = optimality_operator(x, 0.0, prob)
    assert np.allclose(out, x, rtol=0.0, atol=0.0)


def test_optimality_singleton_strings_equal_scaled_full_step():
    # all-singleton strings with equal weights collapse to a full
    # subgradient step scaled by lam / P; dyadic data keeps it exact
    gs = [np.array([1.0, -2.0]), np.array([4.0, 0.5]),
          np.array([-8.0, 2.0]), np.array([0.25, -1.0])]
    comps = [
        ConvexComponent(value=lambda x: 0.0, subgrad=lambda x, g=g: g)
        for g in gs
    ]
    prob = Problem(
        components=comps,
        partition=StringPartition([[0], [1], [2], [3]], [0.25] * 4),
    )
    x = np.array([2.0, -4.0])
    lam = 0.5
    expected = x - (lam / 4.0) * sum(gs)
    out = optimality_operator(x, lam, prob)
    assert np.array_equal(out, expected)


def test_optimality_singleton_strings_random_data():
    rng = np.random.default_rng(19)
    m, n = 7, 5
    a = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    comps = _linear_l1_components(a, b)
    prob = Problem(
        components=comps,
        partition=StringPartition([[i] for i in range(m)], [1.0 / m] * m),
    )
    x = rng.normal(size=n)
    g_full = sum(c.subgrad(x) for c in comps)
    out = optimality_operator(x, 0.3, prob)
    assert np.allclose(out, x - (0.3 / m) * g_full, rtol=1e-14, atol=1e-14)


def test_optimality_all_strings_start_from_same_point():
    # a component that records its evaluation points
    seen = []

    def spy_subgrad(x):
        seen.append(x.copy())
        return np.zeros_like(x)

    comps = [ConvexComponent(value=lambda x: 0.0, subgrad=spy_subgrad)
             for _ in range(3)]
    prob = Problem(
        components=comps,
        partition=StringPartition([[0], [1], [2]], [1 / 3] * 3),
    )
    x = np.array([1.0, 2.0])
    optimality_operator(x, 1.0, prob)
    assert len(seen) == 3
    for pt in seen:
        assert np.array_equal(pt, x)


def test_objective_value_matches_plain_sum_for_uniform_weights():
    rng = np.random.default_rng(23)
    a = rng.normal(size=(9, 4))
    b = rng.normal(size=9)
    comps = _linear_l1_components(a, b)
    prob = Problem(
        components=comps, partition=make_random_partition(9, 3, seed=2)
    )
    x = rng.normal(size=4)
    direct = sum(c.value(x) for c in comps)
    assert objective_value(prob, x) == pytest.approx(direct, rel=1e-10)


# ------------------------------------------------------------ step schedule


def test_schedule_validation():
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=0.0)
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=1.0, rho=1.0)
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=1.0, rho=-0.1)
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=1.0, alpha=0.0)
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=1.0, s=0.0)
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=1.0, s=1.2)
    with pytest.raises(ValueError):
        StepSizeSchedule(lam0=1.0, num_strings=0)
    # boundary values are legal
    StepSizeSchedule(lam0=1.0, rho=0.0, s=1.0)


def test_next_step_size_first_iteration_is_lam0():
    sched = StepSizeSchedule(lam0=0.7, rho=0.999, alpha=1.0, s=0.51)
    assert next_step_size(sched, 0, 0.0) == 0.7


def test_next_step_size_damped_example():
    sched = StepSizeSchedule(lam0=1.0, rho=0.999, alpha=1.0, s=0.51,
                             num_strings=1)
    assert next_step_size(sched, 1, 1.0) == pytest.approx(0.0005, rel=1e-12)


def test_next_step_size_plain_decay_example():
    sched = StepSizeSchedule(lam0=1.0, rho=0.0, alpha=1.0, s=1.0,
                             num_strings=2)
    assert next_step_size(sched, 4, 0.37) == pytest.approx(1.0 / 3.0,
                                                           rel=1e-14)


def test_next_step_size_always_positive():
    rng = np.random.default_rng(77)
    for _ in range(200):
        sched = StepSizeSchedule(
            lam0=float(rng.uniform(1e-6, 10.0)),
            rho=float(rng.uniform(0.0, 0.999999)),
            alpha=float(rng.uniform(0.01, 5.0)),
            s=float(rng.uniform(0.01, 1.0)),
            num_strings=int(rng.integers(1, 8)),
        )
        k = int(rng.integers(0, 10**6))
        c = float(rng.uniform(-1.0, 1.0))
        assert next_step_size(sched, k, c) > 0.0


def test_next_step_size_rejects_bad_arguments():
    sched = StepSizeSchedule(lam0=1.0)
    with pytest.raises(ValueError):
        next_step_size(sched, -1, 0.0)
    with pytest.raises(ValueError):
        next_step_size(sched, 0, 1.0001)
    with pytest.raises(ValueError):
        next_step_size(sched, 0, -1.0001)


def test_step_sums_diverge():
    """Partial sums of the undamped schedule keep growing like K**(1-s)."""
    sched = StepSizeSchedule(lam0=1.0, rho=0.0, alpha=1.0, s=0.51)
    total = 0.0
    sums = {}
    for k in range(100000):
        total += next_step_size(sched, k, 0.0)
        if k + 1 in (1000, 10000, 100000):
            sums[k + 1] = total
    assert sums[1000] < sums[10000] < sums[100000]
    # K**0.49 growth predicts a factor ~3.1 per decade
    assert sums[10000] / sums[1000] > 2.5
    assert sums[100000] / sums[10000] > 2.5


def test_initial_step_size_formula():
    g = np.array([2.0, 0.0])  # squared norm 4
    assert initial_step_size(10.0, g, 2.0) == 5.0
    assert initial_step_size(10.0, g, 2.0, scale=0.25) == 1.25
    assert initial_step_size(0.0, g, 3.0) == 0.0


def test_initial_step_size_rejects_degenerate_input():
    g = np.array([1.0, 1.0])
    with pytest.raises(ValueError):
        initial_step_size(-1.0, g, 1.0)
    with pytest.raises(ValueError):
        initial_step_size(1.0, g, 0.0)
    with pytest.raises(ValueError):
        initial_step_size(1.0, g, 1.0, scale=0.0)
    with pytest.raises(ValueError):
        initial_step_size(1.0, np.zeros(2), 1.0)


# ------------------------------------------------------------ cosine factor


def test_cosine_factor_examples():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    ones = np.array([1.0, 1.0])
    assert cosine_factor(e1, e1) == 1.0
    assert cosine_factor(e1, e2) == 0.0
    assert cosine_factor(e1, -e1) == -1.0
    # the squared norm of (1, 1) rounds up, so only near-equality holds
    assert abs(cosine_factor(ones, -ones) + 1.0) < 1e-15


def test_cosine_factor_zero_directions():
    v = np.array([1.0, 2.0])
    z = np.zeros(2)
    assert cosine_factor(z, v) == 0.0
    assert cosine_factor(v, z) == 0.0
    assert cosine_factor(z, z) == 0.0


def test_cosine_factor_stays_clipped():
    rng = np.random.default_rng(5)
    for _ in range(300):
        u = rng.normal(size=8) * 10.0 ** rng.integers(-12, 12)
        v = rng.normal(size=8) * 10.0 ** rng.integers(-12, 12)
        c = cosine_factor(u, v)
        assert -1.0 <= c <= 1.0


# ------------------------------------------------------------------ iterate


def test_iterate_fixed_point_at_minimizer():
    # subgradients vanish at the start point and feasibility is the
    # identity, so only the counter moves
    comps = [_abs_component(0.0, 0), _abs_component(0.0, 1)]
    prob = Problem(components=comps,
                   partition=StringPartition([[0], [1]], [0.5, 0.5]))
    state = initial_state(np.zeros(2))
    sched = StepSizeSchedule(lam0=1.0)
    nxt = iterate(state, prob, sched)
    assert nxt.k == 1
    assert np.array_equal(nxt.x, np.zeros(2))
    assert nxt.c == 0.0
    assert nxt.lam == 1.0


def test_iterate_two_steps_match_hand_computation():
    # f_1 = |x1 - 2|, f_2 = |x2 + 1|, identity feasibility, rho = 0,
    # s = 1: lam_0 = 0.5, lam_1 = 0.25; every quantity is dyadic so the
    # comparison is exact
    comps = [_abs_component(2.0, 0), _abs_component(-1.0, 1)]
    prob = Problem(components=comps,
                   partition=StringPartition([[0, 1]], [1.0]))
    sched = StepSizeSchedule(lam0=0.5, rho=0.0, alpha=1.0, s=1.0)
    s0 = initial_state(np.zeros(2))
    s1 = iterate(s0, prob, sched)
    assert np.array_equal(s1.x, np.array([0.5, -0.5]))
    assert s1.lam == 0.5
    s2 = iterate(s1, prob, sched)
    assert np.array_equal(s2.x, np.array([0.75, -0.75]))
    assert s2.lam == 0.25
    # identity feasibility leaves no feasibility move, so c stays 0
    assert s2.c == 0.0


def test_iterate_tracks_previous_points():
    comps = [_abs_component(2.0, 0)]
    prob = Problem(components=comps,
                   partition=StringPartition([[0]], [1.0]),
                   feasibility=lambda x: np.maximum(x, 0.0))
    sched = StepSizeSchedule(lam0=1.0, rho=0.5)
    s0 = initial_state(np.array([-3.0]))
    s1 = iterate(s0, prob, sched)
    assert np.array_equal(s1.x_prev, s0.x)
    assert s1.x_half_prev is None
    s2 = iterate(s1, prob, sched)
    assert np.array_equal(s2.x_prev, s1.x)
    assert np.array_equal(s2.x_half_prev, s1.x_half)


def test_iterate_cosine_matches_definition():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(5, 3))
    b = rng.normal(size=5)
    prob = Problem(
        components=_linear_l1_components(a, b),
        partition=make_random_partition(5, 2, seed=1),
        feasibility=lambda x: np.maximum(x, 0.0),
    )
    sched = StepSizeSchedule(lam0=0.8, rho=0.9, num_strings=2)
    state = initial_state(rng.normal(size=3))
    for _ in range(4):
        prev_x = state.x.copy()
        state = iterate(state, prob, sched)
        d_opt = state.x_half - prev_x
        d_feas = state.x - state.x_half
        assert state.c == cosine_factor(d_opt, d_feas)


# ---------------------------------------------------------------------- run


def _small_problem(seed=0, m=8, n=4, strings=2, feasibility=None):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    kwargs = {}
    if feasibility is not None:
        kwargs["feasibility"] = feasibility
    return Problem(
        components=_linear_l1_components(a, b),
        partition=make_random_partition(m, strings, seed=seed),
        **kwargs,
    ), rng.normal(size=n)


def test_run_requires_a_budget():
    prob, x0 = _small_problem()
    sched = StepSizeSchedule(lam0=0.1, num_strings=2)
    with pytest.raises(ValueError):
        run(x0, prob, sched)


def test_run_zero_iterations():
    prob, x0 = _small_problem()
    sched = StepSizeSchedule(lam0=0.1, num_strings=2)
    state, history = run(x0, prob, sched, max_iters=0,
                         observer=lambda s, t: (s.k, t))
    assert state.k == 0
    assert history == []
    assert np.array_equal(state.x, x0)


def test_run_iteration_budget_is_exact():
    prob, x0 = _small_problem()
    sched = StepSizeSchedule(lam0=0.1, num_strings=2)
    state, history = run(x0, prob, sched, max_iters=7,
                         observer=lambda s, t: s.k)
    assert state.k == 7
    assert history == [1, 2, 3, 4, 5, 6, 7]


def test_run_observer_can_filter_records():
    prob, x0 = _small_problem()
    sched = StepSizeSchedule(lam0=0.1, num_strings=2)
    _, history = run(
        x0, prob, sched, max_iters=10,
        observer=lambda s, t: s.k if s.k % 3 == 0 else None,
    )
    assert history == [3, 6, 9]


def test_run_time_budget_checked_between_iterations():
    prob, x0 = _small_problem()
    sched = StepSizeSchedule(lam0=0.1, num_strings=2)
    ticks = iter([0.0, 1.0, 2.0, 6.0, 7.0, 8.0, 9.0, 10.0])
    state, history = run(x0, prob, sched, max_seconds=5.0,
                         observer=lambda s, t: t,
                         timer=lambda: next(ticks))
    # start=0; check at 1 -> iterate; observer elapsed 2; check at 6 -> stop
    assert state.k == 1
    assert history == [2.0]


def test_run_elapsed_times_nondecreasing():
    prob, x0 = _small_problem()
    sched = StepSizeSchedule(lam0=0.1, num_strings=2)
    _, history = run(x0, prob, sched, max_iters=20,
                     observer=lambda s, t: t)
    assert all(t1 <= t2 for t1, t2 in zip(history, history[1:]))


def test_run_thread_count_does_not_change_iterates():
    prob, x0 = _small_problem(seed=4, m=12, n=5, strings=4)
    sched = StepSizeSchedule(lam0=0.2, num_strings=4)
    xs = {}
    for threads in (1, 4):
        _, history = run(x0, prob, sched, max_iters=25,
                         observer=lambda s, t: s.x.copy(), threads=threads)
        xs[threads] = history
    for x1, x4 in zip(xs[1], xs[4]):
        assert np.array_equal(x1, x4)


def test_run_rerun_is_bit_identical():
    outs = []
    for _ in range(2):
        prob, x0 = _small_problem(seed=13, m=10, n=4, strings=3)
        sched = StepSizeSchedule(lam0=0.3, num_strings=3)
        state, history = run(x0, prob, sched, max_iters=30,
                             observer=lambda s, t: s.x.copy())
        outs.append((state.x, history))
    assert np.array_equal(outs[0][0], outs[1][0])
    for h1, h2 in zip(outs[0][1], outs[1][1]):
        assert np.array_equal(h1, h2)
