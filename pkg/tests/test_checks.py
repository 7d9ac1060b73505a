"""The built-in invariant suites (also exposed by the check subcommand)."""

import numpy as np

from sais.checks import (
    ALL_CHECKS,
    check_adjoint,
    check_fejer,
    check_lemma2,
    check_tv_subgradient,
    subgradient_sum_constants,
)
from sais.solver import StringPartition


def test_sum_constants_hand_instance():
    # rows with norms [1, 2, 2]; strings [0, 1] and [2], weights 1/2:
    # pair term = 0.5 * (2 * 1); weighted norm sum = 0.5*3 + 0.5*2
    a = np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 0.0]])
    part = StringPartition([[0, 1], [2]], [0.5, 0.5])
    pair_term, weighted_sum = subgradient_sum_constants(a, part)
    assert pair_term == 1.0
    assert weighted_sum == 2.5


def test_sum_constants_depend_on_partition_shape():
    # one long string accumulates cross products; singleton strings do not
    a = np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 0.0]])
    chain = StringPartition([[0, 1, 2]], [1.0])
    singles = StringPartition([[0], [1], [2]], [1 / 3, 1 / 3, 1 / 3])
    pair_chain, sum_chain = subgradient_sum_constants(a, chain)
    pair_singles, sum_singles = subgradient_sum_constants(a, singles)
    assert pair_chain == 8.0  # 2*1 + 2*(1 + 2)
    assert sum_chain == 5.0
    assert pair_singles == 0.0
    assert abs(sum_singles - 5.0 / 3.0) < 1e-15


def test_adjoint_suite_passes():
    passed, detail = check_adjoint(seed=0, pairs=20)
    assert passed, detail


def test_fejer_suite_passes():
    passed, detail = check_fejer(seed=0, cases=100)
    assert passed, detail


def test_lemma2_suite_passes():
    passed, detail = check_lemma2(seed=0)
    assert passed, detail


def test_tv_subgradient_suite_passes():
    passed, detail = check_tv_subgradient(seed=0, points=10, pairs=200)
    assert passed, detail


def test_suites_are_registered_for_the_cli():
    names = [name for name, _ in ALL_CHECKS]
    assert names == ["adjoint", "fejer", "lemma2", "tv-subgradient"]
    for _, fn in ALL_CHECKS:
        assert callable(fn)
