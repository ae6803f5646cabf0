import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridtest.grid import ContractError, DomainError
from gridtest.majorization import (dominates_coordinatewise, half_norm, half_norm_compare,
                                   majorizes, sortdown, sortup, sorted_sum_dominates)

from gridtest.acceptance import robin_hood


def test_half_norm_examples():
    assert half_norm([1, 1, 2]) == pytest.approx(2 + math.sqrt(2))
    assert half_norm([0, 0, 0]) == 0
    assert half_norm([4]) == 2
    with pytest.raises(DomainError):
        half_norm([1, -1])


def test_majorizes_examples():
    assert majorizes([2, 2, 0], [2, 1, 1])
    assert majorizes([3, 1, 2], [3, 1, 2])
    assert not majorizes([1, 1, 1], [3, 0, 0])
    with pytest.raises(ContractError):
        majorizes([1, 1], [1, 2])


def test_majorizes_real_tolerance():
    assert majorizes([0.5 + 1e-12, 0.5], [0.5, 0.5 + 1e-12])


def test_sorted_sum_example():
    S, U, ok = sorted_sum_dominates([[1, 0, 1], [0, 1, 1]], "down")
    assert S.tolist() == [2, 2, 0]
    assert U.tolist() == [1, 1, 2]
    assert ok


def test_sorted_sum_edge_cases():
    S, U, ok = sorted_sum_dominates([[0, 3, 1]])
    assert S.tolist() == [3, 1, 0] and ok
    S, _, ok = sorted_sum_dominates([[1, 0, 2]] * 4)
    assert S.tolist() == [8, 4, 0] and ok
    with pytest.raises(ContractError):
        sorted_sum_dominates([[1, 0], [1, 0, 0]])


def test_sorts():
    assert sortdown([1, 3, 2]).tolist() == [3, 2, 1]
    assert sortup([1, 3, 2]).tolist() == [1, 2, 3]


def test_coordinatewise():
    assert dominates_coordinatewise([2, 1], [1, 1])
    assert not dominates_coordinatewise([2, 0], [1, 1])


vectors01 = st.integers(1, 16).flatmap(
    lambda t: st.lists(st.lists(st.integers(0, 1), min_size=t, max_size=t), min_size=1, max_size=8))


@given(vectors01, st.sampled_from(["down", "up"]))
def test_sorted_sum_always_majorizes(parts, direction):
    _, _, ok = sorted_sum_dominates([np.array(p) for p in parts], direction)
    assert ok


@given(st.lists(st.integers(0, 40), min_size=2, max_size=12), st.integers(0, 2 ** 32 - 1))
def test_schur_concavity(a, seed):
    a = np.array(a)
    b = robin_hood(np.random.default_rng(seed), a, 4)
    assert majorizes(a, b)
    assert half_norm(a) <= half_norm(b) + 1e-9
    assert half_norm_compare(a, b) <= 0


def test_half_norm_compare_exact_ties():
    # sqrt(8) = 2 sqrt(2): float sums can disagree in the last bit
    assert half_norm_compare([8], [2, 2]) == 0
    assert half_norm_compare([9], [4, 1]) == 0
    assert half_norm_compare([2, 3], [5]) == 1
    assert half_norm_compare([5], [2, 3]) == -1
    assert half_norm_compare([1, 2, 3], [3, 2, 1]) == 0
