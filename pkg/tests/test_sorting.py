import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridtest.distance import eps_monotone, hamming
from gridtest.grid import ContractError, GridDomain, GridFunction, func, is_monotone
from gridtest.sorting import (hierarchy, hierarchy_step, is_semisorted, is_sorted_along,
                              semisort, semisort_all, semisort_interval, sort_all, sort_dim,
                              sort_line, sort_set)

from conftest import functions


def test_sort_line_examples():
    assert sort_line([1, 0, 1, 0]) == [0, 0, 1, 1]
    assert sort_line([1, 1, 1]) == [1, 1, 1]
    assert sort_line([1, 0, 0]) == [0, 0, 1]


@given(st.lists(st.integers(0, 1), min_size=1, max_size=12))
def test_sort_line_positions(h):
    out = sort_line(h)
    n, w = len(h), sum(h)
    # 1-based position b holds 0 exactly when b <= n - w
    assert out == [0 if b <= n - w else 1 for b in range(1, n + 1)]


def test_sort_dim_example():
    f = GridFunction(GridDomain(2, 2), [1, 0, 0, 0])
    assert sort_dim(f, 1).values.tolist() == [0, 1, 0, 0]


@given(functions())
def test_sort_dim_properties(f):
    for i in range(1, f.d + 1):
        g = sort_dim(f, i)
        assert is_sorted_along(g, i)
        assert sort_dim(g, i) == g
        assert np.array_equal(g.table().sum(axis=i - 1), f.table().sum(axis=i - 1))
    if is_monotone(f):
        assert all(sort_dim(f, i) == f for i in range(1, f.d + 1))


def test_sort_set_examples():
    f = func("100")
    assert sort_set(f, [1]).values.tolist() == [0, 0, 1]
    assert sort_set(f, []) == f
    with pytest.raises(ContractError):
        sort_set(GridFunction.constant(GridDomain(2, 2), 0), [1, 1])


@given(functions())
def test_full_sort_is_monotone(f):
    assert is_monotone(sort_all(f))
    for S in itertools.permutations(range(1, f.d + 1)):
        assert is_monotone(sort_set(f, S))


@given(functions(ns=(2, 3), ds=(1, 2, 3)), st.data())
def test_sort_contraction(f, data):
    g = GridFunction(f.domain, data.draw(st.lists(st.integers(0, 1), min_size=f.domain.size,
                                                  max_size=f.domain.size)))
    S = data.draw(st.permutations(range(1, f.d + 1)))
    S = S[: data.draw(st.integers(0, f.d))]
    assert hamming(sort_set(f, S), sort_set(g, S)) <= hamming(f, g)


def _neg_dist(h, g):
    return sum(1 for a, b in zip(h, g) if a > b)


@given(st.integers(1, 10).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n))))
def test_one_sided_line_contraction(pair):
    h, g = pair
    assert _neg_dist(sort_line(h), sort_line(g)) <= _neg_dist(h, g)


def test_semisort_interval_examples():
    f = func("1010")
    assert semisort_interval(f, 1, (1, 2)).values.tolist() == [0, 1, 1, 0]
    assert semisort_interval(f, 1, (1, 4)) == sort_dim(f, 1)
    assert semisort_interval(f, 1, (3, 3)) == f
    with pytest.raises(ContractError):
        semisort_interval(f, 1, (3, 2))


def test_is_semisorted_examples():
    assert not is_semisorted(func("1010"))
    assert is_semisorted(func("0101"))
    for m in range(16):
        f = GridFunction(GridDomain(2, 2), [(m >> k) & 1 for k in range(4)])
        assert is_semisorted(f)
    with pytest.raises(ContractError):
        is_semisorted(func("100"))


@given(functions(ns=(2, 4, 6), even=True))
def test_semisort_all_is_semisorted(f):
    g = semisort_all(f)
    assert is_semisorted(g)
    assert semisort(g, 1) == g


def test_hierarchy_small_cases():
    f = GridFunction(GridDomain(2, 2), [1, 0, 1, 0])
    levels = hierarchy(f)
    assert len(levels) == 2 and levels[0] == f and levels[1] == sort_all(f)
    c = GridFunction.constant(GridDomain(4, 2), 1)
    assert all(g == c for g in hierarchy(c))
    with pytest.raises(ContractError):
        hierarchy(func("100"))


@given(functions(ns=(4,), ds=(1, 2)))
def test_hierarchy_properties(f):
    levels = hierarchy(f)
    k = len(levels) - 1
    assert is_monotone(levels[-1])
    # each level is semisorted inside its blocks: at n=4 level 1 has both halves sorted
    assert is_semisorted(levels[1])
    eps = eps_monotone(f).eps
    assert max(hamming(levels[j], levels[j + 1]) for j in range(k)) >= eps / k


def test_hierarchy_triangle_n8(rng):
    for _ in range(30):
        f = GridFunction(GridDomain(8, 2), rng.integers(0, 2, 64))
        levels = hierarchy(f)
        eps = eps_monotone(f).eps
        assert max(hamming(levels[j], levels[j + 1]) for j in range(3)) >= eps / 3
        step = hierarchy_step(levels[0], 1)
        assert step == levels[1]
