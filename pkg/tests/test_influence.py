import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridtest.coloring import GridColoring
from gridtest.distance import eps_monotone
from gridtest.grid import ContractError, GridDomain, GridFunction, func, violation_mask
from gridtest.influence import (cube_colored_influence, harmonic, phi, phi_colored,
                                phi_dim, phi_matrix, psi, psi_colored, psi_numerators,
                                talagrand_objective, total_influence, total_neg_influence,
                                variance)
from gridtest.acceptance import all_functions

from conftest import functions


def _shift(x, i, c):
    y = list(x)
    y[i] = c
    return tuple(y)


def naive_phi_psi(f):
    """Per (point, dim): thresholded and weighted influence by direct enumeration."""
    dom = f.domain
    out_phi, out_psi = {}, {}
    for x in dom.points():
        for i in range(dom.d):
            hit, w = 0, Fraction(0)
            for c in range(1, dom.n + 1):
                if c == x[i]:
                    continue
                y = _shift(x, i, c)
                lo, hi = (x, y) if c > x[i] else (y, x)
                if f(lo) == 1 and f(hi) == 0:
                    hit = 1
                    w += Fraction(1, abs(c - x[i]))
            out_phi[x, i], out_psi[x, i] = hit, w
    return out_phi, out_psi


def naive_totals(f):
    dom = f.domain
    tot = neg = 0
    for x in dom.points():
        for i in range(dom.d):
            for c in range(1, dom.n + 1):
                y = _shift(x, i, c)
                tot += f(x) != f(y)
                neg += c > x[i] and f(x) == 1 and f(y) == 0
    return Fraction(tot, dom.size), Fraction(neg, dom.size)


def test_line_examples():
    f = func("100")
    assert phi(f).per_point.tolist() == [1, 1, 1]
    assert psi(f).per_point.tolist() == pytest.approx([1.5, 1.0, 0.5])
    assert total_influence(f) == Fraction(4, 3)
    assert total_neg_influence(f) == Fraction(2, 3)
    assert variance(f) == Fraction(8, 9)
    assert phi_dim(f, (3,), 1) == 1
    chi = GridColoring.on_violations(f, [1, 0])  # edges (1,2) then (1,3)
    assert phi_colored(f, chi).per_point.tolist() == [1, 0, 1]


def test_monotone_and_constant():
    f = GridFunction(GridDomain(3, 2), [0, 0, 1, 0, 1, 1, 1, 1, 1])
    assert phi(f).per_point.sum() == 0
    assert psi(f).per_point.sum() == 0
    assert total_neg_influence(f) == 0 and total_influence(f) > 0
    c = GridFunction.constant(GridDomain(3, 2), 1)
    assert total_influence(c) == 0 and variance(c) == 0
    assert variance([0, 1, 0, 1]) == 1


def test_all_ones_coloring_credits_one_points():
    f = GridFunction(GridDomain(3, 2), [1, 0, 1, 1, 1, 0, 0, 1, 0])
    chi = GridColoring(f.domain, np.ones(18, dtype=np.uint8))
    col = phi_colored(f, chi).per_point
    full = phi(f).per_point
    assert np.array_equal(col, np.where(f.values == 1, full, 0))


@given(functions())
def test_phi_psi_against_enumeration(f):
    P, W = naive_phi_psi(f)
    m = phi_matrix(f)
    num, L = psi_numerators(f)
    for k, x in enumerate(f.domain.points()):
        for i in range(f.d):
            assert m[k, i] == P[x, i]
            assert Fraction(int(num[k, i]), L) == W[x, i]


@given(functions())
def test_totals_against_enumeration(f):
    assert (total_influence(f), total_neg_influence(f)) == naive_totals(f)


@given(functions(), st.integers(0, 2 ** 32 - 1))
def test_colored_below_uncolored(f, seed):
    chi = GridColoring.random(f, np.random.default_rng(seed))
    assert np.all(phi_colored(f, chi).per_dim <= phi(f).per_dim)
    assert np.all(psi_colored(f, chi).per_dim <= psi(f).per_dim + 1e-12)
    assert np.all(phi(f).per_dim <= 1)
    assert np.all(psi(f).per_point <= f.d * float(harmonic(f.n)) + 1e-12)


@given(functions(ns=(2,), ds=(1, 2, 3)))
def test_phi_at_n2_is_cube_directed_degree(f):
    dom = f.domain
    per = phi(f).per_point
    for k, x in enumerate(dom.points()):
        deg = 0
        for i in range(dom.d):
            y = _shift(x, i, 3 - x[i])
            lo, hi = (x, y) if x[i] == 1 else (y, x)
            deg += f(lo) == 1 and f(hi) == 0
        assert per[k] == deg


def test_phi_ignores_n_on_embedded_line():
    # the same pattern padded with trailing ones keeps its thresholded influence
    short, long = func("1010"), func("1010111")
    assert phi(long).per_point[:4].tolist() == phi(short).per_point.tolist()


def test_cube_influence_examples():
    assert cube_colored_influence([0, 1], [1]).tolist() == [0, 1]
    assert cube_colored_influence([0, 1], [0]).tolist() == [1, 0]
    assert cube_colored_influence([1, 1, 1, 1], [-1] * 4).tolist() == [0, 0, 0, 0]
    with pytest.raises(ContractError):
        cube_colored_influence([0, 1], [-1])


def test_talagrand_objective_examples():
    assert talagrand_objective([1, 1, 1]).objective == 1
    assert talagrand_objective([0, 0]).objective == 0
    assert talagrand_objective([4, 0, 0]).objective == pytest.approx(2 / 3)
    rep = talagrand_objective([1, 1, 1], eps=0.5)
    assert rep.ratio == pytest.approx(2)


def test_phi_mean_at_least_eps_exhaustive():
    for _, f in all_functions(3, 2):
        assert Fraction(int(phi(f).per_point.sum()), 9) >= eps_monotone(f).eps


def test_weighted_vs_thresholded_example():
    f = func("100")
    H = harmonic(3)
    assert H == Fraction(11, 6)
    assert all(p >= w / float(H) for p, w in zip(phi(f).per_point, psi(f).per_point))


@pytest.mark.parametrize("n", range(2, 11))
def test_line_violation_count_at_least_eps_n(n):
    dom = GridDomain(n, 1)
    for m in range(1 << n):
        f = GridFunction(dom, [(m >> k) & 1 for k in range(n)])
        assert int(violation_mask(f).sum()) >= eps_monotone(f).eps * n


@given(functions(ns=(2, 3, 4), ds=(1, 2, 3)))
def test_large_influence_forces_negative_influence(f):
    n, d = f.n, f.d
    if total_influence(f) > 9 * (n - 1) * math.sqrt(d):
        assert total_neg_influence(f) > (n - 1) * math.sqrt(d)
