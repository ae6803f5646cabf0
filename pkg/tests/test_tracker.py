import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridtest.acceptance import ANCHORS, all_functions
from gridtest.coloring import GridColoring, adversarial_coloring
from gridtest.distance import eps_monotone, hamming
from gridtest.funclib import gen
from gridtest.grid import (ContractError, GridDomain, GridFunction, cube_edge_count,
                           func, is_monotone, violation_mask)
from gridtest.influence import talagrand_colored
from gridtest.sorting import semisort_all, sort_all, sort_set
from gridtest.tracker import (cube_influence_j, tracker_variance_bridge, hybrid_R, cube_talagrand_ratio,
                              sqrt_sum_geq, tracker_eval, tracker_table, verify_potential_drop)

from conftest import functions

EXAMPLE = GridFunction(GridDomain(2, 2), [1, 0, 0, 0])


def test_tracker_examples():
    assert tracker_eval(EXAMPLE, (1, 1), []) == 1
    assert tracker_eval(EXAMPLE, (1, 1), [1]) == 0
    xi = np.ones(cube_edge_count(2), dtype=np.int8)
    assert cube_influence_j(EXAMPLE, (1, 1), [], 1, xi) == 1
    xi[:] = -1
    with pytest.raises(ContractError):
        cube_influence_j(EXAMPLE, (1, 1), [], 1, xi)


@given(functions(ns=(2, 3, 4), ds=(1, 2, 3)))
def test_tracker_table_against_direct_sorts(f):
    G = tracker_table(f)
    full = sort_all(f)
    assert np.array_equal(G[:, 0], f.values)
    assert np.array_equal(G[:, -1], full.values)
    for T in range(1 << f.d):
        dims = [j + 1 for j in range(f.d) if T >> j & 1]
        assert np.array_equal(G[:, T], sort_set(f, dims).values)


def test_monotone_trackers_are_constant():
    f = gen("monotone-random", {"n": 3, "d": 3, "seed": 5})
    G = tracker_table(f)
    assert np.all(G == G[:, :1])


@given(functions(ns=(2, 3), ds=(1, 2, 3)), st.integers(0, 2 ** 32 - 1))
def test_uncolored_cube_influence(f, seed):
    # with the color equal to g on both sides, the influence is plain sensitivity
    G = tracker_table(f).astype(np.int8)
    d = f.d
    rng = np.random.default_rng(seed)
    x = int(rng.integers(0, f.domain.size))
    g = G[x]
    for j in range(1, d + 1):
        for T in range(1 << d):
            other = T ^ (1 << (j - 1))
            xi = np.full(cube_edge_count(d), g[T], dtype=np.int8)
            assert cube_influence_j(f, f.domain.point_of(x), [k + 1 for k in range(d) if T >> k & 1],
                                    j, xi) == int(g[T] != g[other])


def test_hybrid_base_equals_colorful_objective(rng):
    for _ in range(20):
        f = semisort_all(GridFunction(GridDomain(4, 2), rng.integers(0, 2, 16)))
        chi = GridColoring.random(f, rng)
        xi = np.full((16, cube_edge_count(2)), -1, dtype=np.int8)
        assert hybrid_R(f, chi, xi, 0, []) == pytest.approx(talagrand_colored(f, chi))


def test_potential_drop_exhaustive_n2():
    count = 0
    for d in (1, 2, 3):
        for _, f in all_functions(2, d):
            m = int(violation_mask(f).sum())
            # every coloring up to d = 2; the first eight per function at d = 3
            for c in range(1 << m if d < 3 else min(1 << m, 8)):
                chi = GridColoring.on_violations(f, [(c >> k) & 1 for k in range(m)])
                rep = verify_potential_drop(f, chi)
                assert rep.t_phi_chi + 1e-9 >= rep.tracker_side
                count += 1
    assert count > 1000


def test_potential_drop_monotone_is_zero():
    f = gen("monotone-random", {"n": 4, "d": 2, "seed": 1})
    rep = verify_potential_drop(f, GridColoring.zeros(f.domain))
    assert rep.t_phi_chi == 0 and rep.final_mean == 0


def test_potential_drop_random(rng):
    for n, d, trials in ((4, 2, 100), (2, 3, 50), (6, 2, 30), (4, 3, 10)):
        for _ in range(trials):
            f = semisort_all(GridFunction(GridDomain(n, d), rng.integers(0, 2, n ** d)))
            rep = verify_potential_drop(f, GridColoring.random(f, rng))
            assert rep.dominance_checked > 0
            assert rep.final_mean == pytest.approx(rep.tracker_side)


def test_potential_drop_rejects_unsorted_input():
    with pytest.raises(ContractError):
        verify_potential_drop(func("1010"), GridColoring.zeros(GridDomain(4, 1)))


def test_sqrt_sum_exact_ties():
    assert sqrt_sum_geq([8], [2, 2])
    assert sqrt_sum_geq([2, 2], [8])
    assert not sqrt_sum_geq([5], [2, 3])


def test_tracker_variance_bridge_examples():
    f = gen("monotone-random", {"n": 3, "d": 2, "seed": 2})
    assert tracker_variance_bridge(f) == (0, 0)
    g = func("100")
    evar, edist = tracker_variance_bridge(g)
    # S = {} and S = {1} each contribute dist(f, sort f) with weight 1/2
    assert edist == hamming(g, sort_all(g))


def test_tracker_variance_bridge_exhaustive():
    for _, f in all_functions(3, 2):
        evar, edist = tracker_variance_bridge(f)
        assert edist <= 4 * evar


def test_tracker_variance_bridge_sampled_mode():
    f = gen("random", {"n": 3, "d": 3, "seed": 4})
    evar, edist = tracker_variance_bridge(f, samples=200, seed=1)
    exact_var, exact_dist = tracker_variance_bridge(f)
    assert abs(edist - float(exact_dist)) < 0.15


def test_semisorted_ratio_anchor(rng):
    best = math.inf
    for d in (1, 2, 3):
        for _, f in all_functions(2, d):
            if not is_monotone(f):
                best = min(best, adversarial_coloring(f).t_min / float(eps_monotone(f).eps))
    for s in range(200):
        f = gen("semisorted-random", {"n": 4, "d": 2, "seed": s})
        if not is_monotone(f):
            best = min(best, adversarial_coloring(f).t_min / float(eps_monotone(f).eps))
    assert best > 0
    assert best == pytest.approx(ANCHORS["c_semisorted"], abs=1e-12)


def test_cube_talagrand_ratio_anchor():
    ratios = [cube_talagrand_ratio(d) for d in (1, 2, 3)]
    assert min(ratios) > 0
    assert ratios[0] == pytest.approx(0.5)
    assert min(ratios) == pytest.approx(ANCHORS["cube_talagrand_ratio"], abs=1e-12)
    with pytest.raises(Exception):
        cube_talagrand_ratio(4)
