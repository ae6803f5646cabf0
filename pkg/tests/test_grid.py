import itertools

import numpy as np
import pytest
from hypothesis import given

from gridtest.grid import (AugEdge, ContractError, DomainError, FormatError, GridDomain,
                           GridFunction, cube_edge_count, cube_edge_ids, edge_count, edge_id,
                           edge_of, edge_table, func, is_monotone, line_indices, lines,
                           parse_function, read_function, restrict, violating_edges,
                           violation_mask, write_function)

from conftest import functions


def test_index_examples():
    dom = GridDomain(3, 2)
    assert dom.index_of((1, 1)) == 0
    assert dom.index_of((2, 1)) == 1
    assert dom.index_of((1, 2)) == 3


@pytest.mark.parametrize("n,d", [(n, d) for n in range(2, 5) for d in range(1, 5)])
def test_index_bijection(n, d):
    dom = GridDomain(n, d)
    seen = set()
    for k in range(dom.size):
        p = dom.point_of(k)
        assert dom.index_of(p) == k
        seen.add(p)
    assert len(seen) == dom.size
    assert [dom.index_of(p) for p in dom.points()] == list(range(dom.size))


def test_out_of_range_point():
    dom = GridDomain(3, 2)
    with pytest.raises(DomainError):
        dom.index_of((0, 1))
    with pytest.raises(DomainError):
        dom.index_of((1, 4))
    with pytest.raises(DomainError):
        GridDomain(1, 2)


def test_function_storage_roundtrip():
    f = func("100")
    assert f.values.tolist() == [1, 0, 0]
    assert f((1,)) == 1 and f((2,)) == 0
    g = GridFunction.from_packed(f.domain, f.packed)
    assert f == g and hash(f) == hash(g)
    with pytest.raises(ContractError):
        GridFunction(GridDomain(2, 1), [0, 2])


def test_table_axis_is_dimension():
    dom = GridDomain(3, 2)
    f = GridFunction(dom, [1 if p[0] == 1 else 0 for p in dom.points()])
    assert f.table()[0, :].tolist() == [1, 1, 1]
    assert f.table()[:, 0].tolist() == [1, 0, 0]


def test_violating_edges_line():
    assert violating_edges(func("100")) == [AugEdge((1,), 1, 1), AugEdge((1,), 1, 2)]
    assert violating_edges(func("01")) == []
    assert violating_edges(GridFunction.constant(GridDomain(3, 2), 1)) == []


@pytest.mark.parametrize("n,d", [(2, 1), (3, 1), (4, 1), (2, 2), (3, 2), (4, 2), (2, 3), (3, 3)])
def test_edge_count(n, d):
    dom = GridDomain(n, d)
    assert edge_count(dom) == (n - 1) * d * n ** d // 2
    assert len(edge_table(dom)) == edge_count(dom)


@pytest.mark.parametrize("n,d", [(3, 1), (3, 2), (4, 2), (2, 3)])
def test_edge_ids_roundtrip(n, d):
    dom = GridDomain(n, d)
    t = edge_table(dom)
    for e in range(len(t)):
        edge = edge_of(dom, e)
        assert edge_id(dom, edge) == e
        assert edge.offset >= 1 and edge.upper[edge.dim - 1] <= n
    # canonical order: by dimension first
    assert np.all(np.diff(t.dim) >= 0)


def _comparable_violation(f):
    dom = f.domain
    pts = list(dom.points())
    for x, y in itertools.product(pts, pts):
        if x != y and all(a <= b for a, b in zip(x, y)) and f(x) == 1 and f(y) == 0:
            return True
    return False


@given(functions(ns=(2, 3), ds=(1, 2)))
def test_monotone_iff_no_violations(f):
    assert is_monotone(f) == (len(violating_edges(f)) == 0)
    assert is_monotone(f) == (not _comparable_violation(f))


def test_lines():
    dom = GridDomain(3, 2)
    rows = line_indices(dom, 2)
    assert rows.shape == (3, 3)
    assert rows[0].tolist() == [0, 3, 6]
    ls = list(lines(dom, 1))
    assert len(ls) == 3 and ls[1].points(3) == [(1, 2), (2, 2), (3, 2)]


def test_restrict_examples():
    dom = GridDomain(3, 2)
    f = GridFunction(dom, [1, 0, 0, 1, 1, 1, 0, 0, 0])
    assert restrict(f, [1], {2: 1}).values.tolist() == [1, 0, 0]
    one = GridFunction.constant(dom, 1)
    assert restrict(one, [2], {1: 3}).values.tolist() == [1, 1, 1]
    half = GridFunction(dom, [1 if p[0] <= 1 else 0 for p in dom.points()])
    assert restrict(half, [2], {1: 2}).values.tolist() == [0, 0, 0]
    point = restrict(f, [], {1: 1, 2: 2})
    assert point.domain.size == 1 and point.values.tolist() == [1]
    with pytest.raises(DomainError):
        restrict(f, [1], {1: 1, 2: 1})


def test_file_format(tmp_path):
    f = parse_function("3 1\n100")
    assert f.values.tolist() == [1, 0, 0]
    assert parse_function("2 2\n1 0\n0 1\n").values.tolist() == [1, 0, 0, 1]
    with pytest.raises(FormatError) as exc:
        parse_function("2 2\n101")
    assert exc.value.offset == len("2 2\n101")
    with pytest.raises(FormatError) as exc:
        parse_function("2 1\n1x")
    assert exc.value.offset == 5
    with pytest.raises(FormatError):
        parse_function("2\n10")
    g = GridFunction(GridDomain(3, 2), [1, 0, 1, 1, 0, 0, 1, 1, 0])
    path = tmp_path / "g.txt"
    write_function(g, path)
    assert read_function(path) == g


@given(functions())
def test_write_read_roundtrip(f):
    from gridtest.grid import format_function
    assert parse_function(format_function(f)) == f


def test_violation_mask_counts():
    assert int(violation_mask(func("100")).sum()) == 2
    assert int(violation_mask(func("1100")).sum()) == 4


def test_cube_edges_are_a_bijection():
    for d in range(1, 5):
        seen = set()
        for j in range(1, d + 1):
            T = np.array([t for t in range(1 << d) if not t >> (j - 1) & 1])
            ids = cube_edge_ids(d, j, T)
            assert np.array_equal(ids, cube_edge_ids(d, j, T | (1 << (j - 1))))
            seen.update(ids.tolist())
        assert seen == set(range(cube_edge_count(d)))
