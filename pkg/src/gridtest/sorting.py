"""Sort operators on hypergrid functions: per-line sorting, semisorting and the dyadic hierarchy."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .grid import ContractError, GridDomain, GridFunction


def sort_line(h: Sequence[int]) -> list[int]:
    """Zeros first, then ones; the number of ones is preserved."""
    h = [int(b) for b in h]
    ones = sum(h)
    return [0] * (len(h) - ones) + [1] * ones


def _check_dims(dom: GridDomain, dims: Iterable[int]) -> list[int]:
    dims = [int(i) for i in dims]
    if len(set(dims)) != len(dims):
        raise ContractError(f"duplicate dimension in sort list {dims}")
    for i in dims:
        dom.check_dim(i)
    return dims


def _sort_table(table: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    for i in dims:
        table = np.sort(table, axis=i - 1)
    return table


def sort_dim(f: GridFunction, i: int) -> GridFunction:
    f.domain.check_dim(i)
    return GridFunction.from_table(f.domain, np.sort(f.table(), axis=i - 1))


def sort_set(f: GridFunction, dims: Sequence[int]) -> GridFunction:
    """Sort along each dimension of ``dims`` in the listed order."""
    dims = _check_dims(f.domain, dims)
    if not dims:
        return f
    return GridFunction.from_table(f.domain, _sort_table(f.table(), dims))


def sort_all(f: GridFunction) -> GridFunction:
    return sort_set(f, range(1, f.d + 1))


def semisort_interval(f: GridFunction, i: int, interval: tuple[int, int]) -> GridFunction:
    """Sort the positions a..b (1-based, inclusive) of every i-line."""
    a, b = interval
    dom = f.domain
    dom.check_dim(i)
    if a > b:
        raise ContractError(f"empty interval [{a}, {b}]")
    if a < 1 or b > dom.n:
        raise ContractError(f"interval [{a}, {b}] outside [1, {dom.n}]")
    table = np.array(f.table())
    sl = [slice(None)] * dom.d
    sl[i - 1] = slice(a - 1, b)
    table[tuple(sl)] = np.sort(table[tuple(sl)], axis=i - 1)
    return GridFunction.from_table(dom, table)


def semisort(f: GridFunction, i: int) -> GridFunction:
    """Sort both halves of every i-line."""
    n = f.n
    if n % 2:
        raise ContractError(f"halves need even n, got {n}")
    g = semisort_interval(f, i, (1, n // 2))
    return semisort_interval(g, i, (n // 2 + 1, n))


def semisort_all(f: GridFunction) -> GridFunction:
    for i in range(1, f.d + 1):
        f = semisort(f, i)
    return f


def is_sorted_along(f: GridFunction, i: int) -> bool:
    return not np.any(np.diff(f.table().astype(np.int8), axis=i - 1) < 0)


def is_semisorted(f: GridFunction) -> bool:
    n = f.n
    if n % 2:
        raise ContractError(f"semisortedness needs even n, got {n}")
    table = f.table().astype(np.int8)
    half = n // 2
    for k in range(f.d):
        lo = np.take(table, range(half), axis=k)
        hi = np.take(table, range(half, n), axis=k)
        if np.any(np.diff(lo, axis=k) < 0) or np.any(np.diff(hi, axis=k) < 0):
            return False
    return True


def _log2_exact(n: int) -> int:
    k = n.bit_length() - 1
    if 1 << k != n:
        raise ContractError(f"dyadic hierarchy needs n a power of two, got {n}")
    return k


def hierarchy_step(f_prev: GridFunction, j: int) -> GridFunction:
    """Fully sort every dyadic block of side 2**j (all dimensions, in order 1..d)."""
    n, d = f_prev.n, f_prev.d
    k = _log2_exact(n)
    if not 1 <= j <= k:
        raise ContractError(f"scale {j} outside [1, {k}]")
    s = 1 << j
    # axis m splits into (block, offset); offsets sit at odd positions
    blocks = f_prev.table().reshape(sum(((n // s, s) for _ in range(d)), ()))
    for m in range(d):
        blocks = np.sort(blocks, axis=2 * m + 1)
    return GridFunction.from_table(f_prev.domain, blocks.reshape((n,) * d))


def hierarchy(f: GridFunction) -> list[GridFunction]:
    """f_0 = f, then f_j sorts every block of side 2**j of f_{j-1}; f_k is monotone."""
    k = _log2_exact(f.n)
    out = [f]
    for j in range(1, k + 1):
        out.append(hierarchy_step(out[-1], j))
    return out
