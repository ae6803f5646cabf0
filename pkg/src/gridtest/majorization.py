"""Majorization order, sorted-sum dominance and the sum-of-square-roots objective."""
from __future__ import annotations

import math
from decimal import Decimal, localcontext
from collections import Counter
from fractions import Fraction
from numbers import Integral
from typing import Sequence

import numpy as np

from .grid import ContractError, DomainError

TOL = 1e-9


def _is_integral(v) -> bool:
    arr = np.asarray(v)
    if arr.dtype.kind in "iub":
        return True
    if arr.dtype == object:
        return all(isinstance(x, (Integral, Fraction)) for x in arr.ravel())
    return False


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size and np.any(arr < 0):
        raise DomainError("vector has a negative entry")
    return arr


def half_norm(v: Sequence[float]) -> float:
    """Sum of square roots of the (non-negative) entries."""
    arr = _as_vector(v)
    return float(np.sqrt(arr.astype(float)).sum())


def sortdown(v) -> np.ndarray:
    return np.sort(np.asarray(v), kind="stable")[::-1]


def sortup(v) -> np.ndarray:
    return np.sort(np.asarray(v), kind="stable")


def _prefix_ok(a, b, exact: bool) -> bool:
    pa = np.cumsum(sortdown(a))
    pb = np.cumsum(sortdown(b))
    if exact:
        return bool(np.all(pa >= pb))
    return bool(np.all(pa >= pb - TOL))


def majorizes(a, b) -> bool:
    """True iff every prefix of sortdown(a) dominates the same prefix of sortdown(b).

    Both vectors must carry the same total mass.  Integer inputs are compared
    exactly; anything else with a 1e-9 slack.
    """
    a = _as_vector(a)
    b = _as_vector(b)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch {a.shape[0]} vs {b.shape[0]}")
    exact = _is_integral(a) and _is_integral(b)
    if exact:
        a = a.astype(object) if a.dtype == object else a.astype(np.int64)
        b = b.astype(object) if b.dtype == object else b.astype(np.int64)
        if a.sum() != b.sum():
            raise ContractError(f"unequal mass {a.sum()} vs {b.sum()}")
    elif abs(float(a.sum()) - float(b.sum())) > TOL:
        raise ContractError(f"unequal mass {float(a.sum())} vs {float(b.sum())}")
    return _prefix_ok(a, b, exact)


def dominates_coordinatewise(a, b) -> bool:
    """a >= b entry by entry."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ContractError("length mismatch")
    if _is_integral(a) and _is_integral(b):
        return bool(np.all(a >= b))
    return bool(np.all(a >= b - TOL))


def sorted_sum_dominates(parts, direction: str = "down"):
    """Sum of individually sorted parts against the sorted plain sum.

    Returns (S, U, check) with U = sum(parts), S = sum(sorted(part)) and check
    telling whether S majorizes U.
    """
    if direction not in ("down", "up"):
        raise ContractError(f"direction must be 'down' or 'up', got {direction!r}")
    parts = [np.asarray(p) for p in parts]
    if not parts:
        raise ContractError("need at least one part")
    t = parts[0].shape
    for p in parts:
        if p.shape != t or p.ndim != 1:
            raise ContractError("all parts must be vectors of the same length")
        if p.size and np.any(p < 0):
            raise DomainError("vector has a negative entry")
    order = sortdown if direction == "down" else sortup
    U = sum(parts[1:], parts[0].copy())
    S = sum((order(p) for p in parts[1:]), order(parts[0]).copy())
    return S, U, majorizes(S, U)


def half_norm_compare(a, b) -> int:
    """Exact sign of half_norm(a) - half_norm(b) for non-negative integer vectors.

    Shared entries cancel first, so exact ties return 0 even when the float sums
    would differ in the last bit.
    """
    ca = Counter(int(x) for x in np.asarray(a).ravel())
    cb = Counter(int(x) for x in np.asarray(b).ravel())
    if any(k < 0 for k in ca) or any(k < 0 for k in cb):
        raise DomainError("vector has a negative entry")
    common = ca & cb
    ca -= common
    cb -= common
    # squares contribute integers, which are summed exactly
    ia = sum(math.isqrt(k) * m for k, m in ca.items() if math.isqrt(k) ** 2 == k)
    ib = sum(math.isqrt(k) * m for k, m in cb.items() if math.isqrt(k) ** 2 == k)
    ra = {k: m for k, m in ca.items() if math.isqrt(k) ** 2 != k}
    rb = {k: m for k, m in cb.items() if math.isqrt(k) ** 2 != k}
    if not ra and not rb:
        return (ia > ib) - (ia < ib)
    # square roots of distinct square-free parts are linearly independent over Q,
    # so a difference that is nonzero stays well clear of zero at 80 digits
    with localcontext() as ctx:
        ctx.prec = 80
        sa = Decimal(ia) + sum(Decimal(k).sqrt() * m for k, m in ra.items())
        sb = Decimal(ib) + sum(Decimal(k).sqrt() * m for k, m in rb.items())
        diff = sa - sb
        if abs(diff) < Decimal(10) ** -60:
            return 0
        return 1 if diff > 0 else -1
