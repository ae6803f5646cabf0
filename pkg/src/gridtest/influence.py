"""Thresholded, colorful and weighted influences, total influences and Talagrand objectives."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .grid import (ContractError, GridDomain, GridFunction, cube_edge_ids, edge_count,
                   edge_table)


@dataclass(frozen=True)
class InfluenceVector:
    """Per-point influence values, with the per-dimension breakdown kept alongside."""

    domain: GridDomain
    per_dim: np.ndarray  # shape (n^d, d)

    @property
    def per_point(self) -> np.ndarray:
        return self.per_dim.sum(axis=1)

    def half_norm(self) -> float:
        return float(np.sqrt(self.per_point.astype(float)).sum())

    def objective(self) -> float:
        return self.half_norm() / self.domain.size


@dataclass(frozen=True)
class TalagrandReport:
    objective: float
    eps: Optional[float] = None
    ratio: Optional[float] = None


def coloring_bits(chi) -> np.ndarray:
    bits = getattr(chi, "bits", chi)
    return np.asarray(bits, dtype=np.uint8)


def _check_coloring(f: GridFunction, bits: np.ndarray) -> None:
    if bits.shape != (edge_count(f.domain),):
        raise ContractError(
            f"coloring has {bits.shape[0]} bits, domain has {edge_count(f.domain)} edges")


def phi_matrix(f: GridFunction) -> np.ndarray:
    """Φ_f(x;i) as an (n^d, d) 0/1 array."""
    d = f.d
    table = f.table().astype(np.int32)
    out = np.zeros((f.domain.size, d), dtype=np.int8)
    for k in range(d):
        # a one is violated iff a zero follows it; a zero iff a one precedes it
        ones_before = np.cumsum(table, axis=k) - table
        rev = np.flip(1 - table, axis=k)
        zeros_after = np.flip(np.cumsum(rev, axis=k) - rev, axis=k)
        hit = np.where(table == 1, zeros_after > 0, ones_before > 0)
        out[:, k] = hit.reshape(-1, order="F")
    return out


def phi(f: GridFunction) -> InfluenceVector:
    return InfluenceVector(f.domain, phi_matrix(f))


def phi_dim(f: GridFunction, x: Sequence[int], i: int) -> int:
    f.domain.check_dim(i)
    return int(phi_matrix(f)[f.domain.index_of(x), i - 1])


def _colored_endpoints(f: GridFunction, chi):
    """Violating edges together with which endpoint the color credits."""
    bits = coloring_bits(chi)
    _check_coloring(f, bits)
    t = edge_table(f.domain)
    v = f.values
    viol = (v[t.lower] == 1) & (v[t.upper] == 0)
    low_hit = viol & (bits == 1)
    up_hit = viol & (bits == 0)
    return t, low_hit, up_hit


def phi_colored_matrix(f: GridFunction, chi) -> np.ndarray:
    t, low_hit, up_hit = _colored_endpoints(f, chi)
    out = np.zeros((f.domain.size, f.d), dtype=np.int8)
    out[t.lower[low_hit], t.dim[low_hit] - 1] = 1
    out[t.upper[up_hit], t.dim[up_hit] - 1] = 1
    return out


def phi_colored(f: GridFunction, chi) -> InfluenceVector:
    return InfluenceVector(f.domain, phi_colored_matrix(f, chi))


def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, a) for a in range(1, n + 1)), Fraction(0))


def _lcm_upto(n: int) -> int:
    return reduce(math.lcm, range(1, max(n, 1) + 1), 1)


def psi_numerators(f: GridFunction, chi=None) -> tuple[np.ndarray, int]:
    """Exact Ψ: returns (numerators of shape (n^d, d), common denominator).

    Ψ(x;i) = numerators[x, i-1] / denominator.  With a coloring only edges whose
    color equals f(x) are counted.
    """
    t = edge_table(f.domain)
    L = _lcm_upto(f.n - 1)
    weight = L // t.offset
    if chi is None:
        v = f.values
        low_hit = up_hit = (v[t.lower] == 1) & (v[t.upper] == 0)
    else:
        t, low_hit, up_hit = _colored_endpoints(f, chi)
    N, d = f.domain.size, f.d
    num = np.zeros(N * d, dtype=np.int64)
    np.add.at(num, t.lower[low_hit] * d + t.dim[low_hit] - 1, weight[low_hit])
    np.add.at(num, t.upper[up_hit] * d + t.dim[up_hit] - 1, weight[up_hit])
    return num.reshape(N, d), L


def psi(f: GridFunction) -> InfluenceVector:
    num, L = psi_numerators(f)
    return InfluenceVector(f.domain, num / L)


def psi_colored(f: GridFunction, chi) -> InfluenceVector:
    num, L = psi_numerators(f, chi)
    return InfluenceVector(f.domain, num / L)


def _line_counts(f: GridFunction):
    table = f.table().astype(np.int64)
    for k in range(f.d):
        ones = table.sum(axis=k)
        yield table, k, ones


def total_influence(f: GridFunction) -> Fraction:
    """Average over points of the number of single-coordinate replacements that change f."""
    n = f.n
    total = 0
    for _, _, ones in _line_counts(f):
        total += int((2 * ones * (n - ones)).sum())
    return Fraction(total, f.domain.size)


def total_neg_influence(f: GridFunction) -> Fraction:
    """Number of violating aligned pairs divided by n^d."""
    total = 0
    for table, k, _ in _line_counts(f):
        ones_before = np.cumsum(table, axis=k) - table
        total += int((ones_before * (1 - table)).sum())
    return Fraction(total, f.domain.size)


def cube_colored_influence(g, xi, dims: Optional[Sequence[int]] = None) -> np.ndarray:
    """Per-vertex count of sensitive hypercube edges whose color equals g at the vertex.

    ``g`` has length 2^d indexed by the bitmask of T (bit j-1 for dimension j).
    ``xi`` holds one entry per edge; -1 marks an undefined color, which is an
    error only if a sensitive edge in ``dims`` needs it.
    """
    g = np.asarray(g, dtype=np.int8)
    size = g.shape[-1]
    d = size.bit_length() - 1
    if 1 << d != size:
        raise ContractError(f"cube table length {size} is not a power of two")
    xi = np.asarray(xi, dtype=np.int8)
    if xi.shape[-1] != d * (size >> 1):
        raise ContractError(f"cube coloring has {xi.shape[-1]} entries, need {d * (size >> 1)}")
    T = np.arange(size)
    out = np.zeros(g.shape, dtype=np.int64)
    for j in (range(1, d + 1) if dims is None else dims):
        partner = T ^ (1 << (j - 1))
        col = xi[..., cube_edge_ids(d, j, T)]
        sens = g != g[..., partner]
        if np.any(sens & (col < 0)):
            raise ContractError(f"sensitive edge in dimension {j} has no color")
        out += sens & (col == g)
    return out


def variance(values) -> Fraction:
    """4 p0 p1 for a 0/1 table (a GridFunction or any array of bits)."""
    v = values.values if isinstance(values, GridFunction) else np.asarray(values)
    size = int(v.size)
    p1 = Fraction(int(v.sum()), size)
    return 4 * p1 * (1 - p1)


def talagrand_objective(v, eps=None) -> TalagrandReport:
    if isinstance(v, InfluenceVector):
        obj = v.objective()
    else:
        arr = np.asarray(v, dtype=float)
        if arr.size and arr.min() < 0:
            raise ContractError("influence values must be non-negative")
        obj = float(np.sqrt(arr).mean()) if arr.size else 0.0
    ratio = None
    if eps is not None and eps > 0:
        ratio = obj / float(eps)
    return TalagrandReport(obj, None if eps is None else float(eps), ratio)


def talagrand_colored(f: GridFunction, chi) -> float:
    return phi_colored(f, chi).objective()
