"""Hamming distance, exact distance to monotonicity, the sorted-distance proxy and restrictions."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .grid import ContractError, DomainError, GridDomain, GridFunction, restrict
from .influence import phi_matrix, variance
from .sorting import sort_set

BRUTE_FORCE_LIMIT = 16
EXACT_DELTA_MAX_D = 8


def hamming(f: GridFunction, g: GridFunction) -> Fraction:
    if f.domain != g.domain:
        raise ContractError(f"domain mismatch {f.domain} vs {g.domain}")
    diff = np.unpackbits(f.packed ^ g.packed, bitorder="little").sum()
    return Fraction(int(diff), f.domain.size)


@dataclass(frozen=True)
class MatchingResult:
    matching_size: int
    eps: Fraction
    witness: list = field(default_factory=list)


def _comparable_pairs(coords_lo: np.ndarray, coords_hi: np.ndarray, chunk: int = 1024):
    """Row/column indices (r, c) with coords_lo[r] <= coords_hi[c] coordinatewise."""
    rows, cols = [], []
    for start in range(0, coords_lo.shape[0], chunk):
        block = coords_lo[start:start + chunk]
        le = np.all(block[:, None, :] <= coords_hi[None, :, :], axis=2)
        r, c = np.nonzero(le)
        rows.append(r + start)
        cols.append(c)
    if not rows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def eps_monotone(f: GridFunction) -> MatchingResult:
    """Distance to monotonicity as a maximum matching of violating (one below zero) pairs."""
    dom = f.domain
    coords = dom.coords()
    v = f.values
    ones = np.flatnonzero(v == 1)
    zeros = np.flatnonzero(v == 0)
    if ones.size == 0 or zeros.size == 0:
        return MatchingResult(0, Fraction(0), [])
    r, c = _comparable_pairs(coords[ones], coords[zeros])
    if r.size == 0:
        return MatchingResult(0, Fraction(0), [])
    graph = csr_matrix((np.ones(r.size, dtype=np.int8), (r, c)),
                       shape=(ones.size, zeros.size))
    match = maximum_bipartite_matching(graph, perm_type="column")
    matched = np.flatnonzero(match >= 0)
    witness = [(dom.point_of(int(ones[a])), dom.point_of(int(zeros[match[a]])))
               for a in matched]
    return MatchingResult(len(witness), Fraction(len(witness), dom.size), witness)


def _comparable_index_pairs(dom: GridDomain):
    coords = dom.coords()
    r, c = _comparable_pairs(coords, coords)
    keep = r != c
    return r[keep], c[keep]


def brute_force_eps(f: GridFunction) -> Fraction:
    """Fewest flips that make f monotone, by scanning flip sets of increasing size."""
    dom = f.domain
    N = dom.size
    if N > BRUTE_FORCE_LIMIT:
        raise DomainError(f"brute force refuses domains above {BRUTE_FORCE_LIMIT} points, got {N}")
    lo, hi = _comparable_index_pairs(dom)
    base = int(sum(int(b) << k for k, b in enumerate(f.values.tolist())))
    masks = np.arange(1 << N, dtype=np.int64)
    popcount = np.array([bin(m).count("1") for m in range(1 << N)], dtype=np.int64)
    for k in range(N + 1):
        flips = masks[popcount == k]
        g = flips ^ base
        ok = np.ones(flips.size, dtype=bool)
        for u, w in zip(lo.tolist(), hi.tolist()):
            ok &= ~(((g >> u) & 1 == 1) & ((g >> w) & 1 == 0))
        if ok.any():
            return Fraction(k, N)
    raise AssertionError("flipping every point never gave a monotone function")


@dataclass(frozen=True)
class DeltaEstimate:
    value: float
    exact: Optional[Fraction]
    stderr: float
    samples: int


def _delta_exact(f: GridFunction) -> Fraction:
    d = f.d
    total = Fraction(0)
    count = 0
    for perm in itertools.permutations(range(1, d + 1)):
        total += hamming(f, sort_set(f, perm))
        count += 1
    return total / count


def delta_sorted(f: GridFunction, trials: int = 10_000, seed: int = 0,
                 exact: Optional[bool] = None) -> DeltaEstimate:
    """Mean distance from f to its full sort under a uniformly random dimension order."""
    if trials < 1:
        raise ContractError("trials must be at least 1")
    if exact is None:
        exact = f.d <= EXACT_DELTA_MAX_D
    if exact:
        val = _delta_exact(f) if f.d else Fraction(0)
        return DeltaEstimate(float(val), val, 0.0, math.factorial(f.d))
    rng = np.random.default_rng(seed)
    cache: dict[tuple, float] = {}
    samples = np.empty(trials)
    for t in range(trials):
        perm = tuple(int(p) + 1 for p in rng.permutation(f.d))
        if perm not in cache:
            cache[perm] = float(hamming(f, sort_set(f, perm)))
        samples[t] = cache[perm]
    stderr = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return DeltaEstimate(float(samples.mean()), None, stderr, trials)


def random_restriction(f: GridFunction, S: Sequence[int], seed) -> GridFunction:
    """Restrict f to the free dimensions S after a uniform draw of the other coordinates."""
    rng = np.random.default_rng(seed)
    S = sorted(set(int(s) for s in S))
    for s in S:
        f.domain.check_dim(s)
    fixed = {dim: int(rng.integers(1, f.n + 1)) for dim in range(1, f.d + 1) if dim not in S}
    return restrict(f, S, fixed)


def _subsets(d: int):
    for mask in range(1 << d):
        yield [j + 1 for j in range(d) if mask >> j & 1]


def _restrictions(f: GridFunction, S: Sequence[int]):
    others = [dim for dim in range(1, f.d + 1) if dim not in S]
    for vals in itertools.product(range(1, f.n + 1), repeat=len(others)):
        yield restrict(f, S, dict(zip(others, vals)))


def cube_function_bits(d: int, mask: int) -> np.ndarray:
    """Hypercube function number ``mask`` as a table indexed by subset bitmask."""
    return np.array([(mask >> T) & 1 for T in range(1 << d)], dtype=np.uint8)


def var_prob_sides(h) -> tuple[Fraction, Fraction]:
    """(Pr_S[h(S) != h(complement S)], 4 var(h)) for a hypercube table h."""
    h = np.asarray(h, dtype=np.uint8)
    size = h.size
    full = size - 1
    T = np.arange(size)
    lhs = Fraction(int(np.count_nonzero(h != h[full ^ T])), size)
    return lhs, 4 * variance(h)


def _sqrt_mean(per_point: np.ndarray) -> float:
    return float(np.sqrt(per_point.astype(float)).mean()) if per_point.size else 0.0


def restriction_talagrand_sides(f: GridFunction, p: Fraction = Fraction(1, 2)) -> tuple[float, float]:
    """(T(f), (1/sqrt p) E_{S~H(p)} E_h T(h)) for the uncolored thresholded influence."""
    p = Fraction(p)
    lhs = _sqrt_mean(phi_matrix(f).sum(axis=1))
    rhs = 0.0
    for S in _subsets(f.d):
        weight = float(p ** len(S) * (1 - p) ** (f.d - len(S)))
        if weight == 0.0:
            continue
        if not S:
            continue  # a one-point restriction has no influence
        vals = [_sqrt_mean(phi_matrix(h).sum(axis=1)) for h in _restrictions(f, S)]
        rhs += weight * float(np.mean(vals))
    return lhs, rhs / math.sqrt(float(p))


def _delta_exact_any(h: GridFunction) -> Fraction:
    return _delta_exact(h) if h.d else Fraction(0)


def triangle_sides(f: GridFunction) -> tuple[Fraction, Fraction]:
    """Both sides of delta(f) <= E_S E_h delta(h) + E_pi E_S dist(pi(S) f, pi(S-bar) f)."""
    d = f.d
    lhs = _delta_exact_any(f)
    restr = Fraction(0)
    for S in _subsets(d):
        if S:
            hs = list(_restrictions(f, S))
            restr += sum((_delta_exact_any(h) for h in hs), Fraction(0)) / len(hs)
    restr /= 1 << d
    cross = Fraction(0)
    perms = list(itertools.permutations(range(1, d + 1)))
    for perm in perms:
        for S in _subsets(d):
            Sset = set(S)
            ordered_S = [j for j in perm if j in Sset]
            ordered_Sbar = [j for j in perm if j not in Sset]
            cross += hamming(sort_set(f, ordered_S), sort_set(f, ordered_Sbar))
    cross /= len(perms) << d
    return lhs, restr + cross
