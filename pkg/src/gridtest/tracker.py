"""Tracker functions, the hybrid objective across sorting stages, and potential-drop checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .coloring import potential_colorings
from .grid import (ContractError, DomainError, GridFunction, InvariantViolation, cube_edge_count,
                   cube_edge_ids, line_indices)
from .influence import cube_colored_influence, phi_colored_matrix, variance
from .majorization import dominates_coordinatewise, half_norm_compare, majorizes
from .sorting import is_semisorted, sort_set

TRACKER_BUDGET = 1 << 31
TOL = 1e-9


def _mask(S: Iterable[int]) -> int:
    m = 0
    for s in S:
        m |= 1 << (int(s) - 1)
    return m


def _dims(mask: int) -> list[int]:
    return [j + 1 for j in range(mask.bit_length()) if mask >> j & 1]


def tracker_eval(f: GridFunction, x: Sequence[int], S: Iterable[int]) -> int:
    """g_x(S): the value at x after sorting f along S in increasing order."""
    return sort_set(f, sorted(set(int(s) for s in S)))(x)


def tracker_table(f: GridFunction) -> np.ndarray:
    """Array g[x, T] for all points x and all subsets T (bit j-1 for dimension j).

    Each subset is reached from its largest-dimension-removed parent with a
    single sort, so the whole table costs one sort per subset.
    """
    N, d = f.domain.size, f.d
    if N << d > TRACKER_BUDGET:
        raise DomainError(f"tracker table needs {N << d} entries; the limit is {TRACKER_BUDGET}")
    out = np.empty((N, 1 << d), dtype=np.uint8)

    def visit(T: int, table: np.ndarray, last: int) -> None:
        out[:, T] = table.reshape(-1, order="F")
        for j in range(last + 1, d + 1):
            visit(T | 1 << (j - 1), np.sort(table, axis=j - 1), j)

    visit(0, f.table(), 0)
    return out


def cube_influence_j(f: GridFunction, x: Sequence[int], S: Iterable[int], j: int,
                     xi_x) -> int:
    """1 iff g_x(S) != g_x(S xor j) and the edge color equals g_x(S)."""
    d = f.d
    f.domain.check_dim(j)
    T = _mask(S)
    g_here = tracker_eval(f, x, _dims(T))
    g_there = tracker_eval(f, x, _dims(T ^ (1 << (j - 1))))
    bits = np.asarray(getattr(xi_x, "bits", xi_x))
    color = int(bits[cube_edge_ids(d, j, T)])
    if color < 0:
        raise ContractError(f"edge ({T:b}, dim {j}) has no color")
    return int(g_here != g_there and color == g_here)


def hybrid_parts(tracker: np.ndarray, T: int, i: int, chi, xi: np.ndarray,
                 d: int, f: GridFunction) -> np.ndarray:
    """Per-point, per-dimension terms of the stage-i hybrid objective at subset T.

    Column j-1 holds the tracker-side influence for j <= i and the colorful
    thresholded influence of T o f for j > i.
    """
    N = tracker.shape[0]
    out = np.zeros((N, d), dtype=np.int64)
    g = tracker[:, T]
    for j in range(1, i + 1):
        other = tracker[:, T ^ (1 << (j - 1))]
        col = xi[:, cube_edge_ids(d, j, T)]
        sens = g != other
        if np.any(sens & (col < 0)):
            raise ContractError(f"stage {i}: sensitive cube edge ({T:b}, dim {j}) has no color")
        out[:, j - 1] = sens & (col == g)
    if i < d:
        phi = phi_colored_matrix(GridFunction(f.domain, g), chi)
        out[:, i:] = phi[:, i:]
    return out


def hybrid_vector(tracker, T, i, chi, xi, d, f) -> np.ndarray:
    return hybrid_parts(tracker, T, i, chi, xi, d, f).sum(axis=1)


def hybrid_R(f: GridFunction, chi, xi: np.ndarray, i: int, S: Iterable[int],
             tracker: Optional[np.ndarray] = None) -> float:
    """E_x sqrt(tracker influences in dims <= i + colorful influences of S o f in dims > i)."""
    if tracker is None:
        tracker = tracker_table(f)
    T = _mask(S)
    if T >> i:
        raise ContractError(f"subset {_dims(T)} is not inside [1, {i}]")
    vec = hybrid_vector(tracker, T, i, chi, xi, f.d, f)
    return float(np.sqrt(vec.astype(float)).mean())


def sqrt_sum_geq(a, b) -> bool:
    """sum sqrt(a) >= sum sqrt(b) for integer vectors, exact near ties."""
    sa = float(np.sqrt(np.asarray(a, dtype=float)).sum())
    sb = float(np.sqrt(np.asarray(b, dtype=float)).sum())
    if sa - sb > TOL:
        return True
    if sb - sa > TOL:
        return False
    return half_norm_compare(a, b) >= 0


# ---------------------------------------------------------------- dominance checks

def _regions(h_line: np.ndarray, n: int):
    """Zeros/ones of each half of a semisorted line: (W, A, C, O) as index arrays."""
    half = n // 2
    idx = np.arange(n)
    W = idx[:half][h_line[:half] == 0]
    A = idx[:half][h_line[:half] == 1]
    C = idx[half:][h_line[half:] == 0]
    O = idx[half:][h_line[half:] == 1]
    return W, A, C, O


def _sorted(v: np.ndarray, down: bool) -> np.ndarray:
    s = np.sort(v, kind="stable")
    return s[::-1] if down else s


def _bound(parts: np.ndarray, dims: Sequence[int], src: np.ndarray, down: bool) -> np.ndarray:
    """Sum over dims of the individually sorted restrictions of parts[:, j-1] to src."""
    out = np.zeros(src.size, dtype=np.int64)
    for j in dims:
        out += _sorted(parts[src, j - 1], down)
    return out


def _check_block(L_parts, after_parts, src, dst, down, i, d, label) -> list[str]:
    """Coordinatewise bounds for each piece, then majorization of their sum.

    ``src`` indexes the line before the step, ``dst`` after it (same length).
    """
    problems = []
    pieces = {1: list(range(1, i)), 2: [i], 3: list(range(i + 1, d + 1))}
    total = np.zeros(src.size, dtype=np.int64)
    for q, dims in pieces.items():
        B = _bound(L_parts, dims, src, down)
        got = after_parts[dst][:, [j - 1 for j in dims]].sum(axis=1) if dims else \
            np.zeros(dst.size, dtype=np.int64)
        if not dominates_coordinatewise(B, got):
            problems.append(f"{label}: piece {q} exceeds its sorted bound "
                            f"({got.tolist()} vs {B.tolist()})")
        total += B
    L = L_parts[src].sum(axis=1)
    if src.size and not majorizes(total, _sorted(L, down)):
        problems.append(f"{label}: bound {total.tolist()} does not majorize {L.tolist()}")
    return problems


def line_dominance(L_parts: np.ndarray, R_parts: np.ndarray, M_parts: np.ndarray,
                   h_line: np.ndarray, ih_line: np.ndarray, i: int, d: int) -> list[str]:
    """Check the per-region dominance conditions on one i-line.

    Arrays are (n, d) slices for the points of the line.  Returns a list of
    problems (empty when every condition holds).
    """
    n = h_line.size
    W, A, C, O = _regions(h_line, n)
    problems = []
    # same function on both sides: region by region
    for name, X, down in (("A", A, True), ("O", O, True), ("W", W, False), ("C", C, False)):
        problems += _check_block(L_parts, R_parts, X, X, down, i, d, f"keep/{name}")
    # after sorting along i: ones map to ones, zeros to zeros
    ones_src = np.concatenate([A, O])
    zeros_src = np.concatenate([W, C])
    idx = np.arange(n)
    ones_dst = idx[ih_line == 1]
    zeros_dst = idx[ih_line == 0]
    problems += _check_block(L_parts, M_parts, ones_src, ones_dst, True, i, d, "sort/ones")
    problems += _check_block(L_parts, M_parts, zeros_src, zeros_dst, False, i, d, "sort/zeros")
    return problems


# ---------------------------------------------------------------- stage driver

@dataclass
class StageRecord:
    i: int
    S: tuple
    r_prev: float
    r_keep: float
    r_sort: float


@dataclass
class PotentialDropReport:
    t_phi_chi: float
    r0: float
    stages: list = field(default_factory=list)
    final_mean: float = 0.0
    tracker_side: float = 0.0
    dominance_checked: int = 0

    @property
    def ok(self) -> bool:
        return True  # failures raise


def _fail(message: str, **witness):
    raise InvariantViolation(message, witness)


def _sqrt_mean(v: np.ndarray) -> float:
    return float(np.sqrt(v.astype(float)).mean())


def verify_potential_drop(f: GridFunction, chi, check_dominance: bool = True) -> PotentialDropReport:
    """Run the stage-by-stage recoloring and check every potential inequality.

    Raises InvariantViolation with the stage, subset and line on the first failure.
    """
    dom = f.domain
    n, d, N = dom.n, dom.d, dom.size
    if n % 2 or not is_semisorted(f):
        raise ContractError("potential drop needs a semisorted function")
    chi_bits = np.asarray(getattr(chi, "bits", chi), dtype=np.uint8)
    G = tracker_table(f)
    E = cube_edge_count(d)
    xi = np.full((N, E), -1, dtype=np.int8)
    chis = {0: chi_bits}

    base = hybrid_vector(G, 0, 0, chi_bits, xi, d, f)
    direct = phi_colored_matrix(f, chi_bits).sum(axis=1)
    if not np.array_equal(base, direct):
        _fail("stage-0 hybrid differs from the colorful influence", stage=0)
    report = PotentialDropReport(_sqrt_mean(direct), _sqrt_mean(base))

    prev = {0: base}
    for i in range(1, d + 1):
        bit_i = 1 << (i - 1)
        xi_new = xi.copy()
        for S in range(bit_i):
            for j in range(1, i):
                xi_new[:, cube_edge_ids(d, j, S | bit_i)] = 1  # filler on (S+i, S+i xor j)
        new_chis = {}
        seen = np.zeros(xi.shape, dtype=bool)
        for S in range(bit_i):
            out = potential_colorings(f, chis[S], i, S, G, xi)
            new_chis[S] = out.chi_keep.bits
            new_chis[S | bit_i] = out.chi_sort.bits
            written = out.xi >= 0
            # a cube edge is written by at most one call per orientation; they must agree
            if np.any(written & seen & (xi_new != out.xi)):
                _fail("two subsets wrote different colors to one cube edge", stage=i, S=_dims(S))
            seen |= written
            xi_new[written] = out.xi[written]
        rows = line_indices(dom, i)
        cur = {}
        for T in range(bit_i << 1):
            cur[T] = hybrid_parts(G, T, i, new_chis[T], xi_new, d, f)
        for S in range(bit_i):
            L_parts = hybrid_parts(G, S, i - 1, chis[S], xi, d, f)
            Lv = L_parts.sum(axis=1)
            if not np.array_equal(Lv, prev[S]):
                _fail("stage vectors disagree between steps", stage=i, S=_dims(S))
            R_parts, M_parts = cur[S], cur[S | bit_i]
            Rv, Mv = R_parts.sum(axis=1), M_parts.sum(axis=1)
            for r, row in enumerate(rows):
                for name, vec in (("keep", Rv), ("sort", Mv)):
                    if not sqrt_sum_geq(Lv[row], vec[row]):
                        _fail(f"line objective rises on the {name} branch", stage=i,
                              S=_dims(S), line=[int(c) for c in dom.point_of(int(row[0]))],
                              before=Lv[row].tolist(), after=vec[row].tolist())
                if check_dominance:
                    probs = line_dominance(L_parts[row], R_parts[row], M_parts[row],
                                           G[row, S], G[row, S | bit_i], i, d)
                    report.dominance_checked += 1
                    if probs:
                        _fail("dominance condition failed: " + "; ".join(probs), stage=i,
                              S=_dims(S), line=[int(c) for c in dom.point_of(int(row[0]))])
            for name, vec in (("keep", Rv), ("sort", Mv)):
                if not sqrt_sum_geq(Lv, vec):
                    _fail(f"objective rises on the {name} branch", stage=i, S=_dims(S))
            report.stages.append(StageRecord(i, tuple(_dims(S)), _sqrt_mean(Lv),
                                             _sqrt_mean(Rv), _sqrt_mean(Mv)))
        prev = {T: cur[T].sum(axis=1) for T in cur}
        chis = new_chis
        xi = xi_new

    if np.any(xi < 0):
        _fail("final cube colorings are incomplete", stage=d)
    # second route: the final objective straight from tracker tables and cube colorings
    infl = cube_colored_influence(G, xi)
    for T in range(1 << d):
        if not np.array_equal(infl[:, T], prev[T]):
            _fail("final hybrid differs from the tracker-side influence", S=_dims(T))
    report.final_mean = float(np.mean([_sqrt_mean(prev[T]) for T in range(1 << d)]))
    report.tracker_side = float(np.sqrt(infl.astype(float)).mean())
    lhs = np.tile(direct, 1 << d)
    if not sqrt_sum_geq(lhs, infl.reshape(-1)):
        _fail("objective of f is below the tracker-side objective",
              lhs=report.t_phi_chi, rhs=report.tracker_side)
    return report


# ---------------------------------------------------------------- bridges

def tracker_variance_bridge(f: GridFunction, samples: Optional[int] = None, seed: int = 0):
    """(E_x var(g_x), E_S dist(S o f, complement(S) o f)); asserts dist <= 4 E var.

    Exact over all subsets when d <= 12 and ``samples`` is None.
    """
    d = f.d
    if d <= 12 and samples is None:
        G = tracker_table(f)
        full = (1 << d) - 1
        T = np.arange(1 << d)
        p1 = G.sum(axis=1).astype(object)
        total = 1 << d
        evar = sum((Fraction(4 * int(c) * (total - int(c)), total * total) for c in p1),
                   Fraction(0)) / f.domain.size
        mism = int(np.count_nonzero(G != G[:, full ^ T]))
        edist = Fraction(mism, f.domain.size * total)
    else:
        rng = np.random.default_rng(seed)
        samples = samples or 1000
        evar_acc = 0.0
        dist_acc = 0.0
        for _ in range(samples):
            S = [j + 1 for j in range(d) if rng.integers(0, 2)]
            Sbar = [j for j in range(1, d + 1) if j not in S]
            a, b = sort_set(f, S), sort_set(f, Sbar)
            dist_acc += float(np.count_nonzero(a.values != b.values)) / f.domain.size
        # E_x var(g_x) needs every subset per point; estimate it from sampled subsets
        xs = rng.integers(0, f.domain.size, size=min(samples, 256))
        for x in xs:
            pt = f.domain.point_of(int(x))
            vals = [tracker_eval(f, pt, [j + 1 for j in range(d) if rng.integers(0, 2)])
                    for _ in range(64)]
            evar_acc += float(variance(np.array(vals)))
        evar = evar_acc / len(xs)
        edist = dist_acc / samples
    if edist > 4 * evar + (0 if isinstance(edist, Fraction) else TOL):
        raise InvariantViolation("sorted-split distance exceeds 4 E var(g_x)",
                                 {"dist": float(edist), "evar": float(evar)})
    return evar, edist


def cube_talagrand_ratio(d: int) -> float:
    """min over non-constant g on {0,1}^d and colorings xi of E_S sqrt(I_{g,xi}(S)) / var(g)."""
    if d > 3:
        raise DomainError("exhaustive coloring search is limited to d <= 3")
    size = 1 << d
    E = cube_edge_count(d)
    xis = ((np.arange(1 << E)[:, None] >> np.arange(E)[None, :]) & 1).astype(np.int8)
    best = math.inf
    for mask in range(1, (1 << size) - 1):
        g = np.array([(mask >> T) & 1 for T in range(size)], dtype=np.int8)
        infl = cube_colored_influence(np.broadcast_to(g, (xis.shape[0], size)), xis)
        obj = np.sqrt(infl.astype(float)).mean(axis=1).min()
        best = min(best, float(obj / float(variance(g))))
    return best
