"""Edge colorings of the augmented hypergrid and the hypercube, plus recoloring procedures.

Colors on augmented edges follow the canonical edge order of ``grid.edge_table``.
A violating edge (u, v) credits u when colored 1 and v when colored 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import (ContractError, GridDomain, GridFunction, cube_edge_count, cube_edge_ids,
                   edge_count, edge_ids, edge_table, line_indices, violation_mask)
from .influence import phi_colored_matrix
from .sorting import is_semisorted, semisort_interval

EDGE_TAG = "gridtest-edges-v1"
EXHAUSTIVE_LIMIT = 22


@dataclass(frozen=True, eq=False)
class GridColoring:
    domain: GridDomain
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.shape != (edge_count(self.domain),):
            raise ContractError(
                f"coloring needs {edge_count(self.domain)} bits, got {bits.shape[0]}")
        if bits.size and bits.max() > 1:
            raise ContractError("colors must be 0 or 1")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, domain: GridDomain) -> "GridColoring":
        return cls(domain, np.zeros(edge_count(domain), dtype=np.uint8))

    @classmethod
    def random(cls, f: GridFunction, rng: np.random.Generator) -> "GridColoring":
        """Uniform colors on violating edges, 0 elsewhere."""
        mask = violation_mask(f)
        bits = np.zeros(mask.size, dtype=np.uint8)
        bits[mask] = rng.integers(0, 2, size=int(mask.sum()), dtype=np.uint8)
        return cls(f.domain, bits)

    @classmethod
    def on_violations(cls, f: GridFunction, colors: Sequence[int]) -> "GridColoring":
        """Colors listed in canonical order of the violating edges; 0 elsewhere."""
        mask = violation_mask(f)
        colors = np.asarray(colors, dtype=np.uint8)
        if colors.size != int(mask.sum()):
            raise ContractError(f"f has {int(mask.sum())} violations, got {colors.size} colors")
        bits = np.zeros(mask.size, dtype=np.uint8)
        bits[mask] = colors
        return cls(f.domain, bits)

    def with_bits(self, bits) -> "GridColoring":
        return GridColoring(self.domain, bits)

    def to_hex(self) -> str:
        return np.packbits(self.bits, bitorder="little").tobytes().hex()

    def to_record(self) -> dict:
        return {"tag": EDGE_TAG, "n": self.domain.n, "d": self.domain.d, "bits": self.to_hex()}

    @classmethod
    def from_hex(cls, domain: GridDomain, text: str) -> "GridColoring":
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        bits = np.unpackbits(raw, count=edge_count(domain), bitorder="little")
        return cls(domain, bits)

    @classmethod
    def from_record(cls, rec: dict) -> "GridColoring":
        if rec.get("tag") != EDGE_TAG:
            raise ContractError(f"unknown coloring tag {rec.get('tag')!r}")
        return cls.from_hex(GridDomain(int(rec["n"]), int(rec["d"])), rec["bits"])

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridColoring):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.domain, self.bits.tobytes()))


@dataclass(frozen=True, eq=False)
class CubeColoring:
    """Colors of hypercube edges (T, T xor j); -1 marks an edge that is not yet defined."""

    d: int
    bits: np.ndarray

    @classmethod
    def undefined(cls, d: int) -> "CubeColoring":
        return cls(d, np.full(cube_edge_count(d), -1, dtype=np.int8))

    def get(self, T: int, j: int) -> int:
        c = int(self.bits[cube_edge_ids(self.d, j, T)])
        if c < 0:
            raise ContractError(f"edge ({T:b}, dim {j}) has no color")
        return c

    @property
    def defined(self) -> np.ndarray:
        return self.bits >= 0


def majority_interval_coloring(f: GridFunction) -> GridColoring:
    """Color an edge 1 iff at least half (rounded up) of the closed interval it spans is 0."""
    dom = f.domain
    t = edge_table(dom)
    zeros = np.zeros(dom.size, dtype=np.int64)
    bits = np.zeros(len(t), dtype=np.uint8)
    table = 1 - f.table().astype(np.int64)
    for k in range(dom.d):
        zeros[:] = np.cumsum(table, axis=k).reshape(-1, order="F")
        sel = t.dim == k + 1
        lo, up, a = t.lower[sel], t.upper[sel], t.offset[sel]
        count = zeros[up] - zeros[lo] + (1 - f.values[lo].astype(np.int64))
        bits[sel] = count >= (a + 2) // 2
    return GridColoring(dom, bits)


@dataclass(frozen=True)
class AdversarialResult:
    coloring: GridColoring
    t_min: float
    exact: bool
    evaluated: int


def _endpoint_groups(f: GridFunction, viol_ids: np.ndarray):
    """Map each (point, dim) to the literals (violation number, wanted color) crediting it."""
    t = edge_table(f.domain)
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for k, e in enumerate(viol_ids.tolist()):
        dim = int(t.dim[e])
        groups.setdefault((int(t.lower[e]), dim), []).append((k, 1))
        groups.setdefault((int(t.upper[e]), dim), []).append((k, 0))
    points = sorted({x for x, _ in groups})
    slot = {x: s for s, x in enumerate(points)}
    return [(slot[x], lits) for (x, _), lits in groups.items()], len(points)


def _objective_sums(colors: np.ndarray, groups, npts: int, d: int) -> np.ndarray:
    """Sum over points of sqrt(Φχ) for each row of a (batch, m) 0/1 color matrix."""
    counts = np.zeros((colors.shape[0], npts), dtype=np.int8)
    for s, lits in groups:
        hit = np.zeros(colors.shape[0], dtype=bool)
        for k, want in lits:
            hit |= colors[:, k] == want
        counts[:, s] += hit
    roots = np.sqrt(np.arange(d + 1, dtype=float))
    return roots[counts].sum(axis=1)


def adversarial_coloring(f: GridFunction, budget: int = 200_000,
                         seed: int = 0, chunk: int = 1 << 15) -> AdversarialResult:
    """Coloring minimising the colorful Talagrand objective.

    Exact over all colorings of the violating edges when there are at most 22
    of them; otherwise a restarted greedy local search (``exact`` is False).
    Non-violating edges are colored 0.
    """
    dom = f.domain
    viol = np.flatnonzero(violation_mask(f))
    m = viol.size
    if m == 0:
        return AdversarialResult(GridColoring.zeros(dom), 0.0, True, 1)
    groups, npts = _endpoint_groups(f, viol)
    if m <= EXHAUSTIVE_LIMIT:
        best, best_mask = math.inf, 0
        shifts = np.arange(m, dtype=np.int64)
        total = 1 << m
        for start in range(0, total, chunk):
            masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
            colors = ((masks[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
            sums = _objective_sums(colors, groups, npts, dom.d)
            k = int(np.argmin(sums))
            if sums[k] < best - 1e-12:
                best, best_mask = float(sums[k]), int(masks[k])
        colors = [(best_mask >> k) & 1 for k in range(m)]
        return AdversarialResult(GridColoring.on_violations(f, colors), best / dom.size,
                                 True, total)
    rng = np.random.default_rng(seed)
    best, best_colors, used = math.inf, None, 0
    while used < budget:
        cur = rng.integers(0, 2, size=m, dtype=np.uint8)
        cur_val = float(_objective_sums(cur[None, :], groups, npts, dom.d)[0])
        used += 1
        improved = True
        while improved and used < budget:
            # evaluate every single-bit flip at once and take the best
            flips = np.repeat(cur[None, :], m, axis=0)
            flips[np.arange(m), np.arange(m)] ^= 1
            vals = _objective_sums(flips, groups, npts, dom.d)
            used += m
            k = int(np.argmin(vals))
            improved = vals[k] < cur_val - 1e-12
            if improved:
                cur, cur_val = flips[k], float(vals[k])
        if cur_val < best:
            best, best_colors = cur_val, cur.copy()
    return AdversarialResult(GridColoring.on_violations(f, best_colors), best / dom.size,
                             False, used)


# ---------------------------------------------------------------- helpers

def _bits_of(chi) -> np.ndarray:
    return np.asarray(getattr(chi, "bits", chi), dtype=np.uint8)


def _partner_lines(dom: GridDomain, i: int, j: int):
    """For each offset t > 0: i-lines whose j-coordinate allows a shift by t, and the shift."""
    rows = line_indices(dom, i)
    stride = dom.stride(j)
    cj = (rows[:, 0] // stride) % dom.n + 1
    for t in range(1, dom.n):
        sel = cj + t <= dom.n
        if sel.any():
            lo = rows[sel]
            yield lo, lo + t * stride


def _assign_sorted(src_mask: np.ndarray, src_colors: np.ndarray,
                   dst_mask: np.ndarray) -> np.ndarray:
    """Down-sort the colors on src_mask and place them left to right on dst_mask, row-wise.

    Returns the new colors for every cell; only cells in dst_mask are meaningful.
    The first k1 destination cells get 1, where k1 counts 1-colors in the source.
    """
    k1 = (src_colors.astype(np.int64) * src_mask).sum(axis=1, keepdims=True)
    rank = np.cumsum(dst_mask, axis=1)
    return (rank <= k1).astype(np.uint8)


def _assign_halves(src_mask, src_colors, dst_mask, n: int) -> np.ndarray:
    half = n // 2
    out = np.empty(src_mask.shape, dtype=np.uint8)
    for sl in (slice(0, half), slice(half, n)):
        out[:, sl] = _assign_sorted(src_mask[:, sl], src_colors[:, sl], dst_mask[:, sl])
    return out


# ---------------------------------------------------------------- semisorting

def semisort_recolor(f: GridFunction, chi, i: int,
                     interval: tuple[int, int]) -> tuple[GridFunction, GridColoring]:
    """Sort positions a..b of every i-line and carry the coloring along.

    Cross-dimension violations between two i-lines have their old colors
    down-sorted onto the surviving violations.  i-edges joining the interval to
    an outside point keep, per outside point, the same number of 1-colored
    violations, placed left to right.  Every other edge keeps its color.
    """
    dom = f.domain
    bits = _bits_of(chi)
    if bits.shape != (edge_count(dom),):
        raise ContractError("coloring does not match the domain")
    h = semisort_interval(f, i, interval)
    if h == f:
        return h, GridColoring(dom, bits)
    a, b = interval
    n = dom.n
    fv, hv = f.values, h.values
    new = bits.copy()
    inside = slice(a - 1, b)

    for j in range(1, dom.d + 1):
        if j == i:
            continue
        for lo_rows, up_rows in _partner_lines(dom, i, j):
            lo, up = lo_rows[:, inside], up_rows[:, inside]
            V = (fv[lo] == 1) & (fv[up] == 0)
            U = (hv[lo] == 1) & (hv[up] == 0)
            if not U.any():
                continue
            eid = edge_ids(dom, lo, up, j)
            colors = _assign_sorted(V, bits[eid], U)
            new[eid[U]] = colors[U]

    rows = line_indices(dom, i)
    pts = rows[:, inside]
    for c in range(1, n + 1):
        if a <= c <= b:
            continue
        out = rows[:, c - 1][:, None]
        if c > b:
            # zeros to the right of the interval, violated by ones inside it
            live = fv[out] == 0
            src = (fv[pts] == 1) & live
            dst = (hv[pts] == 1) & live
            eid = edge_ids(dom, pts, np.broadcast_to(out, pts.shape), i)
        else:
            live = fv[out] == 1
            src = (fv[pts] == 0) & live
            dst = (hv[pts] == 0) & live
            eid = edge_ids(dom, np.broadcast_to(out, pts.shape), pts, i)
        if not dst.any():
            continue
        colors = _assign_sorted(src, bits[eid], dst)
        new[eid[dst]] = colors[dst]
    return h, GridColoring(dom, new)


def boundary_one_counts(f: GridFunction, chi, i: int, interval: tuple[int, int]) -> np.ndarray:
    """Per outside point, the number of 1-colored violating i-edges into the interval."""
    dom = f.domain
    bits = _bits_of(chi)
    a, b = interval
    rows = line_indices(dom, i)
    pts = rows[:, a - 1:b]
    fv = f.values
    out_counts = np.zeros((rows.shape[0], dom.n), dtype=np.int64)
    for c in range(1, dom.n + 1):
        if a <= c <= b:
            continue
        out = np.broadcast_to(rows[:, c - 1][:, None], pts.shape)
        if c > b:
            viol = (fv[pts] == 1) & (fv[out] == 0)
            eid = edge_ids(dom, pts, out, i)
        else:
            viol = (fv[out] == 1) & (fv[pts] == 0)
            eid = edge_ids(dom, out, pts, i)
        out_counts[:, c - 1] = (viol & (bits[eid] == 1)).sum(axis=1)
    return out_counts


# ---------------------------------------------------------------- potential drop

@dataclass
class StageColorings:
    """Recolorings produced at stage i for one S in [i-1].

    ``chi_keep`` is the grid coloring for S and ``chi_sort`` the one for S + i.
    ``xi`` holds the cube colors written by this call (shape (n^d, cube edges),
    -1 where the call leaves the entry alone).
    """

    chi_keep: GridColoring
    chi_sort: GridColoring
    xi: np.ndarray


def potential_colorings(f: GridFunction, chi, i: int, S: int, tracker: np.ndarray,
                        xi_old: np.ndarray) -> StageColorings:
    """Stage-i recolorings for the subset S of [i-1] (given as a bitmask).

    ``tracker`` is the table g[x, T] = (T o f)(x); ``xi_old`` the cube colors of
    the previous stage (-1 where undefined).
    """
    dom = f.domain
    n, d = dom.n, dom.d
    if n % 2 or not is_semisorted(f):
        raise ContractError("potential colorings need a semisorted function")
    if not 1 <= i <= d:
        raise ContractError(f"stage {i} outside [1, {d}]")
    if S >> (i - 1):
        raise ContractError(f"subset {S:b} is not inside [1, {i - 1}]")
    bits = _bits_of(chi)
    bit_i = 1 << (i - 1)
    hv = tracker[:, S]
    ihv = tracker[:, S | bit_i]
    rows = line_indices(dom, i)

    keep = bits.copy()
    sort = bits.copy()
    for j in range(i + 1, d + 1):
        for lo, up in _partner_lines(dom, i, j):
            V = (hv[lo] == 1) & (hv[up] == 0)
            if not V.any():
                continue
            U = (ihv[lo] == 1) & (ihv[up] == 0)
            eid = edge_ids(dom, lo, up, j)
            old = bits[eid]
            down = _assign_halves(V, old, V, n)
            keep[eid[V]] = down[V]
            placed = _assign_sorted(V, old, U)
            sort[eid[U]] = placed[U]

    xi = np.full((dom.size, cube_edge_count(d)), -1, dtype=np.int8)
    g_S = tracker[rows, S]
    g_Si = tracker[rows, S | bit_i]
    for j in range(1, i):
        bit_j = 1 << (j - 1)
        T2 = S ^ bit_j
        g_T2 = tracker[rows, T2]
        g_T2i = tracker[rows, T2 | bit_i]
        col_S = cube_edge_ids(d, j, S)
        old = xi_old[rows, col_S]
        # only the orientation whose S side is 1; the twin call covers the other
        V = (g_S == 1) & (g_T2 == 0)
        if V.any() and np.any(old[V] < 0):
            raise ContractError(f"previous stage left edge ({S:b}, dim {j}) uncolored")
        oldbits = np.where(old < 0, 0, old).astype(np.uint8)
        down = _assign_halves(V, oldbits, V, n)
        xi[rows[V], col_S] = down[V]
        U = (g_Si == 1) & (g_T2i == 0)
        placed = _assign_sorted(V, oldbits, U)
        col_Si = cube_edge_ids(d, j, S | bit_i)
        xi[rows[U], col_Si] = placed[U]

    # the edge (S, S + i): ones of the left half and zeros of the right half
    half = n // 2
    left, right = g_S[:, :half], g_S[:, half:]
    A = np.zeros_like(g_S, dtype=bool)
    C = np.zeros_like(g_S, dtype=bool)
    A[:, :half] = left == 1
    C[:, half:] = right == 0
    phi_i = phi_colored_matrix(_as_function(dom, hv), bits)[:, i - 1][rows]
    a_full = np.all(np.where(A, phi_i == 1, True), axis=1, keepdims=True)
    val = np.where(A | C, np.where(a_full, 1, 0), 0).astype(np.int8)
    xi[rows, cube_edge_ids(d, i, S)] = val
    return StageColorings(GridColoring(dom, keep), GridColoring(dom, sort), xi)


def _as_function(dom: GridDomain, values: np.ndarray) -> GridFunction:
    return GridFunction(dom, np.asarray(values, dtype=np.uint8))
