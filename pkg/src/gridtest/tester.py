"""Directed random-walk testers, their exact step distributions, and a Monte-Carlo harness."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.stats import binomtest

from .grid import ContractError, DomainError, GridDomain, GridFunction

TESTERS = ("path", "cube", "pareto", "pareto-up", "edge")
CHUNK = 4096


@dataclass(frozen=True)
class WalkSample:
    x: tuple
    z: tuple
    tau: int
    rejected: bool


@dataclass(frozen=True)
class RejectionEstimate:
    trials: int
    rejections: int
    p_hat: float
    ci95: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.p_hat - self.ci95, self.p_hat + self.ci95


def max_walk_exponent(d: int) -> int:
    return (d - 1).bit_length()  # ceil(log2 d)


def _flat(dom: GridDomain, pts: np.ndarray) -> np.ndarray:
    strides = dom.n ** np.arange(dom.d, dtype=np.int64)
    return (pts - 1) @ strides


def _random_subsets(rng, size: int, d: int, tau: np.ndarray) -> np.ndarray:
    """Boolean (size, d) rows, row t a uniform subset of size tau[t]."""
    keys = rng.random((size, d))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return ranks < tau[:, None]


def _draw_tau(rng, size: int, d: int) -> np.ndarray:
    k = rng.integers(0, max_walk_exponent(d) + 1, size=size)
    return np.minimum(1 << k, d)


def _path_batch(dom, rng, size, tau=None, x=None, step=None):
    n, d = dom.n, dom.d
    if tau is None:
        tau = _draw_tau(rng, size, d)
    else:
        tau = np.broadcast_to(np.asarray(tau, dtype=np.int64), (size,))
    if x is None:
        x = rng.integers(1, n + 1, size=(size, d))
    R = _random_subsets(rng, size, d, tau)
    if step is None:
        c = rng.integers(1, n, size=(size, d))
        c = c + (c >= x)  # uniform over [n] minus x_r
        target = np.where(c > x, c, x)
    else:
        target = step(rng, x)
    z = np.where(R, target, x)
    return x, z, tau


def _harmonic_tables(n: int):
    """cdf[m] over lengths 1..m with weights 1/a, for m = 1..n-1."""
    tables = {}
    for m in range(1, n):
        w = 1.0 / np.arange(1, m + 1)
        tables[m] = np.cumsum(w) / w.sum()
    return tables


def _pareto_step(n: int, always_up: bool):
    tables = _harmonic_tables(n)

    def step(rng, x):
        room = n - x
        move = room > 0
        if not always_up:
            # same chance of moving at all as the uniform tester: (n - x)/(n - 1)
            move &= rng.random(x.shape) < room / (n - 1)
        a = np.zeros_like(x)
        u = rng.random(x.shape)
        for m, cdf in tables.items():
            sel = move & (room == m)
            if sel.any():
                a[sel] = np.searchsorted(cdf, u[sel], side="right") + 1
        a = np.minimum(a, room)
        return x + np.where(move, a, 0)

    return step


def _cube_batch(dom, rng, size, tau):
    n, d = dom.n, dom.d
    tau = np.broadcast_to(np.asarray(tau, dtype=np.int64), (size,))
    lo, hi = np.triu_indices(n, 1)
    pick = rng.integers(0, lo.size, size=(size, d))
    a, b = lo[pick] + 1, hi[pick] + 1
    x = np.where(rng.integers(0, 2, size=(size, d)) == 1, b, a)
    R = _random_subsets(rng, size, d, tau)
    z = np.where(R & (x == a), b, x)
    return x, z, tau


def _edge_batch(dom, rng, size):
    n, d = dom.n, dom.d
    lo, hi = np.triu_indices(n, 1)
    dim = rng.integers(0, d, size=size)
    x = rng.integers(1, n + 1, size=(size, d))
    pick = rng.integers(0, lo.size, size=size)
    rows = np.arange(size)
    z = x.copy()
    x[rows, dim] = lo[pick] + 1
    z[rows, dim] = hi[pick] + 1
    return x, z, np.ones(size, dtype=np.int64)


def sample_batch(f: GridFunction, tester: str, rng, size: int, tau: Optional[int] = None):
    """Draw ``size`` tester steps; returns (x, z, tau, rejected) arrays."""
    dom = f.domain
    if tester == "path":
        x, z, t = _path_batch(dom, rng, size, tau)
    elif tester in ("pareto", "pareto-up"):
        x, z, t = _path_batch(dom, rng, size, tau, step=_pareto_step(dom.n, tester == "pareto-up"))
    elif tester == "cube":
        if tau is None or not 1 <= tau <= dom.d:
            raise ContractError(f"cube walk needs 1 <= tau <= {dom.d}")
        x, z, t = _cube_batch(dom, rng, size, tau)
    elif tester == "edge":
        x, z, t = _edge_batch(dom, rng, size)
    else:
        raise ContractError(f"unknown tester {tester!r}")
    fx = f.at(_flat(dom, x))
    fz = f.at(_flat(dom, z))
    return x, z, t, fx > fz


def _one(f, tester, rng, tau=None) -> WalkSample:
    x, z, t, rej = sample_batch(f, tester, rng, 1, tau)
    return WalkSample(tuple(int(c) for c in x[0]), tuple(int(c) for c in z[0]), int(t[0]),
                      bool(rej[0]))


def path_tester_step(f: GridFunction, rng) -> WalkSample:
    return _one(f, "path", rng)


def cube_walk_step(f: GridFunction, tau: int, rng) -> WalkSample:
    return _one(f, "cube", rng, tau)


def pareto_path_tester_step(f: GridFunction, rng, always_up: bool = False) -> WalkSample:
    return _one(f, "pareto-up" if always_up else "pareto", rng)


def edge_tester_step(f: GridFunction, rng) -> WalkSample:
    return _one(f, "edge", rng)


# ---------------------------------------------------------------- exact distributions

def exact_pair_distribution(dom: GridDomain, tau: int, mode: str) -> dict:
    """Exact law of (x, z) for a fixed walk length, by enumerating every random choice."""
    n, d = dom.n, dom.d
    if n > 4 or d > 3:
        raise DomainError("exact enumeration is limited to n <= 4, d <= 3")
    if not 1 <= tau <= d:
        raise ContractError(f"tau must lie in [1, {d}]")
    subsets = list(itertools.combinations(range(d), tau))
    out: dict = {}

    def add(x, z, p):
        key = (tuple(x), tuple(z))
        out[key] = out.get(key, Fraction(0)) + p

    if mode == "path":
        for x in itertools.product(range(1, n + 1), repeat=d):
            for R in subsets:
                choices = [[c for c in range(1, n + 1) if c != x[r]] for r in R]
                p = Fraction(1, n ** d * len(subsets) * (n - 1) ** tau)
                for cs in itertools.product(*choices):
                    z = list(x)
                    for r, c in zip(R, cs):
                        if c > x[r]:
                            z[r] = c
                    add(x, z, p)
    elif mode == "cube":
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        p = Fraction(1, len(pairs) ** d * 2 ** d * len(subsets))
        for H in itertools.product(pairs, repeat=d):
            for side in itertools.product((0, 1), repeat=d):
                x = [H[r][side[r]] for r in range(d)]
                for R in subsets:
                    z = list(x)
                    for r in R:
                        if side[r] == 0:
                            z[r] = H[r][1]
                    add(x, z, p)
    else:
        raise ContractError(f"mode must be 'path' or 'cube', got {mode!r}")
    return out


def total_variation(p: dict, q: dict) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(p.get(k, Fraction(0)) - q.get(k, Fraction(0))) for k in keys),
               Fraction(0)) / 2


def exact_rejection_probability(f: GridFunction, tester: str = "path") -> Fraction:
    """Exact rejection probability of the path tester (mixture over walk lengths)."""
    dom = f.domain
    if tester != "path":
        raise ContractError("exact rejection is implemented for the path tester")
    K = max_walk_exponent(dom.d)
    total = Fraction(0)
    for k in range(K + 1):
        tau = min(1 << k, dom.d)
        dist = exact_pair_distribution(dom, tau, "path")
        for (x, z), p in dist.items():
            if f(x) > f(z):
                total += p / (K + 1)
    return total


def hypercube_influence_identity(f: GridFunction) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(E_H[I_H], I_f/(n-1), E_H[I^-_H], I^-_f/(n-1)) over all sub-hypercubes H."""
    from .influence import total_influence, total_neg_influence

    dom = f.domain
    n, d = dom.n, dom.d
    lo, hi = np.triu_indices(n, 1)
    P = lo.size
    choice = np.array(list(itertools.product(range(P), repeat=d)), dtype=np.int64)
    a = lo[choice] + 1  # (numH, d)
    b = hi[choice] + 1
    strides = n ** np.arange(d, dtype=np.int64)
    corners = np.arange(1 << d)
    bitsel = (corners[:, None] >> np.arange(d)[None, :]) & 1  # (2^d, d)
    pts = np.where(bitsel[None, :, :] == 1, b[:, None, :], a[:, None, :])
    idx = (pts - 1) @ strides  # (numH, 2^d)
    vals = f.values[idx].astype(np.int64)
    diff = 0
    neg = 0
    for j in range(d):
        partner = corners ^ (1 << j)
        diff += int(np.count_nonzero(vals != vals[:, partner]))
        low_side = bitsel[:, j] == 0
        neg += int(np.count_nonzero((vals[:, low_side] == 1) & (vals[:, partner[low_side]] == 0)))
    numH = choice.shape[0]
    e_inf = Fraction(diff, numH << d)
    e_neg = Fraction(neg, numH << d)
    return e_inf, total_influence(f) / (n - 1), e_neg, total_neg_influence(f) / (n - 1)


# ---------------------------------------------------------------- Monte Carlo harness

_WORKER_F: Optional[GridFunction] = None


def _init_worker(packed, n, d):
    global _WORKER_F
    _WORKER_F = GridFunction.from_packed(GridDomain(n, d), packed)


def _chunk_rng(seed: int, chunk: int):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _run_chunks(f, tester, seed, chunks, trials, tau):
    rej = 0
    for c in chunks:
        size = min(CHUNK, trials - c * CHUNK)
        *_, r = sample_batch(f, tester, _chunk_rng(seed, c), size, tau)
        rej += int(r.sum())
    return rej


def _worker_chunks(tester, seed, chunks, trials, tau):
    return _run_chunks(_WORKER_F, tester, seed, chunks, trials, tau)


def default_workers() -> int:
    return int(os.environ.get("GRIDTEST_WORKERS", "1"))


def estimate_rejection(f: GridFunction, tester: str, trials: int, seed: int = 0,
                       workers: Optional[int] = None, tau: Optional[int] = None) -> RejectionEstimate:
    """Monte-Carlo rejection rate; chunk c always uses the stream (seed, c), so the
    result does not depend on the number of workers."""
    if trials < 1:
        raise ContractError("trials must be at least 1")
    if tester not in TESTERS:
        raise ContractError(f"unknown tester {tester!r}")
    workers = default_workers() if workers is None else workers
    nchunks = -(-trials // CHUNK)
    if workers <= 1 or nchunks == 1:
        rej = _run_chunks(f, tester, seed, range(nchunks), trials, tau)
    else:
        groups = [list(range(w, nchunks, workers)) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(f.packed, f.n, f.d)) as pool:
            rej = sum(pool.map(_worker_chunks, [tester] * workers, [seed] * workers, groups,
                               [trials] * workers, [tau] * workers))
    p = rej / trials
    return RejectionEstimate(trials, rej, p, 1.96 * math.sqrt(p * (1 - p) / trials))


# ---------------------------------------------------------------- persistence

def persistence_fraction(f: GridFunction, tau: int, walk_trials: int = 200,
                         point_mode: str = "exact", points: int = 256, seed: int = 0) -> float:
    """Fraction of points flagged as not tau-persistent.

    A point is flagged only when the 95% Wilson interval for Pr[f(z) = f(x)]
    lies entirely below 1/2.
    """
    dom = f.domain
    if tau == 0:
        return 0.0
    if not 1 <= tau <= dom.d:
        raise ContractError(f"tau must lie in [0, {dom.d}]")
    rng = np.random.default_rng(seed)
    if point_mode == "exact":
        idx = np.arange(dom.size)
    elif point_mode == "sampled":
        idx = rng.integers(0, dom.size, size=points)
    else:
        raise ContractError(f"point_mode must be 'exact' or 'sampled', got {point_mode!r}")
    coords = dom.coords()[idx]
    flagged = 0
    for k in range(idx.size):
        x = np.broadcast_to(coords[k], (walk_trials, dom.d))
        _, z, _ = _path_batch(dom, rng, walk_trials, tau=tau, x=np.array(x))
        same = int(np.count_nonzero(f.at(_flat(dom, z)) == f.at(idx[k])))
        hi = binomtest(same, walk_trials).proportion_ci(0.95, method="wilson").high
        flagged += hi < 0.5
    return flagged / idx.size
