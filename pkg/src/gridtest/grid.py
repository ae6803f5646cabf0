"""Hypergrid domains, bit-packed Boolean functions, lines and augmented edges.

Points are 1-based coordinate tuples.  Flat indices are 0-based with
dimension 1 varying fastest: index(x) = sum_i (x_i - 1) * n**(i - 1).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

MAX_POINTS = 2 ** 40


class DomainError(ValueError):
    """A point, dimension or domain parameter is out of range."""


class ContractError(ValueError):
    """An operation was called outside its documented preconditions."""


class InvariantViolation(AssertionError):
    """A checked inequality or identity failed; ``witness`` says where."""

    def __init__(self, message: str, witness: dict):
        super().__init__(message)
        self.witness = witness


class FormatError(ValueError):
    """A function file could not be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class GridDomain:
    n: int
    d: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"side length must be an integer >= 2, got {self.n}")
        # d == 0 only arises as the one-point domain of an empty restriction
        if int(self.d) != self.d or self.d < 0:
            raise DomainError(f"dimension must be a non-negative integer, got {self.d}")
        if self.n ** self.d > MAX_POINTS:
            raise DomainError(f"n^d = {self.n}^{self.d} exceeds 2^40 points")

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def stride(self, dim: int) -> int:
        """Index stride of 1-based dimension ``dim``."""
        return self.n ** (dim - 1)

    def check_point(self, p: Sequence[int]) -> tuple[int, ...]:
        p = tuple(int(c) for c in p)
        if len(p) != self.d:
            raise DomainError(f"point {p} has {len(p)} coordinates, expected {self.d}")
        for c in p:
            if not 1 <= c <= self.n:
                raise DomainError(f"coordinate {c} of {p} outside [1, {self.n}]")
        return p

    def check_dim(self, dim: int) -> int:
        if not 1 <= dim <= self.d:
            raise DomainError(f"dimension {dim} outside [1, {self.d}]")
        return dim

    def index_of(self, p: Sequence[int]) -> int:
        p = self.check_point(p)
        idx = 0
        for i in reversed(range(self.d)):
            idx = idx * self.n + (p[i] - 1)
        return idx

    def point_of(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < self.size:
            raise DomainError(f"index {idx} outside [0, {self.size})")
        out = []
        for _ in range(self.d):
            idx, r = divmod(idx, self.n)
            out.append(r + 1)
        return tuple(out)

    def coords(self) -> np.ndarray:
        """All points as an (n^d, d) array of 1-based coordinates in index order."""
        return _coords(self.n, self.d)

    def points(self) -> Iterator[tuple[int, ...]]:
        for idx in range(self.size):
            yield self.point_of(idx)


@lru_cache(maxsize=64)
def _coords(n: int, d: int) -> np.ndarray:
    idx = np.arange(n ** d, dtype=np.int64)
    out = np.empty((n ** d, d), dtype=np.int64)
    for k in range(d):
        out[:, k] = (idx // n ** k) % n + 1
    out.setflags(write=False)
    return out


class GridFunction:
    """Immutable Boolean function on [n]^d stored as a little-endian bit array."""

    __slots__ = ("domain", "_packed", "_values")

    def __init__(self, domain: GridDomain, values):
        vals = np.asarray(values)
        if vals.ndim != 1 or vals.shape[0] != domain.size:
            raise ContractError(f"expected {domain.size} values, got shape {vals.shape}")
        if vals.dtype != np.uint8:
            if np.any((vals != 0) & (vals != 1)):
                raise ContractError("function values must be 0 or 1")
            vals = vals.astype(np.uint8)
        elif vals.size and vals.max() > 1:
            raise ContractError("function values must be 0 or 1")
        self.domain = domain
        self._packed = np.packbits(vals, bitorder="little")
        self._packed.setflags(write=False)
        self._values = None

    @classmethod
    def from_packed(cls, domain: GridDomain, packed: np.ndarray) -> "GridFunction":
        obj = cls.__new__(cls)
        obj.domain = domain
        packed = np.array(packed, dtype=np.uint8)
        if packed.shape != ((domain.size + 7) // 8,):
            raise ContractError("packed array has the wrong length")
        tail = domain.size % 8
        if tail:
            packed[-1] &= (1 << tail) - 1
        packed.setflags(write=False)
        obj._packed = packed
        obj._values = None
        return obj

    @classmethod
    def from_table(cls, domain: GridDomain, table: np.ndarray) -> "GridFunction":
        """Build from an array of shape (n,)*d where axis k is dimension k+1."""
        return cls(domain, np.asarray(table, dtype=np.uint8).reshape(-1, order="F"))

    @classmethod
    def constant(cls, domain: GridDomain, value: int) -> "GridFunction":
        return cls(domain, np.full(domain.size, value, dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = np.unpackbits(self._packed, count=self.domain.size, bitorder="little")
            v.setflags(write=False)
            self._values = v
        return self._values

    def table(self) -> np.ndarray:
        return self.values.reshape(self.domain.shape, order="F")

    def at(self, idx) -> np.ndarray:
        """Values at an array of flat indices, read straight from the packed bits."""
        idx = np.asarray(idx, dtype=np.int64)
        return (self._packed[idx >> 3] >> (idx & 7).astype(np.uint8)) & 1

    def __call__(self, point: Sequence[int]) -> int:
        return int(self.at(self.domain.index_of(point)))

    def ones(self) -> int:
        return int(np.unpackbits(self._packed, bitorder="little").sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self._packed, other._packed)

    def __hash__(self) -> int:
        return hash((self.domain, self._packed.tobytes()))

    def __repr__(self) -> str:
        if self.domain.size <= 64:
            bits = "".join(map(str, self.values.tolist()))
            return f"GridFunction(n={self.n}, d={self.d}, bits={bits})"
        return f"GridFunction(n={self.n}, d={self.d}, ones={self.ones()})"


def func(bits: str | Sequence[int], n: int | None = None, d: int = 1) -> GridFunction:
    """Shorthand: ``func("100")`` is the line function [1,0,0]."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    if n is None:
        n = len(bits)
    return GridFunction(GridDomain(n, d), np.array(bits, dtype=np.uint8))


@dataclass(frozen=True)
class AugEdge:
    """The i-aligned pair (lower, lower + offset * e_dim) of the augmented hypergrid."""

    lower: tuple[int, ...]
    dim: int
    offset: int

    @property
    def upper(self) -> tuple[int, ...]:
        p = list(self.lower)
        p[self.dim - 1] += self.offset
        return tuple(p)


@dataclass(frozen=True)
class Line:
    dim: int
    base: tuple[int, ...]

    def points(self, n: int) -> list[tuple[int, ...]]:
        out = []
        for t in range(n):
            p = list(self.base)
            p[self.dim - 1] = t + 1
            out.append(tuple(p))
        return out


def edge_count(dom: GridDomain) -> int:
    return (dom.n - 1) * dom.d * dom.size // 2


@lru_cache(maxsize=64)
def _pair_tables(n: int):
    a, b = np.triu_indices(n, 1)
    rank = np.full((n, n), -1, dtype=np.int64)
    rank[a, b] = np.arange(a.size)
    for arr in (a, b, rank):
        arr.setflags(write=False)
    return a, b, rank


@lru_cache(maxsize=64)
def _line_table(n: int, d: int, k: int) -> np.ndarray:
    """Point indices of every (k+1)-line, one row per line, rows in base-index order."""
    stride = n ** k
    idx = np.arange(n ** d, dtype=np.int64)
    bases = idx[(idx // stride) % n == 0]
    out = bases[:, None] + stride * np.arange(n, dtype=np.int64)[None, :]
    out.setflags(write=False)
    return out


def line_indices(dom: GridDomain, dim: int) -> np.ndarray:
    """Array of shape (n^(d-1), n): row r lists the points of the r-th dim-line."""
    dom.check_dim(dim)
    return _line_table(dom.n, dom.d, dim - 1)


def lines(dom: GridDomain, dim: int) -> Iterator[Line]:
    for row in line_indices(dom, dim):
        yield Line(dim, dom.point_of(int(row[0])))


@dataclass(frozen=True)
class EdgeTable:
    """Canonical enumeration of the augmented edges: by dimension, then line, then (a<b)."""

    lower: np.ndarray
    upper: np.ndarray
    dim: np.ndarray  # 1-based
    offset: np.ndarray

    def __len__(self) -> int:
        return int(self.lower.shape[0])


@lru_cache(maxsize=32)
def _edge_table(n: int, d: int) -> EdgeTable:
    a, b, _ = _pair_tables(n)
    lows, ups, dims, offs = [], [], [], []
    for k in range(d):
        rows = _line_table(n, d, k)
        lows.append(rows[:, a].reshape(-1))
        ups.append(rows[:, b].reshape(-1))
        dims.append(np.full(rows.shape[0] * a.size, k + 1, dtype=np.int64))
        offs.append(np.tile(b - a, rows.shape[0]))
    cat = (lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64))
    table = EdgeTable(cat(lows), cat(ups), cat(dims), cat(offs))
    for arr in (table.lower, table.upper, table.dim, table.offset):
        arr.setflags(write=False)
    return table


def edge_table(dom: GridDomain) -> EdgeTable:
    return _edge_table(dom.n, dom.d)


def edge_ids(dom: GridDomain, lower, upper, dim: int) -> np.ndarray:
    """Canonical ids of the dim-aligned edges (lower[t], upper[t]); lower must precede upper."""
    n, k = dom.n, dim - 1
    stride = n ** k
    lower = np.asarray(lower, dtype=np.int64)
    upper = np.asarray(upper, dtype=np.int64)
    p = (lower // stride) % n
    q = (upper // stride) % n
    base = lower - p * stride
    line_rank = base % stride + (base // (stride * n)) * stride
    _, _, rank = _pair_tables(n)
    npairs = n * (n - 1) // 2
    per_dim = dom.size // n * npairs
    return k * per_dim + line_rank * npairs + rank[p, q]


def edge_id(dom: GridDomain, edge: AugEdge) -> int:
    lo = dom.index_of(edge.lower)
    up = dom.index_of(edge.upper)
    return int(edge_ids(dom, [lo], [up], edge.dim)[0])


def edge_of(dom: GridDomain, eid: int) -> AugEdge:
    t = edge_table(dom)
    return AugEdge(dom.point_of(int(t.lower[eid])), int(t.dim[eid]), int(t.offset[eid]))


def violation_mask(f: GridFunction) -> np.ndarray:
    """Boolean mask over canonical edges: f(lower) = 1 and f(upper) = 0."""
    t = edge_table(f.domain)
    v = f.values
    return (v[t.lower] == 1) & (v[t.upper] == 0)


def violating_edges(f: GridFunction) -> list[AugEdge]:
    dom = f.domain
    t = edge_table(dom)
    return [AugEdge(dom.point_of(int(t.lower[e])), int(t.dim[e]), int(t.offset[e]))
            for e in np.flatnonzero(violation_mask(f))]


def is_monotone(f: GridFunction) -> bool:
    # adjacent comparisons along every axis suffice for coordinatewise order
    table = f.table()
    return all(not np.any(np.diff(table.astype(np.int8), axis=k) < 0) for k in range(f.d))


def restrict(f: GridFunction, S: Iterable[int], fixed: Mapping[int, int]) -> GridFunction:
    """h(y) = f(merge(y, fixed)) over [n]^|S|; free dimensions keep increasing order."""
    dom = f.domain
    S = sorted(set(int(s) for s in S))
    for s in S:
        dom.check_dim(s)
    overlap = set(S) & set(fixed)
    if overlap:
        raise DomainError(f"dimensions {sorted(overlap)} are both free and fixed")
    missing = set(range(1, dom.d + 1)) - set(S) - set(fixed)
    if missing:
        raise ContractError(f"dimensions {sorted(missing)} are neither free nor fixed")
    index = []
    for dim in range(1, dom.d + 1):
        if dim in fixed:
            c = int(fixed[dim])
            if not 1 <= c <= dom.n:
                raise DomainError(f"fixed coordinate {c} outside [1, {dom.n}]")
            index.append(c - 1)
        else:
            index.append(slice(None))
    sub = f.table()[tuple(index)]
    return GridFunction.from_table(GridDomain(dom.n, len(S)), np.asarray(sub))


def parse_function(text: str | bytes) -> GridFunction:
    if isinstance(text, str):
        text = text.encode("ascii", errors="replace")
    nl = text.find(b"\n")
    if nl < 0:
        raise FormatError("missing newline after header", len(text))
    header = text[:nl].split()
    if len(header) != 2:
        raise FormatError("header must be 'n d'", 0)
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError("header fields must be integers", 0) from None
    try:
        dom = GridDomain(n, d)
    except DomainError as exc:
        raise FormatError(str(exc), 0) from None
    bits = np.empty(dom.size, dtype=np.uint8)
    count = 0
    for off in range(nl + 1, len(text)):
        ch = text[off]
        if ch in b" \t\r\n":
            continue
        if ch not in b"01":
            raise FormatError(f"unexpected character {chr(ch)!r}", off)
        if count == dom.size:
            raise FormatError(f"more than {dom.size} bits", off)
        bits[count] = ch - 48
        count += 1
    if count != dom.size:
        raise FormatError(f"expected {dom.size} bits, found {count}", len(text))
    return GridFunction(dom, bits)


def format_function(f: GridFunction) -> str:
    body = "".join("1" if v else "0" for v in f.values.tolist())
    return f"{f.n} {f.d}\n{body}\n"


def read_function(path: str | os.PathLike) -> GridFunction:
    with open(path, "rb") as fh:
        return parse_function(fh.read())


def write_function(f: GridFunction, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_function(f))


def cube_edge_ids(d: int, j: int, T) -> np.ndarray:
    """Index of the hypercube edge (T, T xor bit j) in the order (j, then T without bit j)."""
    T = np.asarray(T, dtype=np.int64)
    low = (1 << (j - 1)) - 1
    rank = (T & low) | ((T >> 1) & ~low)
    return (j - 1) * (1 << (d - 1)) + rank


def cube_edge_count(d: int) -> int:
    return d * (1 << (d - 1)) if d else 0
