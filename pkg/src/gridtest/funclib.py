"""Generators for the function families used in examples and experiments."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional

import numpy as np

from .grid import ContractError, GridDomain, GridFunction, is_monotone
from .sorting import is_semisorted, semisort_all, sort_all

FAMILIES = ("centrist", "indicator", "halfspace", "random", "semisorted-random", "monotone-random")
EXACT_CENTRIST_MAX = 4

# keys each family accepts beyond n and d
_EXTRA = {
    "centrist": {},
    "indicator": {},
    "halfspace": {"i": 1, "t": None},
    "random": {"p": 0.5, "seed": 0},
    "semisorted-random": {"p": 0.5, "seed": 0},
    "monotone-random": {"p": 0.5, "seed": 0},
}


@dataclass(frozen=True)
class FamilySpec:
    name: str
    n: int
    d: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ContractError(f"unknown family {self.name!r}; choose from {', '.join(FAMILIES)}")
        unknown = set(self.params) - set(_EXTRA[self.name])
        if unknown:
            raise ContractError(f"family {self.name} does not take {sorted(unknown)}")

    def get(self, key: str):
        return self.params.get(key, _EXTRA[self.name][key])

    def build(self) -> GridFunction:
        return _BUILDERS[self.name](GridDomain(self.n, self.d), self)


def _centrist(dom: GridDomain, spec) -> GridFunction:
    n, d = dom.n, dom.d
    # symmetric in the coordinates, so C and Fortran flattening agree
    table = np.ones((n,) * d, dtype=np.uint8)
    for k in range(d):
        idx = [slice(None)] * d
        idx[k] = 1
        table[tuple(idx)] = 0
    return GridFunction(dom, table.reshape(-1))


def _indicator(dom: GridDomain, spec) -> GridFunction:
    vals = np.zeros(dom.size, dtype=np.uint8)
    vals[0] = 1
    return GridFunction(dom, vals)


def _halfspace(dom: GridDomain, spec) -> GridFunction:
    i = int(spec.get("i"))
    dom.check_dim(i)
    t = spec.get("t")
    t = dom.n // 2 if t is None else int(t)
    if not 0 <= t <= dom.n:
        raise ContractError(f"threshold {t} outside [0, {dom.n}]")
    return GridFunction(dom, (dom.coords()[:, i - 1] <= t).astype(np.uint8))


def _random(dom: GridDomain, spec) -> GridFunction:
    p = float(spec.get("p"))
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"density must lie in [0, 1], got {p}")
    rng = np.random.default_rng(int(spec.get("seed")))
    return GridFunction(dom, (rng.random(dom.size) < p).astype(np.uint8))


def _semisorted_random(dom: GridDomain, spec) -> GridFunction:
    f = semisort_all(_random(dom, spec))
    assert is_semisorted(f)
    return f


def _monotone_random(dom: GridDomain, spec) -> GridFunction:
    f = sort_all(_random(dom, spec))
    assert is_monotone(f)
    return f


_BUILDERS = {
    "centrist": _centrist,
    "indicator": _indicator,
    "halfspace": _halfspace,
    "random": _random,
    "semisorted-random": _semisorted_random,
    "monotone-random": _monotone_random,
}


def gen(family: str, params: Optional[Mapping[str, Any]] = None) -> GridFunction:
    """Build a family member; ``params`` holds n, d and any family-specific keys."""
    params = dict(params or {})
    try:
        n = int(params.pop("n"))
    except KeyError:
        raise ContractError("family parameters need n") from None
    d = int(params.pop("d", n if family == "centrist" else 1))
    return FamilySpec(family, n, d, params).build()


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def parse_family(text: str) -> FamilySpec:
    """Parse ``name:N`` (n = d = N) or ``name:n=4,d=3,seed=7``."""
    name, _, rest = text.partition(":")
    params: dict[str, Any] = {}
    if rest:
        if "=" not in rest:
            params["n"] = params["d"] = int(rest)
        else:
            for item in rest.split(","):
                key, eq, val = item.partition("=")
                if not eq:
                    raise ContractError(f"bad family parameter {item!r} in {text!r}")
                params[key.strip()] = _coerce(val.strip())
    if "n" not in params:
        raise ContractError(f"family spec {text!r} needs n")
    n = int(params.pop("n"))
    d = int(params.pop("d", n if name == "centrist" else 1))
    return FamilySpec(name, n, d, params)


@dataclass(frozen=True)
class CentristReport:
    n: int
    d: int
    ones_fraction: Fraction
    reference: float  # (1 - 1/d)^d
    eps_lower: Fraction
    eps: Optional[Fraction]


def centrist_witness_bound(n: int, d: int) -> Fraction:
    """Size of an explicit set of disjoint violating pairs, over n^d.

    Each one-point with some coordinate 1 is paired with the point that raises
    its first such coordinate to 2; the map is injective because the image has
    a single coordinate equal to 2.
    """
    return Fraction((n - 1) ** d - (n - 2) ** d, n ** d)


def centrist_eps_check(n: int, d: Optional[int] = None) -> CentristReport:
    """Distance of the centrist function: exact by matching when small, else the witness bound."""
    from .distance import eps_monotone

    d = n if d is None else d
    ones = Fraction((n - 1) ** d, n ** d)
    lower = centrist_witness_bound(n, d)
    eps = None
    if n <= EXACT_CENTRIST_MAX and d <= EXACT_CENTRIST_MAX:
        eps = eps_monotone(gen("centrist", {"n": n, "d": d})).eps
        assert eps >= lower
    return CentristReport(n, d, ones, (1 - 1 / d) ** d if d else 1.0, lower, eps)
