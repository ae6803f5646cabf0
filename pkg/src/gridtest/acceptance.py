"""The acceptance battery shared by the test suite and ``gridtest suite``."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .coloring import (GridColoring, adversarial_coloring, majority_interval_coloring,
                       semisort_recolor)
from .distance import (brute_force_eps, cube_function_bits, eps_monotone, hamming,
                       restriction_talagrand_sides, var_prob_sides)
from .funclib import gen
from .grid import GridDomain, GridFunction, InvariantViolation, is_monotone, violation_mask
from .influence import harmonic, phi_colored_matrix, phi_matrix, psi_numerators, talagrand_colored
from .majorization import half_norm_compare, majorizes, sorted_sum_dominates
from .sorting import is_sorted_along, semisort_all, sort_all, sort_set
from .tester import (estimate_rejection, exact_pair_distribution, exact_rejection_probability,
                     hypercube_influence_identity, total_variation)
from .tracker import tracker_variance_bridge, verify_potential_drop

TOL = 1e-9

# Regression anchors measured by the oracles in this package.  They are
# empirical values at desk scale, not the unspecified asymptotic constants.
ANCHORS = {
    # min over non-monotone f on [3]^2 of min_chi T_phi_chi(f) / eps_f (attained by f = 001000000)
    "min_ratio_3x2": 1.0,
    # min T_phi_chi / eps over semisorted corpora (all of [2]^d, d <= 3; 200 seeds on [4]^2)
    "c_semisorted": 1.0,
    # max fraction * sqrt(d) / tau over the persistence corpus (seed 1, 200 walks per point)
    "c_persistence": 0.315754537155644,
    # min over d <= 3 of E_S sqrt(I_{g,xi}(S)) / var(g), reached at d = 2 (= sqrt(2)/3)
    "cube_talagrand_ratio": math.sqrt(2) / 3,
}

LEVELS = {
    # knobs per level: desk is the full battery, smoke is a fast subset for CLI checks
    "desk": dict(contraction=10_000, cube_fns=100, maj=10_000, semisort=1_000, drop=1_000,
                 tal_d3=100, monotone_fns=50, walk_trials=100_000, centrist_trials=200_000,
                 weighted=1_000),
    "smoke": dict(contraction=300, cube_fns=5, maj=300, semisort=50, drop=20,
                  tal_d3=3, monotone_fns=5, walk_trials=5_000, centrist_trials=20_000,
                  weighted=50),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s / {self.budget:.0f}s)"

    def to_record(self) -> dict:
        return asdict(self)


def all_functions(n: int, d: int):
    dom = GridDomain(n, d)
    N = dom.size
    shifts = np.arange(N)
    for m in range(1 << N):
        yield m, GridFunction(dom, ((m >> shifts) & 1).astype(np.uint8))


def _corpora():
    return [f for nd in ((3, 2), (2, 3)) for _, f in all_functions(*nd)]


def _ordered_subsets(d: int):
    for k in range(d + 1):
        for S in itertools.permutations(range(1, d + 1), k):
            yield S


def _random_function(rng, n: int, d: int) -> GridFunction:
    dom = GridDomain(n, d)
    return GridFunction(dom, rng.integers(0, 2, dom.size, dtype=np.uint8))


# ---------------------------------------------------------------- criteria

def crit_sort_algebra(cfg, seed: int) -> str:
    corpus = _corpora()
    for f in corpus:
        for S in _ordered_subsets(f.d):
            g = sort_set(f, S)
            for i in S:
                if not is_sorted_along(g, i):
                    raise InvariantViolation("ordered sort not sorted", {"f": repr(f), "S": S})
        eps = eps_monotone(f).eps
        dist = hamming(f, sort_all(f))
        if not eps <= dist <= 2 * eps:
            raise InvariantViolation("sort distance outside [eps, 2 eps]",
                                     {"f": repr(f), "eps": str(eps), "dist": str(dist)})
    rng = np.random.default_rng(seed)
    for _ in range(cfg["contraction"]):
        n, d = ((3, 2), (2, 3))[int(rng.integers(0, 2))]
        f, g = _random_function(rng, n, d), _random_function(rng, n, d)
        S = list(rng.permutation(d)[: int(rng.integers(0, d + 1))] + 1)
        if hamming(sort_set(f, S), sort_set(g, S)) > hamming(f, g):
            raise InvariantViolation("sorting increased a distance", {"f": repr(f), "g": repr(g), "S": S})
    return f"{len(corpus)} functions, {cfg['contraction']} contraction trials"


def crit_distance_oracle(cfg, seed: int) -> str:
    corpus = _corpora()
    for f in corpus:
        a, b = eps_monotone(f).eps, brute_force_eps(f)
        if a != b:
            raise InvariantViolation("matching and brute force disagree",
                                     {"f": repr(f), "matching": str(a), "brute": str(b)})
    return f"{len(corpus)} functions agree"


def crit_walk_identity(cfg, seed: int) -> str:
    worst = Fraction(0)
    cases = 0
    for n in range(2, 5):
        for d in range(1, 4):
            dom = GridDomain(n, d)
            for tau in range(1, d + 1):
                p = exact_pair_distribution(dom, tau, "path")
                q = exact_pair_distribution(dom, tau, "cube")
                if sum(p.values()) != 1 or sum(q.values()) != 1:
                    raise InvariantViolation("distribution mass is not 1", {"n": n, "d": d, "tau": tau})
                worst = max(worst, total_variation(p, q))
                cases += 1
    if worst >= 1e-12:
        raise InvariantViolation("walk distributions differ", {"tv": float(worst)})
    return f"{cases} cases, max TV {float(worst):.1e}"


def crit_hypercube_identity(cfg, seed: int) -> str:
    rng = np.random.default_rng(seed)
    count = 0
    for n in (3, 4):
        for d in (2, 3):
            for _ in range(cfg["cube_fns"]):
                f = _random_function(rng, n, d)
                e_inf, rhs, e_neg, rhs_neg = hypercube_influence_identity(f)
                if abs(e_inf - rhs) > 1e-12 or abs(e_neg - rhs_neg) > 1e-12:
                    raise InvariantViolation("hypercube average differs",
                                             {"f": repr(f), "lhs": str(e_inf), "rhs": str(rhs)})
                count += 1
    return f"{count} functions exact"


def robin_hood(rng, a: np.ndarray, steps: int) -> np.ndarray:
    """Move mass from richer to poorer entries; the result is majorized by ``a``."""
    b = a.copy()
    for _ in range(steps):
        i, j = (int(k) for k in rng.integers(0, b.size, size=2))
        if b[i] < b[j]:
            i, j = j, i
        gap = int(b[i] - b[j])
        if gap:
            delta = int(rng.integers(0, gap + 1))
            b[i] -= delta
            b[j] += delta
    return b


def crit_majorization(cfg, seed: int) -> str:
    rng = np.random.default_rng(seed)
    trials = cfg["maj"]
    for _ in range(trials):
        t = int(rng.integers(1, 17))
        parts = [rng.integers(0, 2, t) for _ in range(int(rng.integers(1, 9)))]
        for direction in ("down", "up"):
            _, _, ok = sorted_sum_dominates(parts, direction)
            if not ok:
                raise InvariantViolation("sorted sum failed to majorize",
                                         {"parts": [p.tolist() for p in parts]})
    for _ in range(trials):
        t = int(rng.integers(2, 17))
        a = rng.integers(0, 30, t)
        b = robin_hood(rng, a, int(rng.integers(1, 6)))
        if not majorizes(a, b) or half_norm_compare(a, b) > 0:
            raise InvariantViolation("square-root sum not Schur-concave",
                                     {"a": a.tolist(), "b": b.tolist()})
    return f"{trials} sum trials, {trials} transfer trials"


def crit_semisort_recolor(cfg, seed: int) -> str:
    rng = np.random.default_rng(seed)
    for _ in range(cfg["semisort"]):
        n = int(rng.choice([4, 6]))
        d = int(rng.integers(1, 4))
        f = _random_function(rng, n, d)
        chi = GridColoring.random(f, rng)
        i = int(rng.integers(1, d + 1))
        a = int(rng.integers(1, n + 1))
        b = int(rng.integers(a, n + 1))
        h, chi2 = semisort_recolor(f, chi, i, (a, b))
        before, after = talagrand_colored(f, chi), talagrand_colored(h, chi2)
        if after > before + TOL:
            raise InvariantViolation("semisorting raised the objective",
                                     {"f": repr(f), "i": i, "interval": (a, b),
                                      "before": before, "after": after})
    return f"{cfg['semisort']} trials"


def crit_potential_drop(cfg, seed: int) -> str:
    count = 0
    for _, f in all_functions(2, 2):
        m = int(violation_mask(f).sum())
        for c in range(1 << m):
            verify_potential_drop(f, GridColoring.on_violations(f, [(c >> k) & 1 for k in range(m)]))
            count += 1
    rng = np.random.default_rng(seed)
    for _ in range(cfg["drop"]):
        f = semisort_all(_random_function(rng, 4, 2))
        rep = verify_potential_drop(f, GridColoring.random(f, rng))
        if rep.t_phi_chi < rep.tracker_side - TOL:
            raise InvariantViolation("end chain failed", {"f": repr(f)})
    return f"{count} exhaustive cases, {cfg['drop']} random on [4]^2"


def crit_isoperimetry(cfg, seed: int) -> str:
    best, arg = math.inf, None
    count = 0
    for m, f in all_functions(3, 2):
        if is_monotone(f):
            continue
        res = adversarial_coloring(f)
        if not res.exact:
            raise InvariantViolation("coloring search was not exhaustive", {"f": repr(f)})
        r = res.t_min / float(eps_monotone(f).eps)
        if r <= 0:
            raise InvariantViolation("zero isoperimetric ratio", {"f": repr(f)})
        if r < best:
            best, arg = r, m
        count += 1
    if abs(best - ANCHORS["min_ratio_3x2"]) > 1e-12:
        raise InvariantViolation("min ratio moved off its anchor", {"min": best, "f": arg})
    return f"{count} functions, min r = {best:.6f} at f#{arg}"


def crit_restriction_claims(cfg, seed: int) -> str:
    for d in range(1, 4):
        for mask in range(1 << (1 << d)):
            lhs, rhs = var_prob_sides(cube_function_bits(d, mask))
            if lhs > rhs:
                raise InvariantViolation("sign-flip probability above 4 var", {"d": d, "h": mask})
    rng = np.random.default_rng(seed)
    tal = [f for d in (1, 2) for _, f in all_functions(3, d)]
    tal += [_random_function(rng, 3, 3) for _ in range(cfg["tal_d3"])]
    for f in tal:
        lhs, rhs = restriction_talagrand_sides(f)
        if lhs < rhs - TOL:
            raise InvariantViolation("restriction bound failed", {"f": repr(f), "lhs": lhs, "rhs": rhs})
    count = 0
    for _, f in all_functions(3, 2):
        tracker_variance_bridge(f)
        count += 1
    return f"cube d<=3 exhaustive, {len(tal)} restriction cases, {count} bridge cases"


def crit_tester(cfg, seed: int) -> str:
    trials = cfg["walk_trials"]
    shapes = [(2, 3), (3, 2), (3, 3), (4, 2), (2, 5)]
    for k in range(cfg["monotone_fns"]):
        n, d = shapes[k % len(shapes)]
        f = gen("monotone-random", {"n": n, "d": d, "p": 0.2 + 0.6 * (k % 7) / 6, "seed": seed + k})
        for tester, tau in (("path", None), ("cube", d), ("pareto", None), ("edge", None)):
            est = estimate_rejection(f, tester, trials, seed=seed + k, tau=tau)
            if est.rejections:
                raise InvariantViolation("tester rejected a monotone function",
                                         {"f": repr(f), "tester": tester})
    f = gen("indicator", {"n": 3, "d": 1})
    exact = exact_rejection_probability(f)
    est = estimate_rejection(f, "path", trials, seed=seed)
    sigma = math.sqrt(float(exact) * (1 - float(exact)) / trials)
    if exact != Fraction(1, 3) or abs(est.p_hat - 1 / 3) > 3 * sigma:
        raise InvariantViolation("line tester estimate off", {"p_hat": est.p_hat, "sigma": sigma})
    g = gen("centrist", {"n": 9, "d": 9})
    uni = estimate_rejection(g, "path", cfg["centrist_trials"], seed=seed)
    par = estimate_rejection(g, "pareto", cfg["centrist_trials"], seed=seed + 1)
    del g
    if not par.p_hat - par.ci95 > uni.p_hat + uni.ci95:
        raise InvariantViolation("pareto walk did not beat the uniform walk",
                                 {"uniform": uni.p_hat, "pareto": par.p_hat})
    return (f"monotone ok, line p_hat {est.p_hat:.4f}, centrist uniform {uni.p_hat:.4f}"
            f"±{uni.ci95:.4f} vs pareto {par.p_hat:.4f}±{par.ci95:.4f}")


def crit_weighted(cfg, seed: int) -> str:
    rng = np.random.default_rng(seed)
    for _ in range(cfg["weighted"]):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 4))
        f = _random_function(rng, n, d)
        num, L = psi_numerators(f)
        H = harmonic(n)
        lhs = phi_matrix(f).sum(axis=1).astype(object) * (H.numerator * L)
        rhs = num.sum(axis=1).astype(object) * H.denominator
        if np.any(lhs < rhs):
            raise InvariantViolation("weighted influence above H_n times thresholded",
                                     {"f": repr(f)})
        chi = majority_interval_coloring(f)
        c0 = harmonic(n) - harmonic(-(-n // 2))
        hit = phi_colored_matrix(f, chi) == 1
        low = num.astype(object) * c0.denominator < c0.numerator * L
        if np.any(hit & low):
            raise InvariantViolation("majority coloring credited a light edge", {"f": repr(f)})
    return f"{cfg['weighted']} functions exact"


CRITERIA: list[tuple[int, str, Callable, float]] = [
    (1, "sort algebra", crit_sort_algebra, 10),
    (2, "distance oracle", crit_distance_oracle, 60),
    (3, "walk distribution identity", crit_walk_identity, 30),
    (4, "hypercube influence identity", crit_hypercube_identity, 30),
    (5, "majorization", crit_majorization, 5),
    (6, "semisort recolor", crit_semisort_recolor, 60),
    (7, "potential drop", crit_potential_drop, 600),
    (8, "isoperimetry ratios", crit_isoperimetry, 600),
    (9, "restriction and variance claims", crit_restriction_claims, 300),
    (10, "tester behavior", crit_tester, 300),
    (11, "weighted influence bridge", crit_weighted, 60),
]


def run_criterion(number: int, level: str = "desk", seed: int = 0) -> CriterionResult:
    cfg = LEVELS[level]
    _, name, fn, budget = next(c for c in CRITERIA if c[0] == number)
    start = time.perf_counter()
    try:
        detail = fn(cfg, seed)
        passed = True
    except InvariantViolation as exc:
        detail = f"{exc} {exc.witness}"
        passed = False
    seconds = time.perf_counter() - start
    if passed and seconds > budget:
        passed = False
        detail += f"; over the {budget:.0f}s budget"
    return CriterionResult(number, name, passed, detail, seconds, budget)


def run_suite(level: str = "desk", seed: int = 0, only=None) -> list[CriterionResult]:
    return [run_criterion(c[0], level, seed) for c in CRITERIA if only is None or c[0] in only]
