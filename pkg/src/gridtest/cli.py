"""Command-line driver: experiments, verification runs and the acceptance suite."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from . import __version__
from .acceptance import CRITERIA, LEVELS, run_suite
from .coloring import (GridColoring, adversarial_coloring, boundary_one_counts,
                       majority_interval_coloring, semisort_recolor)
from .distance import brute_force_eps, delta_sorted, eps_monotone
from .funclib import FAMILIES, FamilySpec, parse_family
from .grid import (ContractError, DomainError, FormatError, GridDomain, GridFunction,
                   InvariantViolation, format_function, is_monotone, read_function)
from .influence import (phi, phi_colored, psi, psi_colored, talagrand_colored,
                        total_influence, total_neg_influence)
from .sorting import semisort_all
from .tester import TESTERS, default_workers, estimate_rejection
from .tracker import verify_potential_drop

SCHEMA = "gridtest-v1"
EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2
_NOT_CONFIG = {"verb", "config", "save_config", "func"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output

def _plain(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def render(verb: str, records: list[dict], fmt: str, summary: Optional[dict] = None) -> str:
    records = [{k: _plain(v) for k, v in r.items()} for r in records]
    if fmt == "json":
        doc: dict[str, Any] = {"schema": SCHEMA, "verb": verb}
        if summary:
            doc["summary"] = {k: _plain(v) for k, v in summary.items()}
        doc["records"] = records
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# {SCHEMA}\n")
    if records:
        cols = list(records[0])
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow({k: " ".join(map(str, v)) if isinstance(v, list) else v
                             for k, v in r.items()})
    return buf.getvalue()


def emit(args, records, summary=None) -> None:
    text = render(args.verb, records, args.format, summary)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- inputs

def load_function(spec: str) -> GridFunction:
    """A path to a function file, or a family spec such as ``centrist:9``."""
    if os.path.exists(spec):
        return read_function(spec)
    name = spec.partition(":")[0]
    if name not in FAMILIES:
        raise UsageError(f"--fn {spec!r} is neither a file nor a family ({', '.join(FAMILIES)})")
    return parse_family(spec).build()


def load_coloring(spec: str, f: GridFunction, seed: int) -> GridColoring:
    if spec == "majority":
        return majority_interval_coloring(f)
    if spec == "adversarial":
        return adversarial_coloring(f, seed=seed).coloring
    if spec == "random":
        return GridColoring.random(f, np.random.default_rng(seed))
    if spec == "zero":
        return GridColoring.zeros(f.domain)
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            chi = GridColoring.from_record(json.load(fh))
        if chi.domain != f.domain:
            raise UsageError("coloring and function live on different domains")
        return chi
    raise UsageError(f"unknown coloring {spec!r}")


# ---------------------------------------------------------------- verbs

def cmd_influence(args) -> int:
    f = load_function(args.fn)
    if args.kind == "total":
        I, Ineg = total_influence(f), total_neg_influence(f)
        emit(args, [{"total": I, "total_float": float(I), "negative": Ineg,
                     "negative_float": float(Ineg)}])
        return EXIT_OK
    if args.kind in ("phicol", "psicol"):
        chi = load_coloring(args.coloring, f, args.seed)
        vec = phi_colored(f, chi) if args.kind == "phicol" else psi_colored(f, chi)
    else:
        vec = phi(f) if args.kind == "phi" else psi(f)
    per = vec.per_point
    coords = f.domain.coords()
    records = [{"index": k, "point": coords[k].tolist(), "f": int(f.values[k]),
                "value": float(per[k])} for k in range(f.domain.size)]
    emit(args, records, {"kind": args.kind, "objective": vec.objective()})
    return EXIT_OK


def cmd_distance(args) -> int:
    f = load_function(args.fn)
    if args.mode == "delta":
        est = delta_sorted(f, trials=args.trials, seed=args.seed)
        emit(args, [{"delta": est.value, "exact": est.exact if est.exact is not None else "",
                     "stderr": est.stderr, "samples": est.samples}])
    elif args.mode == "oracle":
        eps = brute_force_eps(f)
        emit(args, [{"method": "oracle", "eps": eps, "eps_float": float(eps)}])
    else:
        res = eps_monotone(f)
        emit(args, [{"method": "matching", "eps": res.eps, "eps_float": float(res.eps),
                     "matching_size": res.matching_size}])
    return EXIT_OK


ISO_EXHAUSTIVE_LIMIT = 16


def cmd_verify_iso(args) -> int:
    dom = GridDomain(args.n, args.d)
    N = dom.size
    if args.exhaustive:
        if N > ISO_EXHAUSTIVE_LIMIT:
            raise UsageError(f"--exhaustive needs n^d <= {ISO_EXHAUSTIVE_LIMIT}, got {N}")
        indices = range(1 << N)
    else:
        rng = np.random.default_rng(args.seed)
        indices = [int.from_bytes(rng.bytes((N + 7) // 8), "little") & ((1 << N) - 1)
                   for _ in range(args.samples)]
    records, bad = [], None
    for m in indices:
        f = GridFunction(dom, [(m >> k) & 1 for k in range(N)])
        if is_monotone(f):
            continue
        eps = eps_monotone(f).eps
        t_phi = phi(f).objective()
        adv = adversarial_coloring(f, seed=args.seed)
        rec = {"f_index": m, "eps": eps, "t_phi": t_phi, "t_min": adv.t_min,
               "ratio_phi": t_phi / float(eps), "ratio_min": adv.t_min / float(eps),
               "exact": adv.exact}
        records.append(rec)
        if rec["ratio_min"] <= 0 and bad is None:
            bad = {"f_index": m, "eps": str(eps)}
    emit(args, records)
    if bad:
        raise InvariantViolation("zero isoperimetric ratio", bad)
    return EXIT_OK


def cmd_semisort_recolor(args) -> int:
    f = load_function(args.fn)
    chi = load_coloring(args.coloring, f, args.seed)
    interval = (args.a, args.b if args.b is not None else f.n)
    h, chi2 = semisort_recolor(f, chi, args.i, interval)
    before, after = talagrand_colored(f, chi), talagrand_colored(h, chi2)
    same_counts = bool(np.array_equal(boundary_one_counts(f, chi, args.i, interval),
                                      boundary_one_counts(h, chi2, args.i, interval)))
    emit(args, [{"i": args.i, "a": interval[0], "b": interval[1], "before": before,
                 "after": after, "boundary_counts_kept": same_counts,
                 "coloring": chi2.to_hex()}])
    if after > before + 1e-9 or not same_counts:
        raise InvariantViolation("semisorting raised the objective",
                                 {"before": before, "after": after, "counts_kept": same_counts})
    return EXIT_OK


def cmd_potential_drop(args) -> int:
    dom = GridDomain(args.n, args.d)
    rng = np.random.default_rng(args.seed)
    records = []
    for t in range(args.trials):
        f = semisort_all(GridFunction(dom, rng.integers(0, 2, dom.size, dtype=np.uint8)))
        chi = GridColoring.random(f, rng)
        try:
            rep = verify_potential_drop(f, chi, check_dominance=not args.no_dominance)
        except InvariantViolation as exc:
            exc.witness.update({"trial": t, "f": format_function(f), "coloring": chi.to_record()})
            emit(args, records)
            raise
        records.append({"trial": t, "t_phi_chi": rep.t_phi_chi, "final": rep.final_mean,
                        "tracker_side": rep.tracker_side, "stages": len(rep.stages),
                        "dominance_lines": rep.dominance_checked})
    emit(args, records)
    return EXIT_OK


def cmd_tester_sim(args) -> int:
    f = load_function(args.fn)
    est = estimate_rejection(f, args.tester, args.trials, seed=args.seed,
                             workers=args.workers, tau=args.tau)
    emit(args, [{"tester": args.tester, "n": f.n, "d": f.d, "trials": est.trials,
                 "rejections": est.rejections, "p_hat": est.p_hat, "ci95": est.ci95}])
    return EXIT_OK


def cmd_gen(args) -> int:
    params: dict[str, Any] = {}
    if args.family in ("random", "semisorted-random", "monotone-random"):
        params = {"p": args.p, "seed": args.seed}
    elif args.family == "halfspace":
        params = {"i": args.i, "t": args.t}
    d = args.d if args.d is not None else (args.n if args.family == "centrist" else 1)
    f = FamilySpec(args.family, args.n, d, params).build()
    text = format_function(f)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_suite(args) -> int:
    only = None
    if args.only:
        only = {int(x) for x in args.only.split(",")}
        known = {c[0] for c in CRITERIA}
        if not only <= known:
            raise UsageError(f"unknown criteria {sorted(only - known)}")
    results = []
    for num, *_ in CRITERIA:
        if only is not None and num not in only:
            continue
        res = run_suite(args.level, args.seed, only={num})[0]
        print(res.line(), file=sys.stderr, flush=True)
        results.append(res)
    emit(args, [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


# ---------------------------------------------------------------- parser

def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--workers", type=_positive, default=None,
                        help="worker processes (default: $GRIDTEST_WORKERS or 1)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--json", dest="format", action="store_const", const="json")
    common.add_argument("--csv", dest="format", action="store_const", const="csv")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--config", default=None, help="JSON file with option defaults")
    common.add_argument("--save-config", default=None, help="write the effective options as JSON")

    p = argparse.ArgumentParser(prog="gridtest", description=__doc__)
    p.add_argument("--version", action="version", version=f"gridtest {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("influence", parents=[common], help="per-point influence vectors")
    s.add_argument("--fn", required=True)
    s.add_argument("--kind", choices=("phi", "phicol", "psi", "psicol", "total"), default="phi")
    s.add_argument("--coloring", default="majority",
                   help="majority|adversarial|random|zero or a coloring record file")
    s.set_defaults(func=cmd_influence)

    s = sub.add_parser("distance", parents=[common], help="distance to monotonicity")
    s.add_argument("--fn", required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="mode", action="store_const", const="exact")
    g.add_argument("--oracle", dest="mode", action="store_const", const="oracle")
    g.add_argument("--delta", dest="mode", action="store_const", const="delta")
    s.add_argument("--trials", type=_positive, default=10_000)
    s.set_defaults(func=cmd_distance, mode="exact")

    s = sub.add_parser("verify-iso", parents=[common], help="isoperimetric ratios over a corpus")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--exhaustive", action="store_true")
    s.add_argument("--samples", type=_positive, default=100)
    s.set_defaults(func=cmd_verify_iso)

    s = sub.add_parser("semisort-recolor", parents=[common], help="semisort an interval and recolor")
    s.add_argument("--fn", required=True)
    s.add_argument("--i", type=int, required=True)
    s.add_argument("--a", type=int, default=1)
    s.add_argument("--b", type=int, default=None)
    s.add_argument("--coloring", default="random")
    s.set_defaults(func=cmd_semisort_recolor)

    s = sub.add_parser("potential-drop", parents=[common], help="stagewise potential verification")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--trials", type=_positive, default=10)
    s.add_argument("--no-dominance", action="store_true")
    s.set_defaults(func=cmd_potential_drop)

    s = sub.add_parser("tester-sim", parents=[common], help="Monte-Carlo rejection rate")
    s.add_argument("--tester", choices=TESTERS, default="path")
    s.add_argument("--fn", required=True)
    s.add_argument("--trials", type=_positive, default=100_000)
    s.add_argument("--tau", type=int, default=None, help="walk length for the cube tester")
    s.set_defaults(func=cmd_tester_sim)

    s = sub.add_parser("gen", parents=[common], help="write a family member in the function format")
    s.add_argument("--family", required=True, choices=FAMILIES)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--i", type=int, default=1)
    s.add_argument("--t", type=int, default=None)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    s.add_argument("--level", choices=tuple(LEVELS), default="desk")
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_suite)
    return p


def _subparser(parser: argparse.ArgumentParser, verb: str) -> argparse.ArgumentParser:
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices[verb]


def config_keys(sub: argparse.ArgumentParser) -> set[str]:
    return {a.dest for a in sub._actions if a.dest not in _NOT_CONFIG and a.dest != "help"}


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = _subparser(parser, args.verb)
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - config_keys(sub)
        if unknown:
            raise UsageError(f"unknown config keys for {args.verb}: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        # reparse so flags on the command line still win over the file
        args = parser.parse_args(argv)
    if args.workers is None:
        args.workers = default_workers()
    if args.save_config:
        sub = _subparser(parser, args.verb)
        cfg = {k: getattr(args, k) for k in sorted(config_keys(sub))}
        with open(args.save_config, "w", encoding="utf-8") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return args


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"gridtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(json.dumps({"schema": SCHEMA, "error": str(exc), "witness": exc.witness},
                         default=str), file=sys.stderr)
        return EXIT_INVARIANT
    except (UsageError, ContractError, DomainError, FormatError) as exc:
        print(f"gridtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
