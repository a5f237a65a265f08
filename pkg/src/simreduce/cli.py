"""Command line front-end: reduce, include, generate, bench, convert.

Exit codes: 0 success / included, 1 not included, 2 unknown, 3 input,
parameter or I/O error, 4 failed self-check.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import statistics
import sys
import time
from fractions import Fraction
from pathlib import Path

from .automata import NBA, NFA, BaParseError, parse_ba, to_timbuk, write_ba
from .generators import TVParams, derive_seed, tabakov_vardi
from .inclusion import InclusionOptions, check_inclusion
from .oracles import OracleRefused, nba_lasso_falsifier, nfa_language_equiv
from .reduction import heavy, heavy_sat

EXIT_OK = 0
EXIT_NOT_INCLUDED = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3
EXIT_SELF_CHECK = 4


class CliError(Exception):
    pass


def _read(path: str, semantics: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise CliError(f"{path}: {e.strerror or e}") from e
    try:
        return parse_ba(text, semantics)
    except BaParseError as e:
        raise CliError(f"{path}: {e}") from e


def _write(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise CliError(f"{path}: {e.strerror or e}") from e


def _semantics(args) -> str:
    return NFA if args.finite else NBA


def cmd_reduce(args) -> int:
    sem = _semantics(args)
    aut = _read(args.input, sem)
    if args.sat or args.sat_strict:
        out, report = heavy_sat(aut, args.k, aggressive=not args.sat_strict)
    else:
        out, report = heavy(aut, args.k)
    _write(args.output, write_ba(out))
    if args.report:
        _write(args.report, report.to_text())
    elif not args.quiet:
        sys.stderr.write(report.to_text())
    if args.self_check:
        if sem == NFA:
            try:
                same, word = nfa_language_equiv(aut, out)
            except OracleRefused as e:
                sys.stderr.write(f"self-check skipped: {e}\n")
                return EXIT_OK
            if not same:
                sys.stderr.write(f"self-check failed on word {' '.join(word)!r}\n")
                return EXIT_SELF_CHECK
        else:
            w = nba_lasso_falsifier(aut, out)
            if w is not None:
                sys.stderr.write(f"self-check failed on lasso {w}\n")
                return EXIT_SELF_CHECK
    return EXIT_OK


def _parse_k(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        k = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError("k must be a positive integer or 'auto'") from e
    if k < 1:
        raise argparse.ArgumentTypeError("k must be a positive integer or 'auto'")
    return k


def cmd_include(args) -> int:
    sem = _semantics(args)
    a = _read(args.a, sem)
    b = _read(args.b, sem)
    try:
        opts = InclusionOptions(k=args.k, max_u=args.max_u, max_v=args.max_v,
                                node_budget=args.budget, time_budget=args.time_budget,
                                semantics=sem, race=args.race)
    except ValueError as e:
        raise CliError(str(e)) from e
    v = check_inclusion(a, b, opts)
    print(v.to_json())
    if v.counterexample is not None:
        print(v.counterexample_text())
    return v.exit_code


def _tv_params(n, sigma, td, ad, seed) -> TVParams:
    p = TVParams(n, sigma, Fraction(td), Fraction(ad), seed)
    try:
        p.validate()
    except ValueError as e:
        raise CliError(str(e)) from e
    return p


def cmd_generate(args) -> int:
    sem = _semantics(args)
    if args.count < 1:
        raise CliError("count must be positive")
    _tv_params(args.n, args.sigma, args.td, args.ad, args.seed)
    out = Path(args.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"{out}: {e.strerror or e}") from e
    manifest = []
    for i in range(args.count):
        seed = derive_seed(args.seed, i)
        p = _tv_params(args.n, args.sigma, args.td, args.ad, seed)
        name = f"tv_n{args.n}_s{args.sigma}_td{args.td}_ad{args.ad}_{i:04d}.ba"
        _write(str(out / name), write_ba(tabakov_vardi(p, sem)))
        manifest.append(f"n={args.n} sigma={args.sigma} td={args.td} ad={args.ad} {seed} {name}\n")
    _write(str(out / "manifest.txt"), "".join(manifest))
    return EXIT_OK


BENCH_KEYS = {"n": int, "td": str, "k": int, "sigma": int, "ad": str, "samples": int,
              "seed": int, "algo": str}
BENCH_DEFAULTS = {"sigma": ["2"], "ad": ["0.5"], "samples": ["10"], "seed": ["1"],
                  "k": ["12"], "algo": ["heavy"]}


def parse_grid(spec: str) -> dict[str, list]:
    """``key=v1,v2;key=v`` with keys n, td, k, sigma, ad, samples, seed, algo."""
    raw = dict(BENCH_DEFAULTS)
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        key, sep, vals = part.partition("=")
        key = key.strip()
        if not sep or key not in BENCH_KEYS:
            raise CliError(f"bad grid component {part!r}")
        raw[key] = [v.strip() for v in vals.split(",") if v.strip()]
    for key in ("n", "td"):
        if key not in raw:
            raise CliError(f"grid needs {key}")
    try:
        grid = {k: [BENCH_KEYS[k](v) for v in vs] for k, vs in raw.items()}
    except ValueError as e:
        raise CliError(f"bad grid value: {e}") from e
    for algo in grid["algo"]:
        if algo not in ("heavy", "heavy_sat"):
            raise CliError(f"unknown algorithm {algo!r}")
    return grid


BENCH_HEADER = ["algo", "sigma", "ad", "n", "td", "k", "samples", "states_pct",
                "transitions_pct", "mean_ms", "median_ms"]


def bench_rows(grid: dict[str, list], semantics: str = NBA, timing: bool = True):
    """One row per grid point; instance ``i`` uses ``derive_seed(seed, i)``."""
    points = itertools.product(grid["algo"], grid["sigma"], grid["ad"], grid["n"], grid["td"],
                               grid["k"], grid["seed"], grid["samples"])
    for algo, sigma, ad, n, td, k, seed, samples in points:
        fn = heavy_sat if algo == "heavy_sat" else heavy
        st, tr, ms = [], [], []
        for i in range(samples):
            a = tabakov_vardi(_tv_params(n, sigma, td, ad, derive_seed(seed, i)), semantics)
            t0 = time.perf_counter()
            r = fn(a, k)[0]
            ms.append((time.perf_counter() - t0) * 1000)
            st.append(100 * r.n / a.n)
            tr.append(100 * r.n_transitions / max(a.n_transitions, 1))
        yield [algo, sigma, ad, n, td, k, samples,
               f"{statistics.fmean(st):.4f}", f"{statistics.fmean(tr):.4f}",
               f"{statistics.fmean(ms):.3f}" if timing else "",
               f"{statistics.median(ms):.3f}" if timing else ""]


def cmd_bench(args) -> int:
    grid = parse_grid(args.grid)
    try:
        fh = open(args.output, "w", newline="") if args.output else sys.stdout
    except OSError as e:
        raise CliError(f"{args.output}: {e.strerror or e}") from e
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for row in bench_rows(grid, _semantics(args), timing=not args.no_timing):
            w.writerow(row)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_convert(args) -> int:
    aut = _read(args.input, NFA)
    _write(args.output, to_timbuk(aut))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simreduce", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def positive(text):
        k = int(text)
        if k < 1:
            raise argparse.ArgumentTypeError("must be a positive integer")
        return k

    def finite(p):
        p.add_argument("-finite", "--finite", action="store_true",
                       help="finite-word (NFA) semantics instead of Büchi")

    r = sub.add_parser("reduce", help="reduce an automaton")
    r.add_argument("input")
    r.add_argument("-k", type=positive, default=12)
    finite(r)
    r.add_argument("-sat", "--sat", action="store_true",
                   help="interleave saturation rounds until an automaton repeats")
    r.add_argument("--sat-strict", action="store_true",
                   help="saturation, stopping at the first round without improvement")
    r.add_argument("-o", "--output")
    r.add_argument("--report", help="write the pass log here instead of standard error")
    r.add_argument("-q", "--quiet", action="store_true")
    r.add_argument("--self-check", action="store_true",
                   help="compare input and output languages with the falsifier")
    r.set_defaults(func=cmd_reduce)

    i = sub.add_parser("include", help="check L(A) <= L(B)")
    i.add_argument("a")
    i.add_argument("b")
    i.add_argument("-k", type=_parse_k, default=None)
    finite(i)
    i.add_argument("-race", "--race", action="store_true")
    i.add_argument("--max-u", type=int)
    i.add_argument("--max-v", type=int)
    i.add_argument("--budget", type=int, default=200_000, help="counterexample search node budget")
    i.add_argument("--time-budget", type=float)
    i.set_defaults(func=cmd_include)

    g = sub.add_parser("generate", help="write a Tabakov-Vardi corpus")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("-sigma", "--sigma", type=int, default=2)
    g.add_argument("-td", "--td", required=True)
    g.add_argument("-ad", "--ad", default="0.5")
    g.add_argument("-seed", "--seed", type=int, default=1)
    g.add_argument("-count", "--count", type=int, default=1)
    g.add_argument("-o", "--output", required=True)
    finite(g)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="reduction statistics over a parameter grid")
    b.add_argument("grid")
    b.add_argument("-o", "--output")
    b.add_argument("--no-timing", action="store_true", help="leave the timing columns empty")
    finite(b)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("convert", help="convert a finite-word .ba automaton to Timbuk")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_convert)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR
    except (ValueError, ZeroDivisionError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
