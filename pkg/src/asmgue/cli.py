"""Command line interface.

Exit codes: 0 success, 2 usage, 3 invalid data, 4 compute budget exceeded,
5 statistical failure under ``--assert``.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    HeightFunction,
    SixVertexConfig,
    asm_from_json,
    asm_to_height,
    asm_to_json,
    asm_to_sixvertex,
    asm_to_triangle,
    height_to_asm,
    sixvertex_to_asm,
    triangle_from_json,
    triangle_to_asm,
    triangle_to_json,
    validate_asm,
)
from .enumerate import MAX_ENUMERATION_SIZE, count_patterns, enumerate_asms, enumerate_triangles, refined_count
from .errors import AsmGueError, ConfigError
from .experiment import ExperimentConfig, _jsonable, run_experiment
from .gibbs import (
    chain_estimates,
    conditional_top_law,
    sample_conditional_many,
    verify_monotonicity,
    verify_tightness,
)
from .rmt import flat_size, sample_gue_corners_batch, verify_characterization
from .sample import EXACT_DEFAULT_MAX_SIZE, METHODS, default_sweeps, fresh_seed, sample_asms
from .stats import (
    boundary_table,
    chi_square_uniform,
    coordinate_names,
    ks_test,
    psi_array,
    scale,
    svg_histogram,
    text_histogram,
    write_csv,
)

SEED_ENV = "ASMGUE_SEED"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET, EXIT_STAT = 0, 2, 3, 4, 5
_CATEGORY_EXIT = {"usage": EXIT_USAGE, "data": EXIT_DATA, "budget": EXIT_BUDGET, "internal": 1}


class UsageError(Exception):
    pass


def resolve_seed(seed) -> int:
    """--seed, else $ASMGUE_SEED, else fresh entropy; always echoed to stderr."""
    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env:
            try:
                seed = int(env)
            except ValueError:
                raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}")
        else:
            seed = fresh_seed()
    print(f"seed: {seed}", file=sys.stderr)
    return int(seed)


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit_json(obj, path=None) -> None:
    with _output(path) as fh:
        fh.write(json.dumps(obj, indent=2, default=_jsonable) + "\n")


def _read_records(path) -> list:
    """A JSON document (object or array) or JSON-lines; manifest lines are skipped."""
    text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
    text = text.strip()
    if not text:
        return []
    try:
        docs = [json.loads(text)]
    except json.JSONDecodeError:
        docs = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [d for d in docs if not (isinstance(d, dict) and "manifest" in d)]


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    method = args.method
    if method is None:
        if args.size > EXACT_DEFAULT_MAX_SIZE:
            raise UsageError(f"n > {EXACT_DEFAULT_MAX_SIZE} needs an explicit --method (exact sampling is slow there)")
        method = "cftp"
    seed = resolve_seed(args.seed)
    sweeps = args.sweeps if args.sweeps is not None else (default_sweeps(args.size) if method == "glauber" else None)
    mats = sample_asms(args.size, args.count, seed, method, sweeps, args.jobs)
    manifest = {"manifest": {"version": __version__, "n": args.size, "count": args.count, "seed": seed,
                             "method": method, "sweeps": sweeps, "as": args.as_}}
    with _output(args.out) as fh:
        fh.write(json.dumps(manifest) + "\n")
        for m in mats:
            a = validate_asm(m)
            rec = asm_to_json(a) if args.as_ == "matrix" else triangle_to_json(asm_to_triangle(a))
            fh.write(json.dumps(rec) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# enumerate


def cmd_enumerate(args) -> int:
    n = args.size
    if args.list:
        with _output(args.out) as fh:
            for a in enumerate_asms(n):
                fh.write(json.dumps(asm_to_json(a)) + "\n")
        return EXIT_OK
    out = {"n": n, "count": count_patterns(range(1, n + 1))}
    if args.refined:
        out["refined"] = {str(k): refined_count(n, k) for k in range(1, n + 1)}
    _emit_json(out, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# convert

FORMATS = ("matrix", "triangle", "height", "sixvertex")


def _decode(rec, fmt):
    if fmt == "matrix":
        return asm_from_json(rec)
    if fmt == "triangle":
        return triangle_to_asm(triangle_from_json(rec))
    if fmt == "height":
        h = rec["height"] if isinstance(rec, dict) else rec
        return height_to_asm(HeightFunction(np.asarray(h)))
    if fmt == "sixvertex":
        return sixvertex_to_asm(SixVertexConfig(np.asarray(rec["horizontal"]), np.asarray(rec["vertical"])))
    raise UsageError(f"unknown format {fmt}")


def _encode(a, fmt) -> dict:
    if fmt == "matrix":
        return asm_to_json(a)
    if fmt == "triangle":
        return triangle_to_json(asm_to_triangle(a))
    if fmt == "height":
        return {"n": a.n, "height": asm_to_height(a).h.tolist()}
    c = asm_to_sixvertex(a)
    return {"n": a.n, "vertices": c.labels(), "horizontal": c.horizontal.tolist(), "vertical": c.vertical.tolist()}


def cmd_convert(args) -> int:
    records = _read_records(args.input)
    out = [_encode(_decode(r, args.from_), args.to) for r in records]
    with _output(args.out) as fh:
        if len(out) == 1 and not args.lines:
            fh.write(json.dumps(out[0]) + "\n")
        else:
            for rec in out:
                fh.write(json.dumps(rec) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# stats


def _load_matrices(path) -> np.ndarray:
    mats = []
    for rec in _read_records(path):
        if isinstance(rec, dict) and "triangle" in rec:
            mats.append(triangle_to_asm(triangle_from_json(rec)).entries)
        else:
            mats.append(asm_from_json(rec).entries)
    if not mats:
        raise UsageError("no samples in input")
    if len({m.shape for m in mats}) != 1:
        raise UsageError("samples have mixed sizes")
    return np.stack(mats)


def cmd_stats(args) -> int:
    mats = _load_matrices(args.input)
    n = mats.shape[1]
    table = boundary_table(mats, args.rows)
    if not args.scale:
        table = {k: v for k, v in table.items() if not k.startswith("scaled")}
    else:
        for j in range(1, args.rows + 1):
            table[f"scaled_psi_{j}"] = scale(psi_array(mats, j), n)
    if args.out in (None, "-"):
        w = csv.writer(sys.stdout)
        w.writerow(list(table))
        for row in zip(*table.values()):
            w.writerow(["" if isinstance(v, float) and np.isnan(v) else v for v in row])
    else:
        write_csv(args.out, table)
    if args.histogram:
        col = table[args.histogram_column] if args.histogram_column in table else None
        if col is None:
            raise UsageError(f"unknown column {args.histogram_column}; have {list(table)}")
        col = np.asarray(col, float)
        col = col[np.isfinite(col)]
        base = Path(args.histogram)
        base.with_suffix(".txt").write_text(text_histogram(col) + "\n")
        base.with_suffix(".svg").write_text(svg_histogram(col, title=args.histogram_column))
    return EXIT_OK


# ---------------------------------------------------------------------------
# gue


def cmd_gue_corners(args) -> int:
    seed = resolve_seed(args.seed)
    flat = sample_gue_corners_batch(args.rank, args.count, seed)
    write_csv(args.out if args.out not in (None, "-") else "/dev/stdout",
              {name: flat[:, c] for c, name in enumerate(coordinate_names(args.rank, "nu"))})
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _verdict(args, passed) -> int:
    if args.assert_ and passed is False:
        return EXIT_STAT
    return EXIT_OK


def _strict_rows(max_value: int, max_len: int):
    for k in range(1, max_len + 1):
        yield from itertools.combinations(range(1, max_value + 1), k)


def cmd_verify_gibbs(args) -> int:
    """Chi-square of sample_conditional draws against the enumerated uniform law."""
    seed = resolve_seed(args.seed)
    lams = [tuple(args.lam)] if args.lam else list(_strict_rows(6, 4))
    results = []
    rng = np.random.default_rng(seed)
    for lam in lams:
        patterns = [t.rows for t in enumerate_triangles(lam)]
        index = {p: i for i, p in enumerate(patterns)}
        if len(patterns) == 1:
            results.append({"lambda": list(lam), "patterns": 1, "pvalue": 1.0, "passed": True})
            continue
        draws = args.draws or 10 * len(patterns)
        counts = np.zeros(len(patterns))
        for t in sample_conditional_many(lam, draws, int(rng.integers(1 << 62))):
            counts[index[t.rows]] += 1
        res = chi_square_uniform(counts)
        results.append({"lambda": list(lam), "patterns": len(patterns), "draws": draws,
                        "statistic": res.statistic, "pvalue": res.pvalue, "passed": res.pvalue > args.alpha})
    passed = all(r["passed"] for r in results)
    _emit_json({"seed": seed, "alpha": args.alpha, "passed": passed, "results": results}, args.out)
    return _verdict(args, passed)


def cmd_verify_tightness(args) -> int:
    seed = resolve_seed(args.seed) if args.samples else None
    rep = verify_tightness(args.lam, args.c, args.samples, seed, args.min_spread)
    out = rep.as_dict()
    if len(args.lam) >= 2:
        # the two counting estimates on the diagonal chain with the sub-diagonal pinned at its extreme
        A = tuple([args.lam[0]] * (len(args.lam) - 1))
        out["estimates"] = chain_estimates(A, args.lam[-1]).as_dict()
    _emit_json(out, args.out)
    return _verdict(args, rep.passed)


def cmd_verify_monotonicity(args) -> int:
    rep = verify_monotonicity(args.A, args.A_prime, args.B, args.B_prime)
    out = rep.as_dict()
    out["top_law_nondecreasing"] = conditional_top_law(args.A, args.B).nondecreasing if args.A else None
    _emit_json(out, args.out)
    return _verdict(args, rep.holds and out["top_law_nondecreasing"] is not False)


def _read_flat_csv(path) -> tuple[np.ndarray, int]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError("empty CSV")
    header, body = rows[0], rows[1:]
    for prefix in ("nu", "scaled"):
        cols = [c for c in header if c.startswith(prefix + "_")]
        if cols:
            break
    else:
        raise UsageError("CSV needs nu_i_k or scaled_i_j columns")
    rank = 0
    while flat_size(rank + 1) <= len(cols):
        rank += 1
    names = coordinate_names(rank, prefix)
    missing = [c for c in names if c not in header]
    if missing:
        raise UsageError(f"CSV lacks columns {missing}")
    idx = [header.index(c) for c in names]
    data = [[float(r[i]) for i in idx] for r in body if all(r[i] != "" for i in idx)]
    return np.asarray(data, float).reshape(-1, len(names)), rank


def cmd_verify_characterization(args) -> int:
    seed = resolve_seed(args.seed)
    flat, rank = _read_flat_csv(args.input)
    if args.rank:
        if args.rank > rank:
            raise UsageError(f"input only has rank {rank}")
        flat = np.concatenate([flat[:, :flat_size(args.rank)]], axis=1)
        rank = args.rank
    rep = verify_characterization(flat, rank, seed, args.alpha, gibbs=not args.no_gibbs)
    out = rep.as_dict()
    out["seed"] = seed
    _emit_json(out, args.out)
    return _verdict(args, rep.passed)


def cmd_verify_sampler(args) -> int:
    """Exact chi-square for n <= 5 plus a doubling test: budget T against 2T (or CFTP against Glauber)."""
    seed = resolve_seed(args.seed)
    n, M = args.size, args.count
    method = args.method
    sweeps = args.sweeps or (default_sweeps(n) if method == "glauber" else None)
    mats = sample_asms(n, M, seed, method, sweeps, args.jobs)
    out = {"n": n, "count": M, "method": method, "sweeps": sweeps, "seed": seed, "tests": []}
    if n <= min(5, MAX_ENUMERATION_SIZE):
        table = enumerate_asms(n)
        index = {a.entries.tobytes(): i for i, a in enumerate(table)}
        counts = np.bincount([index[m.astype(np.int8).tobytes()] for m in mats], minlength=len(table))
        res = chi_square_uniform(counts)
        out["tests"].append({"name": "chi2_uniform", "statistic": res.statistic, "pvalue": res.pvalue})
    if method == "glauber":
        other = sample_asms(n, M, seed + 1, "glauber", 2 * sweeps, args.jobs)
        label = "doubling"
    else:
        other = sample_asms(n, M, seed + 1, "glauber", default_sweeps(n), args.jobs)
        label = "vs_glauber"
    for k in sorted({1, min(2, n)}):
        res = ks_test(psi_array(mats, k).astype(float), psi_array(other, k).astype(float))
        out["tests"].append({"name": f"{label}_psi_{k}", "statistic": res.statistic, "pvalue": res.pvalue})
    for t in out["tests"]:
        t["passed"] = t["pvalue"] > args.alpha
    out["passed"] = all(t["passed"] for t in out["tests"])
    _emit_json(out, args.out)
    return _verdict(args, out["passed"])


# ---------------------------------------------------------------------------
# experiment


def cmd_experiment(args) -> int:
    kw = {}
    if args.config:
        cfg = ExperimentConfig.from_text(Path(args.config).read_text())
        kw = cfg.to_dict()
    for key in ("sizes", "samples", "method", "depth", "sweeps", "reference_samples", "alpha", "ks_max", "out_dir", "jobs"):
        v = getattr(args, key)
        if v is not None:
            kw[key] = v
    if "sizes" not in kw:
        raise ConfigError("no sizes given (use --sizes or a config file)")
    kw["seed"] = resolve_seed(args.seed if args.seed is not None else kw.get("seed"))
    cfg = ExperimentConfig.from_mapping(kw).validate()
    report = run_experiment(cfg)
    if cfg.out_dir is None:
        _emit_json(report)
    else:
        for s in report["sizes"]:
            fails = [t["name"] for t in s["tests"] if not t["passed"]]
            print(f"n={s['n']}: {'pass' if s['passed'] else 'FAIL ' + ', '.join(fails)}")
    return _verdict(args, report["passed"])


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asmgue", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, help=f"RNG seed (default ${SEED_ENV}, else entropy)")

    def asserting(sp):
        sp.add_argument("--assert", dest="assert_", action="store_true", help="exit 5 when a test fails")
        sp.add_argument("--out", help="output file (default stdout)")

    s = sub.add_parser("sample", help="draw uniform ASMs as JSON-lines")
    s.add_argument("--size", "-n", type=int, required=True)
    s.add_argument("--count", "-m", type=int, default=1)
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--sweeps", type=int, help="Glauber budget in checkerboard sweeps (default 4 n^2)")
    s.add_argument("--as", dest="as_", choices=("matrix", "triangle"), default="matrix")
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)
    seeded(s)
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("enumerate", help="exact counts, or every ASM with --list")
    e.add_argument("--size", "-n", type=int, required=True)
    e.add_argument("--refined", action="store_true", help="also count by position of the 1 in row 1")
    e.add_argument("--list", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)

    c = sub.add_parser("convert", help="convert between matrix, triangle, height and six-vertex JSON")
    c.add_argument("--from", dest="from_", choices=FORMATS, required=True)
    c.add_argument("--to", choices=FORMATS, required=True)
    c.add_argument("--input", "-i", help="JSON or JSON-lines file (default stdin)")
    c.add_argument("--lines", action="store_true", help="always emit JSON-lines")
    c.add_argument("--out")
    c.set_defaults(func=cmd_convert)

    st = sub.add_parser("stats", help="boundary coordinates of sampled ASMs as CSV")
    st.add_argument("--input", "-i", required=True)
    st.add_argument("--rows", "-k", type=int, default=1)
    st.add_argument("--scale", action="store_true")
    st.add_argument("--out")
    st.add_argument("--histogram", metavar="PREFIX", help="write PREFIX.txt and PREFIX.svg")
    st.add_argument("--histogram-column", default="psi_1")
    st.set_defaults(func=cmd_stats)

    g = sub.add_parser("gue", help="GUE samplers")
    gsub = g.add_subparsers(dest="gue_command", required=True)
    gc = gsub.add_parser("corners", help="eigenvalues of all corners as CSV")
    gc.add_argument("--rank", "-k", type=int, required=True)
    gc.add_argument("--count", "-m", type=int, default=1)
    gc.add_argument("--out")
    seeded(gc)
    gc.set_defaults(func=cmd_gue_corners)

    v = sub.add_parser("verify", help="exact and statistical checks")
    vsub = v.add_subparsers(dest="verify_command", required=True)

    vg = vsub.add_parser("gibbs", help="conditional sampler against brute force")
    vg.add_argument("--lambda", dest="lam", type=_ints, help="top row (default: all strict rows in 1..6 of length <= 4)")
    vg.add_argument("--draws", type=int, help="draws per row (default 10 per pattern)")
    vg.add_argument("--alpha", type=float, default=0.001)
    seeded(vg)
    asserting(vg)
    vg.set_defaults(func=cmd_verify_gibbs)

    vt = vsub.add_parser("tightness", help="bottom-entry concentration bound")
    vt.add_argument("--lambda", dest="lam", type=_ints, required=True)
    vt.add_argument("--c", type=float, help="center (default: worst case)")
    vt.add_argument("--samples", type=int, help="Monte Carlo draws instead of exact counting")
    vt.add_argument("--min-spread", type=int, help="spread below which the case is flagged (default 4 N N!)")
    seeded(vt)
    asserting(vt)
    vt.set_defaults(func=cmd_verify_tightness)

    vm = vsub.add_parser("monotonicity", help="S(A; B) <= S(A'; B')")
    vm.add_argument("--A", type=_ints, required=True)
    vm.add_argument("--A-prime", type=_ints, required=True)
    vm.add_argument("--B", type=int, required=True)
    vm.add_argument("--B-prime", type=int, required=True)
    asserting(vm)
    vm.set_defaults(func=cmd_verify_monotonicity)

    vc = vsub.add_parser("characterization", help="test a CSV of patterns against GUE corners")
    vc.add_argument("--input", "-i", required=True)
    vc.add_argument("--rank", type=int, help="use only the first RANK rows")
    vc.add_argument("--alpha", type=float, default=0.05)
    vc.add_argument("--no-gibbs", action="store_true", help="skip the orbital-measure comparison")
    seeded(vc)
    asserting(vc)
    vc.set_defaults(func=cmd_verify_characterization)

    vs = vsub.add_parser("sampler", help="exact chi-square for n <= 5 and a doubling test")
    vs.add_argument("--size", "-n", type=int, required=True)
    vs.add_argument("--count", "-m", type=int, default=10_000)
    vs.add_argument("--method", choices=("cftp", "glauber"), default="cftp")
    vs.add_argument("--sweeps", type=int)
    vs.add_argument("--alpha", type=float, default=0.001)
    vs.add_argument("--jobs", type=int, default=1)
    seeded(vs)
    asserting(vs)
    vs.set_defaults(func=cmd_verify_sampler)

    x = sub.add_parser("experiment", help="ASM boundary versus GUE corners across sizes")
    x.add_argument("--config", help="key = value file (keys as the long options, underscores for dashes)")
    x.add_argument("--sizes", type=_ints)
    x.add_argument("--samples", type=int)
    x.add_argument("--method", choices=METHODS)
    x.add_argument("--depth", type=int)
    x.add_argument("--sweeps", type=int)
    x.add_argument("--reference-samples", type=int)
    x.add_argument("--alpha", type=float)
    x.add_argument("--ks-max", type=float)
    x.add_argument("--out-dir")
    x.add_argument("--jobs", type=int)
    x.add_argument("--assert", dest="assert_", action="store_true")
    seeded(x)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AsmGueError as exc:
        print(f"{exc.category} error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _CATEGORY_EXIT.get(exc.category, 1)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
