"""Command-line driver: gen / run / bench.

Exit codes: 0 valid, 1 internal algorithm error, 2 validator failure,
3 strict-mode memory violation, 4 usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time

from . import parallel
from .coloring import arb_color, layered_list_color, verify_coloring
from .degred import DegredConfig, check_partial, degree_reduce
from .graph import (GraphFormatError, estimate_arboricity, gen_bounded_arboricity,
                    load_graph)
from .mismm import SolveConfig, solve, verify_mis, verify_mm
from .mpc import MemoryViolation, cluster_new

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_MEMORY, EXIT_USAGE = 0, 1, 2, 3, 4
ALGOS = ("degred", "mis", "mm", "color", "color-layered")
CSV_HEADER = ["n", "m", "arb", "seed", "algo", "rounds", "peak_local", "peak_global",
              "iters", "size", "valid"]
SUPERLINEAR_EPS = 0.25


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _err({"error": "usage", "message": message})
        sys.exit(EXIT_USAGE)


def _err(obj):
    print(json.dumps(obj, sort_keys=True), file=sys.stderr)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, default=str)


# ---------------------------------------------------------------- config

def _alpha(x):
    v = float(x)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {x}")
    return v


def _positive_int(x):
    v = int(x)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {x}")
    return v


def _int_list(x):
    try:
        out = [int(t) for t in x.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {x!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _add_config(p):
    p.add_argument("--alpha", type=_alpha, default=0.5)
    p.add_argument("--mode", choices=("strict", "report"), default="strict")
    p.add_argument("--budget", choices=("linear", "superlinear"), default="linear")
    p.add_argument("--global-factor", type=float, default=8.0)
    p.add_argument("--round-cost", type=int, default=1)
    p.add_argument("--delta", type=float, default=SolveConfig.delta)
    p.add_argument("--eps", type=float, default=SolveConfig.eps)
    p.add_argument("--low-arb-threshold", type=int, default=SolveConfig.low_arb_threshold)
    d = DegredConfig()
    for f in dataclasses.fields(DegredConfig):
        p.add_argument("--" + f.name.replace("_", "-"), type=int, default=getattr(d, f.name))
    p.add_argument("--kind", choices=("is", "mm"), default="is",
                   help="solution kind for degred")
    p.add_argument("--threads", type=_positive_int, default=1)


def _config(a):
    deg = DegredConfig(**{f.name: getattr(a, f.name) for f in dataclasses.fields(DegredConfig)})
    scfg = SolveConfig(delta=a.delta, eps=a.eps, low_arb_threshold=a.low_arb_threshold,
                       degred=deg)
    echo = {"alpha": a.alpha, "mode": a.mode, "budget": a.budget,
            "global_factor": a.global_factor, "round_cost": a.round_cost,
            "delta": a.delta, "eps": a.eps, "low_arb_threshold": a.low_arb_threshold,
            "degred": dataclasses.asdict(deg)}
    return scfg, echo


def _cluster(g, a):
    eps = SUPERLINEAR_EPS if a.budget == "superlinear" else None
    return cluster_new(max(g.n, 2), a.alpha, a.mode, a.global_factor, m=g.m, eps=eps,
                       round_cost=a.round_cost)


# ---------------------------------------------------------------- execution

def execute(algo, g, a, scfg, lam=None):
    """Run one algorithm; returns a metrics dict with 'valid', 'size', 'iterations'."""
    lam = lam or estimate_arboricity(g)
    c = _cluster(g, a)
    out = {"kind": algo}
    if algo == "degred":
        sol, res, info = degree_reduce(c, g, lam, a.kind.upper(), scfg.degred)
        try:
            check_partial(g, sol)
            ok = res.max_degree() <= info["cap"]
        except ValueError:
            ok = False
        out.update(valid=ok, size=len(sol.members), iterations=info["iterations"],
                   residual_max_degree=res.max_degree(), cap=info["cap"],
                   fallbacks=info["fallbacks"])
    elif algo in ("mis", "mm"):
        sol, info = solve(c, g, "IS" if algo == "mis" else "MM", a.budget, scfg)
        ok = verify_mis(g, sol.members) if algo == "mis" else verify_mm(g, sol.members)
        out.update(valid=ok, size=len(sol.members),
                   iterations=info.get("luby_iterations", 0) + info.get("degred_iterations", 0),
                   path=info["path"], finisher=info.get("finisher"))
    elif algo == "color":
        pc, info = arb_color(g, lam, cluster=c)
        ok = verify_coloring(g, pc) and pc.used <= info["bound"]
        out.update(valid=ok, size=pc.used, palette=pc.total, bound=info["bound"],
                   iterations=info["L"], L=info["L"])
    else:
        d = max(3, 2 * lam + 1)
        pc = layered_list_color(g, lam, d, c)
        ok = verify_coloring(g, pc) and pc.used <= 3 * d + 2
        out.update(valid=ok, size=pc.used, palette=pc.total, bound=3 * d + 2, d=d,
                   iterations=0)
    m = c.metrics()
    out.update(rounds=m["rounds"], peak_local=m["peak_local"], peak_global=m["peak_global"],
               S=m["S"], global_budget=m["global_budget"], violations=m["violations"])
    out["lambda"] = lam
    return out


def cmd_gen(a):
    g = gen_bounded_arboricity(a.n, a.arb, a.seed)
    text = g.to_text()
    summary = {"n": g.n, "m": g.m, "arb": a.arb, "seed": a.seed}
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
        print(_dump(summary))
    else:
        sys.stdout.write(text)
        _err(summary)
    return EXIT_OK


def cmd_run(a):
    scfg, echo = _config(a)
    g = load_graph(a.graph)
    t0 = time.perf_counter()
    try:
        res = execute(a.algo, g, a, scfg, a.arb)
    except MemoryViolation as e:
        _err({"error": "memory_violation", **e.info})
        return EXIT_MEMORY
    rec = {"command": "run", "kind": a.algo, "valid": res.pop("valid"),
           "graph": {"path": a.graph, "n": g.n, "m": g.m, "arb": res.pop("lambda")},
           "config": echo, "metrics": res}
    rec["metrics"].pop("kind")
    if a.timing:
        rec["wall_time"] = round(time.perf_counter() - t0, 6)
    print(_dump(rec))
    return EXIT_OK if rec["valid"] else EXIT_INVALID


def bench_rows(a):
    scfg, _ = _config(a)
    rows = []
    worst = EXIT_OK
    for n in a.n_list:
        for lam in a.arb_list:
            for seed in range(a.seeds):
                g = gen_bounded_arboricity(n, lam, seed)
                try:
                    r = execute(a.algo, g, a, scfg, lam)
                    valid = int(r["valid"])
                    if not valid:
                        worst = max(worst, EXIT_INVALID)
                    vals = [r["rounds"], r["peak_local"], r["peak_global"], r["iterations"],
                            r["size"], valid]
                except MemoryViolation:
                    worst = EXIT_MEMORY
                    vals = ["", "", "", "", "", 0]
                rows.append([n, g.m, lam, seed, a.algo] + vals)
    return rows, worst


def cmd_bench(a):
    rows, code = bench_rows(a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    if a.out:
        with open(a.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


def build_parser():
    p = _Parser(prog="arbmpc", description="Low-space MPC simulator and arboricity algorithms")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="generate a bounded-arboricity graph")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--arb", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gen)

    r = sub.add_parser("run", help="run one algorithm on a graph file")
    r.add_argument("--algo", choices=ALGOS, required=True)
    r.add_argument("--graph", required=True)
    r.add_argument("--arb", type=_positive_int, default=None,
                   help="arboricity bound (default: peeling estimate)")
    r.add_argument("--timing", action="store_true", help="include wall_time (not reproducible)")
    _add_config(r)
    r.set_defaults(fn=cmd_run)

    b = sub.add_parser("bench", help="sweep generated graphs, write CSV")
    b.add_argument("--algo", choices=ALGOS, required=True)
    b.add_argument("--n-list", type=_int_list, required=True)
    b.add_argument("--arb-list", type=_int_list, required=True)
    b.add_argument("--seeds", type=_positive_int, default=1)
    b.add_argument("--out")
    _add_config(b)
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None):
    p = build_parser()
    a = p.parse_args(argv)
    if hasattr(a, "threads"):
        parallel.set_threads(a.threads)
    try:
        code = a.fn(a)
    except (GraphFormatError, FileNotFoundError) as e:
        _err({"error": "input", "message": str(e)})
        code = EXIT_USAGE
    except MemoryViolation as e:
        _err({"error": "memory_violation", **e.info})
        code = EXIT_MEMORY
    except Exception as e:  # algorithmic failure: report structurally
        _err({"error": type(e).__name__, "message": str(e),
              "info": getattr(e, "info", None)})
        code = EXIT_ERROR
    finally:
        parallel.set_threads(1)
    if argv is None:
        sys.exit(code)
    return code
