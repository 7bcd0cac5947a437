"""Acceptance criteria 1-10. Each criterion records one PASS/FAIL line that is
printed in the terminal summary."""
import math
import random
import subprocess
import sys
import time
import warnings
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from arbmpc.coloring import (arb_color, bins_for, layered_list_color, partition_estimator,
                             verify_coloring)
from arbmpc.degred import (DegredConfig, check_partial, conflict_coloring, degree_reduce,
                           derand_pairwise_stage, ell_for, mpc_multi_multi, stage_expectation)
from arbmpc.derand import brute_force_search, square_color
from arbmpc.graph import (Graph, complete_graph, cycle_graph, estimate_arboricity,
                          gen_bounded_arboricity, h_partition, path_graph, star_graph)
from arbmpc.hashing import FAMILY_LOG, family_new, verify_kwise
from arbmpc.mismm import (derand_luby, heavy_vertex_match, low_arb_solve, luby_step_mis,
                          luby_step_mm, solve, sparsify, verify_mis, verify_mm)
from arbmpc.mpc import MemoryWarning, cluster_new, collect_balls, double_balls

from conftest import record
from test_degred import beta_high_instance

SWEEP_N = [2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14]


@contextmanager
def criterion(c):
    box = {"detail": ""}
    try:
        yield box
    except BaseException as e:
        record(c, False, f"{type(e).__name__}: {e}"[:300])
        raise
    record(c, True, box["detail"])


def valid(g, kind, sol):
    return verify_mis(g, sol.members) if kind == "IS" else verify_mm(g, sol.members)


# ---------------------------------------------------------------- corpus

def _random_forest_edges(n, rng):
    perm = list(range(n))
    rng.shuffle(perm)
    return {tuple(sorted((perm[i], perm[rng.randrange(i)]))) for i in range(1, n)
            if rng.random() < 0.9}


def _grid(w, h):
    E = [(x * h + y, (x + 1) * h + y) for x in range(w - 1) for y in range(h)]
    E += [(x * h + y, x * h + y + 1) for x in range(w) for y in range(h - 1)]
    return Graph.from_edges(w * h, E)


def _disjoint(a, b):
    E = list(a.edges) + [(u + a.n, v + a.n) for u, v in b.edges]
    return Graph.from_edges(a.n + b.n, E)


def make_corpus(count=1000, seed=2024):
    """Mixed generators, n <= 64, arboricity at most 3 by construction."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        lam = 1 + i % 3
        n = rng.randint(1, 64)
        kind = i % 6
        if kind == 0:
            g = gen_bounded_arboricity(n, lam, rng.randrange(10 ** 6))
        elif kind == 1:
            E = set()
            for _ in range(lam):
                E |= _random_forest_edges(n, rng)
            g = Graph.from_edges(n, E)
        elif kind == 2:
            # hub plus a random forest: arboricity <= 2
            E = _random_forest_edges(n, rng) | {(0, v) for v in range(1, n) if rng.random() < 0.7}
            g = Graph.from_edges(n, E, check=False)
            lam = min(2, lam) if n > 2 else 1
        elif kind == 3:
            w = rng.randint(1, 8)
            g = _grid(w, max(1, n // w))
            lam = 2
        elif kind == 4:
            g = [path_graph, cycle_graph, star_graph][rng.randrange(3)](max(n, 3))
            lam = 2 if g.m == g.n else 1
        else:
            small = [complete_graph(4), complete_graph(5), cycle_graph(7), star_graph(9)]
            g = _disjoint(rng.choice(small), gen_bounded_arboricity(max(n - 10, 1), lam, i))
            lam = 3
        out.append((g, lam))
    return out


@pytest.fixture(scope="module")
def corpus():
    return make_corpus()


# ---------------------------------------------------------------- 1. correctness fuzz

def test_criterion_1_fuzz(corpus):
    with criterion(1) as box:
        t0 = time.time()
        fails = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MemoryWarning)
            for j, (g, lam) in enumerate(corpus):
                lam_hat = estimate_arboricity(g)
                for kind in ("IS", "MM"):
                    c = cluster_new(max(g.n, 2), 0.5, "report", m=g.m)
                    outs = [solve(c, g, kind)[0], derand_luby(g, kind)[0],
                            low_arb_solve(g, max(lam_hat, 1), kind)[0]]
                    fails += [(j, kind) for s in outs if not valid(g, kind, s)]
                pc, _ = arb_color(g, max(lam_hat, 1))
                d = max(3, 2 * lam_hat + 1)
                pl = layered_list_color(g, max(lam_hat, 1), d)
                if not (verify_coloring(g, pc) and verify_coloring(g, pl)):
                    fails.append((j, "color"))
        dt = time.time() - t0
        box["detail"] = f"{len(corpus)} graphs, {len(fails)} failures, {dt:.1f}s"
        assert not fails, fails[:10]
        assert dt < 300


# ---------------------------------------------------------------- 2. exact stage expectation

def test_criterion_2_stage_expectation():
    with criterion(2) as box:
        t0 = time.time()
        rng = random.Random(77)
        worst = Fraction(0)
        count = 0
        for j in range(50):
            beta = 2 if j < 30 else 4
            h = beta_high_instance(beta, rng.randint(2, 5) if beta == 2 else rng.randint(1, 2),
                                   rng)
            for kind in ("IS", "MM"):
                colors, C = conflict_coloring(h, kind)
                fam = family_new(max(C, 2), ell_for(kind, beta), 2)
                mean = stage_expectation(h, kind, colors, fam)
                bound = Fraction(5, beta) * len(h.high)
                worst = max(worst, mean / bound)
                assert mean <= bound, (j, kind, mean, bound)
                count += 1
        dt = time.time() - t0
        box["detail"] = f"{count} exact enumerations, max mean/bound = {float(worst):.4f}, {dt:.1f}s"
        assert dt < 120


# ---------------------------------------------------------------- 3. dominance

def test_criterion_3_dominance():
    with criterion(3) as box:
        checked = {}
        rng = random.Random(5)
        # pairwise stage
        for j in range(10):
            h = beta_high_instance(2, rng.randint(2, 4), rng)
            for kind in ("IS", "MM"):
                sol, info = derand_pairwise_stage(h, kind)
                assert info["seed_bits"] <= 16
                assert info["covered"] >= info["expectation"]
                checked["stage"] = checked.get("stage", 0) + 1
        # Luby steps
        for j in range(8):
            g = gen_bounded_arboricity(rng.randint(20, 120), 1 + j % 3, j)
            for kind, step in (("MM", luby_step_mm), ("IS", luby_step_mis)):
                inst = sparsify(g, kind, 1.0)
                sol, info = step(inst, g)
                assert info["seed_bits"] <= 16, info["seed_bits"]
                assert info["P"] >= info["E"]
                checked["luby"] = checked.get("luby", 0) + 1
        # heavy-vertex marking
        for edges, n in (([(0, i) for i in range(2, 40)] + [(1, i) for i in range(20, 60)], 60),
                         ([(0, i) for i in range(1, 31)], 31)):
            g = Graph.from_edges(n, edges)
            _, info = heavy_vertex_match(g, h_partition(g, 3), 3, k=2)
            for layer, est in info["estimators"].items():
                assert est.seed_bits <= 16
                assert est.score(info["seeds"][layer]) >= est.expectation()
                checked["heavy"] = checked.get("heavy", 0) + 1
        # bin partition (minimization)
        for j in range(4):
            lam = 3 + j
            g = gen_bounded_arboricity(40, lam, j)
            names = list(square_color(g, 2).color)
            fam = family_new(max(max(names) + 1, 2), 3, 2)
            assert fam.seed_bits <= 16
            est = partition_estimator(g, lam, fam, names, bins_for(lam))
            s = brute_force_search(est)
            assert est.score(s) <= est.expectation()
            checked["partition"] = checked.get("partition", 0) + 1
        box["detail"] = ", ".join(f"{k}: {v}" for k, v in checked.items())


# ---------------------------------------------------------------- 4. Luby progress

def test_criterion_4_luby_progress():
    with criterion(4) as box:
        steps = 0
        worst = {"MM": math.inf, "IS": math.inf}
        for n in (64, 256, 1024, 4096):
            for lam in (1, 2, 3, 5):
                g = gen_bounded_arboricity(n, lam, n + lam)
                for kind in ("MM", "IS"):
                    sol, info = derand_luby(g, kind)
                    assert valid(g, kind, sol)
                    assert info["iterations"] <= 2 * math.log2(g.m) + 4
                    div = 4000 if kind == "MM" else 1600
                    for m, removed, delta in info["edges"]:
                        if m >= 64:
                            steps += 1
                            assert removed >= delta * m / div, (n, lam, kind, m, removed)
                            worst[kind] = min(worst[kind], removed / (delta * m / div))
        box["detail"] = (f"{steps} steps with m >= 64; min removed/required: "
                         f"MM {worst['MM']:.1f}x, MIS {worst['IS']:.1f}x")


# ---------------------------------------------------------------- 5. degree reduction

def sweep_graphs():
    for n in SWEEP_N:
        yield "tree", 1, gen_bounded_arboricity(n, 1, n)
        yield "star", 1, star_graph(n - 1)
        for lam in (2, 4):
            yield f"lambda{lam}", lam, gen_bounded_arboricity(n, lam, n + lam)


def test_criterion_5_degree_reduction():
    with criterion(5) as box:
        t0 = time.time()
        cfg = DegredConfig()
        xs, ys = [], []
        for name, lam, g in sweep_graphs():
            for kind in ("IS", "MM"):
                c = cluster_new(g.n, 0.5, "strict", m=g.m)
                sol, res, info = degree_reduce(c, g, lam, kind, cfg)
                check_partial(g, sol)
                assert res.max_degree() <= max(lam, 2) ** cfg.c5
                if lam >= 2:
                    assert res.max_degree() <= lam ** cfg.c5 * 2
                xs.append(math.log2(math.log2(g.n)))
                ys.append(info["iterations"])
        a, b = np.polyfit(xs, ys, 1)
        a, b = float(a) + 0.0, float(b) + 0.0
        dt = time.time() - t0
        box["detail"] = (f"{len(ys)} runs, iterations {min(ys)}..{max(ys)}, fit a={a:.3f} "
                         f"b={b:.3f}, {dt:.1f}s")
        assert a <= 3
        assert dt < 900


@pytest.mark.xfail(strict=True, reason="for lambda=1 the literal bound lambda^c5*2 = 2 is "
                   "below the max(lambda,2)^c5 stopping cap; trees keep their degree")
def test_criterion_5_lambda1_literal_bound():
    worst = 0
    try:
        for name, lam, g in sweep_graphs():
            if lam != 1:
                continue
            c = cluster_new(g.n, 0.5, "strict", m=g.m)
            sol, res, info = degree_reduce(c, g, lam, "IS")
            worst = max(worst, res.max_degree())
        assert worst <= 1 ** DegredConfig().c5 * 2
    except AssertionError:
        record("5 (lambda=1 literal)", False,
               f"max residual degree {worst} > 2; expected failure, xfail(strict)")
        raise
    record("5 (lambda=1 literal)", True, "")


# ---------------------------------------------------------------- 6. memory accounting

def test_criterion_6_memory():
    with criterion(6) as box:
        runs = 0
        for name, lam, g in sweep_graphs():
            for kind in ("IS", "MM"):
                for mode, eps in (("linear", None), ("superlinear", 0.25)):
                    c = cluster_new(g.n, 0.5, "strict", m=g.m, eps=eps)
                    assert c.global_budget == pytest.approx(8 * (g.n ** (1 + (eps or 0)) + g.m))
                    sol, info = solve(c, g, kind, mode)
                    assert valid(g, kind, sol) and not c.violations
                    runs += 1
        box["detail"] = f"{runs} strict runs (alpha=0.5), no violations"


# ---------------------------------------------------------------- 7. coloring bounds

def test_criterion_7_coloring(corpus):
    with criterion(7) as box:
        graphs = [g for g, _ in corpus] + [gen_bounded_arboricity(800, lam, lam)
                                           for lam in (2, 4, 8, 16)]
        worst_layered, worst_arb = 0.0, 0.0
        for g in graphs:
            lam = max(estimate_arboricity(g), 1)
            d = max(3, 2 * lam + 1)
            pl = layered_list_color(g, lam, d)
            assert verify_coloring(g, pl) and pl.used <= pl.total <= 3 * d + 2
            pc, info = arb_color(g, lam)
            assert verify_coloring(g, pc)
            assert info["bound"] == 14 * info["L"] * lam + 4 * lam + 2 or info["route"] == "layered"
            assert pc.total <= info["bound"]
            worst_layered = max(worst_layered, pl.used / (3 * d + 2))
            worst_arb = max(worst_arb, pc.total / info["bound"])
        box["detail"] = (f"{len(graphs)} graphs; max used/(3d+2) = {worst_layered:.2f}, "
                         f"max palette/bound = {worst_arb:.2f} (c0 = 2)")


# ---------------------------------------------------------------- 8. hash families

def test_criterion_8_hash_families():
    with criterion(8) as box:
        # exercise the pipeline so every family it builds is logged
        g = gen_bounded_arboricity(300, 3, 1)
        c = cluster_new(g.n, 0.5, "report", m=g.m)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MemoryWarning)
            for kind in ("IS", "MM"):
                solve(c, g, kind)
                derand_luby(g, kind)
            arb_color(g, 3)
            rng = random.Random(1)
            for beta in (2, 4):
                h = beta_high_instance(beta, 1, rng)
                for kind in ("IS", "MM"):
                    derand_pairwise_stage(h, kind)
        rng = random.Random(8)
        fams = sorted(f for f in FAMILY_LOG if family_new(*f).seed_bits <= 20)
        for N, ell, k in fams:
            f = family_new(N, ell, k)
            size = min(k, N)
            for _ in range(50):
                pts = rng.sample(range(N), size)
                assert verify_kwise(f, pts), (N, ell, k, pts)
        skipped = len(FAMILY_LOG) - len(fams)
        box["detail"] = f"{len(fams)} families x 50 point sets ({skipped} larger families skipped)"
        assert fams


# ---------------------------------------------------------------- 9. simulation equivalence

def _hub_graph(seed, hubs):
    base = gen_bounded_arboricity(450, 1, seed)
    rng = random.Random(seed)
    E = set(base.edges)
    for j in range(hubs):
        c = base.n + j
        E |= {(u, c) for u in rng.sample(range(base.n), 300)}
    return Graph.from_edges(base.n + hubs, E, check=False)


def test_criterion_9_simulation(corpus):
    with criterion(9) as box:
        graphs = [g for g, _ in corpus if g.n >= 2]
        graphs += [gen_bounded_arboricity(n, lam, n) for n in (128, 512) for lam in (1, 3)]
        balls = 0
        for g in graphs:
            for r in (1, 2, 4):
                s = collect_balls(None, g, r)
                assert double_balls(None, s, g) == collect_balls(None, g, 2 * r)
                balls += 1
        mm = 0
        for g in [_hub_graph(1, 1), _hub_graph(2, 1)] + graphs[:40:4]:
            store = collect_balls(None, g, 20)
            for kind in ("IS", "MM"):
                sol, info = mpc_multi_multi(None, store, g, kind, 1, strict_condition=False)
                assert info["equivalent"]
                check_partial(g, sol)
                mm += 1
        box["detail"] = f"{balls} doubling checks, {mm} local-vs-global replays"


# ---------------------------------------------------------------- 10. determinism

def _cli(*args):
    p = subprocess.run([sys.executable, "-m", "arbmpc", *args], capture_output=True)
    return p.returncode, p.stdout


def test_criterion_10_determinism(tmp_path):
    with criterion(10) as box:
        gpath = tmp_path / "g.el"
        gen = [_cli("gen", "--n", "400", "--arb", "3", "--seed", "9") for _ in range(3)]
        assert len({o for _, o in gen}) == 1
        gpath.write_bytes(gen[0][1])
        k5 = tmp_path / "k5.el"
        k5.write_text(complete_graph(5).to_text())
        cmds = [(0, "run", "--algo", a, "--graph", str(gpath))
                for a in ("degred", "mis", "mm", "color", "color-layered")]
        cmds += [(0, "run", "--algo", "color", "--graph", str(k5), "--alpha", "0.9"),
                 (3, "run", "--algo", "color", "--graph", str(k5)),
                 (0, "run", "--algo", "mis", "--graph", str(gpath), "--budget", "superlinear"),
                 (0, "bench", "--algo", "mm", "--n-list", "256,1024", "--arb-list", "1,2",
                  "--seeds", "2"),
                 (0, "bench", "--algo", "color", "--n-list", "256", "--arb-list", "2,4",
                  "--alpha", "0.9"),
                 # strict alpha=0.5: violation rows are part of the deterministic output
                 (3, "bench", "--algo", "color", "--n-list", "256", "--arb-list", "2,4")]
        for code, *cmd in cmds:
            outs = {_cli(*cmd, "--threads", t) for t in ("1", "4", "1", "4", "1", "4")}
            assert len(outs) == 1, cmd
            assert next(iter(outs))[0] == code, cmd
        box["detail"] = f"{len(cmds)} commands x 3 runs x threads {{1,4}} byte-identical"
