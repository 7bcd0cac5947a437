"""Arboricity-based degree reduction: beta-high graphs, pairwise-independent
partial MIS/MM stages, multi-class preparation and the MPC pipeline."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse

from .derand import (Coloring, DerandError, Estimator, brute_force_search,
                     condexp_search, linial_coloring, reduce_colors,
                     table_from_batches)
from .graph import Delta, Graph, NonProgressError, bfs_dist, i_max_for, i_min_for
from .hashing import eval_vec, family_new
from .mpc import collect_balls, double_balls, remove_and_notify

log = logging.getLogger(__name__)

# Conservative dependency radius of one multi-class stage: a vertex's fate after
# one stage is a function of its radius-STAGE_RADIUS ball.
STAGE_RADIUS = 20
SLACKS = (Fraction(0), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2))


@dataclass(frozen=True)
class DegredConfig:
    c1: int = 1
    c2: int = 5
    c3: int = 1
    c4: int = 1
    c5: int = 16
    stage_threshold: int = 1
    c_prime: int = STAGE_RADIUS
    reps: int = 2
    beta_exp: int = 16


DEFAULT = DegredConfig()


class ConditionError(ValueError):
    """The ball-radius precondition of a multi-stage run does not hold."""


def norm_kind(kind):
    k = str(kind).lower()
    if k in ("is", "mis"):
        return "IS"
    if k in ("mm", "matching"):
        return "MM"
    raise ValueError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------- solutions

@dataclass(frozen=True)
class PartialSolution:
    kind: str
    members: frozenset  # vertices (IS) or edges (u, v), u < v (MM)
    removed: frozenset

    @staticmethod
    def empty(kind):
        return PartialSolution(norm_kind(kind), frozenset(), frozenset())

    def union(self, other):
        if other.kind != self.kind:
            raise ValueError("kind mismatch")
        return PartialSolution(self.kind, self.members | other.members,
                               self.removed | other.removed)


def make_solution(g, kind, members):
    kind = norm_kind(kind)
    members = frozenset(members)
    if kind == "IS":
        rem = set(members)
        for v in members:
            rem.update(g.adj[v])
    else:
        rem = {x for e in members for x in e}
    return PartialSolution(kind, members, frozenset(rem))


def check_partial(g, sol):
    """Raise ValueError unless sol is a valid partial solution of g."""
    if sol.kind == "IS":
        for v in sol.members:
            for w in g.adj[v]:
                if w in sol.members:
                    raise ValueError(f"IS members {v} and {w} adjacent")
        need = set(sol.members)
        for v in sol.members:
            need.update(g.adj[v])
        if set(sol.removed) != need:
            raise ValueError("removed set differs from members plus neighbors")
    else:
        seen = set()
        for u, v in sol.members:
            if v not in g.adj[u]:
                raise ValueError(f"matching edge {u}-{v} not in graph")
            if u in seen or v in seen:
                raise ValueError(f"matching edges share vertex at {u}-{v}")
            seen.update((u, v))
        if set(sol.removed) != seen:
            raise ValueError("removed set differs from matched endpoints")
    return True


def remove_vertices(g, removed):
    removed = set(removed)
    if not removed:
        return g
    return Graph.from_edges(g.n, [e for e in g.edges
                                  if e[0] not in removed and e[1] not in removed],
                            check=False)


# ---------------------------------------------------------------- classes

def deg_class(d):
    """Smallest i with d <= 2^(2^i); degree <= 1 maps to -1."""
    if d <= 1:
        return -1
    i = 0
    while d > Delta(i):
        i += 1
    return i


def class_counts(g, i_lo, i_hi, ge=True):
    """|V_{>=i}| (ge) or |V_i| for i in [i_lo, i_hi]."""
    cls = [deg_class(d) for d in g.degrees()]
    out = {}
    for i in range(i_lo, i_hi + 1):
        out[i] = sum(1 for c in cls if (c >= i if ge else c == i))
    return out


def iroot(x, e):
    b = int(round(x ** (1.0 / e)))
    while b > 0 and b ** e > x:
        b -= 1
    while (b + 1) ** e <= x:
        b += 1
    return b


def ceil_log2(x):
    return max(0, (int(x) - 1).bit_length())


def ell_for(kind, beta):
    # IS samples with probability 2^-ell; classes with beta < 4 use beta = 4's width
    if norm_kind(kind) == "IS":
        return 3 * max(ceil_log2(beta), 2)
    return max(1, ceil_log2(beta))


# ---------------------------------------------------------------- beta-high graphs

@dataclass(frozen=True)
class BetaHighGraph:
    beta: int
    high: tuple
    low: tuple
    T: dict = field(hash=False)
    E1: tuple = ()  # (high, low)
    E2: tuple = ()  # (low, low) with a < b
    g: Graph = field(default=None, compare=False, repr=False, hash=False)

    def high_nbrs(self):
        out = {u: [] for u in self.low}
        for v, u in self.E1:
            out[u].append(v)
        return {u: sorted(vs) for u, vs in out.items()}

    def low_adj(self):
        out = {u: [] for u in self.low}
        for a, b in self.E2:
            out[a].append(b)
            out[b].append(a)
        return out


def empty_beta_high(beta, g=None):
    return BetaHighGraph(beta, (), (), {}, (), (), g)


def check_beta_high(h):
    b = h.beta
    for v in h.high:
        if len(h.T[v]) < b ** 4:
            raise ValueError(f"high vertex {v} has {len(h.T[v])} < beta^4 low neighbors")
    hn = h.high_nbrs()
    la = h.low_adj()
    for u in h.low:
        if len(hn[u]) > b:
            raise ValueError(f"low vertex {u} has {len(hn[u])} > beta high neighbors")
        if len(la[u]) > b * b:
            raise ValueError(f"low vertex {u} has {len(la[u])} > beta^2 low neighbors")
    return True


def high_set(g, Delta_i):
    return {v for v in range(g.n) if g.deg(v) ** 2 > Delta_i}


def prepare_single(g, Delta_i, lam, cfg=DEFAULT):
    """Extract a beta-high subgraph with beta = floor(Delta_i^(1/16))."""
    if Delta_i < max(lam, 2) ** cfg.beta_exp:
        raise ValueError(f"Delta_i={Delta_i} below max(lam,2)^{cfg.beta_exp}")
    beta = iroot(Delta_i, cfg.beta_exp)
    VG = high_set(g, Delta_i)
    if not VG:
        return empty_beta_high(beta, g)
    b4, b8 = beta ** 4, beta ** 8
    J = {v for v in VG if 2 * sum(1 for w in g.adj[v] if w in VG) >= g.deg(v)}
    Vp = sorted(VG - J)
    kept = {}
    tdeg = {}
    for v in Vp:
        lows = [w for w in g.adj[v] if w not in VG]
        kept[v] = lows[:min(2 * b8, len(lows))]
        for u in kept[v]:
            tdeg[u] = tdeg.get(u, 0) + 1
    shell = set(tdeg)
    good_low = {u for u in shell if tdeg[u] < beta
                and sum(1 for w in g.adj[u] if w in shell) < beta * beta}
    T = {}
    for v in Vp:
        cand = [u for u in kept[v] if u in good_low]
        if len(cand) >= b8:
            T[v] = tuple(cand[:b4])
    high = tuple(sorted(T))
    low = set()
    for v in high:
        low.update(T[v])
    low = tuple(sorted(low))
    E1 = tuple((v, u) for v in high for u in T[v])
    ls = set(low)
    E2 = tuple((a, b) for a in low for b in g.adj[a] if b > a and b in ls)
    return BetaHighGraph(beta, high, low, T, E1, E2, g)


def check_prepare_single(g, Delta_i, lam, h):
    """Measured Properties 1-3; returns dict of flags and the bad count."""
    VG = high_set(g, Delta_i)
    p1 = set(h.high) <= VG
    dist = bfs_dist(g, sorted(VG), 3)
    p2 = all(x in dist for x in list(h.high) + list(h.low))
    bad = len(VG - set(h.high))
    if h.beta > lam:
        bound = Fraction(5 * lam * len(VG), h.beta - lam)
        p3 = bad <= bound
    else:
        bound, p3 = None, True  # vacuous when beta <= lam
    return {"p1": p1, "p2": p2, "p3": p3, "bad": bad, "bound": bound}


def _relabel(h, ids, g):
    T = {ids[v]: tuple(ids[u] for u in us) for v, us in h.T.items()}
    E1 = tuple((ids[v], ids[u]) for v, u in h.E1)
    E2 = tuple(tuple(sorted((ids[a], ids[b]))) for a, b in h.E2)
    return BetaHighGraph(h.beta, tuple(ids[v] for v in h.high),
                         tuple(ids[u] for u in h.low), T, E1, E2, g)


def max_within(g, vals, r):
    cur = list(vals)
    for _ in range(r):
        cur = [max([cur[v]] + [cur[w] for w in g.adj[v]]) for v in range(g.n)]
    return cur


def class_range(g, lam, cfg=DEFAULT):
    return i_min_for(lam, cfg.beta_exp), i_max_for(g.max_degree())


def prepare_multi(g, lam, cfg=DEFAULT, i_range=None):
    """Per-class beta-high subgraphs keyed by class index (original vertex ids)."""
    lo, hi = i_range or class_range(g, lam, cfg)
    degs = g.degrees()
    D = max_within(g, degs, 4)
    dcls = [deg_class(d) for d in D]
    vcls = [deg_class(d) for d in degs]
    out = {}
    for i in range(lo, hi + 1):
        Vi = [v for v in range(g.n) if vcls[v] == i]
        if not Vi:
            out[i] = empty_beta_high(iroot(Delta(i), cfg.beta_exp), g)
            continue
        near = bfs_dist(g, Vi, 3)
        members = [u for u in near if dcls[u] == i]
        sub, ids = g.induced(members)
        h = prepare_single(sub, Delta(i), lam, cfg)
        out[i] = _relabel(h, ids, g)
    return out


def check_multi_separation(g, hs):
    sets = {i: set(h.high) | set(h.low) for i, h in hs.items()}
    for i, si in sets.items():
        if not si:
            continue
        near = bfs_dist(g, sorted(si), 1)
        for j, sj in sets.items():
            if j != i and any(x in near for x in sj):
                return False
    return True


# ---------------------------------------------------------------- conflict coloring

def conflict_edges(h, kind):
    kind = norm_kind(kind)
    la = h.low_adj()
    es = set()
    for v in h.high:
        grp = set(h.T[v])
        if kind == "IS":
            for u in h.T[v]:
                grp.update(la[u])
        grp = sorted(grp)
        for a in range(len(grp)):
            for b in range(a + 1, len(grp)):
                es.add((grp[a], grp[b]))
    if kind == "IS":
        es.update(h.E2)
    return es


def conflict_coloring(h, kind, cluster=None):
    """Coloring of the conflict graph on V_low (Linial, then class-by-class reduction)."""
    if not h.low:
        return {}, 1
    pos = {u: i for i, u in enumerate(h.low)}
    es = conflict_edges(h, kind)
    cg = Graph.from_edges(len(h.low), [(pos[a], pos[b]) for a, b in es], check=False)
    if cluster is not None:
        cluster.charge_sharded(len(h.low) + 2 * cg.m, "conflict graph")
        cluster.tick("local")
    col = linial_coloring(cg, cluster=cluster)
    col = reduce_colors([list(a) for a in cg.adj], col, cluster=cluster)
    return {u: col.color[pos[u]] for u in h.low}, col.C


def distance_coloring(g, vertices, radius=4):
    """Colors for `vertices` such that any two within G-distance `radius` differ."""
    vs = sorted(set(vertices))
    if not vs:
        return {}, 1
    pos = {u: i for i, u in enumerate(vs)}
    es = []
    for u in vs:
        for w in bfs_dist(g, [u], radius):
            if w in pos and w > u:
                es.append((pos[u], pos[w]))
    cg = Graph.from_edges(len(vs), es, check=False)
    col = linial_coloring(cg)
    col = reduce_colors([list(a) for a in cg.adj], col)
    return {u: col.color[pos[u]] for u in vs}, col.C


def low_candidates(g, lam, cfg=DEFAULT):
    """Vertices that may ever serve as V_low: neighbors of degree > sqrt(Delta_{i_min})."""
    thr = Delta(i_min_for(lam, cfg.beta_exp))
    big = [v for v in range(g.n) if g.deg(v) ** 2 > thr]
    out = set()
    for v in big:
        out.update(g.adj[v])
    return out


# ---------------------------------------------------------------- stage evaluation

class StageModel:
    """Vectorised evaluation of one pairwise stage over many seeds."""

    def __init__(self, h, kind, colors, mask_bits):
        self.h = h
        self.kind = norm_kind(kind)
        self.mask = np.uint64((1 << mask_bits) - 1)
        self.lows = list(h.low)
        L, H = len(h.low), len(h.high)
        lpos = {u: i for i, u in enumerate(h.low)}
        hpos = {v: i for i, v in enumerate(h.high)}
        self.col = np.array([colors[u] for u in h.low], dtype=np.int64)
        if self.kind == "IS":
            r = [lpos[a] for a, b in h.E2] + [lpos[b] for a, b in h.E2]
            c = [lpos[b] for a, b in h.E2] + [lpos[a] for a, b in h.E2]
            self.A = sparse.csr_matrix((np.ones(len(r), dtype=np.int32), (r, c)), shape=(L, L))
            r = [lpos[u] for v, u in h.E1]
            c = [hpos[v] for v, u in h.E1]
            self.M = sparse.csr_matrix((np.ones(len(r), dtype=np.int32), (r, c)), shape=(L, H))
        else:
            hn = h.high_nbrs()
            su, sj, sv = [], [], []
            for u in h.low:
                for j, v in enumerate(hn[u]):
                    su.append(lpos[u])
                    sj.append(j)
                    sv.append(hpos[v])
            self.slot_u = np.array(su, dtype=np.int64)
            self.slot_j = np.array(sj, dtype=np.uint64)
            self.slot_v = sv
            self.hn = hn
            self.SM = sparse.csr_matrix(
                (np.ones(len(su), dtype=np.int32), (np.arange(len(su)), sv)),
                shape=(len(su), H))

    def low_values(self, fam, seeds, table=None):
        if table is None:
            uc, inv = np.unique(self.col, return_inverse=True)
            vals = eval_vec(fam, seeds, uc)[:, inv]
        else:
            vals = table[:, self.col_local]
        return vals & self.mask

    def covered(self, vals):
        """Per seed: number of high vertices hit (IS member / MM proposal neighbor)."""
        if not self.lows or not self.h.high:
            return np.zeros(vals.shape[0], dtype=np.int64)
        if self.kind == "IS":
            z = (vals == 0).astype(np.int32)
            nb = np.asarray(z @ self.A)
            member = ((z > 0) & (nb == 0)).astype(np.int32)
            cov = np.asarray(member @ self.M) > 0
        else:
            if len(self.slot_u) == 0:
                return np.zeros(vals.shape[0], dtype=np.int64)
            hit = (vals[:, self.slot_u] == self.slot_j).astype(np.int32)
            cov = np.asarray(hit @ self.SM) > 0
        return cov.sum(axis=1).astype(np.int64)

    def solution(self, vals_row):
        """Partial solution in the source graph for one seed's low values."""
        g = self.h.g
        vals = np.asarray(vals_row).ravel()
        if self.kind == "IS":
            z = {u for u, x in zip(self.lows, vals) if x == 0}
            la = self.h.low_adj()
            members = {u for u in z if not any(w in z for w in la[u])}
            return make_solution(g, "IS", members)
        accepted = {}
        for u, x in zip(self.lows, vals):
            x = int(x)
            if x < len(self.hn[u]):
                v = self.hn[u][x]
                if v not in accepted or u < accepted[v]:
                    accepted[v] = u
        return make_solution(g, "MM", {(min(u, v), max(u, v)) for v, u in accepted.items()})


def _check_colors(h, kind, colors):
    for a, b in conflict_edges(h, kind):
        if colors[a] == colors[b]:
            raise ValueError(f"improper conflict coloring: {a} and {b} share {colors[a]}")


def pairwise_stage(h, kind, colors, fam, seed):
    kind = norm_kind(kind)
    if not h.high:
        return PartialSolution.empty(kind)
    _check_colors(h, kind, colors)
    need = ell_for(kind, h.beta)
    if fam.k != 2 or fam.ell != need:
        raise ValueError(f"family mismatch: need k=2, ell={need}; got k={fam.k}, ell={fam.ell}")
    if max(colors[u] for u in h.low) >= fam.N:
        raise ValueError("colors exceed family domain")
    model = StageModel(h, kind, colors, fam.ell)
    return model.solution(model.low_values(fam, [seed])[0])


def stage_table(model, fam):
    return table_from_batches(fam.seed_bits,
                              lambda seeds: model.covered(model.low_values(fam, seeds)))


def stage_expectation(h, kind, colors, fam):
    """Exact mean of surviving |V_high| over the whole seed space."""
    model = StageModel(h, kind, colors, fam.ell)
    tab = stage_table(model, fam)
    return len(h.high) - Fraction(int(tab.sum()), len(tab))


def derand_pairwise_stage(h, kind, colors=None, fam=None, search="brute", S=None,
                          cluster=None):
    kind = norm_kind(kind)
    if not h.high:
        return PartialSolution.empty(kind), {"seed": None, "high": 0}
    if colors is None:
        colors, C = conflict_coloring(h, kind, cluster)
    else:
        C = max(colors[u] for u in h.low) + 1
    _check_colors(h, kind, colors)
    if fam is None:
        fam = family_new(max(C, 2), ell_for(kind, h.beta), 2)
    model = StageModel(h, kind, colors, fam.ell)
    tab = stage_table(model, fam)
    nh = len(h.high)
    base = (1 - Fraction(5, h.beta)) * nh
    best = int(tab.max())
    widen = []
    for slack in SLACKS:
        target = base * (1 - slack)
        if best >= target:
            break
        widen.append(str(slack))
        log.info("derand_pairwise_stage: widening slack past %s", slack)
    else:
        raise DerandError("no seed meets the pairwise-stage target", high=nh,
                          best=best, base=str(base))
    est = Estimator(fam.seed_bits, table=tab, target=target)
    if search == "brute":
        seed = brute_force_search(est)
    else:
        if cluster is not None:
            chi = min(fam.seed_bits, max(1, int(math.log2(cluster.S))))
            rounds = -(-fam.seed_bits // chi)
            for _ in range(rounds):
                cluster.charge(1 << chi, (1 << chi) * max(1, len(h.high)), "seed chunk")
            cluster.tick("colored_sum", rounds)
        seed = condexp_search(est, S=S or (cluster.S if cluster else None))
    sol = model.solution(model.low_values(fam, [seed])[0])
    info = {"seed": seed, "high": nh, "covered": int(tab[seed]),
            "expectation": Fraction(int(tab.sum()), len(tab)), "target": target,
            "widened": widen, "palette": C, "seed_bits": fam.seed_bits}
    return sol, info


# ---------------------------------------------------------------- multi-class stages

def multi_family(kind, i_range, palette, cfg=DEFAULT):
    lo, hi = i_range
    ell = max(ell_for(kind, iroot(Delta(i), cfg.beta_exp)) for i in range(lo, max(lo, hi) + 1))
    return family_new(max(palette, 2), ell, 2)


def multi_single_stage(g, lam, kind, colors=None, palette=None, seed=None, cfg=DEFAULT,
                       i_range=None, search="brute", S=None):
    """One stage on all classes with a single shared seed.

    Returns (solution, info). info["estimator"] holds sum_i covered_i/|V_high(H_i)|.
    """
    kind = norm_kind(kind)
    i_range = i_range or class_range(g, lam, cfg)
    hs = prepare_multi(g, lam, cfg, i_range)
    live = [(i, h) for i, h in sorted(hs.items()) if h.high]
    info = {"seed": None, "classes": {i: len(h.high) for i, h in live}}
    if not live:
        return PartialSolution.empty(kind), info
    if colors is None:
        lows = set()
        for _, h in live:
            lows.update(h.low)
        colors, palette = distance_coloring(g, lows)
    fam = multi_family(kind, i_range, palette, cfg)
    models = [(i, h, StageModel(h, kind, colors, ell_for(kind, h.beta))) for i, h in live]
    if seed is None:
        L = 1
        for _, h, _ in models:
            L = L * len(h.high) // math.gcd(L, len(h.high))

        used = np.zeros(max(palette, 1), dtype=np.int64)
        uc = np.unique(np.concatenate([m.col for _, _, m in models]))
        used[uc] = np.arange(len(uc))
        for _, _, m in models:
            m.col_local = used[m.col]

        def batch(seeds):
            vals = eval_vec(fam, seeds, uc)
            tot = np.zeros(len(seeds), dtype=np.int64)
            for _, h, m in models:
                tot += m.covered(m.low_values(fam, seeds, table=vals)) * (L // len(h.high))
            return tot

        tab = table_from_batches(fam.seed_bits, batch)
        target = sum((1 - Fraction(5, h.beta)) for _, h, _ in models)
        est = Estimator(fam.seed_bits, table=tab, denom=L, target=None)
        seed = brute_force_search(est) if search == "brute" else condexp_search(est, S=S)
        info.update(expectation=est.expectation(), estimator=est.score(seed),
                    target=target, seed_bits=fam.seed_bits)
    sol = PartialSolution.empty(kind)
    per = {}
    for i, h, m in models:
        s = m.solution(m.low_values(fam, [seed])[0])
        per[i] = len(set(h.high) - s.removed)
        sol = sol.union(s)
    info["seed"] = seed
    info["survivors"] = per
    info["certified"] = _certify(g, remove_vertices(g, sol.removed), sol, i_range, cfg)
    return sol, info


def _certify(g, g2, sol, i_range, cfg):
    """Check |V_{>=i}(G')| <= |V_i(G)|/Delta_i^c1 + sum_{j>i} Delta_j^c2 |V_j(G)|."""
    lo, hi = i_range
    before = class_counts(g, lo, hi, ge=False)
    alive = [v for v in range(g.n) if v not in sol.removed]
    after = {}
    for i in range(lo, hi + 1):
        after[i] = sum(1 for v in alive if deg_class(g2.deg(v)) >= i)
    ok = {}
    for i in range(lo, hi + 1):
        rhs = Fraction(before[i], Delta(i) ** cfg.c1) + sum(
            Delta(j) ** cfg.c2 * before[j] for j in range(i + 1, hi + 1))
        ok[i] = after[i] <= rhs
    return ok


def multi_multi_stage(g, lam, kind, k, cfg=DEFAULT, seeds=None, colors=None, palette=None,
                      i_range=None, search="brute", S=None):
    """k sequential multi-class stages on a shrinking graph.

    One distance-4 coloring of the input graph serves every stage (distances only
    grow as vertices leave). Returns (solution, info) with the seeds used.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    kind = norm_kind(kind)
    i_range = i_range or class_range(g, lam, cfg)
    if colors is None:
        colors, palette = distance_coloring(g, low_candidates(g, lam, cfg))
    lo, hi = i_range
    counts = [class_counts(g, lo, hi)]
    cur = g
    sol = PartialSolution.empty(kind)
    used = []
    stages = []
    for j in range(k):
        given = None if seeds is None else (seeds[j] if seeds[j] is not None else 0)
        s, inf = multi_single_stage(cur, lam, kind, colors, palette, given, cfg, i_range,
                                    search, S)
        used.append(inf["seed"])
        stages.append(inf)
        # vertices already removed are isolated in cur; keep the union disjoint
        sol = sol.union(s)
        cur = remove_vertices(cur, s.removed)
        alive_counts = {}
        for i in range(lo, hi + 1):
            alive_counts[i] = sum(1 for v in range(g.n)
                                  if v not in sol.removed and deg_class(cur.deg(v)) >= i)
        counts.append(alive_counts)
    decay = {}
    if k >= cfg.stage_threshold:
        for i in range(lo, hi + 1):
            decay[i] = counts[-1][i] * Delta(i) ** (cfg.c3 * k) <= counts[0][i] or \
                counts[-1][i] == 0
    info = {"seeds": used, "counts": counts, "decay_ok": decay, "stages": stages,
            "palette": palette, "i_range": i_range}
    return sol, info


# ---------------------------------------------------------------- MPC pipeline

def iter_log(k, n):
    x = float(n)
    for _ in range(k):
        if x <= 1:
            break
        x = math.log2(x)
    return max(1.0, x)


def condition2(n, k, delta_sup, c_prime):
    if k < c_prime:
        return False
    denom = math.log2(max(delta_sup, 1) * iter_log(k, n))
    if denom <= 0:
        return True
    return k <= math.log2(n) / denom


def mpc_single_class_reduce(c, g, i, reps, lam, kind, cfg=DEFAULT):
    """reps iterations of prepare_single + conflict coloring + derandomized stage."""
    kind = norm_kind(kind)
    sol = PartialSolution.empty(kind)
    history = []
    for _ in range(reps):
        if c is not None:
            c.charge(g.max_degree(), g.n + 2 * g.m, "one-hop neighborhoods")
            c.tick("local", 2)
        before = sum(1 for v in range(g.n) if g.deg(v) ** 2 > Delta(i))
        h = prepare_single(g, Delta(i), lam, cfg)
        if not h.high:
            history.append({"before": before, "after": before, "high": 0})
            continue
        s, inf = derand_pairwise_stage(h, kind, search="condexp",
                                       S=c.S if c is not None else None, cluster=c)
        if inf["covered"] < inf["expectation"]:
            raise DerandError("selected seed below expectation", **inf)
        sol = sol.union(s)
        g = remove_vertices(g, s.removed)
        after = sum(1 for v in range(g.n) if v not in sol.removed and g.deg(v) ** 2 > Delta(i))
        history.append({"before": before, "after": after, "high": inf["high"],
                        "covered": inf["covered"]})
    return sol, g, {"class": i, "history": history}


def mpc_preprocess(c, g, reps, lam, kind, cfg=DEFAULT):
    kind = norm_kind(kind)
    lo, hi = class_range(g, lam, cfg)
    sol = PartialSolution.empty(kind)
    sizes = {}
    for i in range(hi, lo - 1, -1):
        s, g, inf = mpc_single_class_reduce(c, g, i, reps, lam, kind, cfg)
        sol = sol.union(s)
        sizes[i] = inf["history"]
    return sol, g, {"classes": sizes, "i_range": (lo, hi)}


def mpc_multi_multi(c, store, g, kind, lam, cfg=DEFAULT, strict_condition=True,
                    active=None):
    """Multi-stage reduction simulated per vertex from its stored ball.

    Returns (solution, info); info["equivalent"] reports whether the ball-local
    replay agrees exactly with the global run under the same seed sequence.
    """
    kind = norm_kind(kind)
    k = store.radius
    if strict_condition and not condition2(g.n, k, g.max_degree(), cfg.c_prime):
        raise ConditionError(f"radius {k} fails the ball condition (c'={cfg.c_prime})")
    kappa = k // STAGE_RADIUS
    if kappa < 1:
        raise ConditionError(f"radius {k} below one stage radius {STAGE_RADIUS}")
    i_range = class_range(g, lam, cfg)
    colors, palette = distance_coloring(g, low_candidates(g, lam, cfg))
    S = c.S if c is not None else None
    gsol, ginfo = multi_multi_stage(g, lam, kind, kappa, cfg, colors=colors, palette=palette,
                                    i_range=i_range, search="condexp" if S else "brute", S=S)
    if c is not None:
        fam = multi_family(kind, i_range, palette, cfg)
        chi = min(fam.seed_bits, max(1, int(math.log2(c.S))))
        machines = -(-(g.n + 2 * g.m) // c.S)
        c.charge(1 << chi, (1 << chi) * machines, "seed chunks")
        c.tick("local", 2)
    act = sorted(store.balls) if active is None else sorted(active)
    members, removed = set(), set()
    for v in act:
        vs = store.balls[v][0]
        sub, ids = g.induced(vs)
        pos = {x: j for j, x in enumerate(ids)}
        lc = {pos[x]: col for x, col in colors.items() if x in pos}
        lsol, _ = multi_multi_stage(sub, lam, kind, kappa, cfg, seeds=ginfo["seeds"],
                                    colors=lc, palette=palette, i_range=i_range)
        pv = pos[v]
        if pv in lsol.removed:
            removed.add(v)
        if kind == "IS":
            if pv in lsol.members:
                members.add(v)
        else:
            for a, b in lsol.members:
                if pv in (a, b):
                    members.add((min(ids[a], ids[b]), max(ids[a], ids[b])))
    lsol = PartialSolution(kind, frozenset(members), frozenset(removed))
    scope = set(act)
    if kind == "IS":
        gm = {x for x in gsol.members if x in scope}
    else:
        gm = {e for e in gsol.members if e[0] in scope or e[1] in scope}
    equivalent = gm == lsol.members and {x for x in gsol.removed if x in scope} == removed
    info = dict(ginfo, kappa=kappa, equivalent=equivalent, global_solution=gsol)
    return lsol, info


def frozen_vertices(g, cap):
    """Vertices of degree <= cap whose 8-hop neighborhood has max degree <= cap."""
    D = max_within(g, g.degrees(), 8)
    return {v for v in range(g.n) if D[v] <= cap}


def degree_reduce(c, g, lam, kind, cfg=DEFAULT):
    """Full reduction until the maximum degree is at most max(lam,2)^c5.

    Returns (solution, residual graph, info). The residual keeps vertex ids;
    removed vertices are isolated and listed in solution.removed.
    """
    kind = norm_kind(kind)
    cap = max(lam, 2) ** cfg.c5
    info = {"iterations": 0, "cap": cap, "fallbacks": 0}
    if g.max_degree() <= cap:
        return PartialSolution.empty(kind), g, info
    sol, g1, pinfo = mpc_preprocess(c, g, cfg.reps, lam, kind, cfg)
    info["preprocess"] = pinfo
    radius = 1
    limit = 4 * max(1, math.ceil(math.log2(max(2.0, math.log2(g.n))))) + 8
    while g1.max_degree() > cap:
        info["iterations"] += 1
        if info["iterations"] > limit:
            raise NonProgressError("degree reduction exceeded its iteration budget",
                                   residual={"max_degree": g1.max_degree(), "cap": cap})
        progress = False
        for _ in range(cfg.reps):
            if g1.max_degree() <= cap:
                break
            try:
                if not condition2(g.n, radius, g1.max_degree(), cfg.c_prime):
                    raise ConditionError("ball condition fails")
                frozen = frozen_vertices(g1, cap)
                act = [v for v in range(g1.n) if v not in frozen and v not in sol.removed]
                store = collect_balls(c, g1, radius, act)
                s, _ = mpc_multi_multi(c, store, g1, kind, lam, cfg)
            except ConditionError:
                info["fallbacks"] += 1
                top = deg_class(g1.max_degree())
                s, _, _ = mpc_single_class_reduce(c, g1, top, 1, lam, kind, cfg)
            if s.removed - sol.removed:
                progress = True
            sol = sol.union(s)
            g1 = remove_vertices(g1, s.removed)
        if not progress:
            raise NonProgressError(
                "no vertex removed in a full iteration",
                residual={"max_degree": g1.max_degree(), "cap": cap,
                          "class": deg_class(g1.max_degree())})
        radius *= 2
        if c is not None:
            c.tick("double")
    return sol, g1, info


__all__ = [
    "BetaHighGraph", "ConditionError", "DegredConfig", "PartialSolution", "StageModel",
    "check_beta_high", "check_multi_separation", "check_partial", "check_prepare_single",
    "class_counts", "condition2", "conflict_coloring", "conflict_edges", "deg_class",
    "degree_reduce", "derand_pairwise_stage", "distance_coloring", "ell_for",
    "make_solution", "mpc_multi_multi", "mpc_preprocess", "mpc_single_class_reduce",
    "multi_multi_stage", "multi_single_stage", "pairwise_stage", "prepare_multi",
    "prepare_single", "remove_vertices", "stage_expectation",
]
