"""MIS and maximal matching solvers: derandomized Luby steps with pessimistic
estimators, heavy-vertex matching, the low-arboricity path and dispatch."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from .degred import (DegredConfig, PartialSolution, degree_reduce, make_solution,
                     norm_kind)
from .derand import (DerandError, Estimator, brute_force_search, condexp_search,
                     linial_coloring, reduce_colors, table_from_batches)
from .graph import (Graph, estimate_arboricity, forest_decomposition, h_partition)
from .hashing import eval_vec, family_new
from .mpc import collect_balls, double_balls

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.5


class SparsifyError(RuntimeError):
    def __init__(self, msg, **info):
        self.info = info
        super().__init__(f"{msg} {info}")


# ---------------------------------------------------------------- validators

def verify_mis(g, I):
    I = set(I)
    for v in I:
        if not 0 <= v < g.n:
            return False
        if any(w in I for w in g.adj[v]):
            return False
    for v in range(g.n):
        if v not in I and not any(w in I for w in g.adj[v]):
            return False
    return True


def verify_mm(g, M):
    seen = set()
    for u, v in M:
        if u > v:
            u, v = v, u
        if not (0 <= u < g.n and v in g.adj[u]):
            return False
        if u in seen or v in seen:
            return False
        seen.update((u, v))
    return all(u in seen or v in seen for u, v in g.edges)


# ---------------------------------------------------------------- helpers

def alive_subgraph(g, alive):
    return g.induced(sorted(alive))


def _lift(sol, ids, g):
    """Map a solution on a compact subgraph back to ids of g."""
    if sol.kind == "IS":
        return make_solution(g, "IS", {ids[v] for v in sol.members})
    return make_solution(g, "MM", {(ids[a], ids[b]) for a, b in sol.members})


def greedy_solve(g, kind):
    kind = norm_kind(kind)
    if kind == "IS":
        I = set()
        for v in range(g.n):
            if not any(w in I for w in g.adj[v]):
                I.add(v)
        return make_solution(g, kind, I)
    used = set()
    M = set()
    for u, v in g.edges:
        if u not in used and v not in used:
            M.add((u, v))
            used.update((u, v))
    return make_solution(g, kind, M)


# ---------------------------------------------------------------- sparsification

@dataclass(frozen=True)
class SparsifiedInstance:
    kind: str
    Ep: tuple  # retained edges
    B: frozenset
    Q: frozenset  # MIS only; empty for MM
    delta: float
    cap: int
    mass: int  # sum of deg over B
    m: int


def _degree_capped_edges(g, cap):
    keep = [set(g.adj[v][:cap]) for v in range(g.n)]
    return tuple(e for e in g.edges if e[1] in keep[e[0]] and e[0] in keep[e[1]])


def _edeg(ep_deg, e):
    return ep_deg[e[0]] + ep_deg[e[1]] - 2


def sparsify(g, kind, delta=DEFAULT_DELTA, n_ref=None):
    """Degree-capped sparsifier; all three properties validated before return."""
    kind = norm_kind(kind)
    n_ref = n_ref or g.n
    cap = max(1, math.ceil(n_ref ** delta - 1e-9))
    if delta >= 1:
        cap = max(cap, g.max_degree())
    Ep = _degree_capped_edges(g, cap)
    dE = [0] * g.n
    for u, v in Ep:
        dE[u] += 1
        dE[v] += 1
    B = set()
    Q = frozenset()
    if kind == "IS":
        Q = frozenset(v for v in range(g.n) if g.deg(v) <= cap)
        dQ = [sum(1 for w in g.adj[v] if w in Q) for v in range(g.n)]
        nbE = [[] for _ in range(g.n)]
        for u, v in Ep:
            nbE[u].append(v)
            nbE[v].append(u)
        for v in range(g.n):
            if dE[v] > cap or dQ[v] > cap:
                continue
            qn = [u for u in nbE[v] if u in Q]
            if any(dQ[u] == 0 for u in qn) or \
                    sum(Fraction(1, dQ[u]) for u in qn) >= Fraction(delta).limit_denominator(10 ** 6) / 10:
                B.add(v)
    else:
        inc = [[] for _ in range(g.n)]
        for e in Ep:
            inc[e[0]].append(e)
            inc[e[1]].append(e)
        for v in range(g.n):
            ds = [_edeg(dE, e) for e in inc[v]]
            if any(x == 0 for x in ds) or sum(Fraction(1, x) for x in ds) >= Fraction(1, 27):
                B.add(v)
    inst = SparsifiedInstance(kind, Ep, frozenset(B), Q, delta, cap,
                              sum(g.deg(v) for v in B), g.m)
    check_sparsified(g, inst)
    return inst


def check_sparsified(g, inst):
    dE = [0] * g.n
    for u, v in inst.Ep:
        dE[u] += 1
        dE[v] += 1
    # Property 1
    if inst.kind == "MM":
        if max(dE, default=0) > inst.cap:
            raise SparsifyError("Property 1 fails", max_degree=max(dE))
    else:
        for v in set(inst.B) | set(inst.Q):
            dq = sum(1 for w in g.adj[v] if w in inst.Q)
            if dE[v] > inst.cap or dq > inst.cap:
                raise SparsifyError("Property 1 fails", vertex=v)
    # Property 2 holds by construction of B; Property 3 is the real check
    need = Fraction(inst.delta).limit_denominator(10 ** 6) * g.m / 8
    if inst.mass < need:
        raise SparsifyError("Property 3 fails", mass=inst.mass, need=str(need))
    return True


# ---------------------------------------------------------------- relevant sets

def relevant_set(items, weight, lower):
    """Greedy ascending-id prefix whose weight sum lands in [lower, 1]."""
    acc = Fraction(0)
    out = []
    for x in sorted(items):
        w = weight(x)
        if acc + w <= 1:
            out.append(x)
            acc += w
            if acc >= lower:
                return tuple(out)
    for x in sorted(items):
        if weight(x) == 1:
            return (x,)
    return tuple(out) if acc >= lower else None


# ---------------------------------------------------------------- Luby steps

class LubyModel:
    """Shared structure of the MM and MIS pessimistic estimators.

    Elements (edges for MM, Q-vertices for MIS) carry a name from a conflict
    coloring; element x is sampled iff 3*deg(x)*z_x < R with z_x the hash value.
    """

    def __init__(self, g, inst):
        self.g = g
        self.inst = inst
        self.kind = inst.kind
        self.const = 0
        if self.kind == "MM":
            self._build_mm()
        else:
            self._build_mis()
        maxdeg = max([d for d in self.edeg if d > 0], default=1)
        self.ell = max(1, math.ceil(math.log2(3 * maxdeg))) + 1
        self.R = 1 << self.ell
        self.fam = family_new(max(self.C, 2), self.ell, 2)
        self.edeg_arr = np.array(self.edeg, dtype=np.int64)
        self.names_arr = np.array(self.names, dtype=np.int64)
        self._matrices()

    # elements, their degrees and, per B-vertex, relevant set and "bad" relation
    def _build_mm(self):
        g, inst = self.g, self.inst
        Ep = list(inst.Ep)
        pos = {e: i for i, e in enumerate(Ep)}
        dE = [0] * g.n
        for u, v in Ep:
            dE[u] += 1
            dE[v] += 1
        self.elements = Ep
        self.edeg = [_edeg(dE, e) for e in Ep]
        inc = [[] for _ in range(g.n)]
        for e in Ep:
            inc[e[0]].append(e)
            inc[e[1]].append(e)
        self.inc = inc
        # line-graph coloring names the edges
        lg = set()
        for v in range(g.n):
            es = [pos[e] for e in inc[v]]
            for a in range(len(es)):
                for b in range(a + 1, len(es)):
                    lg.add((min(es[a], es[b]), max(es[a], es[b])))
        self.names, self.C = _compact_color(len(Ep), lg)
        self.S = {}
        self.other = {}  # (v, element) -> elements that make it bad
        for v in sorted(inst.B):
            if any(self.edeg[pos[e]] == 0 for e in inc[v]):
                self.const += g.deg(v)
                continue
            S = relevant_set([pos[e] for e in inc[v]], lambda i: Fraction(1, self.edeg[i]),
                             Fraction(1, 27))
            if S is None:
                continue
            self.S[v] = S
            for i in S:
                u = Ep[i][0] if Ep[i][1] == v else Ep[i][1]
                self.other[(v, i)] = [pos[e] for e in inc[u] if pos[e] != i]

    def _build_mis(self):
        g, inst = self.g, self.inst
        Q = sorted(inst.Q)
        pos = {u: i for i, u in enumerate(Q)}
        self.elements = Q
        qn = [[w for w in g.adj[u] if w in inst.Q] for u in Q]
        self.qn = qn
        self.edeg = [len(x) for x in qn]
        nbE = [[] for _ in range(g.n)]
        for u, v in inst.Ep:
            nbE[u].append(v)
            nbE[v].append(u)
        self.S = {}
        self.other = {}
        conf = set()
        for i, u in enumerate(Q):
            for w in qn[i]:
                a, b = i, pos[w]
                if a < b:
                    conf.add((a, b))
        lower = Fraction(self.inst.delta).limit_denominator(10 ** 6) / 10
        for v in sorted(inst.B):
            cand = [pos[u] for u in nbE[v] if u in inst.Q]
            if any(self.edeg[i] == 0 for i in cand):
                self.const += g.deg(v)
                continue
            S = relevant_set(cand, lambda i: Fraction(1, self.edeg[i]), lower)
            if S is None:
                continue
            self.S[v] = S
            for i in S:
                self.other[(v, i)] = [pos[w] for w in qn[i]]
            for a in range(len(S)):
                for b in range(a + 1, len(S)):
                    conf.add((min(S[a], S[b]), max(S[a], S[b])))
        self.names, self.C = _compact_color(len(Q), conf)

    def _matrices(self):
        X = len(self.elements)
        Bv = sorted(self.S)
        self.Bv = Bv
        self.wdeg = np.array([self.g.deg(v) for v in Bv], dtype=np.int64)
        r, c = [], []
        for j, v in enumerate(Bv):
            for i in self.S[v]:
                r.append(i)
                c.append(j)
        # element -> B-vertex membership in S(v)
        self.MS = sparse.csr_matrix((np.ones(len(r), dtype=np.int32), (r, c)),
                                    shape=(X, max(len(Bv), 1)))
        pairs = list(self.other.items())
        bpos = {u: j for j, u in enumerate(Bv)}
        self.pair_v = np.array([bpos[v] for (v, _), _ in pairs], dtype=np.int64)
        self.pair_e = np.array([i for (_, i), _ in pairs], dtype=np.int64)
        r, c = [], []
        for p, (_, others) in enumerate(pairs):
            for o in others:
                r.append(o)
                c.append(p)
        self.MO = sparse.csr_matrix((np.ones(len(r), dtype=np.int32), (r, c)),
                                    shape=(X, max(len(pairs), 1)))
        self.npairs = len(pairs)

    def sampled(self, seeds):
        if not self.elements:
            return np.zeros((len(seeds), 0), dtype=bool)
        uc, inv = np.unique(self.names_arr, return_inverse=True)
        z = eval_vec(self.fam, seeds, uc)[:, inv].astype(np.int64)
        return (3 * self.edeg_arr * z < self.R) | (self.edeg_arr == 0)

    def scores(self, seeds):
        """Integer P(h) per seed (including the constant zero-degree term)."""
        s = self.sampled(seeds)
        out = np.full(len(seeds), self.const, dtype=np.int64)
        if not self.Bv:
            return out
        si = s.astype(np.int32)
        cnt = np.asarray(si @ self.MS)[:, :len(self.Bv)]
        out += ((cnt == 1) * self.wdeg).sum(axis=1)
        if self.npairs:
            bad = np.asarray(si @ self.MO)[:, :self.npairs] > 0
            hit = bad & s[:, self.pair_e]
            out -= (hit * self.wdeg[self.pair_v]).sum(axis=1)
        return out

    def solution(self, seed):
        s = self.sampled([seed])[0]
        g = self.g
        if self.kind == "MM":
            cnt = [0] * g.n
            for i, e in enumerate(self.elements):
                if s[i]:
                    cnt[e[0]] += 1
                    cnt[e[1]] += 1
            M = {e for i, e in enumerate(self.elements)
                 if s[i] and cnt[e[0]] == 1 and cnt[e[1]] == 1}
            return make_solution(g, "MM", M)
        pos = {u: i for i, u in enumerate(self.elements)}
        I = {u for i, u in enumerate(self.elements)
             if s[i] and not any(s[pos[w]] for w in self.qn[i])}
        return make_solution(g, "IS", I)


def _compact_color(n, conf_edges):
    if n == 0:
        return [], 1
    cg = Graph.from_edges(n, conf_edges, check=False)
    col = linial_coloring(cg)
    col = reduce_colors([list(a) for a in cg.adj], col)
    return list(col.color), col.C


def _luby_step(g, inst, cluster=None):
    model = LubyModel(g, inst)
    tau = model.fam.seed_bits
    tab = table_from_batches(tau, model.scores)
    dlt = Fraction(inst.delta).limit_denominator(10 ** 6)
    if inst.kind == "MM":
        target = dlt * g.m / 2000
    else:
        target = dlt * dlt * g.m / 800
    S = cluster.S if cluster is not None else 256
    est = Estimator(tau, table=tab, target=target)
    seed = condexp_search(est, S=S)
    if cluster is not None:
        chi = min(tau, max(1, int(math.log2(cluster.S))))
        rounds = -(-tau // chi)
        # per-vertex sums run as sharded colored sums; one machine scores a seed chunk
        cluster.charge_sharded(g.n + 2 * g.m, "luby step sums")
        cluster.charge(1 << chi, g.n + 2 * g.m, "luby seed chunk")
        cluster.tick("colored_sum", rounds)
    sol = model.solution(seed)
    info = {"seed": seed, "P": est.score(seed), "E": est.expectation(), "target": target,
            "mass": inst.mass, "seed_bits": tau}
    return sol, info


def _covered_edges(g, sol):
    rem = sol.removed
    return sum(1 for u, v in g.edges if u in rem or v in rem)


def luby_step_mm(inst, g, cluster=None):
    if inst.kind != "MM":
        raise ValueError("instance kind must be MM")
    sol, info = _luby_step(g, inst, cluster)
    info["removed_edges"] = _covered_edges(g, sol)
    if g.m >= 64 and info["removed_edges"] * 4000 < inst.delta * g.m:
        raise DerandError("matching step removed too few edges", **info)
    return sol, info


def luby_step_mis(inst, g, cluster=None):
    if inst.kind != "IS":
        raise ValueError("instance kind must be IS")
    sol, info = _luby_step(g, inst, cluster)
    info["removed_edges"] = _covered_edges(g, sol)
    if g.m >= 64 and info["removed_edges"] * 1600 < inst.delta * g.m:
        raise DerandError("independent-set step covered too few edges", **info)
    return sol, info


def effective_delta(delta, max_deg, n_ref):
    """Raise delta until n_ref^delta covers max_deg, the regime the capped sparsifier needs."""
    if n_ref < 2 or max_deg <= 1:
        return delta
    need = math.log(max_deg) / math.log(n_ref)
    return min(1.0, max(delta, need))


def derand_luby(g, kind, delta=DEFAULT_DELTA, cluster=None, max_iters=None, n_ref=None):
    """Repeat sparsify + derandomized Luby step until the solution is maximal.

    With max_iters the loop may stop early; info["done"] tells which.
    """
    kind = norm_kind(kind)
    n_ref = n_ref or g.n
    sol = PartialSolution.empty(kind)
    alive = set(range(g.n))
    iters = 0
    m0 = g.m
    fracs = []
    edges = []
    while True:
        sub, ids = alive_subgraph(g, alive)
        if sub.m == 0:
            break
        if max_iters is not None and iters >= max_iters:
            return sol, {"iterations": iters, "done": False, "fractions": fracs,
                         "edges": edges}
        inst = sparsify(sub, kind, effective_delta(delta, sub.max_degree(), n_ref), n_ref)
        if cluster is not None:
            cluster.charge_sharded(sub.n + 2 * sub.m, "sparsify")
            cluster.tick("sort", 2)
        step = luby_step_mm if kind == "MM" else luby_step_mis
        s, info = step(inst, sub, cluster)
        fracs.append(Fraction(info["removed_edges"], sub.m))
        edges.append((sub.m, info["removed_edges"], inst.delta))
        s = _lift(s, ids, g)
        sol = sol.union(s)
        alive -= s.removed
        iters += 1
    if kind == "IS":
        # undecided isolated vertices join directly
        extra = {v for v in alive if not any(w in alive for w in g.adj[v])}
        sol = sol.union(make_solution(g, "IS", extra))
    if m0 > 0:
        bound = 2 * math.log2(m0) + 4
        if iters > bound:
            raise DerandError("iteration bound exceeded", iterations=iters, bound=bound)
        rho = min(fracs)
        if rho < 1:
            rb = math.ceil(math.log(m0) / -math.log(1 - float(rho))) + 1
            if iters > rb:
                raise DerandError("rho-based iteration bound exceeded", iterations=iters,
                                  bound=rb)
    return sol, {"iterations": iters, "done": True, "fractions": fracs, "edges": edges}


# ---------------------------------------------------------------- heavy vertices

def kwise_k(delta):
    k = math.ceil(21 / delta - 1e-9)
    return k + (k % 2)


def heavy_vertex_match(g, hp, d, delta=DEFAULT_DELTA, k=None, cluster=None, alive=None):
    """Match every vertex of degree >= d^3 in layers L..2 (or shrink it below d^3).

    Returns (solution, info). Each layer picks a seed by brute force with the
    all-blocks-marked indicator as estimator (early exit at value 1).
    """
    if d < 3:
        raise ValueError("heavy_vertex_match needs d >= 3")
    k = k or kwise_k(delta)
    alive = set(range(g.n)) if alive is None else set(alive)
    ell = max(1, math.ceil(math.log2(d)))
    fam = family_new(max(g.n, 2), ell, k)
    sol = PartialSolution.empty("MM")
    block = 2 * d * d
    d3 = d ** 3
    seeds = {}
    ests = {}
    for i in range(hp.L, 1, -1):
        layer_i = {v for v in alive if hp.layer[v] == i}

        def cur_deg(v):
            return sum(1 for w in g.adj[v] if w in alive)
        heavy = sorted(v for v in layer_i if cur_deg(v) >= d3)
        if not heavy:
            continue
        # lower-layer vertices and their (sorted) layer-i neighbors
        blocks = []
        for v in heavy:
            U = [u for u in g.adj[v] if u in alive and 0 < hp.layer[u] < i]
            nb = len(U) // block
            if nb == 0:
                raise DerandError("heavy vertex lacks a full block", vertex=v, low=len(U))
            for j in range(nb):
                blocks.append((v, U[j * block:(j + 1) * block]))
        markers = sorted({u for _, us in blocks for u in us})
        tgt = {u: [w for w in g.adj[u] if w in layer_i] for u in markers}
        mpos = {u: j for j, u in enumerate(markers)}
        xs = np.array(markers, dtype=np.uint64)

        def marks_of(seed):
            vals = eval_vec(fam, [seed], xs)[0]
            return {u: tgt[u][int(x)] for u, x in zip(markers, vals) if int(x) < len(tgt[u])}

        def score(seed):
            mk = marks_of(seed)
            return int(all(any(mk.get(u) == v for u in us) for v, us in blocks))

        est = Estimator(fam.seed_bits, score=score, target=1, upper=1)
        seed = brute_force_search(est)
        seeds[i] = seed
        ests[i] = est
        if cluster is not None:
            # each block's indicator is an OR over its members: an aggregation,
            # so the block never has to sit on a single machine
            cluster.charge_sharded(len(blocks) * block, "heavy blocks")
            cluster.charge_sharded(g.n + 2 * g.m, "heavy marks")
            cluster.tick("colored_sum", 2)
        mk = marks_of(seed)
        M = set()
        for v in heavy:
            cands = sorted(u for u in mpos if mk.get(u) == v)
            if cands:
                M.add((min(v, cands[0]), max(v, cands[0])))
        s = make_solution(g, "MM", M)
        sol = sol.union(s)
        alive -= s.removed
    for v in range(g.n):
        if v in alive and 1 < hp.layer[v] and sum(1 for w in g.adj[v] if w in alive) >= d3:
            raise DerandError("heavy vertex left unsatisfied", vertex=v)
    return sol, {"seeds": seeds, "k": k, "ell": ell, "estimators": ests}


# ---------------------------------------------------------------- low arboricity

def low_arb_d(lam, eps):
    return max(3, math.ceil(lam ** (1 + eps) - 1e-9), 2 * lam)


def _peel_with_rounds(g, d, cluster):
    hp = h_partition(g, d)
    if cluster is not None:
        for _ in range(hp.L):
            cluster.charge_sharded(g.n + 2 * g.m, "h-partition peel")
        # layers are learned with exponentiation: O(log L) charged rounds
        cluster.tick("double", max(1, math.ceil(math.log2(hp.L + 1))))
    return hp


def cole_vishkin(parent):
    """3-coloring of a rooted forest given by parent pointers (-1 for roots)."""
    n = len(parent)
    col = list(range(n))
    rounds = 0
    while max(col, default=0) >= 6:
        new = []
        for v in range(n):
            p = parent[v]
            if p < 0:
                i = 0
            else:
                x = col[v] ^ col[p]
                i = (x & -x).bit_length() - 1
            new.append(2 * i + ((col[v] >> i) & 1))
        col = new
        rounds += 1
    children = [[] for _ in range(n)]
    for v, p in enumerate(parent):
        if p >= 0:
            children[p].append(v)
    for c in (5, 4, 3):
        # shift down: children take the parent's color, roots pick a new one
        shifted = []
        for v in range(n):
            p = parent[v]
            if p >= 0:
                shifted.append(col[p])
            else:
                shifted.append(next(x for x in range(3) if x != col[v]))
        col = shifted
        for v in range(n):
            if col[v] == c:
                used = set()
                if parent[v] >= 0:
                    used.add(col[parent[v]])
                for w in children[v]:
                    used.add(col[w])
                col[v] = next(x for x in range(3) if x not in used)
        rounds += 2
    return col, rounds


def low_arb_solve(g, lam, kind, eps=0.5, cluster=None):
    """Maximal solution on a graph of small arboricity (run degree reduction first)."""
    kind = norm_kind(kind)
    d = low_arb_d(lam, eps)
    if g.m == 0:
        sol = greedy_solve(g, kind)
        return sol, {"d": d, "colors": 1 if g.n else 0, "labels": 0}
    hp = _peel_with_rounds(g, d, cluster)
    fd = forest_decomposition(g, hp)
    if kind == "IS":
        out = fd.out_neighbors(g.n)
        col = linial_coloring(g, nbrs=out, cluster=cluster)
        classes = {}
        for v, c in enumerate(col.color):
            classes.setdefault(c, []).append(v)
        I = set()
        for c in sorted(classes):
            for v in classes[c]:
                if not any(w in I for w in g.adj[v]):
                    I.add(v)
            if cluster is not None:
                cluster.tick("local")
        return make_solution(g, "IS", I), {"d": d, "colors": len(classes), "palette": col.C,
                                           "layers": hp.L}
    matched = set()
    M = set()
    labels = sorted(set(fd.label))
    for lab in labels:
        parent = [-1] * g.n
        for (t, h), lb in zip(fd.orientation, fd.label):
            if lb == lab:
                parent[t] = h
        col, rounds = cole_vishkin(parent)
        for c in range(3):
            props = {}
            for v in range(g.n):
                p = parent[v]
                if col[v] == c and p >= 0 and v not in matched and p not in matched:
                    if p not in props or v < props[p]:
                        props[p] = v
            for p, v in props.items():
                M.add((min(p, v), max(p, v)))
                matched.update((p, v))
        if cluster is not None:
            cluster.tick("local", rounds + 3)
    return make_solution(g, "MM", M), {"d": d, "labels": len(labels), "layers": hp.L}


# ---------------------------------------------------------------- dispatch

@dataclass(frozen=True)
class SolveConfig:
    delta: float = DEFAULT_DELTA
    eps: float = 0.5
    low_arb_threshold: int = 8
    heavy_k: int = 0  # 0 = derive from delta
    arb_escape: float = 0.0  # skip degree reduction when lam >= arb_escape * n^(delta/4); 0 = off
    degred: DegredConfig = DegredConfig()


def _finish(c, g, alive, lam, kind, cfg, info):
    """Solve the residual graph induced by `alive`; returns a lifted solution."""
    sub, ids = alive_subgraph(g, alive)
    if sub.n == 0:
        return PartialSolution.empty(kind)
    if lam <= cfg.low_arb_threshold:
        s, inf = low_arb_solve(sub, lam, kind, cfg.eps, c)
        info["finisher"] = "low_arb"
        info["finisher_info"] = {k: v for k, v in inf.items()}
        return _lift(s, ids, g)
    info["finisher"] = "medium"
    sol = PartialSolution.empty(kind)
    level = 0
    radius = 1
    reps = max(1, math.ceil(math.log2(max(2, sub.max_degree()))))
    cur_alive = set(range(sub.n))
    total = 0
    while True:
        cs, cids = alive_subgraph(sub, cur_alive)
        if cs.m == 0:
            s = make_solution(cs, kind, set(range(cs.n)) if kind == "IS" else set())
            sol = sol.union(_lift(_lift(s, cids, sub), ids, g))
            break
        s, inf = derand_luby(cs, kind, cfg.delta, c, max_iters=reps * (1 << level),
                             n_ref=g.n)
        total += inf["iterations"]
        s = _lift(s, cids, sub)
        sol = sol.union(_lift(s, ids, g))
        cur_alive -= s.removed
        if inf["done"]:
            break
        # graph exponentiation while the doubled balls still fit one machine
        if c is not None:
            words = (cs.max_degree() + 1) ** (2 * radius) * 3
            if words <= c.S:
                store = collect_balls(None, cs, radius)
                double_balls(c, store, cs)
                radius *= 2
        level += 1
    info["luby_iterations"] = total
    return sol


def solve(c, g, kind, budget_mode="linear", cfg=SolveConfig()):
    """Full MIS / maximal matching. Returns (solution, metrics)."""
    kind = norm_kind(kind)
    if budget_mode not in ("linear", "superlinear"):
        raise ValueError("budget_mode must be linear or superlinear")
    info = {"path": [], "budget_mode": budget_mode}
    lam = estimate_arboricity(g)
    info["lambda_hat"] = lam
    if c is not None and g.n + 2 * g.m <= c.S:
        c.charge(g.n + 2 * g.m, g.n + 2 * g.m, "gather")
        c.tick("collect")
        info["path"].append("gather")
        sol = greedy_solve(g, kind)
        return sol, _metrics(c, info)
    alive = set(range(g.n))
    sol = PartialSolution.empty(kind)
    if g.max_degree() > g.n ** cfg.delta:
        info["path"].append("partition")
        d = max(math.ceil(g.n ** (cfg.delta / 3) - 1e-9), 2 * lam + 1, 3)
        hp = _peel_with_rounds(g, d, c)
        info["d"] = d
        info["layers"] = hp.L
        if kind == "IS":
            for i, layer in enumerate(hp.layers()):
                if i == 0:
                    continue
                part = {v for v in layer if v in alive}
                s = _finish(c, g, part, lam, kind, cfg, info)
                sol = sol.union(s)
                alive -= s.removed
            info["path"].append("layers")
            return sol, _metrics(c, info)
        s, hinf = heavy_vertex_match(g, hp, d, cfg.delta, cfg.heavy_k or None, c)
        info["heavy_seeds"] = hinf["seeds"]
        sol = sol.union(s)
        alive -= s.removed
    sub, ids = alive_subgraph(g, alive)
    escape = cfg.arb_escape > 0 and lam >= cfg.arb_escape * g.n ** (cfg.delta / 4)
    if sub.n >= 2 and c is not None and not escape:
        info["path"].append("degree_reduce")
        s, _, dinf = degree_reduce(c, sub, lam, kind, cfg.degred)
        info["degred_iterations"] = dinf["iterations"]
        s = _lift(s, ids, g)
        sol = sol.union(s)
        alive -= s.removed
    info["path"].append("finish")
    sol = sol.union(_finish(c, g, alive, lam, kind, cfg, info))
    return sol, _metrics(c, info)


def _metrics(c, info):
    if c is not None:
        info.update(c.metrics())
    return info


def solution_output(sol):
    if sol.kind == "IS":
        return sorted(sol.members)
    return sorted(sol.members)
