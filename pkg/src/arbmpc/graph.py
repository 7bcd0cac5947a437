"""Graph representation, generators, arboricity tools and H-partitions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Malformed or invalid edge-list input."""

    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class NonProgressError(RuntimeError):
    """A peeling round removed nothing while vertices remained."""

    def __init__(self, msg, residual=None):
        self.residual = residual
        super().__init__(msg)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple  # sorted tuple of (u, v) with u < v
    adj: tuple = field(repr=False, compare=False)

    @property
    def m(self):
        return len(self.edges)

    def deg(self, v):
        return len(self.adj[v])

    def degrees(self):
        return [len(a) for a in self.adj]

    def max_degree(self):
        return max((len(a) for a in self.adj), default=0)

    @classmethod
    def from_edges(cls, n, edges: Iterable, check=True):
        es = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if check:
                if u == v:
                    raise GraphFormatError(f"self-loop at {u}")
                if not (0 <= u < n and 0 <= v < n):
                    raise GraphFormatError(f"vertex out of range: {u} {v}")
            if u > v:
                u, v = v, u
            if check and (u, v) in es:
                raise GraphFormatError(f"duplicate edge {u} {v}")
            es.add((u, v))
        edges = tuple(sorted(es))
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, edges, tuple(tuple(sorted(a)) for a in adj))

    def induced(self, vertices):
        """Induced subgraph on `vertices`, relabelled 0..k-1 in increasing id order.

        Returns (subgraph, ids) where ids[new] = old.
        """
        ids = sorted(set(vertices))
        pos = {v: i for i, v in enumerate(ids)}
        sub = []
        for v in ids:
            pv = pos[v]
            for w in self.adj[v]:
                if w > v and w in pos:
                    sub.append((pv, pos[w]))
        return Graph.from_edges(len(ids), sub, check=False), ids

    def edge_index(self):
        return {e: i for i, e in enumerate(self.edges)}

    def to_text(self):
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in self.edges)
        return "\n".join(lines) + "\n"


def parse_graph(text):
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError("empty input", 1)
    head = lines[0].split()
    if len(head) != 2:
        raise GraphFormatError("header must be 'n m'", 1)
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise GraphFormatError("header must be integers", 1) from None
    if n < 0 or m < 0:
        raise GraphFormatError("negative header value", 1)
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != m:
        raise GraphFormatError(f"expected {m} edge lines, found {len(body)}", len(lines))
    seen = set()
    edges = []
    for lineno, ln in body:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphFormatError("edge line must be 'u v'", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("non-integer vertex id", lineno) from None
        if u == v:
            raise GraphFormatError(f"self-loop at {u}", lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex id out of range [0,{n})", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key[0]} {key[1]}", lineno)
        seen.add(key)
        edges.append(key)
    return Graph.from_edges(n, edges, check=False)


def load_graph(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_graph(fh.read())


def save_graph(g, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(g.to_text())


# ---------------------------------------------------------------- generators

def _random_tree_edges(n, rng):
    # uniform labelled tree from a random Pruefer sequence
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    np.add.at(degree, seq, 1)
    import heapq
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, int(x))
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def gen_bounded_arboricity(n, lam, seed):
    """Union of `lam` uniformly random spanning trees on [n]; arboricity <= lam."""
    if n < 1 or lam < 1:
        raise ValueError("need n >= 1 and lam >= 1")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    edges = set()
    for _ in range(lam):
        for u, v in _random_tree_edges(n, rng):
            edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(n, edges, check=False)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves):
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n):
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def empty_graph(n):
    return Graph.from_edges(n, [])


# ---------------------------------------------------------------- arboricity

def degeneracy_order(g):
    """Sequential min-degree peeling (smallest id on ties). Returns (order, degeneracy)."""
    import heapq
    deg = g.degrees()
    heap = [(d, v) for v, d in enumerate(deg)]
    heapq.heapify(heap)
    removed = [False] * g.n
    order = []
    k = 0
    while heap:
        d, v = heapq.heappop(heap)
        if removed[v] or d != deg[v]:
            continue
        removed[v] = True
        order.append(v)
        k = max(k, d)
        for w in g.adj[v]:
            if not removed[w]:
                deg[w] -= 1
                heapq.heappush(heap, (deg[w], w))
    return order, k


def _peel_passes(g, d, limit):
    """Parallel peeling of vertices with residual degree <= d; returns passes used or None."""
    deg = g.degrees()
    alive = set(range(g.n))
    passes = 0
    while alive:
        if passes >= limit:
            return None
        layer = [v for v in alive if deg[v] <= d]
        if not layer:
            return None
        passes += 1
        for v in layer:
            alive.discard(v)
        for v in layer:
            for w in g.adj[v]:
                if w in alive:
                    deg[w] -= 1
    return passes


def estimate_arboricity(g):
    if g.m == 0:
        return 1
    limit = math.ceil(math.log2(max(g.n, 2))) + 1
    lam = 1
    while True:
        if _peel_passes(g, 2 * lam, limit) is not None:
            return lam
        lam *= 2


def density_arboricity(g):
    """Exact Nash-Williams density max ceil(m_H/(n_H-1)) by enumerating vertex subsets."""
    if g.n > 20:
        raise ValueError("exhaustive density oracle limited to n <= 20")
    n = g.n
    best = 0
    masks = [0] * n
    for u, v in g.edges:
        masks[u] |= 1 << v
    for s in range(1, 1 << n):
        k = bin(s).count("1")
        if k < 2:
            continue
        me = 0
        t = s
        while t:
            low = t & -t
            u = low.bit_length() - 1
            me += bin(masks[u] & s).count("1")
            t ^= low
        if me:
            best = max(best, -(-me // (k - 1)))
    return best


# ---------------------------------------------------------------- H-partition

@dataclass(frozen=True)
class HPartition:
    d: int
    layer: tuple  # layer index per vertex, 0 for unlayered
    L: int
    unlayered: frozenset

    @property
    def complete(self):
        return not self.unlayered

    def layers(self):
        out = [[] for _ in range(self.L + 1)]
        for v, i in enumerate(self.layer):
            if i:
                out[i].append(v)
        return out


def h_partition(g, d, max_layers=None):
    if d < 1:
        raise ValueError("d must be >= 1")
    deg = g.degrees()
    layer = [0] * g.n
    alive = set(range(g.n))
    L = 0
    while alive:
        if max_layers is not None and L >= max_layers:
            break
        peel = sorted(v for v in alive if deg[v] <= d)
        if not peel:
            if max_layers is None:
                raise NonProgressError(
                    f"non-progress: no vertex of residual degree <= {d} among {len(alive)}",
                    residual=frozenset(alive))
            break
        L += 1
        for v in peel:
            layer[v] = L
            alive.discard(v)
        for v in peel:
            for w in g.adj[v]:
                if w in alive:
                    deg[w] -= 1
    return HPartition(d, tuple(layer), L, frozenset(alive))


def check_h_partition(g, hp):
    for v in range(g.n):
        i = hp.layer[v]
        if i == 0:
            continue
        up = sum(1 for w in g.adj[v] if hp.layer[w] == 0 or hp.layer[w] >= i)
        if up > hp.d:
            return False
    return True


@dataclass(frozen=True)
class ForestDecomposition:
    orientation: tuple  # per edge (tail, head), same order as g.edges
    label: tuple  # per edge label in [1, d]
    d: int

    def out_neighbors(self, n):
        out = [[] for _ in range(n)]
        for t, h in self.orientation:
            out[t].append(h)
        return out


def forest_decomposition(g, hp):
    if not hp.complete:
        raise ValueError("H-partition is incomplete (unlayered vertices present)")
    orient = []
    for u, v in g.edges:
        lu, lv = hp.layer[u], hp.layer[v]
        if lu < lv or (lu == lv and u < v):
            orient.append((u, v))
        else:
            orient.append((v, u))
    out = [[] for _ in range(g.n)]
    for idx, (t, h) in enumerate(orient):
        out[t].append((h, idx))
    label = [0] * g.m
    for t in range(g.n):
        for j, (_, idx) in enumerate(sorted(out[t])):
            label[idx] = j + 1
    return ForestDecomposition(tuple(orient), tuple(label), hp.d)


def check_forest_decomposition(g, fd):
    n = g.n
    outdeg = [0] * n
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for t, h in fd.orientation:
        outdeg[t] += 1
        indeg[h] += 1
        out[t].append(h)
    if max(outdeg, default=0) > fd.d:
        return False
    # acyclicity via Kahn
    q = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while q:
        v = q.pop()
        seen += 1
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                q.append(w)
    if seen != n:
        return False
    # each label class is a forest
    by_label = {}
    for (u, v), lab in zip(fd.orientation, fd.label):
        if not 1 <= lab <= fd.d:
            return False
        by_label.setdefault(lab, []).append((u, v))
    for es in by_label.values():
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        for u, v in es:
            a, b = find(u), find(v)
            if a == b:
                return False
            parent[a] = b
    return True


# ---------------------------------------------------------------- sampled arboricity checks

def check_arb_properties(g, lam, seed=0, samples=20):
    n, m = g.n, g.m
    deg = g.degrees()
    report = {"m_lt_lam_n": m < lam * n or m == 0}
    t_vals = []
    t = 1
    maxdeg = max(deg, default=0)
    while t <= max(maxdeg, lam) * 2:
        if t > lam:
            t_vals.append(t)
        t *= 2
    deg_ok = True
    edge_ok = True
    details = []
    for t in t_vals:
        cnt = sum(1 for x in deg if x >= t)
        both = sum(1 for u, v in g.edges if deg[u] >= t and deg[v] >= t)
        a = cnt == 0 or cnt < lam * n / (t - lam)
        b = both == 0 or both < lam * m / (t - lam)
        deg_ok &= a
        edge_ok &= b
        details.append({"t": t, "high": cnt, "high_edges": both})
    report["degree_tail"] = deg_ok
    report["edge_tail"] = edge_ok
    rng = np.random.default_rng(seed)
    bound = 2 * (1 << max(0, math.ceil(math.log2(max(lam, 1)))))
    mono = True
    for _ in range(samples):
        if n == 0:
            break
        keep = [v for v in range(n) if rng.random() < 0.5]
        sub, _ = g.induced(keep)
        if estimate_arboricity(sub) > bound:
            mono = False
    report["subgraph_monotone"] = mono
    report["thresholds"] = details
    return report


# ---------------------------------------------------------------- degree classes

def Delta(i):
    return 1 << (1 << i) if i >= 0 else 1


def degree_class(deg, i_min):
    i = i_min
    while deg > Delta(i):
        i += 1
    return i


def i_min_for(lam, beta_exp=16):
    base = max(lam, 2) ** beta_exp
    i = 0
    while Delta(i) < base:
        i += 1
    return i


def i_max_for(max_deg):
    if max_deg <= 2:
        return 0
    return math.ceil(math.log2(math.log2(max_deg)))


def bfs_dist(g, sources, limit=None, alive=None):
    """Multi-source BFS distances (dict) up to `limit` hops."""
    dist = {}
    frontier = []
    for s in sources:
        if s not in dist:
            dist[s] = 0
            frontier.append(s)
    r = 0
    while frontier and (limit is None or r < limit):
        r += 1
        nxt = []
        for v in frontier:
            for w in g.adj[v]:
                if w not in dist and (alive is None or w in alive):
                    dist[w] = r
                    nxt.append(w)
        frontier = nxt
    return dist


def power_graph(g, t):
    """G^t: edges between distinct vertices at distance <= t."""
    edges = []
    for v in range(g.n):
        for w, dd in bfs_dist(g, [v], t).items():
            if w > v:
                edges.append((v, w))
    return Graph.from_edges(g.n, edges, check=False)
