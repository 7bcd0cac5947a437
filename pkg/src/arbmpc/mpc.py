"""Accounting-level simulator of the low-space MPC model."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .graph import bfs_dist


class MemoryViolation(RuntimeError):
    def __init__(self, info):
        self.info = info
        super().__init__(f"memory violation: {info}")


class MemoryWarning(UserWarning):
    pass


DEFAULT_ROUND_COST = {
    "sort": 1, "filter": 1, "prefix_sum": 1, "predecessor": 1, "dedup": 1,
    "colored_sum": 1, "collect": 1, "double": 1, "notify": 1, "local": 1,
}


@dataclass
class MpcCluster:
    n: int
    alpha: float
    S: int
    global_budget: float
    mode: str = "strict"
    round_cost: dict = field(default_factory=lambda: dict(DEFAULT_ROUND_COST))
    rounds: int = 0
    peak_local: int = 0
    peak_global: int = 0
    violations: list = field(default_factory=list)

    def tick(self, kind="local", times=1):
        self.rounds += self.round_cost.get(kind, 1) * times

    def charge(self, local, glob, what=""):
        """Record one round's loads; enforce budgets according to mode."""
        local = int(local)
        glob = int(glob)
        self.peak_local = max(self.peak_local, local)
        self.peak_global = max(self.peak_global, glob)
        bad = []
        if local > self.S:
            bad.append({"kind": "local", "what": what, "words": local, "limit": self.S})
        if glob > self.global_budget:
            bad.append({"kind": "global", "what": what, "words": glob,
                        "limit": self.global_budget})
        for b in bad:
            self.violations.append(b)
            if self.mode == "strict":
                raise MemoryViolation(b)
            warnings.warn(f"memory over budget: {b}", MemoryWarning, stacklevel=2)

    def charge_sharded(self, words, what=""):
        """A load spread evenly over ceil(words/S) machines."""
        words = int(words)
        machines = max(1, -(-words // self.S))
        self.charge(-(-words // machines), words, what)

    def metrics(self):
        return {"rounds": self.rounds, "peak_local": self.peak_local,
                "peak_global": self.peak_global, "S": self.S,
                "global_budget": self.global_budget,
                "violations": len(self.violations)}


def cluster_new(n, alpha, mode="strict", global_factor=8.0, m=0, eps=None,
                round_cost=None):
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be >= 2")
    if mode not in ("strict", "report"):
        raise ValueError("mode must be strict or report")
    S = math.ceil(n ** alpha - 1e-9)
    base = n ** (1 + eps) if eps else n
    rc = dict(DEFAULT_ROUND_COST)
    if round_cost is not None:
        if isinstance(round_cost, dict):
            rc.update(round_cost)
        else:
            rc = {k: int(round_cost) for k in rc}
    return MpcCluster(n, alpha, S, global_factor * (base + m), mode, rc)


def _words(x):
    return len(x) if isinstance(x, (tuple, list)) else 1


def run_primitive(c, p, items, key=None, combiner=None):
    items = list(items)
    words = sum(_words(x) for x in items)
    c.charge_sharded(words, p)
    if p == "sort":
        out = sorted(items, key=key)
    elif p == "filter":
        out = [x for x in items if key(x)]
    elif p == "prefix_sum":
        comb = combiner or (lambda a, b: a + b)
        out = []
        acc = None
        for x in items:
            acc = x if acc is None else comb(acc, x)
            out.append(acc)
    elif p == "predecessor":
        # items are (key, value_or_None); each gets the latest non-None value at or before it
        out = []
        last = None
        for k_, v in sorted(items, key=lambda t: t[0]):
            if v is not None:
                last = v
            out.append((k_, last))
    elif p == "dedup":
        out = sorted(set(items), key=key)
    elif p == "colored_sum":
        comb = combiner or (lambda a, b: a + b)
        acc = {}
        for col, val in items:
            acc[col] = comb(acc[col], val) if col in acc else val
        out = sorted(acc.items())
    else:
        raise ValueError(f"unknown primitive {p}")
    c.tick(p)
    return out


@dataclass
class BallStore:
    radius: int
    balls: dict  # v -> (frozenset vertices, frozenset edges)

    def words(self, v):
        vs, es = self.balls[v]
        return len(vs) + 2 * len(es)

    def __eq__(self, other):
        return isinstance(other, BallStore) and self.radius == other.radius \
            and self.balls == other.balls


def _ball(g, v, r, alive=None):
    vs = frozenset(bfs_dist(g, [v], r, alive))
    es = frozenset((a, b) for a in vs for b in g.adj[a]
                   if a < b and b in vs)
    return vs, es


def _charge_store(c, store, what):
    if not store.balls:
        c.charge(0, 0, what)
        return
    sizes = {v: store.words(v) for v in store.balls}
    worst = max(sizes, key=lambda v: (sizes[v], -v))
    if sizes[worst] > c.S:
        info = {"kind": "local", "what": what, "vertex": worst,
                "words": sizes[worst], "limit": c.S}
        c.violations.append(info)
        if c.mode == "strict":
            raise MemoryViolation(info)
        warnings.warn(f"ball over budget: {info}", MemoryWarning, stacklevel=3)
    c.peak_local = max(c.peak_local, sizes[worst])
    total = sum(sizes.values())
    c.peak_global = max(c.peak_global, total)
    if total > c.global_budget:
        info = {"kind": "global", "what": what, "words": total,
                "limit": c.global_budget}
        c.violations.append(info)
        if c.mode == "strict":
            raise MemoryViolation(info)
        warnings.warn(f"balls over global budget: {info}", MemoryWarning, stacklevel=3)


def collect_balls(c, g, r, active=None):
    act = range(g.n) if active is None else sorted(active)
    store = BallStore(r, {v: _ball(g, v, r) for v in act})
    if c is not None:
        _charge_store(c, store, f"collect_balls(r={r})")
        c.tick("collect", max(1, math.ceil(math.log2(r))) if r > 1 else 1)
    return store


def double_balls(c, store, g):
    r = store.radius
    new = {}
    for v, (vs, _) in store.balls.items():
        acc = set()
        for u in vs:
            if u in store.balls:
                acc |= store.balls[u][0]
            else:
                # frozen vertex: answers with its own radius-r ball
                acc |= _ball(g, u, r)[0]
        vs2 = frozenset(acc)
        es2 = frozenset((a, b) for a in vs2 for b in g.adj[a] if a < b and b in vs2)
        new[v] = (vs2, es2)
    out = BallStore(2 * r if r else 0, new)
    if c is not None:
        _charge_store(c, out, f"double_balls(r={2 * r})")
        c.tick("double")
    return out


def remove_and_notify(c, store, removed):
    removed = set(removed)
    new = {}
    for v, (vs, es) in store.balls.items():
        if v in removed:
            continue
        keep = vs - removed
        # distances can only grow; re-run BFS inside the surviving part of the ball
        adj = {}
        for a, b in es:
            if a in keep and b in keep:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        reach = {v}
        frontier = [v]
        for _ in range(store.radius):
            nxt = []
            for x in frontier:
                for y in adj.get(x, ()):
                    if y not in reach:
                        reach.add(y)
                        nxt.append(y)
            frontier = nxt
        reach = frozenset(reach)
        new[v] = (reach, frozenset(e for e in es if e[0] in reach and e[1] in reach))
    if c is not None:
        c.tick("notify")
    return BallStore(store.radius, new)
