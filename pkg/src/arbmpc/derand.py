"""Derandomization engines and Linial-style colorings used to shrink seed domains."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import power_graph
from .parallel import ordered_map

ENUM_BUDGET_BITS = 24


class DerandError(RuntimeError):
    def __init__(self, msg, **info):
        self.info = info
        super().__init__(f"{msg} {info}" if info else msg)


class Estimator:
    """Score over seeds of a fixed bit length.

    Provide either `table` (integer numpy array of length 2^seed_bits, real score
    = table/denom) or `score` (callable seed -> number). `cond(prefix, p)` returns the
    exact expectation over uniform completions of a seed whose low p bits equal prefix.
    """

    def __init__(self, seed_bits, score=None, table=None, cond=None,
                 direction="max", target=None, denom=1, upper=None):
        if direction not in ("max", "min"):
            raise ValueError("direction must be max or min")
        self.seed_bits = seed_bits
        self._score = score
        self.table = table
        self._cond = cond
        self.direction = direction
        self.target = target
        self.denom = denom
        self.upper = upper  # known best attainable score, lets brute force stop early
        self.trace = []

    def score(self, seed):
        if self.table is not None:
            return Fraction(int(self.table[seed]), self.denom)
        return Fraction(self._score(seed))

    def cond(self, prefix, p):
        if p >= self.seed_bits:
            return self.score(prefix)
        if self._cond is not None:
            return Fraction(self._cond(prefix, p))
        if self.table is not None:
            sl = self.table[prefix::1 << p]
            return Fraction(int(sl.sum()), len(sl) * self.denom)
        free = self.seed_bits - p
        if free > ENUM_BUDGET_BITS:
            raise DerandError("conditional expectation needs too many completions", free=free)
        tot = Fraction(0)
        for j in range(1 << free):
            tot += self.score(prefix | (j << p))
        return tot / (1 << free)

    def expectation(self):
        return self.cond(0, 0)

    def better(self, a, b):
        return a > b if self.direction == "max" else a < b

    def meets(self, val):
        if self.target is None:
            return True
        return val >= self.target if self.direction == "max" else val <= self.target


def table_from_batches(seed_bits, batch_fn, batch_bits=14):
    """Evaluate batch_fn on consecutive seed blocks; concatenated in seed order."""
    if seed_bits > ENUM_BUDGET_BITS:
        raise DerandError("seed space too large to tabulate", seed_bits=seed_bits)
    total = 1 << seed_bits
    step = 1 << min(batch_bits, seed_bits)
    blocks = [np.arange(s, min(s + step, total), dtype=np.uint64)
              for s in range(0, total, step)]
    parts = ordered_map(batch_fn, blocks)
    return np.concatenate([np.asarray(p, dtype=np.int64) for p in parts])


def condexp_search(est, seed_bits=None, chunk_bits=None, S=None):
    tau = est.seed_bits if seed_bits is None else seed_bits
    if chunk_bits is None:
        chunk_bits = min(tau, max(1, int(math.floor(math.log2(S)))) if S else 8)
    chi = max(1, min(chunk_bits, tau))
    if chi > ENUM_BUDGET_BITS:
        raise DerandError("chunk exceeds enumeration budget", chunk_bits=chi)
    prefix, p = 0, 0
    cur = est.cond(0, 0)
    est.trace = [(0, cur)]
    while p < tau:
        w = min(chi, tau - p)
        best_val, best_ext = None, None
        for ext in range(1 << w):
            val = est.cond(prefix | (ext << p), p + w)
            if best_val is None or est.better(val, best_val):
                best_val, best_ext = val, ext
        if est.better(cur, best_val):
            raise DerandError("no chunk extension meets the running expectation",
                              prefix=prefix, bits=p, running=str(cur), best=str(best_val))
        prefix |= best_ext << p
        p += w
        cur = best_val
        est.trace.append((p, cur))
    final = est.score(prefix)
    if final != cur:
        raise DerandError("conditional evaluator inconsistent at full prefix",
                          seed=prefix, score=str(final), cond=str(cur))
    if not est.meets(final):
        raise DerandError("estimator target unmet", seed=prefix, score=str(final),
                          target=str(est.target))
    return prefix


def brute_force_search(est, seed_bits=None, budget_bits=ENUM_BUDGET_BITS):
    tau = est.seed_bits if seed_bits is None else seed_bits
    if est.table is not None:
        arr = est.table
        idx = int(np.argmax(arr)) if est.direction == "max" else int(np.argmin(arr))
        best = idx
    else:
        best, best_val = None, None
        limit = 1 << tau
        cap = 1 << budget_bits
        s = 0
        while s < limit:
            if s >= cap:
                raise DerandError("seed enumeration budget exceeded", seed_bits=tau,
                                  budget_bits=budget_bits)
            val = est.score(s)
            if best_val is None or est.better(val, best_val):
                best, best_val = s, val
                if est.upper is not None and val == est.upper:
                    break
            s += 1
    val = est.score(best)
    if not est.meets(val):
        raise DerandError("estimator target unmet", seed=best, score=str(val),
                          target=str(est.target))
    return best


# ---------------------------------------------------------------- colorings

@dataclass(frozen=True)
class Coloring:
    color: tuple
    C: int  # palette size

    @property
    def used(self):
        return len(set(self.color))


def _is_prime(q):
    if q < 2:
        return False
    i = 2
    while i * i <= q:
        if q % i == 0:
            return False
        i += 1
    return True


def _next_prime_above(x):
    q = max(2, int(x) + 1)
    while not _is_prime(q):
        q += 1
    return q


def _linial_params(C, delta):
    best = None
    D = 1
    while True:
        q = _next_prime_above(delta * D)
        while q ** (D + 1) < C:
            q = _next_prime_above(q)
        if best is None or q * q < best[1] * best[1]:
            best = (D, q)
        if (D + 1) > max(2, math.log2(max(C, 2))) + 1:
            break
        D += 1
    return best


def _digits(c, q, D):
    out = []
    for _ in range(D + 1):
        out.append(c % q)
        c //= q
    return out


def _poly_at(coef, x, q):
    acc = 0
    for a in reversed(coef):
        acc = (acc * x + a) % q
    return acc


def _check_proper(nbrs, colors):
    for v, ns in enumerate(nbrs):
        for w in ns:
            if colors[v] == colors[w]:
                raise ValueError(f"improper coloring: {v} and {w} share color {colors[v]}")


def linial_step(nbrs, colors, C, params=None):
    delta = max((len(x) for x in nbrs), default=0)
    D, q = params or _linial_params(C, max(delta, 1))
    coefs = {c: _digits(c, q, D) for c in set(colors)}
    new = []
    for v, ns in enumerate(nbrs):
        cv = coefs[colors[v]]
        others = [coefs[colors[w]] for w in ns]
        for x in range(q):
            y = _poly_at(cv, x, q)
            if all(_poly_at(o, x, q) != y for o in others):
                new.append(x * q + y)
                break
        else:  # pragma: no cover - excluded by q > delta * D
            raise DerandError("cover-free selection failed", vertex=v)
    return new, q * q


def linial_coloring(g=None, initial_colors=None, nbrs=None, cluster=None):
    """Linial color reduction. `nbrs` overrides the neighbor lists (out-neighbors
    of an acyclic orientation give the arboricity variant)."""
    if nbrs is None:
        nbrs = [list(a) for a in g.adj]
    n = len(nbrs)
    if initial_colors is None:
        colors, C = list(range(n)), max(n, 1)
    else:
        colors = list(initial_colors)
        C = max(colors, default=0) + 1
    _check_proper(nbrs, colors)
    if all(len(x) == 0 for x in nbrs):
        return Coloring(tuple(0 for _ in range(n)), 1)
    delta = max(len(x) for x in nbrs)
    while True:
        D, q = _linial_params(C, delta)
        if q * q >= C:  # no further shrink possible
            break
        colors, C = linial_step(nbrs, colors, C, (D, q))
        if cluster is not None:
            cluster.charge_sharded(n + sum(len(x) for x in nbrs), "linial")
            cluster.tick("local")
    return Coloring(tuple(colors), C)


def reduce_colors(nbrs, coloring, cluster=None):
    """One color class per round: recolor into [0, deg] greedily."""
    n = len(nbrs)
    new = [-1] * n
    classes = {}
    for v, c in enumerate(coloring.color):
        classes.setdefault(c, []).append(v)
    for c in sorted(classes):
        for v in classes[c]:
            taken = {new[w] for w in nbrs[v] if new[w] >= 0}
            x = 0
            while x in taken:
                x += 1
            new[v] = x
        if cluster is not None:
            cluster.tick("local")
    return Coloring(tuple(new), max(new, default=-1) + 1 if n else 1)


def square_color(g, power=2, cluster=None):
    gp = power_graph(g, power) if power > 1 else g
    if cluster is not None:
        cluster.charge_sharded(g.n + 2 * gp.m, f"square_color(t={power})")
        cluster.charge(gp.max_degree() + 1, g.n + 2 * gp.m, "power-graph neighborhood")
    return linial_coloring(gp, cluster=cluster)


def compact_coloring(coloring):
    """Rank distinct colors (a dedup + prefix-sum pass)."""
    ranks = {c: i for i, c in enumerate(sorted(set(coloring.color)))}
    return Coloring(tuple(ranks[c] for c in coloring.color), max(len(ranks), 1))


def verify_proper(nbrs, colors):
    try:
        _check_proper(nbrs, colors)
    except ValueError:
        return False
    return True
