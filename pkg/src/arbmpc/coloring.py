"""O(lambda) vertex coloring: layered list coloring and the bin-partition pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .derand import DerandError, Estimator, square_color, table_from_batches
from .graph import degeneracy_order, h_partition
from .hashing import eval_vec, family_new

PARTITION_K = 18
SIZE_CAP_C6 = 16
CANDIDATES = 16
BIN_SLACK_BITS = 8
# odd multiplier spreading candidate indices over the seed space
_MULT = 0x9E3779B97F4A7C15F39CC0605CEDC835


class ColoringError(ValueError):
    pass


@dataclass(frozen=True)
class PaletteColoring:
    color: tuple
    segments: tuple  # (name, start, size)
    total: int

    @property
    def used(self):
        return len(set(self.color))


@dataclass
class BinPartition:
    ell: int
    bin: tuple
    h: int
    bad_nodes: frozenset
    bins: list = field(default_factory=list)
    residual: frozenset = frozenset()


def verify_coloring(g, coloring):
    col = coloring.color if hasattr(coloring, "color") else coloring
    if len(col) != g.n:
        return False
    return all(col[u] != col[v] for u, v in g.edges)


def palette_report(coloring):
    col = coloring.color if hasattr(coloring, "color") else coloring
    return {"colors_used": len(set(col)),
            "palette": getattr(coloring, "total", max(col, default=-1) + 1)}


# ---------------------------------------------------------------- greedy helpers

def _greedy_lists(g, order, allowed, color):
    """Color vertices in `order` with the first allowed color not taken by a neighbor.

    allowed(v) yields candidate colors in preference order.
    """
    for v in order:
        taken = {color[w] for w in g.adj[v] if color[w] >= 0}
        for x in allowed(v):
            if x not in taken:
                color[v] = x
                break
        else:
            raise ColoringError(f"list exhausted at vertex {v}")


def _degeneracy_greedy(g, verts, color, start):
    """Greedy over reverse degeneracy order of g[verts]; returns colors consumed."""
    if not verts:
        return 0
    sub, ids = g.induced(sorted(verts))
    order, k = degeneracy_order(sub)
    local = [-1] * sub.n
    _greedy_lists(sub, reversed(order), lambda v: range(k + 1), local)
    for i, c in enumerate(local):
        color[ids[i]] = start + c
    return max(local) + 1


def _charge_gather(cluster, words, what):
    if cluster is not None:
        cluster.charge_sharded(words, what)
        cluster.tick("collect")


# ---------------------------------------------------------------- layered list coloring

def layered_list_color(g, lam, d, cluster=None):
    if d <= 2 * lam:
        raise ColoringError(f"need d > 2*lambda, got d={d}, lambda={lam}")
    n = g.n
    color = [-1] * n
    if n == 0:
        return PaletteColoring((), (), 0)
    L = max(1, math.ceil(math.log(max(lam, 1)) / math.log(d / lam) - 1e-9))
    hp = h_partition(g, d, max_layers=L)
    if cluster is not None:
        for _ in range(hp.L):
            cluster.charge_sharded(n + 2 * g.m, "peel")
            cluster.tick("local")
    # stage 1: unlayered residual, gathered and greedily colored inside [0, d+1)
    res = sorted(hp.unlayered)
    if res:
        _charge_gather(cluster, len(res) + 2 * sum(1 for u, v in g.edges
                                                   if u in hp.unlayered and v in hp.unlayered),
                       "residual gather")
        used = _degeneracy_greedy(g, res, color, 0)
        if used > d + 1:
            raise ColoringError("residual is not (d)-degenerate")
    layers = hp.layers()
    # stage 2: layers L..2, each a list instance over [d+1, 3d+2)
    for i in range(hp.L, 1, -1):
        _greedy_lists(g, layers[i], lambda v: range(d + 1, 3 * d + 2), color)
        if cluster is not None:
            cluster.charge_sharded(len(layers[i]) * (2 * d + 2), f"layer {i} lists")
            cluster.tick("collect")
    # stage 3: layer 1 vertices have degree <= d, so d+1 colors always suffice
    if hp.L >= 1:
        _greedy_lists(g, layers[1], lambda v: range(d + 1), color)
        if cluster is not None:
            cluster.tick("collect")
    segs = (("base", 0, d + 1), ("layers", d + 1, 2 * d + 1))
    return PaletteColoring(tuple(color), segs, 3 * d + 2)


# ---------------------------------------------------------------- bin partitioning

def bins_for(lam):
    return max(2, math.ceil(lam ** 0.6 - 1e-9))


def bin_degree(lam, ell):
    return max(1, math.ceil(10 * lam / ell) - 1)


def partition_family(C, ell, k=PARTITION_K):
    return family_new(max(C, 2), max(1, math.ceil(math.log2(ell))) + BIN_SLACK_BITS, k)


def candidate_seeds(fam, count=CANDIDATES):
    mask = (1 << fam.seed_bits) - 1
    mult = (_MULT | 1) & mask | 1
    # index 0 would give the constant-zero polynomial, which puts everything in one bin
    return [(j * mult) & mask for j in range(1, min(count, (1 << fam.seed_bits) - 1) + 1)]


def bin_of(fam, seeds, names, ell):
    """Bin index per (seed, vertex): multiply-shift of the hash value into [0, ell)."""
    if len(names) == 0:
        return np.zeros((len(seeds), 0), dtype=np.int64)
    uc, inv = np.unique(np.asarray(names, dtype=np.int64), return_inverse=True)
    z = eval_vec(fam, seeds, uc)[:, inv].astype(np.int64)
    return (z * ell) >> fam.ell


def _bin_edges(g, bins_row):
    counts = {}
    for u, v in g.edges:
        if bins_row[u] == bins_row[v]:
            counts[bins_row[u]] = counts.get(bins_row[u], 0) + 1
    return counts


def partition_candidates(g_layer, fam, ell, names, seeds=None, c6=SIZE_CAP_C6):
    seeds = candidate_seeds(fam) if seeds is None else list(seeds)
    cap = c6 * max(g_layer.n, 1)
    B = bin_of(fam, seeds, names, ell)
    out = [s for s, row in zip(seeds, B)
           if all(x <= cap for x in _bin_edges(g_layer, row).values())]
    if not out:
        raise DerandError("no candidate seed keeps every bin under the size cap",
                          cap=cap, candidates=len(seeds))
    return out


def _bin_residual(g, verts, d):
    """Unpeeled core of g[verts] under degree-d peeling, plus the peeled layering."""
    if not verts:
        return [], {}
    sub, ids = g.induced(sorted(verts))
    hp = h_partition(sub, d, max_layers=sub.n)
    core = [ids[v] for v in sorted(hp.unlayered)]
    layer = {ids[v]: hp.layer[v] for v in range(sub.n) if hp.layer[v]}
    return core, layer


def residual_count(g_layer, bins_row, ell, d):
    tot = 0
    for b in range(ell):
        verts = [v for v in range(g_layer.n) if bins_row[v] == b]
        tot += len(_bin_residual(g_layer, verts, d)[0])
    return tot


def _orientation_out(g):
    order, _ = degeneracy_order(g)
    pos = {v: i for i, v in enumerate(order)}
    return [[w for w in g.adj[v] if pos[w] > pos[v]] for v in range(g.n)]


def partition_select(g_layer, cands, ell, lam, fam=None, names=None, rows=None):
    if not cands:
        raise DerandError("empty candidate set")
    d = bin_degree(lam, ell)
    if rows is None:
        rows = bin_of(fam, cands, names, ell)
    best = None
    for s, row in zip(cands, rows):
        r = residual_count(g_layer, row, ell, d)
        if best is None or r < best[0]:
            best = (r, s, row)
    r, s, row = best
    row = [int(x) for x in row]
    bins = [[v for v in range(g_layer.n) if row[v] == b] for b in range(ell)]
    out = _orientation_out(g_layer)
    lim = 4 * lam / ell
    bad = frozenset(v for v in range(g_layer.n)
                    if sum(1 for w in out[v] if row[w] == row[v]) > lim)
    residual = []
    for b in bins:
        residual.extend(_bin_residual(g_layer, b, d)[0])
    return BinPartition(ell, tuple(row), s, bad, bins, frozenset(residual))


def partition_estimator(g_layer, lam, fam, names, ell=None):
    """Total uncolorable vertices as a function of the seed (smaller is better).

    Table-backed, so only usable when the family's seed space is enumerable.
    """
    ell = ell or bins_for(lam)
    d = bin_degree(lam, ell)

    def batch(seeds):
        rows = bin_of(fam, seeds, names, ell)
        return [residual_count(g_layer, row, ell, d) for row in rows]
    tab = table_from_batches(fam.seed_bits, batch, batch_bits=10)
    return Estimator(fam.seed_bits, table=tab, direction="min")


# ---------------------------------------------------------------- full pipeline

def arb_color_layers(lam, delta_p=0.5):
    return max(1, math.ceil(1 / delta_p - 1e-9))


def arb_color_bound(lam, Lp):
    return 14 * Lp * lam + 4 * lam + 2


def arb_color(g, lam, delta_p=0.5, cluster=None, candidates=CANDIDATES):
    """Returns (PaletteColoring, info). info carries L' and the explicit bound."""
    if lam <= 1:
        pc = layered_list_color(g, 1, 3, cluster)
        return pc, {"L": 0, "bound": 11, "route": "layered"}
    color = [-1] * g.n
    if g.m == 0:
        return PaletteColoring(tuple(0 for _ in range(g.n)), (("edgeless", 0, 1),), 1 if g.n else 0), \
            {"L": 0, "bound": arb_color_bound(lam, 0), "route": "edgeless"}
    Lp = arb_color_layers(lam, delta_p)
    Dp = max(math.ceil(lam ** (1 + delta_p) - 1e-9), 2 * lam + 1)
    hp = h_partition(g, Dp, max_layers=Lp)
    if cluster is not None:
        for _ in range(hp.L):
            cluster.charge_sharded(g.n + 2 * g.m, "peel")
            cluster.tick("local")
    segs = []
    nxt = 0
    # unlayered residual: gathered, greedy along degeneracy
    res = sorted(hp.unlayered)
    if res:
        _charge_gather(cluster, len(res) * (2 * lam + 1), "unlayered gather")
        used = _degeneracy_greedy(g, res, color, nxt)
        segs.append(("unlayered", nxt, used))
        nxt += used
    ell = bins_for(lam)
    d = bin_degree(lam, ell)
    layers_info = []
    for j, verts in enumerate(hp.layers()):
        if j == 0 or not verts:
            continue
        gl, ids = g.induced(verts)
        names = list(square_color(gl, 2, cluster).color)
        C = max(names, default=0) + 1
        fam = partition_family(C, ell)
        seeds = candidate_seeds(fam, candidates)
        if cluster is not None:
            cluster.charge_sharded(gl.n * len(seeds), f"layer {j} candidates")
            cluster.tick("colored_sum", 2)
        cands = partition_candidates(gl, fam, ell, names, seeds)
        bp = partition_select(gl, cands, ell, lam, fam, names)
        if cluster is not None:
            cluster.charge_sharded(gl.n * len(cands), f"layer {j} selection")
            cluster.tick("colored_sum", 2)
        cap = SIZE_CAP_C6 * gl.n
        if any(x > cap for x in _bin_edges(gl, bp.bin).values()):
            raise DerandError("selected seed breaks the bin size cap", layer=j)
        # peeled parts of bins: disjoint palettes of d+1 colors each
        for b, bverts in enumerate(bp.bins):
            core, layer = _bin_residual(gl, bverts, d)
            base = nxt + b * (d + 1)
            peeled = sorted(layer, key=lambda v: (-layer[v], v))
            loc = [-1] * gl.n
            sub_allowed = set(layer)
            for v in peeled:
                taken = {loc[w] for w in gl.adj[v] if w in sub_allowed and loc[w] >= 0}
                x = 0
                while x in taken:
                    x += 1
                if x > d:
                    raise ColoringError("bin peeling produced a degree above d")
                loc[v] = x
                color[ids[v]] = base + x
        segs.append((f"layer{j}-bins", nxt, ell * (d + 1)))
        nxt += ell * (d + 1)
        # leftover across bins: gathered, greedy along degeneracy
        left = sorted(ids[v] for v in bp.residual)
        if left:
            _charge_gather(cluster, len(left) * (2 * lam + 1), f"layer {j} leftover")
            used = _degeneracy_greedy(g, left, color, nxt)
            segs.append((f"layer{j}-leftover", nxt, used))
            nxt += used
        bin_sizes = [len(b) for b in bp.bins]
        layers_info.append({"layer": j, "n": gl.n, "ell": ell, "d_bin": d, "seed": bp.h,
                            "candidates": len(cands), "residual": len(bp.residual),
                            "max_bin": max(bin_sizes), "bad_nodes": len(bp.bad_nodes)})
    pc = PaletteColoring(tuple(color), tuple(segs), nxt)
    return pc, {"L": hp.L, "bound": arb_color_bound(lam, hp.L), "route": "bins",
                "Delta_prime": Dp, "layers": layers_info}
