import itertools
import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from arbmpc.graph import Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_graphs(draw, max_n=10, max_m=None):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if max_m is not None:
        pairs_st = st.lists(st.sampled_from(pairs), max_size=max_m, unique=True) if pairs \
            else st.just([])
    else:
        pairs_st = st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([])
    return Graph.from_edges(n, draw(pairs_st))


def density_oracle(g):
    """Nash-Williams max ceil(m_H / (n_H - 1)) over all vertex subsets, by enumeration."""
    best = 0
    for k in range(2, g.n + 1):
        for sub in itertools.combinations(range(g.n), k):
            s = set(sub)
            mh = sum(1 for u, v in g.edges if u in s and v in s)
            best = max(best, -(-mh // (k - 1)))
    return best


def all_maximal_is(g):
    """Every maximal independent set, by subset enumeration (n <= 12)."""
    out = []
    for mask in range(1 << g.n):
        s = {v for v in range(g.n) if mask >> v & 1}
        if any(u in s and v in s for u, v in g.edges):
            continue
        if all(v in s or any(w in s for w in g.adj[v]) for v in range(g.n)):
            out.append(frozenset(s))
    return out


def all_maximal_matchings(g):
    out = []
    E = list(g.edges)
    for mask in range(1 << len(E)):
        M = [E[i] for i in range(len(E)) if mask >> i & 1]
        used = [x for e in M for x in e]
        if len(used) != len(set(used)):
            continue
        us = set(used)
        if all(u in us or v in us for u, v in E):
            out.append(frozenset(M))
    return out


def random_graph(n, p, seed):
    rng = random.Random(seed)
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)
                                if rng.random() < p])


@pytest.fixture
def rng():
    return random.Random(12345)


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE = {}


def record(criterion, ok, detail=""):
    ACCEPTANCE[str(criterion)] = (ok, detail)


def _order(key):
    head = key.split()[0]
    return (int(head) if head.isdigit() else 99, key)


def pytest_runtest_logreport(report):
    # a test that fails after recording PASS must not be reported as passing
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call" and report.failed and name.startswith("test_criterion_"):
        crit = name.split("_")[2]
        if ACCEPTANCE.get(crit, (False,))[0]:
            ACCEPTANCE[crit] = (False, "assertion failed after report")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE, key=_order):
        ok, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}  {detail}")
