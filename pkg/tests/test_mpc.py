import pytest
from hypothesis import given
from hypothesis import strategies as st

from arbmpc.graph import gen_bounded_arboricity, path_graph
from arbmpc.graph import Graph, star_graph
from arbmpc.mpc import (BallStore, MemoryViolation, MemoryWarning, cluster_new,
                        collect_balls, double_balls, remove_and_notify, run_primitive)


def big(n):
    # roomy cluster: accounting runs, limits never bind
    return cluster_new(10 ** 6, 0.99, "report", global_factor=1e9)


def test_cluster_sizes():
    assert cluster_new(1024, 0.5).S == 32
    assert cluster_new(2 ** 16, 0.25).S == 16
    with pytest.raises(ValueError):
        cluster_new(16, 1.0)
    with pytest.raises(ValueError):
        cluster_new(1, 0.5)


def test_primitives():
    c = cluster_new(64, 0.5)
    assert run_primitive(c, "prefix_sum", [1, 1, 1, 1]) == [1, 2, 3, 4]
    assert c.rounds == 1
    assert run_primitive(c, "dedup", [3, 1, 3]) == [1, 3]
    assert run_primitive(c, "sort", [3, 1, 2]) == [1, 2, 3]
    assert run_primitive(c, "filter", [1, 2, 3, 4], key=lambda x: x % 2) == [1, 3]
    assert run_primitive(c, "predecessor", [(1, "a"), (2, None), (3, "b"), (4, None)]) == \
        [(1, "a"), (2, "a"), (3, "b"), (4, "b")]
    g = gen_bounded_arboricity(40, 2, 1)
    out = dict(run_primitive(c, "colored_sum", [(g.deg(v), 1) for v in range(g.n)]))
    tally = {}
    for d in g.degrees():
        tally[d] = tally.get(d, 0) + 1
    assert out == tally
    assert c.rounds == 6


def test_global_violation_strict_and_report():
    c = cluster_new(16, 0.5, global_factor=1)
    with pytest.raises(MemoryViolation):
        run_primitive(c, "sort", list(range(100)))
    c = cluster_new(16, 0.5, "report", global_factor=1)
    with pytest.warns(MemoryWarning):
        run_primitive(c, "sort", list(range(100)))
    assert c.violations


def test_ball_examples():
    g = path_graph(9)
    st_ = collect_balls(big(9), g, 2, [4])
    assert st_.balls[4][0] == frozenset(range(2, 7))
    g = star_graph(8)
    assert len(collect_balls(big(9), g, 1, [0]).balls[0][0]) == 9
    s0 = collect_balls(big(9), g, 0)
    assert all(s0.balls[v] == (frozenset([v]), frozenset()) for v in range(9))


def test_ball_violation_names_vertex():
    c = cluster_new(9, 0.5)
    with pytest.raises(MemoryViolation) as e:
        collect_balls(c, star_graph(8), 1)
    assert e.value.info["vertex"] == 0


def test_double_path():
    g = path_graph(17)
    s1 = collect_balls(big(17), g, 1)
    assert len(s1.balls[8][0]) == 3
    s2 = double_balls(big(17), s1, g)
    assert len(s2.balls[8][0]) == 5
    assert s2 == collect_balls(None, g, 2)


def test_frozen_absent():
    g = path_graph(10)
    s = collect_balls(None, g, 1, [2, 3, 4])
    d = double_balls(None, s, g)
    assert set(d.balls) == {2, 3, 4}
    assert d == collect_balls(None, g, 2, [2, 3, 4])


@given(st.integers(2, 120), st.integers(1, 3), st.integers(0, 999), st.integers(1, 4))
def test_double_equals_collect(n, lam, seed, r):
    g = gen_bounded_arboricity(n, lam, seed)
    act = [v for v in range(n) if v % 3]
    s = collect_balls(None, g, r, act)
    assert double_balls(None, s, g) == collect_balls(None, g, 2 * r, act)


def test_remove_and_notify():
    g = gen_bounded_arboricity(30, 2, 2)
    s = collect_balls(None, g, 2)
    assert remove_and_notify(None, s, range(30)).balls == {}
    assert remove_and_notify(None, s, []) == s


@given(st.integers(3, 60), st.integers(0, 999))
def test_remove_matches_fresh(n, seed):
    g = gen_bounded_arboricity(n, 2, seed)
    # greedy MIS and its neighborhood
    I = set()
    for v in range(n):
        if not any(w in I for w in g.adj[v]):
            I.add(v)
            break
    rem = set(I)
    for v in I:
        rem.update(g.adj[v])
    s = remove_and_notify(None, collect_balls(None, g, 2), rem)
    keep = [v for v in range(n) if v not in rem]
    g2 = Graph.from_edges(n, [e for e in g.edges if e[0] not in rem and e[1] not in rem])
    fresh = collect_balls(None, g2, 2, keep)
    assert s == fresh


def test_rounds_monotone_and_deterministic():
    def run():
        c = cluster_new(256, 0.8, "report", global_factor=64)
        g = gen_bounded_arboricity(256, 1, 3)
        seen = [c.rounds]
        s = collect_balls(c, g, 1)
        seen.append(c.rounds)
        double_balls(c, s, g)
        seen.append(c.rounds)
        return seen, c.metrics()
    a, b = run(), run()
    assert a == b and a[0] == sorted(a[0])
