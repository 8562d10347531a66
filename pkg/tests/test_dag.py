import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import net
from gatecast import dag
from gatecast.dag import DagNetwork
from gatecast.errors import CycleDetected, MissingSinkDim, UnknownVertex


def brute_topo_orders(g):
    pos_ok = lambda perm: all(perm.index(t) < perm.index(h) for t, h in g.edges)
    return [list(p) for p in itertools.permutations(g.vertices) if pos_ok(p)]


def brute_paths(g, u, v):
    """Explicit path enumeration by DFS."""
    if u == v:
        return []
    found = []

    def go(x, path):
        if x == v:
            found.append(path)
            return
        for w in g.children(x):
            go(w, path + [w])

    go(u, [u])
    return found


@st.composite
def small_dags(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    perm = draw(st.permutations(range(n)))
    return DagNetwork(n, tuple((perm[i], perm[j]) for i, j in chosen))


def test_topo_sort_chain():
    assert dag.topo_sort(net(3, [(0, 1), (1, 2)])) == [0, 1, 2]


def test_topo_sort_diamond(diamond):
    order = dag.topo_sort(diamond)
    assert order == [0, 1, 2, 3]
    assert order == min(brute_topo_orders(diamond))


def test_topo_sort_cycle():
    with pytest.raises(CycleDetected):
        dag.topo_sort(DagNetwork(2, ((0, 1), (1, 0))))


@settings(max_examples=60, deadline=None)
@given(small_dags())
def test_topo_sort_is_smallest_valid_permutation(g):
    order = dag.topo_sort(g)
    assert sorted(order) == list(g.vertices)
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[t] < pos[h] for t, h in g.edges)
    if g.vertex_count <= 6:
        assert order == min(brute_topo_orders(g))


def test_sinks_and_sources(star):
    chain = net(3, [(0, 1), (1, 2)])
    assert dag.sinks(chain) == {2} and dag.sources(chain) == {0}
    single = net(1, [])
    assert dag.sinks(single) == dag.sources(single) == {0}
    assert dag.sinks(star) == {1, 2} and dag.sources(star) == {0}


def test_reach(diamond):
    chain = net(3, [(0, 1), (1, 2)])
    assert dag.reach(chain, 0)[0] == {1, 2}
    assert dag.reach(chain, 2)[1] == {0, 1}
    succ, pred = dag.reach(diamond, 3)
    assert pred == {0, 1, 2} and succ == set()
    with pytest.raises(UnknownVertex):
        dag.reach(diamond, 9)


@settings(max_examples=60, deadline=None)
@given(small_dags())
def test_reach_matches_boolean_closure(g):
    n = g.vertex_count
    m = np.zeros((n, n), dtype=bool)
    for t, h in g.edges:
        m[t, h] = True
    closure = m.copy()
    for _ in range(n):
        closure = closure | (closure.astype(int) @ m.astype(int) > 0)
    for x in g.vertices:
        succ, pred = dag.reach(g, x)
        assert succ == set(np.flatnonzero(closure[x]))
        assert pred == set(np.flatnonzero(closure[:, x]))
        assert x not in succ | pred


def test_count_paths_examples(diamond):
    chain = net(3, [(0, 1), (1, 2)])
    assert dag.count_paths(chain, 0, 2) == 1
    assert dag.count_paths(diamond, 0, 3) == len(brute_paths(diamond, 0, 3)) == 2
    assert dag.count_paths(diamond, 1, 2) == 0
    assert dag.count_paths(diamond, 3, 3) == 0
    with pytest.raises(UnknownVertex):
        dag.count_paths(diamond, 0, 7)


@settings(max_examples=80, deadline=None)
@given(small_dags())
def test_count_paths_matches_enumeration_and_recurrence(g):
    for u in g.vertices:
        for v in g.vertices:
            n = dag.count_paths(g, u, v)
            assert n == len(brute_paths(g, u, v))
            if u != v:
                rec = sum(1 if x == v else dag.count_paths(g, x, v) for x in g.children(u))
                assert n == rec


def test_assign_dims_examples():
    assert net(3, [(0, 1), (0, 2)]).dims == (3, 2, 2)
    assert net(6, [(i, i + 1) for i in range(5)]).dims == (2,) * 6
    # r->a, r->b; a->s1, a->s2; b->s3 worked bottom-up by hand
    t = net(6, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)])
    assert (t.dims[1], t.dims[2], t.dims[0]) == (3, 2, 4)


def test_assign_dims_heterogeneous_sinks():
    g = net(3, [(0, 1), (0, 2)], {1: 3, 2: 4})
    assert g.dims == (6, 3, 4)


def test_assign_dims_errors():
    with pytest.raises(MissingSinkDim):
        dag.assign_dims(DagNetwork(3, ((0, 1), (0, 2))), {1: 2})
    with pytest.raises(CycleDetected):
        dag.assign_dims(DagNetwork(2, ((0, 1), (1, 0))), {})


def test_validate(star):
    assert dag.validate(star) == []
    broken = DagNetwork(3, star.edges, (2, 2, 2))
    assert dag.validate(broken) == ["dimension recursion broken at 0"]
    cyc = DagNetwork(2, ((0, 1), (1, 0)), (2, 2))
    assert "not acyclic" in dag.validate(cyc)


def test_validate_reports_every_violation():
    g = DagNetwork(4, ((0, 1), (0, 2), (2, 3)), (2, 1, 5, 2))
    problems = dag.validate(g)
    assert "dimension of 1 below 2" in problems
    assert "dimension recursion broken at 0" in problems
    assert "dimension recursion broken at 2" in problems


def test_rejects_parallel_edges_and_self_loops():
    with pytest.raises(ValueError):
        DagNetwork(2, ((0, 1), (0, 1)))
    with pytest.raises(ValueError):
        DagNetwork(2, ((1, 1),))


@settings(max_examples=60, deadline=None)
@given(small_dags(), st.data())
def test_assign_then_validate_and_monotone(g, data):
    sink_dims = {v: data.draw(st.integers(2, 4)) for v in dag.sinks(g)}
    full = dag.assign_dims(g, sink_dims)
    assert dag.validate(full) == []
    for t, h in full.edges:
        assert full.dims[t] >= full.dims[h]
        if len(full.children(t)) >= 2:
            assert full.dims[t] >= full.dims[h] + 1


def test_json_round_trip(tree):
    again = dag.network_from_json(tree.to_json())
    assert again == tree


def test_non_sink_dims_in_file_are_ignored():
    doc = {"vertices": 3, "edges": [[0, 1], [0, 2]], "sink_dims": {"1": 2, "2": 2, "0": 9}}
    assert dag.network_from_json(doc).dims == (3, 2, 2)


def test_without_out_edges_keeps_dims(tree):
    cut = tree.without_out_edges(0)
    assert cut.dims == tree.dims
    assert cut.is_sink(0)
    assert dag.validate(cut) == []


def test_subgraph_relabels(tree):
    sub, mapping = tree.subgraph([1, 2, 3, 4, 5])
    assert mapping == {1: 0, 2: 1, 3: 2, 4: 3, 5: 4}
    assert sub.edges == ((0, 2), (0, 3), (1, 4))
    assert sub.dims == (3, 2, 2, 2, 2)


def test_random_network_respects_budget():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = dag.random_network(rng, max_vertices=7, sink_dims=(2, 3))
        assert dag.validate(g) == []
        assert g.total_dim() <= 4096
