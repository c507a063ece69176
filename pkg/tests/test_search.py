import csv
import math

import numpy as np
import pytest

from lrx.analysis import coset_gods_number
from lrx.errors import ResourceLimitError
from lrx.perm import MOVES, apply_move, batch_move
from lrx.search import GraphIndex, bfs, farthest_states, geodesic_ensemble
from lrx.space import GraphSpec, longest_element


def test_n3_layers():
    profile, table = bfs(GraphSpec("full", 3))
    assert profile.layer_sizes == [1, 3, 2]
    assert table.diameter == 2


@pytest.mark.parametrize("n", range(4, 10))
def test_full_diameter(table, n):
    t = table(n)
    prof = t.profile()
    assert prof.layer_sizes[0] == 1
    assert prof.total == math.factorial(n) == len(t)
    assert t.diameter == n * (n - 1) // 2


@pytest.mark.slow
def test_full_diameter_n10():
    profile, _ = bfs(GraphSpec("full", 10))
    assert profile.diameter == 45


def test_farthest_full(table):
    for n in range(4, 9):
        assert farthest_states(table(n)) == [longest_element(n)]


def test_coset_examples():
    profile, table = bfs(GraphSpec("coset", 8), (0, 0, 0, 0, 1, 1, 1, 1))
    assert profile.diameter == 12
    assert profile.total == math.comb(8, 4)
    assert len(farthest_states(bfs(GraphSpec("coset", 10))[1])) == 4
    assert len(farthest_states(bfs(GraphSpec("coset", 14))[1])) == 11


@pytest.mark.parametrize("n", range(6, 25, 2))
def test_coset_gods_number_matches_formula(n):
    profile, _ = bfs(GraphSpec("coset", n))
    assert profile.diameter == coset_gods_number(n)
    assert profile.total == math.comb(n, n // 2)


def test_bfs_errors():
    with pytest.raises(ValueError):
        bfs(GraphSpec("full", 5, x_trick=True))
    with pytest.raises(ResourceLimitError):
        bfs(GraphSpec("full", 12), mem_budget=1 << 20)
    with pytest.raises(ResourceLimitError):
        bfs(GraphSpec("full", 17))


def test_distance_lookup(table):
    t = table(6)
    assert t.distance(tuple(range(6))) == 0
    assert t.distance(longest_element(6)) == 15
    assert t.distance((1, 0, 2, 3, 4, 5)) == 1


def test_adjacent_distances_differ_by_at_most_one(table):
    t = table(9)
    rng = np.random.default_rng(0)
    states = np.array([rng.permutation(9) for _ in range(100_000)], dtype=np.uint8)
    d = t.distances_of(states)
    for g in MOVES:
        dn = t.distances_of(batch_move(states, g))
        assert (np.abs(d - dn) <= 1).all()


def test_thread_invariance():
    spec = GraphSpec("full", 9)
    _, a = bfs(spec, threads=1)
    _, b = bfs(spec, threads=4)
    assert len(a.layers) == len(b.layers)
    assert all(np.array_equal(x, y) for x, y in zip(a.layers, b.layers))


def test_graph_index(index):
    idx = index(5)
    assert len(idx) == 120
    assert idx.dist[idx.start] == 0
    states = idx.states()
    for i in range(len(idx)):
        for g, j in zip(MOVES, idx.nbr[i]):
            assert idx.state(int(j)) == apply_move(tuple(states[i]), g)
    assert np.array_equal(idx.bfs_from(idx.start), idx.dist)


def _enumerate_geodesics(idx, src, dst):
    """All shortest paths by DFS over edges that step one layer closer."""
    dt = idx.bfs_from(dst)
    paths = []

    def walk(v, path):
        if v == dst:
            paths.append(list(path))
            return
        for u in idx.nbr[v]:
            u = int(u)
            if dt[u] == dt[v] - 1 and u not in path[-1:]:
                path.append(u)
                walk(u, path)
                path.pop()

    walk(src, [src])
    # parallel edges (L == R at small n) would double count; dedup on vertex sequence
    return {tuple(p) for p in paths}


@pytest.mark.parametrize("n", [4, 5, 6])
def test_geodesic_dp_matches_enumeration(index, n):
    idx = index(n)
    src = longest_element(n)
    g = geodesic_ensemble(n, src, index=idx)
    paths = _enumerate_geodesics(idx, idx.index_of_state(src), idx.start)
    assert g.count == len(paths) > 0
    assert g.length == n * (n - 1) // 2
    pos = np.zeros_like(g.positions)
    for p in paths:
        for t, v in enumerate(p):
            for i, val in enumerate(idx.state(v)):
                pos[t, val] += i
    np.testing.assert_allclose(g.positions, pos / len(paths), atol=1e-12)
    assert g.positions[0].tolist() == [src.index(v) for v in range(n)]
    assert g.positions[-1].tolist() == list(range(n))


def test_geodesic_csv(tmp_path, index):
    g = geodesic_ensemble(4, (1, 0, 3, 2), index=index(4))
    path = tmp_path / "trajectory.csv"
    g.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["step", "v0", "v1", "v2", "v3"]
    assert len(rows) == g.length + 2


def test_layer_csv(tmp_path):
    profile, _ = bfs(GraphSpec("full", 4))
    path = tmp_path / "layers.csv"
    profile.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["distance", "layer_size"]
    assert [int(r[1]) for r in rows[1:]] == profile.layer_sizes


def test_graph_index_build_ignores_x_trick():
    idx = GraphIndex.build(GraphSpec("coset", 6, x_trick=True))
    assert len(idx) == 20 and idx.diameter == 7
