import itertools

import numpy as np
import pytest

from lrx.perm import MOVES, apply_move
from lrx.space import (
    GraphSpec,
    batch_x_mask,
    coset_long_element,
    coset_project,
    dihedral_long_elements,
    longest_element,
    neighbors,
    x_pruned,
)


def bits(s):
    return tuple(int(c) for c in s)


def test_neighbors_full():
    spec = GraphSpec("full", 3)
    assert [(g.value, s) for g, s in neighbors((0, 1, 2), spec)] == [
        ("L", (1, 2, 0)),
        ("R", (2, 0, 1)),
        ("X", (1, 0, 2)),
    ]


def test_neighbors_x_trick():
    spec = GraphSpec("full", 3, x_trick=True)
    assert [(g.value, s) for g, s in neighbors((0, 1, 2), spec)] == [("L", (1, 2, 0)), ("R", (2, 0, 1))]
    assert len(neighbors((1, 0, 2), spec)) == 3


def test_coset_moves():
    assert apply_move(bits("0101"), "L") == bits("1010")
    spec = GraphSpec("coset", 4, x_trick=True)
    assert x_pruned(bits("0011"), spec)
    assert x_pruned(bits("1100"), spec)  # X would swap equal entries
    assert x_pruned(bits("0101"), spec)
    assert not x_pruned(bits("1001"), spec)
    assert not x_pruned(bits("1100"), GraphSpec("coset", 4))


def test_neighbor_counts_and_validity():
    for kind, n in [("full", 5), ("coset", 6)]:
        for xt in (False, True):
            spec = GraphSpec(kind, n, xt)
            base = spec.identity()
            states = set(itertools.permutations(base))
            for s in states:
                nb = neighbors(s, spec)
                assert len(nb) == 3 if not xt else len(nb) in (2, 3)
                assert [g for g, _ in nb] == list(MOVES[: len(nb)])
                for _, t in nb:
                    spec.validate(t)


def test_batch_x_mask_matches_scalar():
    rng = np.random.default_rng(0)
    for spec in (GraphSpec("full", 7, True), GraphSpec("coset", 8, True)):
        states = np.array([rng.permutation(spec.identity()) for _ in range(100)])
        mask = batch_x_mask(states, spec)
        assert mask.tolist() == [not x_pruned(tuple(s), spec) for s in states]
    assert batch_x_mask(states, GraphSpec("coset", 8)).all()


def test_longest_element():
    assert longest_element(4) == (1, 0, 3, 2)
    assert longest_element(5) == (1, 0, 4, 3, 2)
    assert longest_element(6) == (1, 0, 5, 4, 3, 2)
    with pytest.raises(ValueError):
        longest_element(2)


def test_dihedral_elements():
    r = dihedral_long_elements(4)
    assert r[1] == (1, 0, 3, 2)
    assert r[3] == (3, 2, 1, 0)
    for n in range(3, 10):
        rs = dihedral_long_elements(n)
        assert len(set(rs)) == n
        assert rs[1] == longest_element(n)
        for k, rk in enumerate(rs):
            assert all((rk[i] + i) % n == k for i in range(n))
            assert all(rk[rk[i]] == i for i in range(n))  # involutions


def test_coset_project():
    assert coset_project(tuple(range(6))) == bits("000111")
    assert coset_project((1, 0, 7, 6, 5, 4, 3, 2)) == bits("00111100")
    assert coset_project((3, 2, 1, 0)) == bits("1100")
    with pytest.raises(ValueError):
        coset_project((0, 1, 2))


def test_projection_commutes_with_moves():
    for p in itertools.permutations(range(6)):
        for g in MOVES:
            assert coset_project(apply_move(p, g)) == apply_move(coset_project(p), g)


def test_coset_long_element():
    assert coset_long_element(8) == bits("11001100")
    assert coset_long_element(10) == bits("1100111000")
    c6 = coset_long_element(6)
    assert c6 == bits("101100") and sum(c6) == 3
    for n in range(4, 60, 2):
        c = coset_long_element(n)
        assert len(c) == n and sum(c) == n // 2


def test_graph_spec_validation():
    with pytest.raises(ValueError):
        GraphSpec("coset", 7)
    with pytest.raises(ValueError):
        GraphSpec("coset", 2)
    with pytest.raises(ValueError):
        GraphSpec("full", 1)
    with pytest.raises(ValueError):
        GraphSpec("torus", 5)
    spec = GraphSpec("coset", 6, True)
    assert GraphSpec.from_dict(spec.to_dict()) == spec
    assert spec.to_dict() == {"kind": "coset", "n": 6, "x_trick": True}
    assert spec.parse("010101") == bits("010101")
    assert spec.format(bits("010101")) == "010101"
    with pytest.raises(ValueError):
        spec.parse("011101")
    assert GraphSpec("full", 5).parse("1,0,4,3,2") == (1, 0, 4, 3, 2)
