import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from movebandit.errors import InvalidTree, TooShallow, UnknownAction
from movebandit.hst import (
    build_hst,
    check_conditions,
    collapse,
    complete_binary,
    deepen,
    from_groups,
    hst_distance,
    load_tree,
    random_tree,
    reshape_well_behaved,
    save_tree,
    star,
    tree_complexity,
    tree_from_dict,
    tree_to_dict,
    unary_chain,
    verify_dominance,
)
from movebandit.metric import grid1d, random_metric, uniform_metric
from movebandit.verify import faulty_tree


def brute_tree_distance(tree, i, j):
    """Walk both ancestor chains upward until they meet."""
    if i == j:
        return 0.0
    for h in range(tree.depth + 1):
        if tree.anc[h, i] == tree.anc[h, j]:
            return 2.0 ** (h - tree.depth)


def test_distance_examples():
    t = complete_binary(2)
    assert hst_distance(t, 0, 1) == 0.5
    assert hst_distance(t, 0, 3) == 1.0
    assert hst_distance(t, 2, 2) == 0.0
    with pytest.raises(UnknownAction):
        hst_distance(t, 0, 4)


@pytest.mark.parametrize("seed", range(5))
def test_distance_matrix_matches_walk(seed):
    t = random_tree(10, 4, np.random.default_rng(seed))
    d = t.distance_matrix()
    for i in range(t.k):
        for j in range(t.k):
            assert d[i, j] == brute_tree_distance(t, i, j)


def test_complexity_examples():
    c = tree_complexity(complete_binary(3))
    assert c.terms == (1.0, 1.0, 1.0) and c.value == 1.0
    assert tree_complexity(star(5)).value == 2.5
    assert tree_complexity(unary_chain(1)).value == 0.5
    assert tree_complexity(unary_chain(4)).value == 0.5


def test_from_groups_rejects_bad_nesting():
    with pytest.raises(InvalidTree):
        from_groups([[0, 1, 2], [0, 0, 1], [0, 1, 1]])
    with pytest.raises(InvalidTree):
        from_groups([[0, 1, 2], [0, 0, 1], [0, 0, 1]])


def test_canonical_ids():
    a = from_groups([[0, 1, 2, 3], [5, 5, 9, 9], [0, 0, 0, 0]])
    b = from_groups([[3, 2, 1, 0], [1, 1, 0, 0], [7, 7, 7, 7]])
    assert a == b


def test_build_uniform_is_star():
    t = build_hst(uniform_metric(4))
    assert t.depth == 1
    assert np.all(t.distance_matrix() == 1 - np.eye(4))
    assert verify_dominance(uniform_metric(4), t).max_ratio == 1.0


def test_build_single_point():
    t = build_hst(uniform_metric(1))
    assert (t.depth, t.k) == (1, 1)


def test_build_grid1d5():
    t = build_hst(grid1d(5))
    d = t.distance_matrix()
    assert set(np.unique(d[d > 0])) <= {0.25, 0.5, 1.0}
    assert verify_dominance(grid1d(5), t).ok


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 32), st.integers(0, 2 ** 31 - 1))
def test_build_dominates(k, seed):
    m = random_metric(k, seed)
    rep = verify_dominance(m, build_hst(m))
    assert rep.violations == []


def test_faulty_tree_violates():
    rep = verify_dominance(uniform_metric(4), faulty_tree(4))
    assert rep.violations and rep.max_ratio == 8.0


def test_deepen_examples():
    t = deepen(star(2))
    assert t.depth == 2 and hst_distance(t, 0, 1) == 1.0
    b = deepen(complete_binary(3))
    assert b.depth == 4 and tree_complexity(b).value == 1.0
    t0 = random_tree(9, 3, np.random.default_rng(1))
    assert np.array_equal(deepen(deepen(t0)).distance_matrix(), t0.distance_matrix())


def test_collapse_examples():
    t = collapse(complete_binary(2))
    assert t == star(4)
    assert hst_distance(complete_binary(2), 0, 1) == 0.5 and hst_distance(t, 0, 1) == 1.0
    assert collapse(unary_chain(3)).depth == 2
    with pytest.raises(TooShallow):
        collapse(star(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 6), st.integers(0, 2 ** 31 - 1))
def test_deepen_collapse_round_trip(k, depth, seed):
    t = random_tree(k, depth, np.random.default_rng(seed))
    assert collapse(deepen(t)) == t
    assert np.array_equal(collapse(deepen(t)).distance_matrix(), t.distance_matrix())


def test_condition_examples():
    r = check_conditions(complete_binary(3), 10 ** 6)
    assert not r.cond1
    t7 = complete_binary(3)
    for _ in range(4):
        t7 = deepen(t7)
    r = check_conditions(t7, 10 ** 6)
    assert (r.cond1, r.cond2a, r.cond2b, r.well_behaved) == (True, False, True, True)
    r = check_conditions(star(2), 4)
    assert r.cond1 and r.cond2a and r.well_behaved


def test_weighted_variant_reshapes():
    t = reshape_well_behaved(complete_binary(3), 10 ** 6, "weighted")
    assert check_conditions(t, 10 ** 6, "weighted").well_behaved


def test_reshape_examples():
    for base in (star(2), complete_binary(3)):
        out = reshape_well_behaved(base, 10 ** 6)
        assert out.depth == 7
        assert check_conditions(out, 10 ** 6).well_behaved
        assert tree_complexity(out).value == tree_complexity(base).value
    good = reshape_well_behaved(star(2), 10 ** 6)
    assert reshape_well_behaved(good, 10 ** 6) == good


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 32), st.integers(1, 8), st.integers(0, 2 ** 31 - 1),
       st.sampled_from([10, 1000, 10 ** 6]))
def test_reshape_properties(k, depth, seed, T):
    t = random_tree(k, depth, np.random.default_rng(seed))
    out = reshape_well_behaved(t, T)
    assert check_conditions(out, T).well_behaved
    assert np.all(out.distance_matrix() >= t.distance_matrix())
    assert tree_complexity(out).value == tree_complexity(t).value


def test_tree_json_round_trip(tmp_path):
    t = random_tree(11, 4, np.random.default_rng(3))
    path = tmp_path / "t.json"
    save_tree(t, path)
    assert load_tree(path) == t
    doc = json.loads(path.read_text())
    assert doc["depth"] == 4 and len(doc["leafAction"]) == 11


def test_tree_json_rejects_orphan():
    doc = tree_to_dict(star(3))
    doc["nodes"].append({"id": 99, "level": 1, "parent": None})
    with pytest.raises(InvalidTree):
        tree_from_dict(doc)


def test_subtree_members():
    t = complete_binary(2)
    assert list(t.subtree(0, 1)) == [0, 1]
    assert list(t.subtree(3, 2)) == [0, 1, 2, 3]
