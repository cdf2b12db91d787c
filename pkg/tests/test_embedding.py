import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chain, star
from hstdelay.embedding import (
    HstRoundingError,
    forest_decompose,
    frt_embed,
    max_distortion,
    merge_duplicate_points,
    round_up_pow2,
    round_weights_pow2,
)
from hstdelay.fileformat import euclidean_metric
from hstdelay.metric import HstCertificate, MetricSpace, Tree, validate_hst, validate_metric


def random_points(seed, n):
    rng = random.Random(seed)
    return [(F(rng.randint(0, 1000), 1000), F(rng.randint(0, 1000), 1000)) for _ in range(n)]


def test_single_point_embeds_as_one_leaf():
    emb = frt_embed(MetricSpace(((0,),)), 3)
    assert emb.hst.n == 2 and emb.hst.is_leaf(emb.leaf_map[0])


@pytest.mark.parametrize("seed", range(20))
def test_two_points_are_never_brought_closer(seed):
    emb = frt_embed(MetricSpace(((0, 5), (5, 0))), seed)
    assert emb.tree_distance(0, 1) >= 5


def test_coincident_points_must_be_merged_first():
    space = MetricSpace(((0, 0, 2), (0, 0, 2), (2, 2, 0)))
    with pytest.raises(ValueError):
        frt_embed(space, 0)
    merged, index = merge_duplicate_points(space)
    assert merged.n == 2 and index == (0, 0, 1)


@given(st.integers(0, 10**6), st.integers(2, 12))
@settings(max_examples=60, deadline=None)
def test_embedding_dominates_and_is_an_hst(seed, n):
    space, _ = merge_duplicate_points(euclidean_metric(random_points(seed, n)))
    emb = frt_embed(space, seed)
    assert isinstance(validate_hst(emb.hst, 2), HstCertificate)
    for i in range(space.n):
        assert emb.hst.is_leaf(emb.leaf_map[i])
        for j in range(space.n):
            assert emb.tree_distance(i, j) >= space.dist[i][j]
    assert len(set(emb.leaf_map)) == space.n
    assert max_distortion(space, emb) >= 1


def test_embedding_is_deterministic_in_the_seed():
    space = euclidean_metric(random_points(5, 10))
    a, b = frt_embed(space, 11), frt_embed(space, 11)
    assert (a.hst.parent, a.hst.weight, a.leaf_map) == (b.hst.parent, b.hst.weight, b.leaf_map)


def test_euclidean_metric_rounds_up_and_stays_a_metric():
    space = euclidean_metric([(0, 0), (1, 1), (F(1, 2), 0)])
    assert space.dist[0][1] == F(1415, 1000)  # sqrt(2) = 1.41421.. rounded up
    assert space.dist[0][2] == F(1, 2)
    assert validate_metric(space) is None


def test_forest_decomposition_of_the_8_1_4_chain():
    dec = forest_decompose(chain(8, 1, 4))
    assert dec.virtual_parent == {1: None, 2: 1, 3: 1}
    assert dec.trees == ((1, 2, 3),)
    assert dec.concretization[2] == (2,)
    assert dec.concretization[3] == (3, 2)


def test_decomposition_of_an_hst_is_the_identity():
    tree = star(4, 2, 1)
    dec = forest_decompose(tree)
    assert len(dec.trees) == 1
    assert all(dec.virtual_parent[e] == (None if e == 1 else tree.parent[e]) for e in tree.edges)
    assert all(dec.concretization[e] == (e,) for e in tree.edges)


def test_single_edge_decomposition():
    dec = forest_decompose(Tree((-1, 0), (0, 3)))
    assert dec.trees == ((1,),) and dec.concretization[1] == (1,)


def test_equal_weights_start_new_virtual_trees():
    # 8 -> 8 has no ancestor at least twice as heavy, so the lower edge is its own root
    dec = forest_decompose(chain(8, 8))
    assert dec.roots == (1, 2)


@given(st.lists(st.integers(1, 40), min_size=1, max_size=7))
@settings(max_examples=100, deadline=None)
def test_virtual_parent_is_the_nearest_heavy_enough_ancestor(weights):
    tree = chain(*weights)
    dec = forest_decompose(tree)
    for e in tree.edges:
        ancestors = []
        a = tree.parent[e]
        while a != tree.root:
            ancestors.append(a)
            a = tree.parent[a]
        heavy = [a for a in ancestors if tree.weight[a] >= 2 * tree.weight[e]]
        assert dec.virtual_parent[e] == (heavy[0] if heavy else None)
        # edges skipped on the way up are lighter than twice the edge itself
        assert all(tree.weight[x] < 2 * tree.weight[e] for x in dec.concretization[e][1:])
    for members in dec.trees:
        sub_parent = [dec.virtual_parent[e] for e in members[1:]]
        assert all(p in members for p in sub_parent)


def test_round_up_pow2_examples():
    assert round_up_pow2(3) == 4
    assert round_up_pow2(4) == 4
    assert round_up_pow2(F(3, 8)) == F(1, 2)
    rounded = round_weights_pow2(chain(8, 3))
    assert rounded.weight == (0, 8, 4)
    assert validate_hst(rounded, 2).is_pow2


def test_rounding_that_breaks_the_hst_is_reported():
    with pytest.raises(HstRoundingError):
        round_weights_pow2(chain(3, 3))
