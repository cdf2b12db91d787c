from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chain, linear, star
from hstdelay.engine import (
    PendingSet,
    earliest_fl_critical,
    earliest_saturation,
    fl_connection_surplus,
    fl_critical_curve,
    fl_critical_surplus,
    saturation_curve,
    saturation_surplus,
)
from hstdelay.fl import psi
from hstdelay.metric import Tree, spanned_weight
from hstdelay.oracle import brute_psi, brute_saturation
from hstdelay.requests import PiecewiseLinear, Request


def test_two_leaf_saturation_below_and_at_threshold():
    tree = star(4, 1, 1)
    # delays 2 and 3 at t=2: slopes 1 and 3/2 released at 0
    pend = PendingSet(tree, [linear(0, 2, 0, 1), linear(1, 3, 0, F(3, 2))])
    rep = saturation_surplus(tree, 1, pend, 2)
    assert rep.value == 3 and rep.value < tree.weight[1]
    pend = PendingSet(tree, [linear(0, 2, 0, F(3, 2)), linear(1, 3, 0, F(3, 2))])
    rep = saturation_surplus(tree, 1, pend, 2)
    assert rep.value == 4 and rep.witness == (0, 1)
    assert spanned_weight(tree, 1, [2, 3]) == 6


def test_no_pending_means_zero_and_never():
    tree = star(4, 1, 1)
    empty = PendingSet(tree)
    assert saturation_surplus(tree, 1, empty, 7).value == 0
    assert earliest_saturation(tree, 1, empty, 0) is None
    assert earliest_fl_critical(tree, 5, empty, 0) is None


def test_single_hinge_saturation_crossing():
    tree = chain(2, 1)
    pend = PendingSet(tree, [linear(0, 2, 0)])
    assert saturation_curve(tree, 1, pend)(F(5, 2)) == F(3, 2)
    assert earliest_saturation(tree, 1, pend, 0) == 3
    assert earliest_saturation(tree, 1, pend, 4) == 4


def test_coalition_crossing_is_earlier_than_any_single_request():
    tree = star(4, 1, 1)
    pend = PendingSet(tree, [linear(0, 2, 0), linear(1, 3, 0)])
    when = earliest_saturation(tree, 1, pend, 0)
    assert when == 3
    # grid scan in steps of 1/4 agrees with the curve
    grid = [F(i, 4) for i in range(0, 40)]
    first = next(t for t in grid if brute_saturation(tree, 1, pend.all(), t) >= 4)
    assert first == when
    alone = PendingSet(tree, [linear(0, 2, 0)])
    assert earliest_saturation(tree, 1, alone, 0) == 5


def test_connection_surplus():
    tree = chain(3, 1)
    pend = PendingSet(tree, [linear(0, 2, 0)])
    assert fl_connection_surplus(tree, 0, pend, 5) == 1
    assert fl_connection_surplus(tree, 0, pend, 3) == 0
    pend.add(linear(1, 2, 0, 2))
    assert fl_connection_surplus(tree, 0, pend, 5) == 1 + 6


def test_psi_chain_example():
    tree = chain(3, 1)
    assert psi(tree, 0, [2], 5) == 9
    assert psi(tree, 1, [2], 5) == 6
    assert brute_psi(tree, 0, [2], 5) == 9
    assert psi(tree, 0, [], 5) == 0


def test_psi_for_a_leaf_child_of_the_root():
    tree = star(3, 1)
    leaf_edge = Tree((-1, 0), (0, 3))
    assert psi(leaf_edge, 0, [1], 5) == 5 + min(3, 5)
    assert psi(leaf_edge, 0, [1], 2) == 2 + min(3, 2)
    assert psi(tree, 0, [2], 5) == 5 + 4


def test_fl_critical_at_nine():
    tree = chain(3, 1)
    pend = PendingSet(tree, [linear(0, 2, 0)])
    assert earliest_fl_critical(tree, 5, pend, 0) == 9
    assert fl_critical_surplus(tree, 5, pend, 9).value == 0
    assert fl_critical_surplus(tree, 5, pend, 8).value < 0


# -- properties: dynamic programs against enumeration ------------------------


@st.composite
def tree_with_requests(draw, max_nodes=9, max_requests=7):
    n = draw(st.integers(2, max_nodes))
    parent = [-1, 0] + [draw(st.integers(1, v - 1)) for v in range(2, n)]
    weight = [0] + [F(draw(st.integers(1, 12)), draw(st.integers(1, 2))) for _ in range(1, n)]
    tree = Tree(tuple(parent), tuple(weight))
    leaves = list(tree.leaves)
    reqs = []
    for i in range(draw(st.integers(0, max_requests))):
        r = F(draw(st.integers(0, 12)), 2)
        if draw(st.booleans()):
            delay = PiecewiseLinear.linear(r, F(draw(st.integers(1, 8)), 4))
        else:
            bend = r + F(draw(st.integers(1, 6)))
            delay = PiecewiseLinear(((r, 0), (bend, F(draw(st.integers(0, 6))))), F(draw(st.integers(1, 4)), 2))
        reqs.append(Request(i, draw(st.sampled_from(leaves)), r, delay))
    return tree, reqs


@given(tree_with_requests(), st.fractions(0, 30))
@settings(max_examples=120, deadline=None)
def test_saturation_dp_matches_subset_enumeration(case, t):
    tree, reqs = case
    pend = PendingSet(tree, reqs)
    for e in tree.edges:
        below = [q for q in reqs if tree.is_ancestor(e, q.location)]
        dp = saturation_surplus(tree, e, pend, t).value
        assert dp == brute_saturation(tree, e, below, t)
        if below:
            assert saturation_curve(tree, e, pend)(t) == dp
        else:
            assert dp == 0


@given(tree_with_requests(max_requests=6))
@settings(max_examples=120, deadline=None)
def test_psi_matches_ancestor_closed_enumeration(case):
    tree, reqs = case
    locs = [q.location for q in reqs]
    for u in tree.bfs_order:
        inside = [v for v in locs if tree.is_ancestor(u, v)]
        assert psi(tree, u, inside, 5) == brute_psi(tree, u, inside, 5)


@given(tree_with_requests(max_requests=6), st.fractions(0, 30), st.integers(1, 30))
@settings(max_examples=80, deadline=None)
def test_fl_surplus_is_the_best_subset_gain(case, t, f):
    """S(root, t) = max(-f, max over nonempty Q of d_Q(t) - psi(Q))."""
    tree, reqs = case
    pend = PendingSet(tree, reqs)
    best = F(-f)
    m = len(reqs)
    for mask in range(1, 1 << m):
        group = [reqs[i] for i in range(m) if mask >> i & 1]
        gain = sum((q.curve(t) for q in group), F(0)) - brute_psi(tree, 0, [q.location for q in group], f)
        best = max(best, gain)
    rep = fl_critical_surplus(tree, f, pend, t)
    assert rep.value == best
    if reqs:
        assert fl_critical_curve(tree, f, pend)(t) == best
    if rep.witness:
        group = [q for q in reqs if q.id in rep.witness]
        gain = sum((q.curve(t) for q in group), F(0)) - psi(tree, 0, [q.location for q in group], f)
        assert gain >= rep.value


@given(tree_with_requests(max_requests=5), st.fractions(0, 20))
@settings(max_examples=80, deadline=None)
def test_earliest_saturation_is_a_first_crossing(case, t0):
    tree, reqs = case
    pend = PendingSet(tree, reqs)
    e = tree.root_edge
    when = earliest_saturation(tree, e, pend, t0)
    if when is None:
        assert not reqs
        return
    assert saturation_surplus(tree, e, pend, when).value >= tree.weight[e]
    if when > t0:
        assert saturation_surplus(tree, e, pend, (t0 + when) / 2).value < tree.weight[e]
