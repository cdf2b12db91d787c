from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import linear
from hstdelay.accounting import account_trace, offline_side_indicators
from hstdelay.engine import PendingSet, earliest_saturation
from hstdelay.generate import generate
from hstdelay.metric import Tree
from hstdelay.oracle import OfflineSolution
from hstdelay.osd import detect_osd_critical, major_edges, run_osd
from hstdelay.pipeline import run_algorithm
from hstdelay.report import build_report, compute_bounds, osd_constants
from hstdelay.requests import Instance

# root R=0; a=1 under R (w=4); leaves s0=2 (w=1) and L=3 (w=2) under a
SMALL = Tree((-1, 0, 1, 1), (0, 4, 1, 2))
# two root edges of weight 4, each with one leaf edge of weight 1
TWIN = Tree((-1, 0, 0, 1, 2), (0, 4, 4, 1, 1))


def test_major_edges_from_a_leaf():
    assert set(major_edges(SMALL, 2)) == {1, 2, 3}


def test_heavier_edge_on_the_path_hides_deeper_edges():
    tree = Tree((-1, 0, 1, 1, 3), (0, 4, 1, 2, 1))
    assert 4 not in major_edges(tree, 2)
    assert set(major_edges(tree, 2)) == {1, 2, 3}


def test_server_at_the_top_of_the_root_edge():
    assert major_edges(Tree((-1, 0), (0, 3)), 0) == [1]


def test_lone_request_fires_at_its_saturation_time():
    pend = PendingSet(TWIN, [linear(0, 4, 0)])
    when, e, side = detect_osd_critical(TWIN, 3, pend, 0)
    # edge 4 hides behind the heavier edge 1 on the way, so only the far root edge is watched
    assert (e, side) == (2, "T")
    assert when == earliest_saturation(TWIN, 2, pend, 0) == 5


def test_nothing_pending_nothing_fires():
    assert detect_osd_critical(TWIN, 3, PendingSet(TWIN), 0) is None


def test_single_request_across_a_root_edge():
    inst = Instance("osd", (linear(0, 4, 0),), tree=TWIN, server_start=3)
    run = run_osd(inst)
    tr = run.trace
    assert tr.k == 1 and 0 in tr.served
    s = tr.services[0]
    assert s.approach <= 2 * TWIN.weight[s.element]
    assert s.element == 2 and s.server_after == 2  # ends across the root edge, below it
    assert tr.served == {0: F(5)}
    assert all(run.checks.values()), run.checks
    acct = account_trace(inst, tr, TWIN)
    assert acct.ok and acct.cost == tr.reported


def test_request_at_the_server_is_free():
    inst = Instance("osd", (linear(0, 3, 2),), tree=TWIN, server_start=3)
    tr = run_osd(inst).trace
    assert tr.k == 0 and tr.served == {0: F(2)} and tr.reported.total == 0


def test_no_services_no_cost():
    tr = run_osd(Instance("osd", (), tree=TWIN, server_start=3)).trace
    assert tr.k == 0 and tr.reported.total == 0


def test_end_to_end_constants():
    for D in range(1, 7):
        cb, cd = osd_constants(D)
        assert (cb, cd) == (52 * D + 130, 48 * D * D + 120 * D)


def test_offline_copy_of_the_online_walk_satisfies_the_bound():
    inst, _ = generate("random-hst", "osd", 6, 8, 3, "linear-slopes")
    result = run_algorithm(inst, "osd", 3)
    tr = result.trace
    offline = OfflineSolution("osd", moves=list(tr.moves), start=inst.server_start, cost=tr.reported)
    bounds = {b.name: b for b in compute_bounds(result, offline)}
    assert bounds["alg_vs_osd_feas"].ok and bounds["indicator_vs_osd_feas"].ok
    assert len(offline_side_indicators(result.tree, tr, offline)) == tr.k


def test_simultaneous_critical_sets_split_phases():
    # two watched parts saturate at the same instant on this instance
    inst, _ = generate("random-euclidean", "osd", 16, 30, 8, "linear-slopes")
    result = run_algorithm(inst, "osd", 8)
    assert result.checks["phase_containment"]


@given(st.integers(0, 10**6), st.sampled_from(["random-hst", "random-euclidean"]))
@settings(max_examples=25, deadline=None)
def test_random_runs_satisfy_their_bounds(seed, kind):
    inst, _ = generate(kind, "osd", 2 + seed % 14, 1 + seed % 20, seed, "linear-slopes")
    report = build_report(run_algorithm(inst, "osd", seed), inst)
    assert report.ok, (report.errors, [b for b in report.bounds if not b.ok], report.checks)
