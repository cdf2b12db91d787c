from fractions import Fraction as F

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chain, linear, star
from hstdelay.accounting import account_trace
from hstdelay.generate import generate
from hstdelay.mad import is_cut, run_mad_general, run_mad_hst
from hstdelay.metric import Tree
from hstdelay.pipeline import run_algorithm
from hstdelay.report import build_report, concretization_ratio, virtual_tree_buy_ratio
from hstdelay.requests import Instance


def test_chain_service_at_three():
    inst = Instance("mad", (linear(0, 2, 0),), tree=chain(2, 1))
    run = run_mad_hst(inst)
    tr = run.trace
    assert tr.transmissions == [(F(3), (1, 2))]
    assert tr.reported.buy == 3 and tr.reported.delay == 3 and tr.k == 1
    D = inst.tree.D
    assert tr.reported.total == 6 <= 2 * tr.k * D * inst.tree.weight[1] == 8
    acct = account_trace(inst, tr, inst.tree)
    assert acct.ok and acct.cost == tr.reported


def test_no_requests_no_transmissions():
    run = run_mad_hst(Instance("mad", (), tree=chain(2, 1)))
    assert run.trace.transmissions == [] and run.trace.reported.total == 0


def test_general_run_on_an_hst_matches_the_hst_run():
    reqs = (linear(0, 2, 0), linear(1, 3, 1, 2), linear(2, 2, 5, F(1, 2)))
    inst = Instance("mad", reqs, tree=star(4, 1, 2))
    a, b = run_mad_hst(inst).trace, run_mad_general(inst).trace
    assert a.transmissions == b.transmissions
    assert a.served == b.served and a.reported == b.reported


def test_concrete_purchase_follows_the_concretization():
    inst = Instance("mad", (linear(0, 3, 0, 4),), tree=chain(8, 1, 4))
    run = run_mad_general(inst)
    for s in run.trace.services:
        if 3 in s.virtual_edges:
            assert {2, 3} <= set(s.tree)
    assert any(3 in s.virtual_edges for s in run.trace.services)
    acct = account_trace(inst, run.trace, inst.tree)
    assert acct.ok and acct.cost == run.trace.reported


def test_concretization_can_exceed_twice_the_virtual_buy():
    """Per transmission the concrete buy is not bounded by 2x virtual: this
    chain buys 20 + 5*10 concretely for a virtual purchase of 20 + 10."""
    tree = chain(20, 10, 10, 10, 10, 10)
    inst = Instance("mad", (linear(0, 6, 0, 100),), tree=tree)
    result = run_algorithm(inst, "mad-general")
    assert concretization_ratio(result) > 2
    assert virtual_tree_buy_ratio(result) <= 1


def test_cut_check():
    tree = star(4, 1, 1)
    assert is_cut(tree, [1])
    assert is_cut(tree, [2, 3])
    assert not is_cut(tree, [1, 2])


@given(st.integers(0, 10**6), st.sampled_from(["random-hst", "random-euclidean"]))
@settings(max_examples=25, deadline=None)
def test_hst_runs_satisfy_their_bounds(seed, kind):
    inst, _ = generate(kind, "mad", 2 + seed % 12, 1 + seed % 20, seed, "linear-slopes")
    report = build_report(run_algorithm(inst, "mad", seed), inst)
    assert report.ok, (report.errors, [b for b in report.bounds if not b.ok], report.checks)


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_general_tree_runs_satisfy_their_bounds(seed):
    inst, _ = generate("random-tree", "mad", 2 + seed % 12, 1 + seed % 20, seed, "bursty-coalitions")
    report = build_report(run_algorithm(inst, "mad-general", seed), inst)
    assert report.ok, (report.errors, [b for b in report.bounds if not b.ok], report.checks)


def test_several_root_edges_are_independent():
    tree = Tree((-1, 0, 0, 1, 2), (0, 4, 2, 1, 1))
    inst = Instance("mad", (linear(0, 3, 0), linear(1, 4, 0)), tree=tree)
    run = run_mad_hst(inst)
    assert set(run.services_per_root) == {1, 2}
    for s in run.trace.services:
        assert all(tree.is_ancestor(s.element, e) for e in s.tree)
