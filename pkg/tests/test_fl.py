from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chain, deadline, linear
from hstdelay.accounting import account_trace
from hstdelay.fl import CounterBank, Frame, invest, invest_amount, run_fl_deadline, run_fl_delay
from hstdelay.generate import generate
from hstdelay.pipeline import facility_components, run_algorithm
from hstdelay.report import build_report
from hstdelay.requests import Instance, InstanceError
from hstdelay.trace import ExploreRecord


def test_invest_amount_examples():
    assert invest_amount(F(10), F(5), F(3), F(7)) == 4
    assert invest_amount(F(0), F(5), F(3), F(7)) == 0
    assert invest_amount(F(3), F(10), F(0), F(7)) == 3


def test_zero_investment_leaves_state_alone():
    bank = CounterBank(lambda v: F(7))
    frame = Frame(0, F(5), ExploreRecord(0, F(0), 0, 0, 0))
    assert invest(bank, frame, 3, 0) == 0
    assert bank.value[3] == 0 and frame.record.investments == []


def test_single_deadline_request():
    inst = Instance("fl-deadline", (deadline(0, 2, 0, 10),), tree=chain(3, 1), f=5)
    run = run_fl_deadline(inst)
    tr = run.trace
    assert tr.k == 1 and tr.services[0].time == 10
    assert tr.served == {0: F(10)}
    opened = {v for _, v in tr.openings}
    assert 0 in opened and all(inst.tree.parent[v] in opened for v in opened if v != 0)
    acct = account_trace(inst, tr, inst.tree)
    assert acct.ok and acct.cost == tr.reported
    assert tr.reported.total <= 3 * (inst.tree.D + 1) * tr.k * 5


def test_no_requests_no_services():
    for problem, runner in (("fl-deadline", run_fl_deadline), ("fl-delay", run_fl_delay)):
        run = runner(Instance(problem, (), tree=chain(3, 1), f=5))
        assert run.trace.k == 0 and run.trace.reported.total == 0


def test_single_delay_request_is_served_at_nine():
    inst = Instance("fl-delay", (linear(0, 2, 0),), tree=chain(3, 1), f=5)
    run = run_fl_delay(inst)
    tr = run.trace
    assert tr.k == 1 and tr.services[0].time == 9
    assert tr.served == {0: F(9)} and tr.reported.delay == 9
    assert [qid for qid, _, _ in tr.connections] == [0]
    assert tr.reported.delay <= tr.reported.buy + tr.reported.connect
    acct = account_trace(inst, tr, inst.tree)
    assert acct.ok and acct.cost == tr.reported


def test_deadline_request_rejected_in_delay_instance():
    with pytest.raises(InstanceError):
        Instance("fl-delay", (deadline(0, 2, 0, 3),), tree=chain(3, 1), f=5)


def test_heavy_edge_is_rejected_with_the_assumption_named():
    inst = Instance("fl-deadline", (deadline(0, 2, 0, 3),), tree=chain(8, 1), f=5)
    with pytest.raises(InstanceError, match="w\\(e\\) <= f"):
        run_algorithm(inst, "fl-deadline")


def test_components_cover_every_node_once():
    tree = chain(16, 8, 4, 2)
    comps = facility_components(tree, F(5))
    nodes = sorted(v for c in comps for v in c.nodes)
    assert nodes == list(range(tree.n))
    for c in comps:
        assert all(c.tree.weight[e] <= F(5, 2) for e in c.tree.edges)


@given(st.integers(0, 10**6), st.sampled_from(["random-hst", "random-euclidean"]))
@settings(max_examples=25, deadline=None)
def test_deadline_runs_meet_every_deadline_and_bound(seed, kind):
    inst, _ = generate(kind, "fl-deadline", 2 + seed % 10, 1 + seed % 20, seed, "deadline-uniform")
    result = run_algorithm(inst, "fl-deadline", seed)
    report = build_report(result, inst)
    assert report.ok, (report.errors, [b for b in report.bounds if not b.ok], report.checks)


@given(st.integers(0, 10**6), st.sampled_from(["linear-slopes", "bursty-coalitions"]))
@settings(max_examples=15, deadline=None)
def test_delay_runs_satisfy_their_bounds(seed, profile):
    inst, _ = generate("random-hst", "fl-delay", 2 + seed % 6, 1 + seed % 10, seed, profile)
    result = run_algorithm(inst, "fl-delay", seed)
    report = build_report(result, inst)
    assert report.ok, (report.errors, [b for b in report.bounds if not b.ok], report.checks)
