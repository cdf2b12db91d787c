"""Online facility location on (>=2)-HSTs, with deadlines and with delay.

Both algorithms explore the tree top-down from the root when a service is
triggered.  Every node ``v`` below the root owns a counter ``c_v`` in
``[0, f]``; an exploration of the parent spends its budget of ``f`` by
investing into child counters, and a child whose counter fills up is opened
and explored in turn.  Services are instantaneous: every lookahead time used
to choose the next investment only ranks candidates, while openings,
connections and delay are all booked at the trigger time.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .engine import PendingSet, earliest_fl_critical, fl_critical_surplus
from .metric import CostBreakdown, Tree
from .requests import Instance, InstanceError, Request, check_facility_tree, crossing
from .trace import ExploreRecord, Investment, ServiceRecord, Trace

ZERO = Fraction(0)


class CounterBank:
    """Resettable counters with cumulative totals and phase numbers."""

    def __init__(self, capacity: Callable[[int], Fraction]):
        self.capacity = capacity
        self.value: dict[int, Fraction] = defaultdict(Fraction)
        self.cumulative: dict[int, Fraction] = defaultdict(Fraction)
        self.phase: dict[int, int] = defaultdict(int)

    def is_full(self, v: int) -> bool:
        return self.value[v] == self.capacity(v)

    def reset(self, v: int) -> None:
        self.value[v] = ZERO
        self.phase[v] += 1


@dataclass
class Frame:
    element: int
    budget: Fraction
    record: ExploreRecord


def invest_amount(x: Fraction, budget: Fraction, counter: Fraction, capacity: Fraction) -> Fraction:
    return min(x, budget, capacity - counter)


def invest(bank: CounterBank, frame: Frame, v: int, x) -> Fraction:
    y = invest_amount(Fraction(x), frame.budget, bank.value[v], bank.capacity(v))
    if y > 0:
        frame.record.investments.append(Investment(v, y, bank.phase[v]))
        bank.value[v] += y
        bank.cumulative[v] += y
        frame.budget -= y
    return y


@dataclass
class FlSolution:
    openings: list[tuple[Fraction, int]]
    connections: dict[int, tuple[Fraction, int]]
    cost: CostBreakdown


@dataclass
class FlRun:
    solution: FlSolution
    trace: Trace
    bank: CounterBank
    f: Fraction
    tree: Tree
    checks: dict[str, bool] = field(default_factory=dict)
    pieces: int = 1  # components run separately (see pipeline.facility_components)

    @property
    def k(self) -> int:
        return self.trace.k


class _FacilityRun:
    def __init__(self, instance: Instance, algorithm: str):
        if instance.tree is None:
            raise InstanceError("facility algorithms run on tree instances; embed the metric first")
        self.instance = instance
        self.tree = instance.tree
        self.f = instance.f
        check_facility_tree(self.tree, self.f)
        self.pending = PendingSet(self.tree)
        self.bank = CounterBank(lambda v: self.f)
        self.trace = Trace(algorithm)
        self.calls: dict[int, int] = defaultdict(int)
        self.buy = ZERO
        self.connect_cost = ZERO
        self.delay = ZERO
        self.service: ServiceRecord | None = None
        self.checks: dict[str, bool] = {"every_service_serves": True}

    # -- primitive actions -------------------------------------------------

    def open_facility(self, u: int, t: Fraction) -> None:
        self.trace.openings.append((t, u))
        self.buy += self.f
        if self.tree.is_leaf(u):
            for q in self.pending.at_leaf(u):
                self.connect(q, u, t)

    def connect(self, q: Request, u: int, t: Fraction) -> None:
        self.pending.serve(q.id, t)
        self.trace.connections.append((q.id, t, u))
        self.trace.served[q.id] = t
        self.connect_cost += self.tree.dist(u, q.location)
        if not q.has_deadline:
            self.delay += q.curve(t)
        self.service.served.append(q.id)

    def begin_explore(self, u: int, t: Fraction, depth: int) -> Frame:
        self.calls[u] += 1
        rec = ExploreRecord(u, t, self.calls[u], self.service.index, depth)
        self.trace.explores.append(rec)
        self.open_facility(u, t)
        return Frame(u, self.f, rec)

    def end_explore(self, frame: Frame, lam: Fraction | None) -> None:
        rec = frame.record
        rec.spent = self.f - frame.budget
        rec.lam = lam
        rec.pending_after = self.pending.any_in_subtree(frame.element)

    # -- event loop ----------------------------------------------------------

    def next_trigger(self, clock: Fraction) -> tuple[Fraction, int | None] | None:
        raise NotImplementedError

    def explore_root(self, t: Fraction) -> None:
        raise NotImplementedError

    def run(self) -> FlRun:
        requests = sorted(self.instance.requests, key=lambda q: (q.release, q.id))
        i, n = 0, len(requests)
        clock = requests[0].release if requests else ZERO
        same_instant = 0
        while True:
            next_release = requests[i].release if i < n else None
            trigger = self.next_trigger(clock) if self.pending else None
            if trigger is not None and (next_release is None or trigger[0] < next_release):
                same_instant = same_instant + 1 if trigger[0] == clock else 1
                if same_instant > n + 1:
                    raise RuntimeError(f"service loop at time {clock} does not make progress")
                clock = trigger[0]
                self.service = ServiceRecord(len(self.trace.services), clock, self.tree.root, trigger=trigger[1])
                self.trace.services.append(self.service)
                self.explore_root(clock)
                if not self.service.served:
                    self.checks["every_service_serves"] = False
            elif next_release is not None:
                clock = next_release
                while i < n and requests[i].release == clock:
                    self.pending.add(requests[i])
                    i += 1
            else:
                break
        self.trace.reported = CostBreakdown(self.buy, self.connect_cost, self.delay)
        solution = FlSolution(
            list(self.trace.openings),
            {qid: (t, u) for qid, t, u in self.trace.connections},
            self.trace.reported,
        )
        return FlRun(solution, self.trace, self.bank, self.f, self.tree, self.checks)


class _DeadlineRun(_FacilityRun):
    def next_trigger(self, clock):
        q = min(self.pending.all(), key=lambda q: (q.deadline, q.id))
        return q.deadline, q.id

    def explore_root(self, t):
        self.explore(self.tree.root, t, 0)

    def explore(self, u: int, t: Fraction, depth: int) -> None:
        frame = self.begin_explore(u, t, depth)
        tree = self.tree
        while frame.budget != 0:
            below = self.pending.in_subtree(u)
            if not below:
                break
            q = min(below, key=lambda r: (r.deadline, r.id))
            v = tree.child_toward(u, q.location)
            invest(self.bank, frame, v, tree.dist(u, q.location))
            if self.bank.is_full(v):
                self.bank.reset(v)
                self.explore(v, t, depth + 1)
            if q.id in self.pending:
                self.connect(q, u, t)
        below = self.pending.in_subtree(u)
        self.end_explore(frame, min((q.deadline for q in below), default=None))


class _DelayRun(_FacilityRun):
    def next_trigger(self, clock):
        t = earliest_fl_critical(self.tree, self.f, self.pending, clock)
        return None if t is None else (t, None)

    def explore_root(self, t):
        surplus = fl_critical_surplus(self.tree, self.f, self.pending, t)
        self.checks.setdefault("no_critical_before_trigger", True)
        if surplus.value > 0:
            self.checks["no_critical_before_trigger"] = False
        self.explore(self.tree.root, t, 0)

    def lookahead(self, u: int, t: Fraction):
        """Both detector times below ``u``: (t1, request) and (t2, child)."""
        tree = self.tree
        best1 = None
        for q in self.pending.in_subtree(u):
            when = crossing(q, tree.dist(u, q.location), t)
            if best1 is None or (when, q.id) < (best1[0], best1[1].id):
                best1 = (when, q)
        best2 = None
        for v in tree.children(u):
            when = earliest_fl_critical(tree, self.f, self.pending, t, top=v)
            if when is not None and (best2 is None or when < best2[0]):
                best2 = (when, v)
        return best1, best2

    def explore(self, u: int, t: Fraction, depth: int) -> None:
        frame = self.begin_explore(u, t, depth)
        tree = self.tree
        while frame.budget != 0 and self.pending.any_in_subtree(u):
            single, coalition = self.lookahead(u, t)
            if coalition is None or single[0] <= coalition[0]:
                q = single[1]
                v = tree.child_toward(u, q.location)
                distance = tree.dist(u, q.location)
                y = invest(self.bank, frame, v, distance)
                if self.bank.is_full(v):
                    self.bank.reset(v)
                    self.explore(v, t, depth + 1)
                if q.id in self.pending:
                    invest(self.bank, frame, v, distance - y)
                    assert not self.bank.is_full(v), "remainder investment cannot fill a counter"
                    self.connect(q, u, t)
            else:
                v = coalition[1]
                invest(self.bank, frame, v, self.f)
                if self.bank.is_full(v):
                    self.bank.reset(v)
                    self.explore(v, t, depth + 1)
        lam = None
        if self.pending.any_in_subtree(u):
            single, coalition = self.lookahead(u, t)
            lam = single[0] if coalition is None else min(single[0], coalition[0])
        self.end_explore(frame, lam)


def run_fl_deadline(instance: Instance) -> FlRun:
    if instance.problem != "fl-deadline":
        raise InstanceError(f"expected an fl-deadline instance, got {instance.problem}")
    return _DeadlineRun(instance, "fl-deadline").run()


def run_fl_delay(instance: Instance) -> FlRun:
    if instance.problem != "fl-delay":
        raise InstanceError(f"expected an fl-delay instance, got {instance.problem}")
    return _DelayRun(instance, "fl-delay").run()


def psi(tree: Tree, u: int, locations, f) -> Fraction:
    """Cheapest parent-closed facility solution inside ``T_u`` for requests at ``locations``.

    Requests are given by their leaf locations (a multiset); empty input costs 0.
    """
    f = Fraction(f)
    locations = list(locations)
    if not locations:
        return ZERO
    for v in locations:
        if not tree.is_ancestor(u, v):
            raise ValueError(f"location {v} lies outside the subtree of {u}")
    cost = f
    for c in tree.children(u):
        inside = [v for v in locations if tree.is_ancestor(c, v)]
        if inside:
            cost += min(sum(tree.dist(u, v) for v in inside), psi(tree, c, inside, f))
    return cost


def counter_checks(run: FlRun) -> dict[str, bool]:
    """Counter-level invariants of a finished facility run."""
    tree, f, trace = run.tree, run.f, run.trace
    k = trace.k
    cumulative = {v: run.bank.cumulative[v] for v in tree.edges}
    layers = [ZERO] * (tree.D + 1)
    layers[0] = k * f
    for v, total in cumulative.items():
        layers[tree.depth(v)] += total
    layer_ok = all(layers[j] <= layers[j - 1] for j in range(1, len(layers)))
    total_ok = sum(layers, ZERO) <= (tree.D + 1) * k * f

    per_phase: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    for rec in trace.explores:
        for inv in rec.investments:
            per_phase[(inv.target, inv.phase)] += inv.amount
    calls: dict[int, int] = defaultdict(int)
    for rec in trace.explores:
        calls[rec.element] += 1
    phase_ok = True
    for v in tree.edges:
        for j in range(calls[v]):
            if per_phase.get((v, j), ZERO) != f:
                phase_ok = False
        if per_phase.get((v, calls[v]), ZERO) >= f:
            phase_ok = False
    budget_ok = all(rec.spent <= f and (not rec.pending_after or rec.spent == f) for rec in trace.explores)
    return {
        "layer_counters_nonincreasing": layer_ok,
        "counters_at_most_DplusOne_kf": total_ok,
        "counter_phase_accounting": phase_ok,
        "budget_exactness": budget_ok,
    }
