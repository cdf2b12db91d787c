"""Online multilevel aggregation with delay.

On a (>=2)-HST a service fires when the pending requests saturate a root
edge.  The service grows a transmission tree from that root edge: each
explored edge spends a budget equal to its weight on the counters of the
live cut below it, always feeding the cut edge whose subtree would saturate
first, and a cut edge whose counter fills is added and explored.

General trees are handled through the virtual forest of (>=2)-HSTs; every
virtual transmission is replaced by its concretization in the real tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .embedding import ForestDecomposition, forest_decompose
from .engine import PendingSet, earliest_saturation, saturation_surplus
from .fl import CounterBank, Frame, invest
from .metric import CostBreakdown, Tree
from .requests import Instance, InstanceError, Request
from .trace import ExploreRecord, ServiceRecord, Trace

ZERO = Fraction(0)


def live_cut(tree: Tree, e: int, added: set[int]) -> list[int]:
    """Edges below ``e`` outside ``added`` whose parent edge is in ``added``."""
    cut = []
    stack = [e]
    while stack:
        v = stack.pop()
        for c in tree.children(v):
            if c in added:
                stack.append(c)
            else:
                cut.append(c)
    return sorted(cut)


def is_cut(tree: Tree, edges: Sequence[int]) -> bool:
    return not any(a != b and tree.is_ancestor(a, b) for a in edges for b in edges)


class Explorer:
    """The exploration of one service over a view tree.

    ``real[v]`` maps a view edge to the id used for counters and trace records,
    so several views (relative subtrees) can share one counter bank.
    """

    def __init__(self, view: Tree, real: Sequence[int], bank: CounterBank, pending: PendingSet,
                 trace: Trace, service: ServiceRecord, calls: dict[int, int]):
        self.view = view
        self.real = real
        self.bank = bank
        self.pending = pending
        self.trace = trace
        self.service = service
        self.calls = calls
        self.added: set[int] = set()
        self.served: list[Request] = []
        self.cuts_ok = True

    def explore(self, e: int, t: Fraction, depth: int = 0) -> None:
        view, real = self.view, self.real
        rid = real[e]
        self.calls[rid] = self.calls.get(rid, 0) + 1
        rec = ExploreRecord(rid, t, self.calls[rid], self.service.index, depth)
        self.trace.explores.append(rec)
        self.added.add(e)
        if view.is_leaf(e):
            self.served.extend(self.pending.serve_leaf(e, t))
        frame = Frame(rid, view.weight[e], rec)
        while frame.budget != 0 and self.pending.any_in_subtree(e):
            cut = live_cut(view, e, self.added)
            if not is_cut(view, cut):
                self.cuts_ok = False
            best = None
            for c in cut:
                when = earliest_saturation(view, c, self.pending, t)
                if when is not None and (best is None or (when, real[c]) < best[:2]):
                    best = (when, real[c], c)
            assert best is not None, "pending requests below an explored edge lie under its live cut"
            c = best[2]
            invest(self.bank, frame, real[c], view.weight[c])
            if self.bank.is_full(real[c]):
                self.bank.reset(real[c])
                self.explore(c, t, depth + 1)
        rec.spent = view.weight[e] - frame.budget
        rec.pending_after = self.pending.any_in_subtree(e)


@dataclass
class MadRun:
    trace: Trace
    tree: Tree
    bank: CounterBank
    root_edges: list[int]
    services_per_root: dict[int, int]
    checks: dict[str, bool] = field(default_factory=dict)
    virtual: "VirtualForest | None" = None

    @property
    def k(self) -> int:
        return self.trace.k


def _run_on_tree(tree: Tree, requests: Sequence[Request], location_of=None) -> MadRun:
    """Algorithm core: one independent sub-instance per edge leaving the root."""
    location_of = location_of or (lambda q: q.location)
    roots = list(tree.children(tree.root))
    bank = CounterBank(lambda v: tree.weight[v])
    pending = PendingSet(tree)
    trace = Trace("mad")
    calls: dict[int, int] = {}
    per_root = {r: 0 for r in roots}
    checks = {"every_service_serves": True, "no_critical_before_trigger": True,
              "service_delay_at_most_buy": True, "live_cut_is_cut": True}
    ordered = sorted(requests, key=lambda q: (q.release, q.id))
    i, n = 0, len(ordered)
    clock = ordered[0].release if ordered else ZERO
    buy = delay = ZERO
    while True:
        next_release = ordered[i].release if i < n else None
        trigger = None
        for r in roots:
            when = earliest_saturation(tree, r, pending, clock)
            if when is not None and (trigger is None or (when, r) < trigger):
                trigger = (when, r)
        if trigger is not None and (next_release is None or trigger[0] < next_release):
            clock, r = trigger
            if saturation_surplus(tree, r, pending, clock).value > tree.weight[r]:
                checks["no_critical_before_trigger"] = False
            service = ServiceRecord(len(trace.services), clock, r)
            trace.services.append(service)
            explorer = Explorer(tree, range(tree.n), bank, pending, trace, service, calls)
            explorer.explore(r, clock)
            edges = sorted(explorer.added)
            weight = sum((tree.weight[e] for e in edges), ZERO)
            trace.transmissions.append((clock, tuple(edges)))
            service.tree = edges
            service.served = sorted(q.id for q in explorer.served)
            service_delay = sum((q.curve(clock) for q in explorer.served), ZERO)
            for q in explorer.served:
                trace.served[q.id] = clock
            buy += weight
            delay += service_delay
            per_root[r] += 1
            checks["every_service_serves"] &= bool(explorer.served)
            checks["service_delay_at_most_buy"] &= service_delay <= weight
            checks["live_cut_is_cut"] &= explorer.cuts_ok
        elif next_release is not None:
            clock = next_release
            while i < n and ordered[i].release == clock:
                q = ordered[i]
                loc = location_of(q)
                if loc != q.location:
                    q = Request(q.id, loc, q.release, q.delay)
                pending.add(q)
                i += 1
        else:
            break
    trace.reported = CostBreakdown(buy, ZERO, delay)
    return MadRun(trace, tree, bank, roots, per_root, checks)


def run_mad_hst(instance: Instance) -> MadRun:
    if instance.problem != "mad":
        raise InstanceError(f"expected a mad instance, got {instance.problem}")
    if instance.tree is None:
        raise InstanceError("aggregation runs on tree instances")
    from .metric import HstViolation, validate_hst

    cert = validate_hst(instance.tree, 2)
    if isinstance(cert, HstViolation):
        raise InstanceError(f"tree is not a (>=2)-HST: {cert}; use the general-tree algorithm")
    return _run_on_tree(instance.tree, instance.requests)


@dataclass
class VirtualForest:
    decomposition: ForestDecomposition
    view: Tree
    view_of: dict[int, int]
    real_of: list[int]


def virtual_forest(tree: Tree, decomposition: ForestDecomposition | None = None) -> VirtualForest:
    """All virtual trees hung under one synthetic root node, ordered by tree index."""
    dec = decomposition or forest_decompose(tree)
    order: list[int] = []
    for members in dec.trees:
        order.extend(members)
    view_of = {e: i + 1 for i, e in enumerate(order)}
    parent = [-1] + [0] * len(order)
    weight = [ZERO] * (len(order) + 1)
    for e in order:
        vp = dec.virtual_parent[e]
        parent[view_of[e]] = 0 if vp is None else view_of[vp]
        weight[view_of[e]] = tree.weight[e]
    view = Tree(tuple(parent), tuple(weight))
    real_of = [-1] + order
    return VirtualForest(dec, view, view_of, real_of)


def run_mad_general(instance: Instance) -> MadRun:
    if instance.problem != "mad":
        raise InstanceError(f"expected a mad instance, got {instance.problem}")
    tree = instance.tree
    if tree is None or tree.root_edge is None:
        raise InstanceError("the general-tree algorithm needs a tree with a single root edge")
    forest = virtual_forest(tree)
    run = _run_on_tree(forest.view, instance.requests, lambda q: forest.view_of[q.location])
    dec = forest.decomposition
    tree_index = {e: i for i, members in enumerate(dec.trees) for e in members}
    concrete = []
    buy = ZERO
    for service, (t, virtual_edges) in zip(run.trace.services, run.trace.transmissions):
        real_edges = sorted({forest.real_of[v] for v in virtual_edges})
        edges: set[int] = set()
        for e in real_edges:
            edges.update(dec.concretization[e])
        service.virtual_edges = real_edges
        service.virtual_tree = tree_index[forest.real_of[service.element]]
        service.element = forest.real_of[service.element]
        service.tree = sorted(edges)
        concrete.append((t, tuple(sorted(edges))))
        buy += sum((tree.weight[e] for e in edges), ZERO)
    virtual_buy = run.trace.reported.buy
    run.trace.algorithm = "mad-general"
    run.trace.transmissions = concrete
    for rec in run.trace.explores:
        rec.element = forest.real_of[rec.element]
        for inv in rec.investments:
            inv.target = forest.real_of[inv.target]
    run.trace.reported = CostBreakdown(buy, ZERO, run.trace.reported.delay)
    run.root_edges = [forest.real_of[r] for r in run.root_edges]
    run.services_per_root = {forest.real_of[r]: k for r, k in run.services_per_root.items()}
    run.tree = tree
    run.virtual = forest
    run.checks["virtual_buy_at_most_concrete"] = virtual_buy <= buy
    return run
