"""Online service with delay on power-of-two (>=2)-HSTs.

A single server moves on the tree.  An edge is *major* when no edge between
it and the server is heavier.  For a major edge ``e`` the algorithm watches
the requests on the far side of ``e``: the subtree below ``e`` when the
server is outside it, otherwise ``e`` promoted over the subtrees of its
lighter siblings.  When those requests saturate the watched part, the server
walks to the near end of ``e``, the aggregation explorer picks a subtree,
the server tours it and finally crosses ``e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .embedding import round_weights_pow2
from .engine import PendingSet, earliest_saturation, saturation_surplus
from .fl import CounterBank
from .mad import Explorer
from .metric import CostBreakdown, HstViolation, Tree, validate_hst
from .requests import Instance, InstanceError, Request
from .trace import ServiceRecord, Trace

ZERO = Fraction(0)


def major_edges(tree: Tree, server: int) -> list[int]:
    out = []
    for e in tree.edges:
        if tree.is_ancestor(e, server):
            between = tree.path_up(server, e)
        else:
            between = tree.path_edges(server, tree.parent[e])
        if all(tree.weight[x] <= tree.weight[e] for x in between):
            out.append(e)
    return sorted(out, key=lambda e: (tree.weight[e], e))


def lighter_siblings(tree: Tree, e: int) -> list[int]:
    return [s for s in tree.children(tree.parent[e]) if s != e and tree.weight[s] < tree.weight[e]]


@dataclass
class View:
    """A watched part of the tree as a stand-alone tree topped by edge node 1."""

    tree: Tree
    real: list[int]
    view_of: dict[int, int]
    side: str


def relative_view(tree: Tree, e: int, side: str) -> View:
    if side == "T":
        tops = list(tree.children(e))
    elif side == "R":
        tops = lighter_siblings(tree, e)
    else:
        raise ValueError(f"unknown side {side!r}")
    real = [-1, e]
    parent = [-1, 0]
    weight = [ZERO, tree.weight[e]]
    view_of = {}
    stack = [(c, 1) for c in reversed(tops)]
    while stack:
        v, p = stack.pop()
        view_of[v] = len(real)
        real.append(v)
        parent.append(p)
        weight.append(tree.weight[v])
        stack.extend((c, view_of[v]) for c in reversed(tree.children(v)))
    if side == "T" and tree.is_leaf(e):
        view_of[e] = 1
    return View(Tree(tuple(parent), tuple(weight)), real, view_of, side)


def view_pending(view: View, pending: PendingSet) -> PendingSet:
    vp = PendingSet(view.tree)
    for q in pending.all():
        loc = view.view_of.get(q.location)
        if loc is not None and view.tree.is_leaf(loc):
            vp.add(Request(q.id, loc, q.release, q.delay))
    return vp


def side_of(tree: Tree, e: int, server: int) -> str:
    """'R' when the server sits inside the subtree below ``e``, else 'T'."""
    return "R" if tree.is_ancestor(e, server) else "T"


def detect_osd_critical(tree: Tree, server: int, pending: PendingSet, t0):
    """Earliest (time, edge, side) at which a watched part saturates, or None."""
    best = None
    for e in major_edges(tree, server):
        side = side_of(tree, e, server)
        view = relative_view(tree, e, side)
        when = earliest_saturation(view.tree, 1, view_pending(view, pending), t0)
        if when is not None:
            key = (when, tree.weight[e], e)
            if best is None or key < best[0]:
                best = (key, side)
    if best is None:
        return None
    (when, _, e), side = best
    return when, e, side


def dfs_walk(tree: Tree, start: int, edges: set[int]) -> list[int]:
    """Closed walk from ``start`` covering every edge in ``edges`` twice."""
    adj: dict[int, list[int]] = {}
    for e in sorted(edges):
        p = tree.parent[e]
        adj.setdefault(p, []).append(e)
        adj.setdefault(e, []).append(p)
    walk = [start]
    seen = {start}

    def visit(v):
        for u in adj.get(v, []):
            if u not in seen:
                seen.add(u)
                walk.append(u)
                visit(u)
                walk.append(v)

    visit(start)
    return walk


@dataclass
class OsdRun:
    trace: Trace
    tree: Tree
    start: int
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.trace.k


def run_osd(instance: Instance) -> OsdRun:
    """Run the service algorithm; non-power-of-two weights are rounded up first."""
    if instance.problem != "osd":
        raise InstanceError(f"expected an osd instance, got {instance.problem}")
    tree = instance.tree
    if tree is None:
        raise InstanceError("the service algorithm runs on tree instances")
    cert = validate_hst(tree, 2)
    if isinstance(cert, HstViolation):
        raise InstanceError(f"tree is not a (>=2)-HST: {cert}")
    if not cert.is_pow2:
        tree = round_weights_pow2(tree)
    server = instance.server_start
    pending = PendingSet(tree)
    bank = CounterBank(lambda v: tree.weight[v])
    trace = Trace("osd")
    calls: dict[int, int] = {}
    checks = {"every_service_serves": True, "approach_at_most_2w": True, "side_flip": True}
    ordered = sorted(instance.requests, key=lambda q: (q.release, q.id))
    i, n = 0, len(ordered)
    clock = ordered[0].release if ordered else ZERO
    buy = delay = ZERO
    phase = None  # (time, server position, first service index) of the current phase
    while True:
        next_release = ordered[i].release if i < n else None
        trigger = detect_osd_critical(tree, server, pending, clock) if pending else None
        if trigger is not None and (next_release is None or trigger[0] < next_release):
            clock, e, side = trigger
            near = tree.parent[e] if side == "T" else e
            far = e if side == "T" else tree.parent[e]
            service = ServiceRecord(len(trace.services), clock, e, side=side, server_before=server)
            if phase is None or phase[0] != clock or _already_critical(tree, phase[1], pending, clock, e, side):
                phase = (clock, server, service.index)
            service.phase = phase[2]
            trace.services.append(service)
            view = relative_view(tree, e, side)
            vpending = view_pending(view, pending)
            explorer = Explorer(view.tree, view.real, bank, vpending, trace, service, calls)
            explorer.explore(1, clock)
            edges = {view.real[v] for v in explorer.added}
            service.tree = sorted(edges)
            service.approach = tree.dist(server, near)
            service.traversal = 2 * sum((tree.weight[x] for x in edges), ZERO)
            service.crossing = tree.weight[e]
            approach = [server]
            for x in tree.path_edges(server, near):
                approach.append(x if tree.parent[x] == approach[-1] else tree.parent[x])
            walk = approach + dfs_walk(tree, near, edges)[1:] + [far]
            walk = [v for j, v in enumerate(walk) if j == 0 or v != walk[j - 1]]
            trace.moves.append((clock, tuple(walk)))
            for q in explorer.served:
                pending.serve(q.id, clock)
                trace.served[q.id] = clock
                delay += q.curve(clock)
            service.served = sorted(q.id for q in explorer.served)
            buy += service.approach + service.traversal + service.crossing
            checks["every_service_serves"] &= bool(explorer.served)
            checks["approach_at_most_2w"] &= service.approach <= 2 * tree.weight[e]
            checks["side_flip"] &= side_of(tree, e, server) != side_of(tree, e, far)
            server = far
            service.server_after = server
        elif next_release is not None:
            clock = next_release
            while i < n and ordered[i].release == clock:
                q = ordered[i]
                i += 1
                if q.location == server:
                    trace.served[q.id] = clock
                else:
                    pending.add(q)
        else:
            break
    checks["phase_containment"] = phase_containment(tree, trace, {q.id: q.location for q in instance.requests})
    trace.reported = CostBreakdown(buy, ZERO, delay)
    return OsdRun(trace, tree, instance.server_start, checks)


def _already_critical(tree: Tree, start: int, pending: PendingSet, t, e: int, side: str) -> bool:
    """Whether (e, side) was a saturated watched part as seen from the phase's start position.

    Such a set became critical together with the one that opened the phase,
    so it opens a phase of its own.
    """
    if e not in major_edges(tree, start) or side_of(tree, e, start) != side:
        return False
    view = relative_view(tree, e, side)
    return saturation_surplus(view.tree, 1, view_pending(view, pending), t).value >= tree.weight[e]


def in_watched_part(tree: Tree, e: int, side: str, v: int) -> bool:
    if side == "T":
        return tree.is_ancestor(e, v)
    return any(tree.is_ancestor(s, v) for s in lighter_siblings(tree, e))


def phase_containment(tree: Tree, trace: Trace, location_of: dict[int, int]) -> bool:
    """Every service serves only requests inside the part watched by the first service of its phase."""
    for s in trace.services:
        first = trace.services[s.phase]
        if not all(in_watched_part(tree, first.element, first.side, location_of[q]) for q in s.served):
            return False
    return True
