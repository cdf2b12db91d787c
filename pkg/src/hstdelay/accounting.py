"""Independent cost accounting for online runs and offline solutions.

The accountant replays only the observable actions of a solution (openings
and connections, transmissions, or server walks) against the instance and
recomputes every cost component from scratch.  It never reads the
algorithm's internal bookkeeping, so agreement with the reported costs is a
real cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .metric import CostBreakdown, Tree
from .requests import Request

ZERO = Fraction(0)


@dataclass
class Account:
    cost: CostBreakdown
    served: dict[int, Fraction]
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _delay(q: Request, t: Fraction) -> Fraction:
    return ZERO if q.has_deadline else q.curve(t)


def account_fl(dist, requests: Sequence[Request], f, openings, connections) -> Account:
    """``connections``: iterable of (request id, time, node) or a dict id -> (time, node)."""
    if isinstance(connections, dict):
        connections = [(qid, t, v) for qid, (t, v) in connections.items()]
    opened = {(Fraction(t), v) for t, v in openings}
    by_id = {q.id: q for q in requests}
    errors = []
    served: dict[int, Fraction] = {}
    connect = delay = ZERO
    for qid, t, v in connections:
        q = by_id.get(qid)
        if q is None:
            errors.append(f"connection of unknown request {qid}")
            continue
        if qid in served:
            errors.append(f"request {qid} connected twice")
            continue
        if (t, v) not in opened:
            errors.append(f"request {qid} connected at {t} to {v} with no facility opened there")
        if t < q.release:
            errors.append(f"request {qid} connected before its release")
        if q.has_deadline and t > q.deadline:
            errors.append(f"request {qid} connected at {t} after its deadline {q.deadline}")
        served[qid] = t
        connect += dist(v, q.location)
        delay += _delay(q, t)
    for q in requests:
        if q.id not in served:
            errors.append(f"request {q.id} never served")
    buy = Fraction(f) * len(list(openings))
    return Account(CostBreakdown(buy, connect, delay), served, errors)


def account_mad(tree: Tree, requests: Sequence[Request], transmissions) -> Account:
    errors = []
    served: dict[int, Fraction] = {}
    buy = delay = ZERO
    ordered = sorted(transmissions, key=lambda x: x[0])
    for t, edges in ordered:
        edges = set(edges)
        for e in edges:
            if e == tree.root or not 0 <= e < tree.n:
                errors.append(f"transmission at {t} holds a non-edge {e}")
            elif tree.parent[e] != tree.root and tree.parent[e] not in edges:
                errors.append(f"transmission at {t} is not connected to the root at edge {e}")
        buy += sum((tree.weight[e] for e in edges if 0 <= e < tree.n and e != tree.root), ZERO)
        for q in requests:
            if q.id not in served and q.release <= t and q.location in edges:
                served[q.id] = t
                delay += q.curve(t)
    for q in requests:
        if q.id not in served:
            errors.append(f"request {q.id} never served")
    return Account(CostBreakdown(buy, ZERO, delay), served, errors)


def account_osd(tree: Tree, requests: Sequence[Request], start: int, moves) -> Account:
    """Replay server walks; a request is served when the server stands on its leaf."""
    errors = []
    served: dict[int, Fraction] = {}
    buy = delay = ZERO
    position = start
    pending: dict[int, Request] = {}
    releases = sorted(requests, key=lambda q: (q.release, q.id))
    walks = sorted(moves, key=lambda m: m[0])
    i = 0

    def visit(v, t):
        nonlocal delay
        for qid in sorted(pending):
            q = pending[qid]
            if q.location == v:
                del pending[qid]
                served[qid] = t
                delay += q.curve(t)

    for t, walk in walks + [(None, ())]:
        while i < len(releases) and (t is None or releases[i].release <= t):
            q = releases[i]
            i += 1
            pending[q.id] = q
            visit(position, q.release)
        if t is None:
            break
        if walk and walk[0] != position:
            errors.append(f"walk at {t} starts at {walk[0]} but the server is at {position}")
        for a, b in zip(walk, walk[1:]):
            if tree.parent[a] != b and tree.parent[b] != a:
                errors.append(f"walk at {t} jumps between non-adjacent nodes {a} and {b}")
            buy += tree.dist(a, b)
        for v in walk:
            visit(v, t)
        if walk:
            position = walk[-1]
    for q in requests:
        if q.id not in served:
            errors.append(f"request {q.id} never served")
    return Account(CostBreakdown(buy, ZERO, delay), served, errors)


def account_solution(instance, solution, tree: Tree | None = None) -> Account:
    """Account an offline solution of any problem kind."""
    tree = tree or instance.tree
    if instance.problem.startswith("fl"):
        dist = tree.dist if tree is not None else instance.metric
        return account_fl(dist, instance.requests, instance.f, solution.openings, solution.assignments)
    if instance.problem == "mad":
        return account_mad(tree, instance.requests, solution.transmissions)
    return account_osd(tree, instance.requests, solution.start, solution.moves)


def account_trace(instance, trace, tree: Tree) -> Account:
    """Account the observable actions of an online run."""
    if trace.algorithm.startswith("fl"):
        acct = account_fl(tree.dist, instance.requests, instance.f, trace.openings, trace.connections)
    elif trace.algorithm.startswith("mad"):
        acct = account_mad(tree, instance.requests, trace.transmissions)
    else:
        acct = account_osd(tree, instance.requests, instance.server_start, trace.moves)
    if acct.served != trace.served:
        acct.errors.append("service times differ from the run's own record")
    return acct


def offline_side_indicators(tree: Tree, trace, offline) -> list[int]:
    """1 for each service whose offline server stood on the online server's side of its edge."""
    from .osd import side_of

    moves = sorted(offline.moves, key=lambda m: m[0])
    out = []
    for s in trace.services:
        position = offline.start
        for t, walk in moves:
            if t >= s.time:
                break
            if walk:
                position = walk[-1]
        out.append(int(side_of(tree, s.element, position) == side_of(tree, s.element, s.server_before)))
    return out
