"""Offline solvers for desk-scale instances.

The FL-deadline solver is exact.  The delay-problem solvers search only
solutions that act at times of a finite grid, so their answers are feasible
solutions whose cost upper-bounds the true optimum.  The brute-force
enumerations at the bottom exist to validate the surplus DPs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .metric import CostBreakdown, Tree, spanned_edges, spanned_weight
from .requests import Instance, Request

ZERO = Fraction(0)
MAX_STATES = 10**7


class OracleRefusal(ValueError):
    """The requested search is larger than the configured state budget."""

    def __init__(self, what: str, size: int):
        super().__init__(f"{what}: search space of about {size} states exceeds the limit {MAX_STATES}")
        self.size = size


@dataclass
class OfflineSolution:
    problem: str
    openings: list[tuple[Fraction, int]] = field(default_factory=list)
    assignments: dict[int, tuple[Fraction, int]] = field(default_factory=dict)
    transmissions: list[tuple[Fraction, tuple[int, ...]]] = field(default_factory=list)
    moves: list[tuple[Fraction, tuple[int, ...]]] = field(default_factory=list)
    start: int | None = None
    cost: CostBreakdown = field(default_factory=CostBreakdown)


def _distance(instance: Instance):
    if instance.tree is not None:
        return instance.tree.dist, range(instance.tree.n)
    return instance.metric, range(instance.metric.n)


def _cheapest_location(instance: Instance, group: Sequence[Request]):
    dist, points = _distance(instance)
    return min(((sum((dist(v, q.location) for q in group), ZERO), v) for v in points))


def _best_partition(m: int, group_cost):
    """Cheapest split of requests 0..m-1 into groups; group_cost(mask) -> (cost, data) or None."""
    full = (1 << m) - 1
    best: dict[int, tuple[Fraction, list]] = {0: (ZERO, [])}
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        choice = None
        sub = rest
        while True:
            group = sub | low
            gc = group_cost(group)
            if gc is not None and (mask ^ group) in best:
                total = best[mask ^ group][0] + gc[0]
                if choice is None or total < choice[0]:
                    choice = (total, best[mask ^ group][1] + [(group, gc[1])])
            if sub == 0:
                break
            sub = (sub - 1) & rest
        if choice is not None:
            best[mask] = choice
    return best.get(full)


def _members(requests, mask):
    return [q for i, q in enumerate(requests) if mask >> i & 1]


def _fl_solution(instance: Instance, groups) -> OfflineSolution:
    sol = OfflineSolution(instance.problem)
    dist, _ = _distance(instance)
    buy = connect = delay = ZERO
    for members, (t, v) in groups:
        sol.openings.append((t, v))
        buy += instance.f
        for q in members:
            sol.assignments[q.id] = (t, v)
            connect += dist(v, q.location)
            if not q.has_deadline:
                delay += q.curve(t)
    sol.openings.sort()
    sol.cost = CostBreakdown(buy, connect, delay)
    return sol


def opt_fl_deadline_exact(instance: Instance, max_requests: int = 8) -> OfflineSolution:
    """Exact optimum over all partitions of the requests into openings.

    Opening a group at its earliest member deadline is without loss: any
    feasible opening time lies between the latest release and the earliest
    deadline of the group, and the cost does not depend on the time.
    """
    reqs = list(instance.requests)
    if len(reqs) > max_requests:
        raise OracleRefusal("exact facility search", 2 ** len(reqs))
    if not reqs:
        return OfflineSolution(instance.problem)

    def group_cost(mask):
        members = _members(reqs, mask)
        t = min(q.deadline for q in members)
        if max(q.release for q in members) > t:
            return None
        cost, v = _cheapest_location(instance, members)
        return instance.f + cost, (t, v)

    best = _best_partition(len(reqs), group_cost)
    return _fl_solution(instance, [(_members(reqs, g), data) for g, data in best[1]])


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def opt_fl_deadline_raw(instance: Instance, max_requests: int = 4) -> Fraction:
    """Optimum that tries every event time for every group, with no time canonicalization."""
    reqs = list(instance.requests)
    if len(reqs) > max_requests:
        raise OracleRefusal("raw facility search", 2 ** len(reqs))
    dist, points = _distance(instance)
    times = sorted({q.release for q in reqs} | {q.deadline for q in reqs})
    best = None
    for part in _set_partitions(reqs):
        total = ZERO
        for group in part:
            options = [
                instance.f + sum((dist(v, q.location) for q in group), ZERO)
                for t in times
                if all(q.release <= t <= q.deadline for q in group)
                for v in points
            ]
            if not options:
                break
            total += min(options)
        else:
            if best is None or total < best:
                best = total
    return best if best is not None else ZERO


def event_grid(instance: Instance, refine: int = 1, extra: Sequence = ()) -> list[Fraction]:
    """Releases, deadlines and delay breakpoints, each gap split into ``refine`` parts."""
    base = set(Fraction(x) for x in extra)
    for q in instance.requests:
        base.add(q.release)
        if q.has_deadline:
            base.add(q.deadline)
        else:
            base.update(t for t, _ in q.delay.points)
    pts = sorted(base)
    if refine < 1:
        raise ValueError("grid refinement must be at least 1")
    grid = []
    for a, b in zip(pts, pts[1:]):
        grid.extend(a + (b - a) * Fraction(j, refine) for j in range(refine))
    grid.extend(pts[-1:])
    return grid


def opt_grid(instance: Instance, grid: Sequence[Fraction] | None = None, refine: int = 1) -> OfflineSolution:
    """Cheapest solution that acts only at grid times."""
    grid = sorted(set(Fraction(t) for t in (grid if grid is not None else event_grid(instance, refine))))
    if not instance.requests:
        return OfflineSolution(instance.problem, start=instance.server_start)
    if grid[-1] < max(q.release for q in instance.requests):
        raise ValueError("grid ends before the last release")
    solver = {"fl-deadline": _grid_fl, "fl-delay": _grid_fl, "mad": _grid_mad, "osd": _grid_osd}[instance.problem]
    return solver(instance, grid)


def _grid_fl(instance: Instance, grid):
    reqs = list(instance.requests)
    m = len(reqs)
    size = (2 ** m) * len(grid)
    if size > MAX_STATES:
        raise OracleRefusal("grid facility search", size)

    def group_cost(mask):
        members = _members(reqs, mask)
        latest = max(q.release for q in members)
        conn, v = _cheapest_location(instance, members)
        best = None
        for t in grid:
            if t < latest:
                continue
            if members[0].has_deadline:
                if any(t > q.deadline for q in members):
                    break
                d = ZERO
            else:
                d = sum((q.curve(t) for q in members), ZERO)
            if best is None or d < best[0]:
                best = (d, t)
        if best is None:
            return None
        return instance.f + conn + best[0], (best[1], v)

    best = _best_partition(m, group_cost)
    return _fl_solution(instance, [(_members(reqs, g), data) for g, data in best[1]])


def _pending_at(reqs, mask, t):
    return [i for i, q in enumerate(reqs) if not mask >> i & 1 and q.release <= t]


def _grid_mad(instance: Instance, grid):
    tree = instance.tree
    reqs = list(instance.requests)
    m = len(reqs)
    size = len(grid) * 2 ** m
    if size > MAX_STATES:
        raise OracleRefusal("grid aggregation search", size)
    full = (1 << m) - 1
    memo: dict[tuple[int, int], tuple[Fraction, list]] = {}

    def solve(i, mask):
        if mask == full:
            return ZERO, []
        if i == len(grid):
            return None
        key = (i, mask)
        if key in memo:
            return memo[key]
        t = grid[i]
        pending = _pending_at(reqs, mask, t)
        leaves = sorted({reqs[j].location for j in pending})
        best = None
        for r in range(len(leaves) + 1):
            for chosen in combinations(leaves, r):
                served = [j for j in pending if reqs[j].location in chosen]
                cost = ZERO
                if chosen:
                    cost = spanned_weight(tree, tree.root, chosen, edge_rooted=False)
                    cost += sum((reqs[j].curve(t) for j in served), ZERO)
                nxt = mask
                for j in served:
                    nxt |= 1 << j
                rest = solve(i + 1, nxt)
                if rest is None:
                    continue
                total = cost + rest[0]
                if best is None or total < best[0]:
                    best = (total, ([(t, tuple(chosen))] if chosen else []) + rest[1])
        memo[key] = best
        return best

    result = solve(0, 0)
    sol = OfflineSolution("mad")
    buy = delay = ZERO
    served_at: dict[int, Fraction] = {}
    for t, chosen in result[1]:
        edges = tuple(sorted(spanned_edges(tree, tree.root, chosen, edge_rooted=False)))
        sol.transmissions.append((t, edges))
        buy += sum((tree.weight[e] for e in edges), ZERO)
        for q in reqs:
            if q.id not in served_at and q.location in chosen and q.release <= t:
                served_at[q.id] = t
                sol.assignments[q.id] = (t, q.location)
                delay += q.curve(t)
    sol.cost = CostBreakdown(buy, ZERO, delay)
    return sol


def _tour(tree: Tree, a: int, visit: Sequence[int], b: int) -> tuple[Fraction, list[int]]:
    """Walk from ``a`` through every node of ``visit`` ending at ``b``; cheapest for a tree."""
    top = a
    for v in list(visit) + [b]:
        top = tree.lca(top, v)
    edges = spanned_edges(tree, top, [a, b, *visit], edge_rooted=False)
    adj: dict[int, list[int]] = {}
    for e in sorted(edges):
        adj.setdefault(tree.parent[e], []).append(e)
        adj.setdefault(e, []).append(tree.parent[e])
    on_path = set(tree.path_edges(a, b))
    walk = [a]

    def visit_from(v, came):
        # branches off the a-b path first, the path edge last
        nbrs = sorted(adj.get(v, []), key=lambda u: (_edge_of(tree, u, v) in on_path, u))
        for u in nbrs:
            if u == came:
                continue
            walk.append(u)
            if _edge_of(tree, u, v) in on_path:
                visit_from(u, v)
                return
            visit_from(u, v)
            walk.append(v)

    visit_from(a, None)
    cost = 2 * sum((tree.weight[e] for e in edges), ZERO) - tree.dist(a, b)
    return cost, walk


def _edge_of(tree: Tree, u: int, v: int) -> int:
    return u if tree.parent[u] == v else v


def _grid_osd(instance: Instance, grid):
    tree = instance.tree
    reqs = list(instance.requests)
    m = len(reqs)
    spots = sorted({instance.server_start} | {q.location for q in reqs})
    size = len(grid) * len(spots) * 2 ** m
    if size > MAX_STATES:
        raise OracleRefusal("grid service search", size)
    full = (1 << m) - 1
    memo: dict = {}

    def absorb(mask, node, t):
        for j, q in enumerate(reqs):
            if q.location == node and q.release <= t:
                mask |= 1 << j
        return mask

    def solve(i, a, mask):
        if mask == full:
            return ZERO, []
        if i == len(grid):
            return None
        key = (i, a, mask)
        if key in memo:
            return memo[key]
        t = grid[i]
        mask = absorb(mask, a, t)
        pending = _pending_at(reqs, mask, t)
        leaves = sorted({reqs[j].location for j in pending})
        best = None
        for r in range(len(leaves) + 1):
            for chosen in combinations(leaves, r):
                for b in spots:
                    cost, walk = _tour(tree, a, chosen, b)
                    nxt = mask
                    for v in walk:
                        nxt = absorb(nxt, v, t)
                    served = [j for j in range(m) if nxt >> j & 1 and not mask >> j & 1]
                    cost += sum((reqs[j].curve(t) for j in served), ZERO)
                    rest = solve(i + 1, b, nxt)
                    if rest is None:
                        continue
                    total = cost + rest[0]
                    if best is None or total < best[0]:
                        moves = [(t, tuple(walk))] if len(walk) > 1 else []
                        best = (total, moves + rest[1])
        memo[key] = best
        return best

    result = solve(0, instance.server_start, 0)
    sol = OfflineSolution("osd", moves=result[1], start=instance.server_start)
    from .accounting import account_osd

    acct = account_osd(tree, instance.requests, instance.server_start, sol.moves)
    sol.assignments = {qid: (t, reqs_by_id.location) for qid, t in acct.served.items()
                       for reqs_by_id in [instance.request(qid)]}
    sol.cost = acct.cost
    return sol


def brute_saturation(tree: Tree, e: int, requests: Sequence[Request], t, limit: int = 12) -> Fraction:
    """max over request sets Q below ``e`` of d_Q(t) - (w(T_e^Q) - w(e)); the empty set gives 0."""
    reqs = [q for q in requests if tree.is_ancestor(e, q.location)]
    if len(reqs) > limit:
        raise OracleRefusal("saturation enumeration", 2 ** len(reqs))
    t = Fraction(t)
    best = ZERO
    for r in range(1, len(reqs) + 1):
        for group in combinations(reqs, r):
            d = sum((q.curve(t) for q in group), ZERO)
            extra = spanned_weight(tree, e, [q.location for q in group]) - tree.weight[e]
            best = max(best, d - extra)
    return best


def brute_psi(tree: Tree, u: int, locations: Sequence[int], f, limit: int = 12) -> Fraction:
    """Cheapest ancestor-closed facility set inside ``T_u`` serving the given leaves."""
    locations = list(locations)
    if not locations:
        return ZERO
    f = Fraction(f)
    nodes = tree.subtree(u)
    if len(nodes) > limit:
        raise OracleRefusal("ancestor-closed enumeration", 2 ** len(nodes))
    others = nodes[1:]
    best = None
    for r in range(len(others) + 1):
        for extra in combinations(others, r):
            chosen = {u, *extra}
            if any(tree.parent[v] not in chosen for v in extra):
                continue
            cost = f * len(chosen) + sum((min(tree.dist(s, v) for s in chosen) for v in locations), ZERO)
            if best is None or cost < best:
                best = cost
    return best
