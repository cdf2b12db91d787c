"""Charging graphs for the facility-location-with-deadlines analysis.

A charging node ``(u, j)`` covers the time between the ``j``-th and the
``(j+1)``-th exploration of node ``u`` (``j = 0`` starts at minus infinity,
the last one ends at plus infinity).  An edge goes from a charging node to
the parent-level charging node that invested in it, weighted by the amount
invested.  The builder colors nodes top-down and adds the investment edges
entering every colored node; the source feeds every node the cost the
offline solution incurred in it.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .metric import Tree
from .trace import Trace

ZERO = Fraction(0)
SOURCE = "s"
SPECIAL = "Special"


class PreflowError(ValueError):
    pass


class PreflowGraph:
    """Directed multigraph with non-negative edge weights and exact excesses."""

    def __init__(self, nodes=()):
        self.nodes: list = [SOURCE]
        self._known = {SOURCE}
        self.edges: list[tuple[object, object, Fraction]] = []
        for v in nodes:
            self.add_node(v)

    def add_node(self, v) -> None:
        if v not in self._known:
            self._known.add(v)
            self.nodes.append(v)

    def add_edge(self, a, b, alpha) -> None:
        alpha = Fraction(alpha)
        if alpha < 0:
            raise PreflowError(f"negative edge weight {alpha} on {a} -> {b}")
        self.add_node(a)
        self.add_node(b)
        self.edges.append((a, b, alpha))

    def out_edges(self, v) -> list[tuple[object, object, Fraction]]:
        return [e for e in self.edges if e[0] == v]

    def excess(self, v) -> Fraction:
        return sum((a for _, b, a in self.edges if b == v), ZERO) - sum((a for s, _, a in self.edges if s == v), ZERO)

    def excesses(self) -> dict:
        chi = {v: ZERO for v in self.nodes}
        for a, b, alpha in self.edges:
            chi[a] -= alpha
            chi[b] += alpha
        return chi

    @property
    def omega(self) -> Fraction:
        return -self.excesses()[SOURCE]


@dataclass
class PreflowCheck:
    total_excess: Fraction
    omega: Fraction
    violation: tuple | None  # (node, excess) of the first negative non-source node

    @property
    def ok(self) -> bool:
        return self.total_excess == 0 and self.violation is None


def check_preflow(graph: PreflowGraph) -> PreflowCheck:
    chi = graph.excesses()
    bad = next(((v, chi[v]) for v in graph.nodes if v != SOURCE and chi[v] < 0), None)
    return PreflowCheck(sum(chi.values(), ZERO), -chi[SOURCE], bad)


@dataclass(frozen=True)
class ChargingNode:
    element: int
    index: int
    start: Fraction | None  # None is minus infinity
    end: Fraction | None  # None is plus infinity
    lam: Fraction | None  # None is plus infinity; undefined for index 0

    def covers(self, t: Fraction) -> bool:
        return (self.start is None or self.start <= t) and (self.end is None or t <= self.end)

    def covers_half_open(self, t: Fraction) -> bool:
        return (self.start is None or self.start <= t) and (self.end is None or t < self.end)


@dataclass
class ChargingTable:
    buy: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    connect: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    delay: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    def total(self, key) -> Fraction:
        return self.buy.get(key, ZERO) + self.connect.get(key, ZERO) + self.delay.get(key, ZERO)

    def grand_total(self) -> Fraction:
        keys = set(self.buy) | set(self.connect) | set(self.delay)
        return sum((self.total(k) for k in keys), ZERO)


@dataclass
class PreflowBuild:
    graph: PreflowGraph
    nodes: dict[tuple[int, int], ChargingNode]
    colors: dict[tuple[int, int], object]
    costs: ChargingTable
    potential_edges: list[tuple[tuple[int, int], tuple[int, int], Fraction]]
    root_nodes: list[tuple[int, int]]


def charging_nodes(tree: Tree, trace: Trace) -> dict[tuple[int, int], ChargingNode]:
    """One node per exploration gap of every tree node, keyed by (node, index)."""
    starts: dict[int, list[tuple[Fraction, Fraction | None]]] = defaultdict(list)
    for rec in sorted(trace.explores, key=lambda r: (r.element, r.call)):
        starts[rec.element].append((rec.time, rec.lam))
    nodes = {}
    for u in range(tree.n):
        calls = starts.get(u, [])
        for j in range(len(calls) + 1):
            start = calls[j - 1][0] if j > 0 else None
            lam = calls[j - 1][1] if j > 0 else None
            end = calls[j][0] if j < len(calls) else None
            nodes[(u, j)] = ChargingNode(u, j, start, end, lam)
    return nodes


def potential_edges(trace: Trace, parent_of) -> list[tuple[tuple[int, int], tuple[int, int], Fraction]]:
    """Investment edges, from the charging node invested in to the investor."""
    amounts: dict[tuple[tuple[int, int], tuple[int, int]], Fraction] = {}
    for rec in trace.explores:
        investor = (rec.element, rec.call)
        for inv in rec.investments:
            if parent_of(inv.target) != rec.element:
                raise PreflowError(f"investment from {rec.element} into non-child {inv.target}")
            key = ((inv.target, inv.phase), investor)
            amounts[key] = amounts.get(key, ZERO) + inv.amount
    return [(a, b, alpha) for (a, b), alpha in amounts.items()]


def _charge_costs(tree: Tree, nodes, offline, instance, f, delay_variant: bool) -> ChargingTable:
    table = ChargingTable()
    covers = ChargingNode.covers_half_open if delay_variant else ChargingNode.covers
    for key, mu in nodes.items():
        u = mu.element
        opened = sum(1 for t, v in offline.openings if tree.is_ancestor(u, v) and covers(mu, t))
        if opened:
            table.buy[key] = f * opened
        if u == tree.root:
            continue
        conn = ZERO
        dl = ZERO
        for q in instance.requests:
            if not tree.is_ancestor(u, q.location) or not covers(mu, q.release):
                continue
            t, v = offline.assignments[q.id]
            if not tree.is_ancestor(u, v):
                conn += tree.dist(tree.parent[u], q.location)
            if delay_variant:
                dl += q.curve(t)
        if conn:
            table.connect[key] = conn
        if dl:
            table.delay[key] = dl
    return table


def build_fl_deadline_preflow(instance, trace: Trace, offline, *, experimental: bool = False) -> PreflowBuild:
    """Build the charging preflow for a facility run against an offline solution.

    ``experimental=True`` admits delay-curve instances: intervals become
    half-open and each node is also charged the offline delay of requests
    released in it.  That variant has no acceptance criterion.
    """
    tree = instance.tree
    if tree is None:
        raise PreflowError("the charging graph needs a tree instance")
    delay_variant = instance.problem == "fl-delay"
    if delay_variant and not experimental:
        raise PreflowError("the delay variant of the charging graph is experimental; pass experimental=True")
    if instance.problem not in ("fl-deadline", "fl-delay"):
        raise PreflowError(f"no charging graph for {instance.problem}")
    missing = [q.id for q in instance.requests if q.id not in offline.assignments]
    if missing:
        raise PreflowError(f"offline solution does not serve requests {missing}")
    for qid, (_, v) in offline.assignments.items():
        if not 0 <= v < tree.n:
            raise PreflowError(f"offline assignment of {qid} to {v} is not a tree node")
    f = instance.f
    nodes = charging_nodes(tree, trace)
    costs = _charge_costs(tree, nodes, offline, instance, f, delay_variant)
    covers = ChargingNode.covers_half_open if delay_variant else ChargingNode.covers
    graph = PreflowGraph(sorted(nodes))
    colors: dict[tuple[int, int], object] = {key: None for key in nodes}
    for key, mu in nodes.items():
        if any(tree.is_ancestor(mu.element, v) and covers(mu, t) for t, v in offline.openings):
            colors[key] = SPECIAL
    for key in sorted(nodes):
        c = costs.total(key)
        if c > 0:
            graph.add_edge(SOURCE, key, c)

    candidates = potential_edges(trace, lambda v: tree.parent[v])
    incoming: dict[tuple[int, int], list] = defaultdict(list)
    for a, b, alpha in candidates:
        if a not in nodes or b not in nodes:
            raise PreflowError(f"investment edge {a} -> {b} does not match the exploration record")
        incoming[b].append((a, b, alpha))

    def set_color(key, star):
        mu = nodes[key]
        end = nodes[star].end if star is not None else None
        if (colors[key] is None and star is not None and mu.start is not None
                and mu.lam is not None and end is not None and mu.lam <= end):
            for edge in incoming[key]:
                graph.add_edge(*edge)
            colors[key] = star
        return colors[key]

    root = tree.root
    k = sum(1 for key in nodes if key[0] == root) - 1
    root_nodes = [(root, i) for i in range(k)]
    for key in root_nodes:
        set_color(key, key)
    by_depth: dict[int, list] = defaultdict(list)
    for key in nodes:
        by_depth[tree.depth(key[0])].append(key)
    for depth in range(1, tree.D + 1):
        for key in sorted(by_depth[depth]):
            for _, target, _ in graph.out_edges(key):
                if set_color(key, colors[target]) is not None:
                    break
    return PreflowBuild(graph, nodes, colors, costs, candidates, root_nodes)


@dataclass
class ChargingReport:
    checks: dict[str, bool]
    values: dict[str, Fraction]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def verify_charging_bounds(build: PreflowBuild, offline, k: int, f: Fraction, tree: Tree) -> ChargingReport:
    graph = build.graph
    check = check_preflow(graph)
    chi = graph.excesses()
    D = tree.D
    rhs = 2 * (D + 1) * offline.cost.buy + 4 * offline.cost.connect
    charged = build.costs.grand_total()
    outflow: dict = defaultdict(Fraction)
    for a, _, alpha in graph.edges:
        if a != SOURCE:
            outflow[a] += alpha
    sound = True
    for key, color in build.colors.items():
        if isinstance(color, tuple):
            mu, star = build.nodes[key], build.nodes[color]
            for t, v in offline.openings:
                if tree.is_ancestor(mu.element, v) and mu.start <= t and (star.end is None or t <= star.end):
                    sound = False
    checks = {
        "excess_sum_zero": check.total_excess == 0,
        "non_source_excess_nonnegative": check.violation is None,
        "root_excess_at_least_f": all(chi[key] >= f for key in build.root_nodes),
        "charged_cost_bound": charged <= rhs,
        "kf_bound": k * f <= rhs,
        "kf_at_most_omega": k * f <= check.omega,
        "outflow_at_most_f": all(v <= f for v in outflow.values()),
        "color_soundness": sound,
    }
    values = {"rhs": rhs, "charged": charged, "omega": check.omega, "kf": k * f}
    return ChargingReport(checks, values)


def graph_dump(build: PreflowBuild) -> dict:
    """Plain-data dump of a charging graph for counterexample archives."""

    def name(v):
        return v if v == SOURCE else f"{v[0]}:{v[1]}"

    def ts(x):
        return None if x is None else str(x)

    chi = build.graph.excesses()
    return {
        "nodes": [
            {"id": name(key), "element": mu.element, "index": mu.index, "start": ts(mu.start), "end": ts(mu.end),
             "lambda": ts(mu.lam), "color": (name(c) if isinstance(c, tuple) else c), "cost": str(build.costs.total(key))}
            for key, mu in sorted(build.nodes.items()) for c in [build.colors[key]]
        ],
        "edges": [[name(a), name(b), str(alpha)] for a, b, alpha in build.graph.edges],
        "excess": {name(v): str(x) for v, x in chi.items()},
    }
