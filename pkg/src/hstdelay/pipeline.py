"""From an instance file to a finished online run.

Metric instances are embedded into a tree first (a fresh embedding per
seed).  The facility algorithms need every root-to-leaf path to cost at most
``f``; an embedded tree is cut at its edges heavier than ``f/2`` and each
piece is run on its own.  This loses at most a constant factor, since a
connection across such an edge already costs more than half an opening.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .embedding import EmbeddingResult, frt_embed, merge_duplicate_points
from .fl import CounterBank, FlRun, FlSolution, counter_checks, run_fl_deadline, run_fl_delay
from .mad import run_mad_general, run_mad_hst
from .metric import CostBreakdown, Tree
from .osd import run_osd
from .requests import Instance, InstanceError, Request
from .trace import Trace

ALGORITHMS = ("fl-deadline", "fl-delay", "mad", "mad-general", "osd")
PROBLEM_OF = {"fl-deadline": "fl-deadline", "fl-delay": "fl-delay", "mad": "mad", "mad-general": "mad", "osd": "osd"}


@dataclass
class Embedded:
    instance: Instance
    embedding: EmbeddingResult
    point_index: tuple[int, ...]


def embed_instance(instance: Instance, seed: int) -> Embedded:
    """Re-host a metric instance on a freshly drawn dominating tree."""
    if instance.metric is None:
        raise InstanceError("instance is already on a tree")
    merged, index = merge_duplicate_points(instance.metric)
    emb = frt_embed(merged, seed)
    leaf = [emb.leaf_map[index[p]] for p in range(instance.metric.n)]
    requests = tuple(Request(q.id, leaf[q.location], q.release, q.delay) for q in instance.requests)
    start = None if instance.server_start is None else leaf[instance.server_start]
    hosted = Instance(instance.problem, requests, tree=emb.hst, f=instance.f, server_start=start, name=instance.name)
    return Embedded(hosted, emb, index)


@dataclass
class Component:
    tree: Tree
    nodes: list[int]  # component node -> original node


def facility_components(tree: Tree, f: Fraction) -> list[Component]:
    """Pieces left after deleting edges heavier than ``f/2`` (or heavier than ``f``
    when the whole tree already satisfies the facility preconditions)."""
    fits = all(tree.weight[e] <= f for e in tree.edges) and all(tree.root_distance(v) <= f for v in tree.leaves)
    if fits:
        return [Component(tree, list(range(tree.n)))]
    heavy = {e for e in tree.edges if tree.weight[e] > f / 2}
    tops = [tree.root] + [e for e in tree.bfs_order if e in heavy]
    out = []
    for top in tops:
        nodes = [top]
        for v in nodes:
            nodes.extend(c for c in tree.children(v) if c not in heavy)
        local = {v: i for i, v in enumerate(nodes)}
        parent = tuple(-1 if v == top else local[tree.parent[v]] for v in nodes)
        weight = tuple(Fraction(0) if v == top else tree.weight[v] for v in nodes)
        out.append(Component(Tree(parent, weight), nodes))
    return out


def _merge_fl(instance: Instance, tree: Tree, parts: list[tuple[Component, FlRun]]) -> FlRun:
    """Concatenate component runs into one run expressed in original node ids."""
    trace = Trace(parts[0][1].trace.algorithm if parts else instance.problem)
    bank = CounterBank(lambda v: instance.f)
    checks: dict[str, bool] = {}
    buy = connect = delay = Fraction(0)
    for comp, run in parts:
        name = comp.nodes
        for key, ok in {**run.checks, **counter_checks(run)}.items():
            checks[key] = checks.get(key, True) and ok
        offset = len(trace.services)
        for s in run.trace.services:
            s.index += offset
            s.element = name[s.element]
            trace.services.append(s)
        for rec in run.trace.explores:
            rec.element = name[rec.element]
            rec.service += offset
            for inv in rec.investments:
                inv.target = name[inv.target]
            trace.explores.append(rec)
        trace.openings.extend((t, name[v]) for t, v in run.trace.openings)
        trace.connections.extend((qid, t, name[v]) for qid, t, v in run.trace.connections)
        trace.served.update(run.trace.served)
        for v, total in run.bank.cumulative.items():
            bank.cumulative[name[v]] += total
        buy += run.trace.reported.buy
        connect += run.trace.reported.connect
        delay += run.trace.reported.delay
    trace.reported = CostBreakdown(buy, connect, delay)
    solution = FlSolution(list(trace.openings), {q: (t, v) for q, t, v in trace.connections}, trace.reported)
    return FlRun(solution, trace, bank, instance.f, tree, checks, pieces=len(parts))


def run_facility(instance: Instance, split: bool = True) -> FlRun:
    """``split=False`` runs the tree as given, so a tree that breaks ``w(e) <= f``
    is rejected by the load checks instead of being cut."""
    runner = run_fl_deadline if instance.problem == "fl-deadline" else run_fl_delay
    if not split:
        run = runner(instance)
        run.checks.update(counter_checks(run))
        return run
    comps = facility_components(instance.tree, instance.f)
    if len(comps) == 1 and comps[0].tree is instance.tree:
        run = runner(instance)
        run.checks.update(counter_checks(run))
        return run
    parts = []
    for comp in comps:
        local = {v: i for i, v in enumerate(comp.nodes)}
        reqs = [Request(q.id, local[q.location], q.release, q.delay)
                for q in instance.requests if q.location in local]
        sub = Instance(instance.problem, tuple(reqs), tree=comp.tree, f=instance.f, name=instance.name)
        parts.append((comp, runner(sub)))
    return _merge_fl(instance, instance.tree, parts)


@dataclass
class RunResult:
    algorithm: str
    instance: Instance  # the tree instance the algorithm ran on
    run: object
    embedding: EmbeddingResult | None = None
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def trace(self) -> Trace:
        return self.run.trace

    @property
    def tree(self) -> Tree:
        return self.run.tree


def run_algorithm(instance: Instance, algorithm: str, seed: int = 0) -> RunResult:
    if algorithm not in ALGORITHMS:
        raise InstanceError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if PROBLEM_OF[algorithm] != instance.problem:
        raise InstanceError(f"algorithm {algorithm} does not solve {instance.problem} instances")
    embedding = None
    if instance.metric is not None:
        embedded = embed_instance(instance, seed)
        instance, embedding = embedded.instance, embedded.embedding
    if algorithm.startswith("fl"):
        run = run_facility(instance, split=embedding is not None)
    elif algorithm == "mad":
        run = run_mad_hst(instance)
    elif algorithm == "mad-general":
        run = run_mad_general(instance)
    else:
        run = run_osd(instance)
    return RunResult(algorithm, instance, run, embedding, dict(run.checks))
