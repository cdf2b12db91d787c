"""JSON files for instances, traces and offline solutions.

Every rational is written as an exact ``"p/q"`` (or ``"p"``) string and keys
are sorted, so equal objects always produce byte-identical files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import isqrt

from .metric import CostBreakdown, MetricSpace, Tree
from .oracle import OfflineSolution
from .requests import Deadline, Instance, InstanceError, PiecewiseLinear, Request
from .trace import ExploreRecord, Investment, ServiceRecord, Trace

FORMAT_VERSION = 1


def q(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def unq(s) -> Fraction:
    if isinstance(s, float):
        raise InstanceError(f"floating-point value {s!r} in file; write rationals as strings")
    if isinstance(s, int):
        return Fraction(s)
    return Fraction(s)


def _opt(x):
    return None if x is None else q(x)


def _unopt(x):
    return None if x is None else unq(x)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


# -- metrics -------------------------------------------------------------


def tree_to_json(tree: Tree) -> dict:
    return {
        "kind": "tree",
        "root": tree.root,
        "n": tree.n,
        "edges": [[tree.parent[v], v, q(tree.weight[v])] for v in range(tree.n) if v != tree.root],
    }


def tree_from_json(block: dict) -> Tree:
    n = int(block["n"])
    parent = [-1] * n
    weight = [Fraction(0)] * n
    seen = set()
    for p, c, w in block["edges"]:
        if c in seen:
            raise InstanceError(f"node {c} has two parents")
        seen.add(c)
        parent[c] = int(p)
        weight[c] = unq(w)
    if parent[int(block["root"])] != -1:
        raise InstanceError("declared root has a parent")
    return Tree(tuple(parent), tuple(weight))


def euclidean_metric(points) -> MetricSpace:
    """Distances rounded up to 1/1000 and closed under shortest paths, so the
    result is an exact rational metric that dominates the true distances."""
    pts = [(unq(x), unq(y)) for x, y in points]
    n = len(pts)
    d = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            sq = ((pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2) * 10**6
            num = -(-sq.numerator // sq.denominator)  # ceil, so the root below rounds up
            root = 0 if num == 0 else isqrt(num - 1) + 1
            d[i][j] = d[j][i] = Fraction(root, 1000)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return MetricSpace(tuple(tuple(row) for row in d))


def metric_from_json(block: dict):
    kind = block.get("kind")
    if kind == "tree":
        return tree_from_json(block), None
    if kind == "matrix":
        return None, MetricSpace(tuple(tuple(unq(x) for x in row) for row in block["dist"]))
    if kind == "euclidean":
        return None, euclidean_metric(block["points"])
    raise InstanceError(f"unknown metric kind {kind!r}")


# -- instances -----------------------------------------------------------


def delay_to_json(spec) -> dict:
    if isinstance(spec, Deadline):
        return {"kind": "deadline", "time": q(spec.time)}
    return {"kind": "piecewise-linear", "points": [[q(t), q(v)] for t, v in spec.points],
            "final_slope": q(spec.final_slope)}


def delay_from_json(block: dict):
    if block["kind"] == "deadline":
        return Deadline(unq(block["time"]))
    if block["kind"] == "piecewise-linear":
        return PiecewiseLinear(tuple((unq(t), unq(v)) for t, v in block["points"]), unq(block["final_slope"]))
    raise InstanceError(f"unknown delay kind {block['kind']!r}")


def instance_to_json(inst: Instance, metric_block: dict | None = None) -> dict:
    """``metric_block`` keeps the original description (e.g. euclidean points)."""
    if metric_block is None:
        if inst.tree is not None:
            metric_block = tree_to_json(inst.tree)
        else:
            metric_block = {"kind": "matrix", "dist": [[q(x) for x in row] for row in inst.metric.dist]}
    out = {
        "format": FORMAT_VERSION,
        "name": inst.name,
        "problem": inst.problem,
        "metric": metric_block,
        "requests": [
            {"id": r.id, "location": r.location, "release": q(r.release), "delay": delay_to_json(r.delay)}
            for r in inst.requests
        ],
    }
    if inst.f is not None:
        out["f"] = q(inst.f)
    if inst.server_start is not None:
        out["server_start"] = inst.server_start
    return out


def instance_from_json(doc: dict) -> Instance:
    tree, metric = metric_from_json(doc["metric"])
    requests = tuple(
        Request(int(r["id"]), int(r["location"]), unq(r["release"]), delay_from_json(r["delay"]))
        for r in doc["requests"]
    )
    return Instance(
        doc["problem"], requests, tree=tree, metric=metric,
        f=_unopt(doc.get("f")), server_start=doc.get("server_start"), name=doc.get("name", "instance"),
    )


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_json(json.load(fh))


def metric_block_of(path) -> dict:
    with open(path) as fh:
        return json.load(fh)["metric"]


# -- traces --------------------------------------------------------------


def trace_to_json(trace: Trace) -> dict:
    return {
        "algorithm": trace.algorithm,
        "explores": [
            {"element": r.element, "time": q(r.time), "call": r.call, "service": r.service, "depth": r.depth,
             "investments": [[i.target, q(i.amount), i.phase] for i in r.investments],
             "spent": q(r.spent), "lambda": _opt(r.lam), "pending_after": r.pending_after}
            for r in trace.explores
        ],
        "services": [
            {"index": s.index, "time": q(s.time), "element": s.element, "served": list(s.served),
             "trigger": s.trigger, "side": s.side, "tree": list(s.tree), "approach": q(s.approach),
             "traversal": q(s.traversal), "crossing": q(s.crossing), "server_before": s.server_before,
             "server_after": s.server_after, "virtual_tree": s.virtual_tree, "virtual_edges": list(s.virtual_edges),
             "phase": s.phase}
            for s in trace.services
        ],
        "openings": [[q(t), v] for t, v in trace.openings],
        "connections": [[qid, q(t), v] for qid, t, v in trace.connections],
        "transmissions": [[q(t), list(e)] for t, e in trace.transmissions],
        "moves": [[q(t), list(w)] for t, w in trace.moves],
        "served": {str(k): q(v) for k, v in sorted(trace.served.items())},
        "cost": {"buy": q(trace.reported.buy), "connect": q(trace.reported.connect), "delay": q(trace.reported.delay)},
    }


def trace_from_json(doc: dict) -> Trace:
    tr = Trace(doc["algorithm"])
    for r in doc["explores"]:
        tr.explores.append(ExploreRecord(
            r["element"], unq(r["time"]), r["call"], r["service"], r["depth"],
            [Investment(t, unq(a), p) for t, a, p in r["investments"]],
            unq(r["spent"]), _unopt(r["lambda"]), r["pending_after"]))
    for s in doc["services"]:
        tr.services.append(ServiceRecord(
            s["index"], unq(s["time"]), s["element"], list(s["served"]), s["trigger"], s["side"], list(s["tree"]),
            unq(s["approach"]), unq(s["traversal"]), unq(s["crossing"]), s["server_before"], s["server_after"],
            s["virtual_tree"], list(s["virtual_edges"]), s.get("phase")))
    tr.openings = [(unq(t), v) for t, v in doc["openings"]]
    tr.connections = [(qid, unq(t), v) for qid, t, v in doc["connections"]]
    tr.transmissions = [(unq(t), tuple(e)) for t, e in doc["transmissions"]]
    tr.moves = [(unq(t), tuple(w)) for t, w in doc["moves"]]
    tr.served = {int(k): unq(v) for k, v in doc["served"].items()}
    c = doc["cost"]
    tr.reported = CostBreakdown(unq(c["buy"]), unq(c["connect"]), unq(c["delay"]))
    return tr


# -- offline solutions ---------------------------------------------------


def solution_to_json(sol: OfflineSolution) -> dict:
    return {
        "problem": sol.problem,
        "openings": [[q(t), v] for t, v in sol.openings],
        "assignments": {str(k): [q(t), v] for k, (t, v) in sorted(sol.assignments.items())},
        "transmissions": [[q(t), list(e)] for t, e in sol.transmissions],
        "moves": [[q(t), list(w)] for t, w in sol.moves],
        "start": sol.start,
        "cost": {"buy": q(sol.cost.buy), "connect": q(sol.cost.connect), "delay": q(sol.cost.delay)},
    }


def solution_from_json(doc: dict) -> OfflineSolution:
    c = doc["cost"]
    return OfflineSolution(
        doc["problem"],
        [(unq(t), v) for t, v in doc["openings"]],
        {int(k): (unq(t), v) for k, (t, v) in doc["assignments"].items()},
        [(unq(t), tuple(e)) for t, e in doc["transmissions"]],
        [(unq(t), tuple(w)) for t, w in doc["moves"]],
        doc.get("start"),
        CostBreakdown(unq(c["buy"]), unq(c["connect"]), unq(c["delay"])),
    )
