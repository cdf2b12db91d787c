"""Seeded random instances.

Every generator draws from one ``random.Random(seed)`` in a fixed order, so
the same arguments always give the same instance.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .fileformat import euclidean_metric, instance_to_json, q
from .metric import Tree
from .requests import Deadline, Instance, InstanceError, PiecewiseLinear, Request

KINDS = ("random-hst", "random-tree", "random-euclidean")
PROFILES = ("deadline-uniform", "linear-slopes", "bursty-coalitions")
SUPPORTED = {
    "random-hst": ("fl-deadline", "fl-delay", "mad", "osd"),
    "random-tree": ("mad",),
    "random-euclidean": ("fl-deadline", "fl-delay", "mad", "osd"),
}
HORIZON = 40


def _split(rng: random.Random, items: list, levels: int) -> list[list]:
    """Partition ``items`` into 2..4 groups that fit under ``levels`` more splits."""
    m = len(items)
    cap = 4 ** (levels - 1) if levels > 1 else 1
    lo = max(2, -(-m // cap))
    hi = max(lo, min(m, 4))
    b = rng.randint(lo, hi)
    order = items[:]
    rng.shuffle(order)
    groups = [[x] for x in order[:b]]
    for x in order[b:]:
        open_groups = [g for g in groups if len(g) < cap]
        rng.choice(open_groups).append(x)
    return groups


def _build(rng: random.Random, n_leaves: int, max_depth: int, child_weight, unary_prob=0.0) -> Tree:
    """Root node 0 with one root edge to node 1, leaves at depth <= max_depth."""
    parent = [-1, 0]
    weight = [Fraction(0), child_weight(None)]
    stack = [(1, list(range(n_leaves)), max_depth - 1)]
    while stack:
        v, leaves, levels = stack.pop()
        if len(leaves) == 1 and (levels == 0 or rng.random() >= unary_prob):
            continue
        if len(leaves) == 1:
            groups = [leaves]
        else:
            groups = _split(rng, leaves, levels)
        for g in groups:
            parent.append(v)
            weight.append(child_weight(weight[v]))
            stack.append((len(parent) - 1, g, levels - 1))
    return Tree(tuple(parent), tuple(weight))


def random_hst(rng: random.Random, n_leaves: int, max_depth: int = 5) -> Tree:
    top = Fraction(2) ** (2 * max_depth)

    def w(parent_weight):
        return top if parent_weight is None else parent_weight / 2 ** rng.randint(1, 2)

    return _build(rng, n_leaves, max_depth, w)


def random_tree(rng: random.Random, n_leaves: int, max_depth: int = 5) -> Tree:
    return _build(rng, n_leaves, max_depth, lambda _: Fraction(rng.randint(1, 10)), unary_prob=0.3)


def _time(rng: random.Random, hi: int = HORIZON) -> Fraction:
    return Fraction(rng.randint(0, 4 * hi), 4)


def _requests(rng: random.Random, profile: str, locations: list[int], count: int) -> list[Request]:
    out = []
    if profile == "deadline-uniform":
        for i in range(count):
            r = _time(rng)
            # offsets i/1000 < 1/4 keep deadlines distinct across requests
            d = r + Fraction(rng.randint(1, 4 * 10), 4) + Fraction(i, 1000)
            out.append(Request(i, rng.choice(locations), r, Deadline(d)))
    elif profile == "linear-slopes":
        for i in range(count):
            r = _time(rng)
            out.append(Request(i, rng.choice(locations), r, PiecewiseLinear.linear(r, Fraction(rng.randint(1, 8), 4))))
    elif profile == "bursty-coalitions":
        i = 0
        while i < count:
            leaf = rng.choice(locations)
            center = _time(rng)
            size = min(count - i, rng.randint(2, 4))
            if size < 2 and out:
                leaf = out[-1].location  # a lone leftover joins the previous burst
            for _ in range(size):
                r = center + Fraction(rng.randint(0, 4), 8)
                out.append(Request(i, leaf, r, PiecewiseLinear.linear(r, Fraction(1, 2 ** rng.randint(1, 3)))))
                i += 1
    else:
        raise InstanceError(f"unknown delay profile {profile!r}; choose from {', '.join(PROFILES)}")
    return out


def generate(kind: str, problem: str, n: int, requests: int, seed: int, profile: str, name: str | None = None):
    """Return (instance, metric block for the file)."""
    if kind not in KINDS:
        raise InstanceError(f"unknown instance kind {kind!r}; choose from {', '.join(KINDS)}")
    if problem not in SUPPORTED[kind]:
        raise InstanceError(f"{kind} does not generate {problem} instances")
    if (profile == "deadline-uniform") != (problem == "fl-deadline"):
        raise InstanceError(f"profile {profile} does not fit problem {problem}")
    if n < 1 or requests < 0:
        raise InstanceError("need n >= 1 and a non-negative request count")
    rng = random.Random(seed)
    name = name or f"{kind}-{problem}-{seed}"
    f = None
    start = None
    if kind == "random-euclidean":
        points = [(Fraction(rng.randint(0, 1000), 1000), Fraction(rng.randint(0, 1000), 1000)) for _ in range(n)]
        metric = euclidean_metric(points)
        block = {"kind": "euclidean", "points": [[q(x), q(y)] for x, y in points]}
        locations = list(range(n))
        tree = None
        if problem.startswith("fl"):
            f = Fraction(2 ** rng.randint(0, 2))
    else:
        if n > 32:
            raise InstanceError("random trees are limited to 32 leaves")
        tree = random_hst(rng, n) if kind == "random-hst" else random_tree(rng, n)
        metric = None
        block = None
        locations = list(tree.leaves)
        if problem.startswith("fl"):
            longest = max(tree.root_distance(v) for v in tree.leaves)
            f = longest * 2 ** rng.randint(0, 2)
    if problem == "osd":
        start = rng.choice(locations)
    reqs = _requests(rng, profile, locations, requests)
    inst = Instance(problem, tuple(reqs), tree=tree, metric=metric, f=f, server_start=start, name=name)
    return inst, block


def generate_json(*args, **kwargs) -> dict:
    inst, block = generate(*args, **kwargs)
    return instance_to_json(inst, block)
