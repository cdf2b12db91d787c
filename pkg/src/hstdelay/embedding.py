"""Tree embeddings and tree reshaping.

* ``frt_embed``: random-shift hierarchical decomposition of a finite metric
  into a dominating 2-HST, followed by a depth-compression pass.
* ``forest_decompose``: split a tree with arbitrary weights into a forest of
  virtual (>=2)-HSTs over the same edges.
* ``round_weights_pow2``: round edge weights up to powers of two.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .metric import HstViolation, MetricSpace, Tree, validate_hst

ZERO = Fraction(0)


@dataclass(frozen=True)
class EmbeddingResult:
    hst: Tree
    leaf_map: tuple[int, ...]
    seed: int

    def tree_distance(self, x: int, y: int) -> Fraction:
        return self.hst.dist(self.leaf_map[x], self.leaf_map[y])


def _ceil_log2(x: Fraction) -> int:
    """Smallest integer k with 2**k >= x, for x > 0."""
    k = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** k < x:
        k += 1
    while Fraction(2) ** (k - 1) >= x:
        k -= 1
    return k


def frt_embed(space: MetricSpace, seed: int) -> EmbeddingResult:
    n = space.n
    if n == 0:
        raise ValueError("cannot embed an empty metric")
    if n == 1:
        return EmbeddingResult(Tree((-1, 0), (0, 1)), (1,), seed)
    d = space.dist
    positive = [d[i][j] for i in range(n) for j in range(i + 1, n)]
    if min(positive) <= 0:
        i, j = next((i, j) for i in range(n) for j in range(i + 1, n) if d[i][j] <= 0)
        raise ValueError(f"points {i} and {j} coincide; merge duplicates before embedding")
    unit = min(positive)
    top = _ceil_log2(max(positive) / unit) + 1

    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    beta = Fraction(2**32 + rng.getrandbits(32), 2**33)  # in [1/2, 1)

    parent = [-1]
    weight = [ZERO]
    members = [list(range(n))]
    frontier = [0]
    for level in range(top - 1, -1, -1):
        radius = beta * 2**level * unit
        edge_weight = Fraction(2) ** (level + 1) * unit
        nxt = []
        for node in frontier:
            groups: dict[int, list[int]] = {}
            for x in members[node]:
                center = next(c for c in order if d[x][c] <= radius)
                groups.setdefault(order.index(center), []).append(x)
            for key in sorted(groups):
                parent.append(node)
                weight.append(edge_weight)
                members.append(groups[key])
                nxt.append(len(parent) - 1)
        frontier = nxt
    return _compress(parent, weight, members, seed)


def _compress(parent, weight, members, seed) -> EmbeddingResult:
    """Drop single-child tops and collapse chains that hold a single point."""
    n_nodes = len(parent)
    children = [[] for _ in range(n_nodes)]
    for v in range(1, n_nodes):
        children[parent[v]].append(v)
    root = 0
    while len(children[root]) == 1:
        root = children[root][0]
    new_id = {root: 0}
    new_parent = [-1]
    new_weight = [ZERO]
    leaf_of: dict[int, int] = {}
    stack = [root]
    while stack:
        v = stack.pop()
        if len(members[v]) == 1:
            leaf_of[members[v][0]] = new_id[v]
            continue
        for c in children[v]:
            new_id[c] = len(new_parent)
            new_parent.append(new_id[v])
            new_weight.append(weight[c])
            stack.append(c)
    tree = Tree(tuple(new_parent), tuple(new_weight))
    return EmbeddingResult(tree, tuple(leaf_of[x] for x in range(len(members[0]))), seed)


def max_distortion(space: MetricSpace, result: EmbeddingResult) -> Fraction:
    n = space.n
    ratios = [result.tree_distance(i, j) / space.dist[i][j] for i in range(n) for j in range(i + 1, n)]
    return max(ratios, default=Fraction(1))


def merge_duplicate_points(space: MetricSpace) -> tuple[MetricSpace, tuple[int, ...]]:
    """Collapse zero-distance points; returns the merged metric and point -> merged index."""
    rep: list[int] = []
    index: list[int] = []
    for i in range(space.n):
        for k, j in enumerate(rep):
            if space.dist[i][j] == 0:
                index.append(k)
                break
        else:
            index.append(len(rep))
            rep.append(i)
    merged = MetricSpace(tuple(tuple(space.dist[a][b] for b in rep) for a in rep))
    return merged, tuple(index)


@dataclass(frozen=True)
class ForestDecomposition:
    virtual_parent: dict[int, int | None]
    trees: tuple[tuple[int, ...], ...]
    concretization: dict[int, tuple[int, ...]]

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(t[0] for t in self.trees)


def forest_decompose(tree: Tree) -> ForestDecomposition:
    """Virtual parent = nearest strict ancestor edge at least twice as heavy."""
    if tree.root_edge is None:
        raise ValueError("decomposition needs a tree with a single root edge")
    w = tree.weight
    vparent: dict[int, int | None] = {}
    concrete: dict[int, tuple[int, ...]] = {}
    for e in tree.edges:
        path = [e]
        a = tree.parent[e]
        found = None
        while a != tree.root:
            if w[a] >= 2 * w[e]:
                found = a
                break
            path.append(a)
            a = tree.parent[a]
        vparent[e] = found
        concrete[e] = tuple(path)
    owner: dict[int, int] = {}
    trees: dict[int, list[int]] = {}
    for e in tree.edges:  # BFS order: a virtual parent is always seen first
        top = e if vparent[e] is None else owner[vparent[e]]
        owner[e] = top
        trees.setdefault(top, []).append(e)
    ordered = tuple(tuple(trees[r]) for r in tree.edges if r in trees)
    return ForestDecomposition(vparent, ordered, concrete)


class HstRoundingError(ValueError):
    def __init__(self, violation: HstViolation):
        super().__init__(f"rounding broke the (>=2)-HST property: {violation}")
        self.violation = violation


def round_up_pow2(x: Fraction) -> Fraction:
    return Fraction(2) ** _ceil_log2(Fraction(x))


def round_weights_pow2(tree: Tree) -> Tree:
    rounded = Tree(tree.parent, tuple(ZERO if p == -1 else round_up_pow2(w) for p, w in zip(tree.parent, tree.weight)))
    cert = validate_hst(rounded, 2)
    if isinstance(cert, HstViolation):
        raise HstRoundingError(cert)
    return rounded
