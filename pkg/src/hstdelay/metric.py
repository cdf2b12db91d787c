"""Exact metric spaces and rooted weighted trees.

Trees store one weighted edge per non-root node: the edge from the node up to
its parent.  An edge is therefore identified by the id of its lower endpoint,
which keeps edge-rooted and node-rooted subtree queries on a single index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

Rational = Fraction


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass ints, Fractions or 'p/q' strings")
    return Fraction(value)


@dataclass(frozen=True)
class MetricViolation:
    kind: str  # "diagonal", "symmetry", "triangle", "negative"
    points: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind} violated at points {self.points}"


@dataclass(frozen=True, eq=False)
class MetricSpace:
    dist: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.dist)
        rows = []
        for row in self.dist:
            if len(row) != n:
                raise ValueError(f"distance matrix is not square: row of length {len(row)} in {n}x{n}")
            rows.append(tuple(as_fraction(x) for x in row))
        object.__setattr__(self, "dist", tuple(rows))

    @property
    def n(self) -> int:
        return len(self.dist)

    def __call__(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]


def validate_metric(space: MetricSpace) -> MetricViolation | None:
    """Return None for a valid metric, else the first violation found."""
    d = space.dist
    n = space.n
    for i in range(n):
        if d[i][i] != 0:
            return MetricViolation("diagonal", (i,))
        for j in range(n):
            if d[i][j] < 0:
                return MetricViolation("negative", (i, j))
            if d[i][j] != d[j][i]:
                return MetricViolation("symmetry", (i, j))
    for a in range(n):
        for c in range(n):
            for b in range(n):
                if d[a][c] > d[a][b] + d[b][c]:
                    return MetricViolation("triangle", (a, b, c))
    return None


class TreeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Tree:
    """Rooted tree with positive rational edge weights.

    ``parent[v]`` is -1 for the root; ``weight[v]`` is the weight of the edge
    from ``v`` to its parent (0 for the root).
    """

    parent: tuple[int, ...]
    weight: tuple[Fraction, ...]
    _children: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    _order: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        parent = tuple(int(p) for p in self.parent)
        weight = tuple(as_fraction(w) for w in self.weight)
        n = len(parent)
        if n == 0:
            raise TreeError("tree has no nodes")
        if len(weight) != n:
            raise TreeError("parent and weight arrays differ in length")
        roots = [v for v in range(n) if parent[v] == -1]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        children: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if p == -1:
                continue
            if not 0 <= p < n:
                raise TreeError(f"node {v} has out-of-range parent {p}")
            if weight[v] <= 0:
                raise TreeError(f"edge above node {v} has non-positive weight {weight[v]}")
            children[p].append(v)
        order = [roots[0]]
        for u in order:
            order.extend(children[u])
        if len(order) != n:
            raise TreeError("parent links contain a cycle or unreachable nodes")
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "weight", tuple(Fraction(0) if p == -1 else w for p, w in zip(parent, weight)))
        object.__setattr__(self, "_children", tuple(tuple(c) for c in children))
        object.__setattr__(self, "_order", tuple(order))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, object]]) -> "Tree":
        parent = [-1] * n
        weight: list[Fraction] = [Fraction(0)] * n
        for p, c, w in edges:
            if parent[c] != -1:
                raise TreeError(f"node {c} has two parents")
            parent[c] = p
            weight[c] = as_fraction(w)
        return cls(tuple(parent), tuple(weight))

    # -- basic structure -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return self._order[0]

    @property
    def bfs_order(self) -> tuple[int, ...]:
        return self._order

    def children(self, u: int) -> tuple[int, ...]:
        return self._children[u]

    def is_leaf(self, u: int) -> bool:
        return not self._children[u]

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n) if not self._children[v])

    @property
    def edges(self) -> tuple[int, ...]:
        """Edge ids, i.e. every non-root node, in BFS order."""
        return self._order[1:]

    @cached_property
    def root_edge(self) -> int | None:
        kids = self._children[self.root]
        return kids[0] if len(kids) == 1 else None

    @cached_property
    def _depths(self) -> tuple[int, ...]:
        depth = [0] * self.n
        for v in self._order[1:]:
            depth[v] = depth[self.parent[v]] + 1
        return tuple(depth)

    @cached_property
    def _root_dist(self) -> tuple[Fraction, ...]:
        dist = [Fraction(0)] * self.n
        for v in self._order[1:]:
            dist[v] = dist[self.parent[v]] + self.weight[v]
        return tuple(dist)

    @cached_property
    def _heights(self) -> tuple[int, ...]:
        height = [0] * self.n
        for v in reversed(self._order):
            if self._children[v]:
                height[v] = 1 + max(height[c] for c in self._children[v])
        return tuple(height)

    @cached_property
    def _euler(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        tin = [0] * self.n
        tout = [0] * self.n
        clock = 0
        stack: list[tuple[int, bool]] = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                tout[v] = clock
                continue
            tin[v] = clock
            clock += 1
            stack.append((v, True))
            for c in reversed(self._children[v]):
                stack.append((c, False))
        return tuple(tin), tuple(tout)

    def depth(self, v: int) -> int:
        """Number of edges between ``v`` and the root."""
        return self._depths[v]

    def height(self, v: int) -> int:
        """Number of edges on the longest downward path from ``v``."""
        return self._heights[v]

    def edge_height(self, e: int) -> int:
        return 1 + self._heights[e]

    @property
    def D(self) -> int:
        return self._heights[self.root]

    def root_distance(self, v: int) -> Fraction:
        return self._root_dist[v]

    def is_ancestor(self, a: int, b: int) -> bool:
        """True iff ``a`` is ``b`` or an ancestor of ``b``."""
        tin, tout = self._euler
        return tin[a] <= tin[b] and tout[b] <= tout[a]

    def lca(self, a: int, b: int) -> int:
        depth = self._depths
        while depth[a] > depth[b]:
            a = self.parent[a]
        while depth[b] > depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def dist(self, a: int, b: int) -> Fraction:
        c = self.lca(a, b)
        return self._root_dist[a] + self._root_dist[b] - 2 * self._root_dist[c]

    def path_up(self, v: int, ancestor: int) -> list[int]:
        """Edges from ``v`` up to (not past) ``ancestor``."""
        out = []
        while v != ancestor:
            if v == self.root:
                raise TreeError(f"{ancestor} is not an ancestor")
            out.append(v)
            v = self.parent[v]
        return out

    def path_edges(self, a: int, b: int) -> list[int]:
        """Edges on the path from node ``a`` to node ``b``, in walking order."""
        c = self.lca(a, b)
        return self.path_up(a, c) + list(reversed(self.path_up(b, c)))

    def child_toward(self, u: int, v: int) -> int:
        """The child of ``u`` whose subtree contains the strict descendant ``v``."""
        depth_u = self._depths[u]
        while self._depths[v] > depth_u + 1:
            v = self.parent[v]
        if self.parent[v] != u:
            raise TreeError(f"{v} is not below {u}")
        return v

    def subtree(self, u: int) -> list[int]:
        out = [u]
        for v in out:
            out.extend(self._children[v])
        return out

    def subtree_leaves(self, u: int) -> list[int]:
        return [v for v in self.subtree(u) if not self._children[v]]


@dataclass(frozen=True)
class HstCertificate:
    beta: Fraction
    is_pow2: bool


@dataclass(frozen=True)
class HstViolation:
    parent_edge: int
    child_edge: int
    parent_weight: Fraction
    child_weight: Fraction
    beta: Fraction

    def __str__(self) -> str:
        return (f"edge {self.parent_edge} (w={self.parent_weight}) is not {self.beta}x "
                f"its child edge {self.child_edge} (w={self.child_weight})")


def is_power_of_two(x: Fraction) -> bool:
    x = Fraction(x)
    if x <= 0:
        return False
    num, den = x.numerator, x.denominator
    return (num == 1 or den == 1) and (num & (num - 1)) == 0 and (den & (den - 1)) == 0


def validate_hst(tree: Tree, beta) -> HstCertificate | HstViolation:
    beta = as_fraction(beta)
    for e in tree.edges:
        for c in tree.children(e):
            if tree.weight[e] < beta * tree.weight[c]:
                return HstViolation(e, c, tree.weight[e], tree.weight[c], beta)
    pow2 = all(is_power_of_two(tree.weight[e]) for e in tree.edges)
    return HstCertificate(beta, pow2)


def spanned_edges(tree: Tree, top: int, leaves: Iterable[int], edge_rooted: bool) -> set[int]:
    """Edges of the union of paths from ``top`` down to each leaf.

    With ``edge_rooted`` the top is the edge above node ``top`` and is always
    included; otherwise ``top`` is a node and contributes no edge itself.
    """
    edges: set[int] = {top} if edge_rooted else set()
    for leaf in leaves:
        if not tree.is_ancestor(top, leaf):
            raise TreeError(f"leaf {leaf} lies outside the subtree of {top}")
        v = leaf
        while v != top and v not in edges:
            edges.add(v)
            v = tree.parent[v]
    return edges


def spanned_weight(tree: Tree, top: int, leaves: Iterable[int], edge_rooted: bool = True) -> Fraction:
    return sum((tree.weight[e] for e in spanned_edges(tree, top, leaves, edge_rooted)), Fraction(0))


@dataclass(frozen=True)
class CostBreakdown:
    buy: Fraction = Fraction(0)
    connect: Fraction = Fraction(0)
    delay: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("buy", "connect", "delay"):
            value = as_fraction(getattr(self, name))
            if value < 0:
                raise ValueError(f"negative {name} cost {value}")
            object.__setattr__(self, name, value)

    @property
    def total(self) -> Fraction:
        return self.buy + self.connect + self.delay

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(self.buy + other.buy, self.connect + other.connect, self.delay + other.delay)


def tree_metric(tree: Tree, points: Sequence[int] | None = None) -> MetricSpace:
    points = list(range(tree.n)) if points is None else list(points)
    return MetricSpace(tuple(tuple(tree.dist(a, b) for b in points) for a in points))
