"""Pending-request bookkeeping and the surplus detectors.

The detectors answer "is there a set of pending requests whose delay pays for
serving it" questions with tree DPs instead of subset enumeration:

* ``g(e)``: best value of ``d_Q - (w(T_e^Q) - w(e))`` over request sets below
  edge ``e``.  ``T_e`` is saturated iff ``g(e) >= w(e)``.
* ``S(u)``: best value of ``d_Q - psi_u(Q)`` below node ``u`` where ``psi_u``
  is the cheapest facility solution closed under parenthood inside ``T_u``.
  A set is critical iff ``S >= 0``.

Each DP has a numeric form (value at a time ``t``) and a curve form (a
``PLFunction`` of ``t``) whose crossing gives the earliest trigger time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .metric import Tree
from .plfn import PLFunction
from .requests import Request

ZERO = Fraction(0)


class PendingSet:
    """Released, not yet served requests grouped by leaf."""

    def __init__(self, tree: Tree, requests: Iterable[Request] = ()):
        self.tree = tree
        self._by_leaf: dict[int, dict[int, Request]] = {}
        self.served_at: dict[int, Fraction] = {}
        for q in requests:
            self.add(q)

    def add(self, q: Request) -> None:
        if q.id in self.served_at:
            raise ValueError(f"request {q.id} was already served")
        self._by_leaf.setdefault(q.location, {})[q.id] = q

    def serve(self, qid: int, t: Fraction) -> Request:
        for leaf, bucket in self._by_leaf.items():
            if qid in bucket:
                q = bucket.pop(qid)
                if not bucket:
                    del self._by_leaf[leaf]
                if t < q.release:
                    raise ValueError(f"request {qid} served before its release")
                self.served_at[qid] = t
                return q
        raise KeyError(f"request {qid} is not pending")

    def serve_leaf(self, leaf: int, t: Fraction) -> list[Request]:
        served = [self.serve(q.id, t) for q in self.at_leaf(leaf)]
        return served

    def at_leaf(self, leaf: int) -> list[Request]:
        bucket = self._by_leaf.get(leaf, {})
        return [bucket[k] for k in sorted(bucket)]

    def leaves(self) -> list[int]:
        return sorted(self._by_leaf)

    def in_subtree(self, u: int) -> list[Request]:
        tree = self.tree
        out = [q for leaf, bucket in self._by_leaf.items() if tree.is_ancestor(u, leaf) for q in bucket.values()]
        out.sort(key=lambda q: q.id)
        return out

    def any_in_subtree(self, u: int) -> bool:
        return any(self.tree.is_ancestor(u, leaf) for leaf in self._by_leaf)

    def all(self) -> list[Request]:
        return sorted((q for b in self._by_leaf.values() for q in b.values()), key=lambda q: q.id)

    def __len__(self) -> int:
        return sum(len(b) for b in self._by_leaf.values())

    def __bool__(self) -> bool:
        return bool(self._by_leaf)

    def __contains__(self, qid: int) -> bool:
        return any(qid in b for b in self._by_leaf.values())


@dataclass(frozen=True)
class SurplusReport:
    element: int
    value: Fraction
    witness: tuple[int, ...]
    time: Fraction | None = None


def _sum(curves: Iterable[PLFunction]) -> PLFunction:
    return PLFunction.total(curves)


# -- saturation (edge-rooted) ---------------------------------------------


def _g_table(tree: Tree, e: int, pending: PendingSet, t: Fraction) -> dict[int, Fraction]:
    g: dict[int, Fraction] = {}
    w = tree.weight
    for v in reversed(tree.subtree(e)):
        if tree.is_leaf(v):
            g[v] = sum((q.curve(t) for q in pending.at_leaf(v)), ZERO)
        else:
            g[v] = sum((max(ZERO, g[c] - w[c]) for c in tree.children(v)), ZERO)
    return g


def saturation_surplus(tree: Tree, e: int, pending: PendingSet, t) -> SurplusReport:
    t = Fraction(t)
    g = _g_table(tree, e, pending, t)
    witness: list[int] = []
    stack = [e]
    while stack:
        v = stack.pop()
        if tree.is_leaf(v):
            if g[v] > 0:
                witness.extend(q.id for q in pending.at_leaf(v))
            continue
        stack.extend(c for c in tree.children(v) if g[c] - tree.weight[c] > 0)
    return SurplusReport(e, g[e], tuple(sorted(witness)), t)


def saturation_curve(tree: Tree, e: int, pending: PendingSet) -> PLFunction:
    curves: dict[int, PLFunction] = {}
    w = tree.weight
    for v in reversed(tree.subtree(e)):
        if tree.is_leaf(v):
            curves[v] = _sum(q.curve for q in pending.at_leaf(v))
        else:
            curves[v] = _sum((curves[c] - w[c]).clamp0() for c in tree.children(v) if pending.any_in_subtree(c))
    return curves[e]


def earliest_saturation(tree: Tree, e: int, pending: PendingSet, t0) -> Fraction | None:
    """Earliest ``t >= t0`` at which ``T_e`` is saturated, None if no requests."""
    if not pending.any_in_subtree(e):
        return None
    return saturation_curve(tree, e, pending).crossing(tree.weight[e], t0)


# -- facility location ------------------------------------------------------


def fl_connection_surplus(tree: Tree, u: int, pending: PendingSet, t) -> Fraction:
    t = Fraction(t)
    return sum((max(ZERO, q.curve(t) - tree.dist(u, q.location)) for q in pending.in_subtree(u)), ZERO)


def _fl_table(tree: Tree, f: Fraction, top: int, pending: PendingSet, t: Fraction):
    """Return S values and the per-child choice ('connect' or 'open') below ``top``."""
    S: dict[int, Fraction] = {}
    choice: dict[int, str] = {}
    for u in reversed(tree.subtree(top)):
        value = -f + sum((q.curve(t) for q in pending.at_leaf(u)), ZERO)
        for c in tree.children(u):
            if not pending.any_in_subtree(c):
                continue
            connect = sum((max(ZERO, q.curve(t) - tree.dist(u, q.location)) for q in pending.in_subtree(c)), ZERO)
            best = max(ZERO, connect, S[c])
            if best > 0:
                choice[c] = "connect" if connect >= S[c] else "open"
            value += best
        S[u] = value
    return S, choice


def fl_critical_surplus(tree: Tree, f, pending: PendingSet, t, top: int | None = None) -> SurplusReport:
    """S at ``top`` (default: the root) with a witness set attaining it."""
    f, t = Fraction(f), Fraction(t)
    top = tree.root if top is None else top
    S, choice = _fl_table(tree, f, top, pending, t)
    witness: list[int] = []
    stack = [top]
    while stack:
        u = stack.pop()
        witness.extend(q.id for q in pending.at_leaf(u))
        for c in tree.children(u):
            kind = choice.get(c)
            if kind == "connect":
                witness.extend(q.id for q in pending.in_subtree(c) if q.curve(t) > tree.dist(u, q.location))
            elif kind == "open":
                stack.append(c)
    if S[top] <= -f:
        witness = []
    return SurplusReport(top, max(S[top], -f), tuple(sorted(witness)), t)


def connection_curve(tree: Tree, u: int, requests: Iterable[Request]) -> PLFunction:
    return _sum((q.curve - tree.dist(u, q.location)).clamp0() for q in requests)


def fl_critical_curve(tree: Tree, f, pending: PendingSet, top: int | None = None) -> PLFunction:
    f = Fraction(f)
    top = tree.root if top is None else top
    curves: dict[int, PLFunction] = {}
    for u in reversed(tree.subtree(top)):
        parts = [q.curve for q in pending.at_leaf(u)]
        for c in tree.children(u):
            below = pending.in_subtree(c)
            if not below:
                continue
            connect = connection_curve(tree, u, below)
            parts.append(connect.maximum(curves[c]).clamp0())
        curves[u] = _sum(parts).shift(-f)
    return curves[top]


def earliest_fl_critical(tree: Tree, f, pending: PendingSet, t0, top: int | None = None) -> Fraction | None:
    """Earliest ``t >= t0`` with ``S(top, t) >= 0``, None if nothing is pending there."""
    top = tree.root if top is None else top
    if not pending.any_in_subtree(top):
        return None
    return fl_critical_curve(tree, f, pending, top).crossing(ZERO, t0)
