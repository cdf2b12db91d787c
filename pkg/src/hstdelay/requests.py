"""Requests, their delay curves and problem instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .metric import MetricSpace, Tree, as_fraction, validate_hst, HstViolation
from .plfn import PLFunction

PROBLEMS = ("fl-deadline", "fl-delay", "mad", "osd")


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Deadline:
    time: Fraction

    def __post_init__(self):
        object.__setattr__(self, "time", as_fraction(self.time))


@dataclass(frozen=True)
class PiecewiseLinear:
    points: tuple[tuple[Fraction, Fraction], ...]
    final_slope: Fraction

    def __post_init__(self):
        pts = tuple((as_fraction(t), as_fraction(v)) for t, v in self.points)
        slope = as_fraction(self.final_slope)
        if not pts:
            raise InstanceError("delay curve needs at least one breakpoint")
        if pts[0][1] != 0:
            raise InstanceError("delay must be 0 at release")
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if not t0 < t1:
                raise InstanceError("delay breakpoints must have strictly increasing times")
            if v1 < v0:
                raise InstanceError("delay curve must be non-decreasing")
        if slope <= 0:
            raise InstanceError("final delay slope must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "final_slope", slope)

    @classmethod
    def linear(cls, release, slope) -> "PiecewiseLinear":
        return cls(((as_fraction(release), Fraction(0)),), slope)

    def as_function(self) -> PLFunction:
        return PLFunction(self.points, self.final_slope)


DelaySpec = Union[Deadline, PiecewiseLinear]


@dataclass(frozen=True, eq=False)
class Request:
    id: int
    location: int
    release: Fraction
    delay: DelaySpec
    _curve: PLFunction | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "release", as_fraction(self.release))
        if isinstance(self.delay, Deadline):
            if self.delay.time < self.release:
                raise InstanceError(f"request {self.id}: deadline before release")
        elif isinstance(self.delay, PiecewiseLinear):
            if self.delay.points[0][0] != self.release:
                raise InstanceError(f"request {self.id}: delay curve must start at the release time")
            object.__setattr__(self, "_curve", self.delay.as_function())
        else:
            raise InstanceError(f"request {self.id}: unknown delay spec {self.delay!r}")

    @property
    def has_deadline(self) -> bool:
        return isinstance(self.delay, Deadline)

    @property
    def deadline(self) -> Fraction:
        if not isinstance(self.delay, Deadline):
            raise TypeError(f"request {self.id} has a delay curve, not a deadline")
        return self.delay.time

    @property
    def curve(self) -> PLFunction:
        if self._curve is None:
            raise TypeError(f"request {self.id} has a deadline, not a delay curve")
        return self._curve


def delay_at(q: Request, t) -> Fraction:
    t = as_fraction(t)
    if t < q.release:
        raise ValueError(f"request {q.id} is not released at time {t}")
    return q.curve(t)


def crossing(q: Request, target, t0) -> Fraction:
    target = as_fraction(target)
    if target < 0:
        raise ValueError("crossing target must be non-negative")
    result = q.curve.crossing(target, max(as_fraction(t0), q.release))
    assert result is not None, "positive final slope guarantees a crossing"
    return result


@dataclass(frozen=True, eq=False)
class Instance:
    problem: str
    requests: tuple[Request, ...]
    tree: Tree | None = None
    metric: MetricSpace | None = None
    f: Fraction | None = None
    server_start: int | None = None
    name: str = "instance"

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InstanceError(f"unknown problem kind {self.problem!r}")
        if (self.tree is None) == (self.metric is None):
            raise InstanceError("an instance needs exactly one of tree or metric")
        object.__setattr__(self, "requests", tuple(sorted(self.requests, key=lambda q: q.id)))
        if self.f is not None:
            object.__setattr__(self, "f", as_fraction(self.f))
        ids = [q.id for q in self.requests]
        if len(set(ids)) != len(ids):
            raise InstanceError("request ids must be unique")
        deadline_kind = self.problem == "fl-deadline"
        for q in self.requests:
            if q.has_deadline != deadline_kind:
                want = "deadline" if deadline_kind else "delay-curve"
                raise InstanceError(f"request {q.id}: {self.problem} instances take {want} requests")
            self._check_location(q.location)
        if self.problem.startswith("fl"):
            if self.f is None or self.f <= 0:
                raise InstanceError("facility problems need an opening cost f > 0")
        if self.problem == "osd":
            if self.server_start is None:
                raise InstanceError("service instances need a server start")
            self._check_location(self.server_start)

    def _check_location(self, loc: int):
        if self.tree is not None:
            if not 0 <= loc < self.tree.n:
                raise InstanceError(f"location {loc} is not a tree node")
            if not self.tree.is_leaf(loc):
                raise InstanceError(f"location {loc} is an internal node; requests live on leaves")
        elif not 0 <= loc < self.metric.n:
            raise InstanceError(f"location {loc} is not a metric point")

    @property
    def n(self) -> int:
        return len(self.requests)

    def request(self, qid: int) -> Request:
        for q in self.requests:
            if q.id == qid:
                return q
        raise KeyError(qid)

    def with_requests(self, requests: Sequence[Request]) -> "Instance":
        return Instance(self.problem, tuple(requests), self.tree, self.metric, self.f, self.server_start, self.name)


def check_facility_tree(tree: Tree, f: Fraction) -> None:
    """Load-time checks for the facility algorithms on a tree."""
    cert = validate_hst(tree, 2)
    if isinstance(cert, HstViolation):
        raise InstanceError(f"tree is not a (>=2)-HST: {cert}")
    for e in tree.edges:
        if tree.weight[e] > f:
            raise InstanceError(f"edge {e} has weight {tree.weight[e]} > f = {f} (need w(e) <= f)")
    for leaf in tree.leaves:
        if tree.root_distance(leaf) > f:
            raise InstanceError(f"root-to-leaf path to {leaf} weighs {tree.root_distance(leaf)} > f = {f}")
