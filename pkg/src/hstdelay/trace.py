"""Execution traces shared by the online algorithms.

A trace keeps two layers: the primitive actions an outside observer could
see (openings, connections, transmissions, server walks) and the internal
bookkeeping of the exploration (investments into counters, budgets, lambda
times).  Cost accounting reads only the first layer; the charging analysis
reads the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .metric import CostBreakdown


@dataclass
class Investment:
    target: int
    amount: Fraction
    phase: int


@dataclass
class ExploreRecord:
    element: int
    time: Fraction
    call: int
    service: int
    depth: int
    investments: list[Investment] = field(default_factory=list)
    spent: Fraction = Fraction(0)
    lam: Fraction | None = None  # None stands for +infinity
    pending_after: bool = False


@dataclass
class ServiceRecord:
    index: int
    time: Fraction
    element: int
    served: list[int] = field(default_factory=list)
    trigger: int | None = None
    side: str | None = None  # "T" or "R" for the service problem
    tree: list[int] = field(default_factory=list)
    approach: Fraction = Fraction(0)
    traversal: Fraction = Fraction(0)
    crossing: Fraction = Fraction(0)
    server_before: int | None = None
    server_after: int | None = None
    virtual_tree: int | None = None
    virtual_edges: list[int] = field(default_factory=list)
    phase: int | None = None  # index of the first service of the same phase


@dataclass
class Trace:
    algorithm: str
    explores: list[ExploreRecord] = field(default_factory=list)
    services: list[ServiceRecord] = field(default_factory=list)
    openings: list[tuple[Fraction, int]] = field(default_factory=list)
    connections: list[tuple[int, Fraction, int]] = field(default_factory=list)
    transmissions: list[tuple[Fraction, tuple[int, ...]]] = field(default_factory=list)
    moves: list[tuple[Fraction, tuple[int, ...]]] = field(default_factory=list)
    served: dict[int, Fraction] = field(default_factory=dict)
    reported: CostBreakdown = field(default_factory=CostBreakdown)

    @property
    def k(self) -> int:
        return len(self.services)
