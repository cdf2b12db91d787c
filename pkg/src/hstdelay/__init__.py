"""Online algorithms with delay on hierarchically separated trees, with
offline oracles, tree embeddings and a charging-graph verifier."""

from .metric import CostBreakdown, MetricSpace, Tree, validate_hst, validate_metric
from .requests import Deadline, Instance, PiecewiseLinear, Request
from .pipeline import ALGORITHMS, run_algorithm

__all__ = [
    "ALGORITHMS",
    "CostBreakdown",
    "Deadline",
    "Instance",
    "MetricSpace",
    "PiecewiseLinear",
    "Request",
    "Tree",
    "run_algorithm",
    "validate_hst",
    "validate_metric",
]
