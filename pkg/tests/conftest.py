from fractions import Fraction

import pytest

from hstdelay.metric import Tree
from hstdelay.requests import Deadline, PiecewiseLinear, Request

F = Fraction


def chain(*weights) -> Tree:
    """Root node 0, then nodes 1..k each hanging below the previous one."""
    parent = (-1,) + tuple(range(len(weights)))
    return Tree(parent, (0,) + tuple(weights))


def star(top, *leaf_weights) -> Tree:
    """Root node 0, edge node 1 of weight ``top``, leaves 2.. below node 1."""
    parent = (-1, 0) + (1,) * len(leaf_weights)
    return Tree(parent, (0, top) + tuple(leaf_weights))


def linear(qid, loc, release, slope=1) -> Request:
    return Request(qid, loc, F(release), PiecewiseLinear.linear(F(release), F(slope)))


def deadline(qid, loc, release, due) -> Request:
    return Request(qid, loc, F(release), Deadline(F(due)))


@pytest.fixture
def announce(capsys):
    """Print a line straight to the terminal even when output is captured."""

    def emit(line: str) -> None:
        with capsys.disabled():
            print(line)

    return emit
