"""Continuous piecewise-linear functions of time over exact rationals.

A function is given by breakpoints ``(t_0, v_0), ..., (t_k, v_k)`` with
strictly increasing times.  It is constant ``v_0`` left of ``t_0``, linear
between breakpoints and continues with ``slope`` right of ``t_k``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

ZERO = Fraction(0)


class PLFunction:
    __slots__ = ("ts", "vs", "slope")

    def __init__(self, points: Iterable[tuple[Fraction, Fraction]], slope=ZERO):
        pts = [(Fraction(t), Fraction(v)) for t, v in points]
        if not pts:
            raise ValueError("a PL function needs at least one breakpoint")
        for (a, _), (b, _) in zip(pts, pts[1:]):
            if not a < b:
                raise ValueError("breakpoint times must be strictly increasing")
        self.ts = tuple(t for t, _ in pts)
        self.vs = tuple(v for _, v in pts)
        self.slope = Fraction(slope)

    @classmethod
    def constant(cls, value=ZERO) -> "PLFunction":
        return cls([(ZERO, value)], ZERO)

    def __repr__(self) -> str:
        pts = ", ".join(f"({t}, {v})" for t, v in zip(self.ts, self.vs))
        return f"PLFunction([{pts}], slope={self.slope})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PLFunction):
            return NotImplemented
        grid = sorted(set(self.ts) | set(other.ts))
        return (all(self(t) == other(t) for t in grid)
                and self.slope == other.slope
                and self(grid[-1] + 1) == other(grid[-1] + 1))

    def __call__(self, t) -> Fraction:
        t = Fraction(t)
        ts, vs = self.ts, self.vs
        if t <= ts[0]:
            return vs[0]
        if t >= ts[-1]:
            return vs[-1] + self.slope * (t - ts[-1])
        lo, hi = 0, len(ts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ts[mid] <= t:
                lo = mid
            else:
                hi = mid
        t0, t1 = ts[lo], ts[hi]
        return vs[lo] + (vs[hi] - vs[lo]) * (t - t0) / (t1 - t0)

    # -- algebra ----------------------------------------------------------

    def _simplified(self) -> "PLFunction":
        ts, vs = list(self.ts), list(self.vs)
        keep_t, keep_v = [ts[0]], [vs[0]]
        for i in range(1, len(ts)):
            right_slope = self.slope if i == len(ts) - 1 else (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i])
            left_slope = (vs[i] - keep_v[-1]) / (ts[i] - keep_t[-1])
            if i == len(ts) - 1 or left_slope != right_slope:
                keep_t.append(ts[i])
                keep_v.append(vs[i])
        # a trailing breakpoint whose left slope equals the final slope is redundant
        while len(keep_t) > 1 and (keep_v[-1] - keep_v[-2]) / (keep_t[-1] - keep_t[-2]) == self.slope:
            keep_t.pop()
            keep_v.pop()
        out = PLFunction.__new__(PLFunction)
        out.ts, out.vs, out.slope = tuple(keep_t), tuple(keep_v), self.slope
        return out

    def __add__(self, other) -> "PLFunction":
        if not isinstance(other, PLFunction):
            return self.shift(other)
        grid = sorted(set(self.ts) | set(other.ts))
        return PLFunction([(t, self(t) + other(t)) for t in grid], self.slope + other.slope)._simplified()

    __radd__ = __add__

    @staticmethod
    def total(curves: Iterable["PLFunction"]) -> "PLFunction":
        """Sum of many functions in one sweep over their slope changes."""
        base = ZERO
        bends: dict[Fraction, Fraction] = {}
        for c in curves:
            base += c.vs[0]
            prev = ZERO
            ts, vs = c.ts, c.vs
            for i, t in enumerate(ts):
                nxt = c.slope if i == len(ts) - 1 else (vs[i + 1] - vs[i]) / (ts[i + 1] - t)
                if nxt != prev:
                    bends[t] = bends.get(t, ZERO) + nxt - prev
                prev = nxt
        times = sorted(t for t, d in bends.items() if d)
        if not times:
            return PLFunction.constant(base)
        pts = [(times[0], base)]
        slope = ZERO
        for a, b in zip(times, times[1:]):
            slope += bends[a]
            pts.append((b, pts[-1][1] + slope * (b - a)))
        out = PLFunction.__new__(PLFunction)
        out.ts = tuple(t for t, _ in pts)
        out.vs = tuple(v for _, v in pts)
        out.slope = slope + bends[times[-1]]
        return out

    def __neg__(self) -> "PLFunction":
        return PLFunction(zip(self.ts, (-v for v in self.vs)), -self.slope)

    def __sub__(self, other) -> "PLFunction":
        if not isinstance(other, PLFunction):
            return self.shift(-Fraction(other))
        return self + (-other)

    def shift(self, c) -> "PLFunction":
        c = Fraction(c)
        return PLFunction(zip(self.ts, (v + c for v in self.vs)), self.slope)

    def clamp0(self) -> "PLFunction":
        """Pointwise max(f, 0)."""
        ts, vs = self.ts, self.vs
        pts: list[tuple[Fraction, Fraction]] = [(ts[0], vs[0])]
        for i in range(1, len(ts)):
            a, b = vs[i - 1], vs[i]
            if (a < 0 < b) or (b < 0 < a):
                root = ts[i - 1] + (ts[i] - ts[i - 1]) * (-a) / (b - a)
                pts.append((root, ZERO))
            pts.append((ts[i], b))
        last_t, last_v = pts[-1]
        slope = self.slope
        if (last_v < 0 and slope > 0) or (last_v > 0 and slope < 0):
            pts.append((last_t - last_v / slope, ZERO))
        final_v = pts[-1][1]
        if final_v < 0 or (final_v == 0 and slope < 0):
            slope = ZERO
        return PLFunction([(t, max(v, ZERO)) for t, v in pts], slope)._simplified()

    def maximum(self, other: "PLFunction") -> "PLFunction":
        return PLFunction.total((other, PLFunction.total((self, -other)).clamp0()))

    # -- queries ----------------------------------------------------------

    def crossing(self, target, t0) -> Fraction | None:
        """Earliest ``t >= t0`` with ``f(t) >= target``, or None if never."""
        target, t0 = Fraction(target), Fraction(t0)
        prev_t, prev_v = t0, self(t0)
        if prev_v >= target:
            return t0
        for t, v in zip(self.ts, self.vs):
            if t <= t0:
                continue
            if v >= target:
                return prev_t + (t - prev_t) * (target - prev_v) / (v - prev_v)
            prev_t, prev_v = t, v
        if self.slope > 0:
            return prev_t + (target - prev_v) / self.slope
        return None

    def is_nondecreasing(self) -> bool:
        if self.slope < 0:
            return False
        return all(a <= b for a, b in zip(self.vs, self.vs[1:]))
