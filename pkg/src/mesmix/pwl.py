"""Monotone piecewise-linear conversion curves.

A curve maps an input quantity (``source`` breakpoints) to an output
quantity (``target`` breakpoints).  Both series must be strictly increasing,
which makes every valid curve invertible and keeps composition total.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainMismatch, InvalidCurve, OutOfDomain

#: Absolute tolerance for treating two composed breakpoints as the same point.
DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class PiecewiseLinear:
    source: tuple[float, ...]
    target: tuple[float, ...]

    def __init__(self, source: Sequence[float], target: Sequence[float]):
        object.__setattr__(self, "source", tuple(float(v) for v in source))
        object.__setattr__(self, "target", tuple(float(v) for v in target))

    @classmethod
    def linear(cls, x0: float, x1: float, slope: float, intercept: float = 0.0) -> "PiecewiseLinear":
        return cls([x0, x1], [intercept + slope * x0, intercept + slope * x1])

    @property
    def breakpoints(self) -> int:
        return len(self.source)

    @property
    def domain(self) -> tuple[float, float]:
        return self.source[0], self.source[-1]

    @property
    def range(self) -> tuple[float, float]:
        return self.target[0], self.target[-1]

    @property
    def slopes(self) -> tuple[float, ...]:
        return tuple(
            (self.target[k + 1] - self.target[k]) / (self.source[k + 1] - self.source[k])
            for k in range(len(self.source) - 1)
        )

    def issues(self) -> list[str]:
        """Return the invariant violations of this curve as reason codes."""
        out = []
        if len(self.source) != len(self.target):
            out.append("LengthMismatch")
            return out
        if len(self.source) < 2:
            out.append("TooFewBreakpoints")
            return out
        if any(b <= a for a, b in zip(self.source, self.source[1:])):
            out.append("NonIncreasingSource")
        if any(b <= a for a, b in zip(self.target, self.target[1:])):
            out.append("NonIncreasingTarget")
        return out

    def check(self) -> "PiecewiseLinear":
        problems = self.issues()
        if problems:
            raise InvalidCurve(f"invalid curve ({', '.join(problems)}): {self}")
        return self

    def __call__(self, x: float) -> float:
        return pwl_eval(self, x)


def _locate(xs: tuple[float, ...], x: float) -> int:
    # index k of the segment [xs[k], xs[k+1]] containing x
    k = bisect.bisect_right(xs, x) - 1
    return min(max(k, 0), len(xs) - 2)


def pwl_eval(f: PiecewiseLinear, x: float, tol: float = 0.0) -> float:
    """Evaluate ``f`` at ``x`` by linear interpolation.

    Values within ``tol`` outside the domain are clamped onto it; anything
    further out raises :class:`OutOfDomain`.
    """
    f.check()
    lo, hi = f.domain
    if x < lo - tol or x > hi + tol:
        raise OutOfDomain(f"{x} outside [{lo}, {hi}]")
    x = min(max(x, lo), hi)
    xs, ys = f.source, f.target
    i = bisect.bisect_left(xs, x)
    if i < len(xs) and xs[i] == x:
        return ys[i]
    k = _locate(xs, x)
    w = (x - xs[k]) / (xs[k + 1] - xs[k])
    return ys[k] + w * (ys[k + 1] - ys[k])


def pwl_inverse(f: PiecewiseLinear) -> PiecewiseLinear:
    return PiecewiseLinear(f.check().target, f.source)


def compose_pwl(phi: PiecewiseLinear, psi: PiecewiseLinear) -> PiecewiseLinear:
    """Curve of ``psi(phi(x))`` on the domain of ``phi``.

    The breakpoints are the images of phi's breakpoints under psi plus the
    preimages under phi of those psi breakpoints that fall inside phi's range.
    """
    phi.check()
    psi.check()
    y_lo, y_hi = phi.range
    s_lo, s_hi = psi.domain
    slack = DEDUP_TOL * max(1.0, abs(s_lo), abs(s_hi))
    if y_lo < s_lo - slack or y_hi > s_hi + slack:
        raise DomainMismatch(f"range [{y_lo}, {y_hi}] of first curve not inside domain [{s_lo}, {s_hi}]")

    exact = dict(zip(phi.target, phi.source))
    inverse = pwl_inverse(phi)
    # ranges that overshoot by rounding only are clamped back into psi's domain
    points = [(x, pwl_eval(psi, min(max(y, s_lo), s_hi))) for x, y in zip(phi.source, phi.target)]
    for ybar, z in zip(psi.source, psi.target):
        if y_lo <= ybar <= y_hi:
            x = exact[ybar] if ybar in exact else pwl_eval(inverse, ybar)
            points.append((x, z))
    points.sort()

    merged: list[tuple[float, float]] = []
    for x, z in points:
        if merged and abs(x - merged[-1][0]) <= DEDUP_TOL and abs(z - merged[-1][1]) <= DEDUP_TOL:
            continue
        merged.append((x, z))
    result = PiecewiseLinear([p[0] for p in merged], [p[1] for p in merged])
    if result.issues():
        raise InvalidCurve(f"composition produced a non-monotone curve: {result}")
    return result


def identity_curve(lo: float, hi: float) -> PiecewiseLinear:
    return PiecewiseLinear([lo, hi], [lo, hi])
