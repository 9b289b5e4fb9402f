"""Right-continuous integer step functions and exactly integrable weights.

Counting differences of eigenvalue counts are step functions with jumps at
spectrum points. Keeping them symbolic (breakpoints plus piece values) lets
trace identities be checked by exact piecewise integration instead of by
sampled quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant, right continuous on [domain_lo, domain_hi].

    values[i] is taken on [breaks[i-1], breaks[i]) with values[0] on
    [domain_lo, breaks[0]) and values[-1] on [breaks[-1], domain_hi].
    """

    domain_lo: float
    domain_hi: float
    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)
        if values.shape != (breaks.size + 1,):
            raise ValueError("need exactly one more piece value than breakpoints")
        if breaks.size and not np.all(np.diff(breaks) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not self.domain_lo < self.domain_hi:
            raise ValueError("empty domain")
        if breaks.size and (breaks[0] <= self.domain_lo or breaks[-1] >= self.domain_hi):
            raise ValueError("breakpoints must lie strictly inside the domain")

    @staticmethod
    def from_jumps(domain_lo, domain_hi, jump_points, jump_sizes, base_value=0.0,
                   merge_tol: float = 0.0) -> "StepFunction":
        pts = np.asarray(jump_points, dtype=float)
        sizes = np.asarray(jump_sizes, dtype=float)
        order = np.argsort(pts, kind="stable")
        pts, sizes = pts[order], sizes[order]
        locs, jumps = [], []
        for p, s in zip(pts, sizes):
            if locs and p - locs[-1] <= merge_tol:
                jumps[-1] += s
            else:
                locs.append(p)
                jumps.append(s)
        locs = np.asarray(locs)
        jumps = np.asarray(jumps)
        keep = jumps != 0.0
        locs, jumps = locs[keep], jumps[keep]
        values = base_value + np.concatenate([[0.0], np.cumsum(jumps)])
        return StepFunction(domain_lo, domain_hi, locs, values)

    def __call__(self, e):
        e = np.asarray(e, dtype=float)
        idx = np.searchsorted(self.breaks, e, side="right")
        return self.values[idx]

    def _edges(self) -> np.ndarray:
        return np.concatenate([[self.domain_lo], self.breaks, [self.domain_hi]])

    def integrate(self, lo: float, hi: float) -> float:
        """Exact integral over [lo, hi] inside the domain."""
        if lo > hi:
            raise ValueError("lo > hi")
        if lo < self.domain_lo - 1e-12 or hi > self.domain_hi + 1e-12:
            raise ValueError("integration range leaves the step function domain")
        edges = self._edges()
        a = np.clip(edges[:-1], lo, hi)
        b = np.clip(edges[1:], lo, hi)
        return float(np.sum(self.values * (b - a)))

    def integrate_product(self, weight) -> float:
        """Exact integral of weight(E) * step(E) over the whole domain.

        The weight must expose integral(lo, hi); compactly supported weights
        must have their support inside the domain.
        """
        support = getattr(weight, "support", None)
        if support is not None:
            lo, hi = support
            if lo < self.domain_lo - 1e-12 or hi > self.domain_hi + 1e-12:
                raise ValueError("weight support leaves the step function domain")
        edges = self._edges()
        total = 0.0
        for v, a, b in zip(self.values, edges[:-1], edges[1:]):
            if v != 0.0:
                total += v * weight.integral(a, b)
        return float(total)

    def abs(self) -> "StepFunction":
        return StepFunction(self.domain_lo, self.domain_hi, self.breaks, np.abs(self.values))


@dataclass(frozen=True)
class IndicatorWeight:
    """Indicator of the half-open interval [lo, hi)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("indicator interval is empty")

    @property
    def support(self):
        return (self.lo, self.hi)

    def __call__(self, e):
        e = np.asarray(e, dtype=float)
        return np.where((e >= self.lo) & (e < self.hi), 1.0, 0.0)

    def integral(self, lo: float, hi: float) -> float:
        return max(0.0, min(hi, self.hi) - max(lo, self.lo))


@dataclass(frozen=True)
class PiecewiseLinearWeight:
    """Continuous piecewise-linear weight, zero outside [xs[0], xs[-1]]."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("need matching xs and ys with at least two nodes")
        if not all(a < b for a, b in zip(xs, xs[1:])):
            raise ValueError("xs must be strictly increasing")
        if ys[0] != 0.0 or ys[-1] != 0.0:
            raise ValueError("weight must vanish at the support endpoints")

    @property
    def support(self):
        return (self.xs[0], self.xs[-1])

    def __call__(self, e):
        return np.interp(np.asarray(e, dtype=float), self.xs, self.ys, left=0.0, right=0.0)

    def integral(self, lo: float, hi: float) -> float:
        """Exact integral over [lo, hi] (linear pieces integrate to trapezoids)."""
        if lo >= hi:
            return 0.0
        total = 0.0
        for x0, x1, y0, y1 in zip(self.xs[:-1], self.xs[1:], self.ys[:-1], self.ys[1:]):
            a, b = max(lo, x0), min(hi, x1)
            if a >= b:
                continue
            slope = (y1 - y0) / (x1 - x0)
            ya = y0 + slope * (a - x0)
            yb = y0 + slope * (b - x0)
            total += 0.5 * (ya + yb) * (b - a)
        return total


def hat_weight(lo: float, hi: float) -> PiecewiseLinearWeight:
    """Unit-height hat supported on [lo, hi] with its peak at the midpoint."""
    mid = 0.5 * (lo + hi)
    return PiecewiseLinearWeight(xs=(lo, mid, hi), ys=(0.0, 1.0, 0.0))


@dataclass(frozen=True)
class ExpDecayWeight:
    """Weight e^(-rate * E) on the whole line; integrable at +infinity."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError("rate must be positive")

    support = None

    def __call__(self, e):
        return np.exp(-self.rate * np.asarray(e, dtype=float))

    def integral(self, lo: float, hi: float) -> float:
        return (np.exp(-self.rate * lo) - np.exp(-self.rate * hi)) / self.rate
