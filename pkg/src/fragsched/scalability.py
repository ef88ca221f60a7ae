"""Piecewise-linear scalability curves.

A curve maps a node count to a rate (samples per second).  Between grid
points the rate is linearly interpolated, which is exactly what an SOS2
weight vector over the grid reproduces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CurveRangeError(ValueError):
    """Node count outside the curve's domain."""


class DegenerateCurveError(ValueError):
    """Curve cannot be normalized (zero rate at the first grid point)."""


@dataclass(frozen=True)
class ScalabilityCurve:
    grid: tuple[int, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        grid = tuple(int(g) for g in self.grid)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "rates", rates)
        if len(grid) != len(rates):
            raise ValueError("grid and rates differ in length")
        if len(grid) < 2:
            raise ValueError("a curve needs at least two grid points")
        if grid[0] < 1:
            raise ValueError("grid must start at >= 1 node")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if any(r < 0 or not np.isfinite(r) for r in rates):
            raise ValueError("rates must be finite and non-negative")

    @property
    def min_nodes(self) -> int:
        return self.grid[0]

    @property
    def max_nodes(self) -> int:
        return self.grid[-1]

    def to_pairs(self) -> list[list[float]]:
        return [[g, r] for g, r in zip(self.grid, self.rates)]

    @classmethod
    def from_pairs(cls, pairs) -> "ScalabilityCurve":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def _segment(curve: ScalabilityCurve, n: float) -> int:
    """Index k such that grid[k] <= n <= grid[k+1]."""
    k = int(np.searchsorted(curve.grid, n, side="right")) - 1
    return min(max(k, 0), len(curve.grid) - 2)


def _check_range(curve: ScalabilityCurve, n: float) -> None:
    if n < curve.grid[0] or n > curve.grid[-1]:
        raise CurveRangeError(
            f"n={n} outside curve domain [{curve.grid[0]}, {curve.grid[-1]}]"
        )


def evaluate(curve: ScalabilityCurve, n: float) -> float:
    """Rate at ``n`` nodes; 0 for an idle job, interpolated between grid points."""
    if n == 0:
        return 0.0
    _check_range(curve, n)
    k = _segment(curve, n)
    g0, g1 = curve.grid[k], curve.grid[k + 1]
    r0, r1 = curve.rates[k], curve.rates[k + 1]
    if n == g0:
        return r0
    if n == g1:
        return r1
    t = (n - g0) / (g1 - g0)
    return r0 + t * (r1 - r0)


def sos2_weights(curve: ScalabilityCurve, n: float) -> np.ndarray:
    """Convex weights over the grid with at most two adjacent nonzeros.

    The weights satisfy ``w.sum() == 1`` and ``w @ grid == n``.
    """
    _check_range(curve, n)
    w = np.zeros(len(curve.grid))
    k = _segment(curve, n)
    g0, g1 = curve.grid[k], curve.grid[k + 1]
    if n == g0:
        w[k] = 1.0
    elif n == g1:
        w[k + 1] = 1.0
    else:
        t = (n - g0) / (g1 - g0)
        w[k] = 1.0 - t
        w[k + 1] = t
    return w


def extended_rate(curve: ScalabilityCurve, n: float) -> float:
    """Like :func:`evaluate` but linear towards the origin below ``grid[0]``.

    Used only to price the current allocation of a job that was preempted
    below its smallest grid point.
    """
    if 0 < n < curve.grid[0]:
        return curve.rates[0] * n / curve.grid[0]
    return evaluate(curve, n)


def normalize_speedup(curve: ScalabilityCurve) -> ScalabilityCurve:
    """Speedup curve relative to the rate at the smallest grid point."""
    base = curve.rates[0]
    if base <= 0:
        raise DegenerateCurveError("rate at first grid point is zero")
    return ScalabilityCurve(curve.grid, tuple(r / base for r in curve.rates))


# Measured samples per second, minibatch 32 per GPU (ImageNet).
TABLE_GRID = (1, 2, 4, 8, 16, 32, 64)
_TABLE_KSPS = {
    "AlexNet": (7.1, 13.1, 21.1, 40.5, 74.0, 130.8, 202.1),
    "ResNet18": (5.2, 10.6, 20.4, 39.6, 78.0, 144.8, 262.7),
    "MnasNet": (3.2, 6.0, 11.5, 23.1, 43.9, 83.5, 160.5),
    "MobileNets": (3.0, 5.9, 11.4, 22.0, 42.5, 82.3, 155.2),
    "ShuffleNet": (2.8, 5.3, 10.0, 20.4, 38.9, 74.1, 145.1),
    "VGG-16": (1.2, 2.4, 4.7, 9.3, 18.3, 36.2, 70.2),
    "DenseNet": (1.0, 2.0, 3.8, 7.6, 15.0, 28.8, 57.8),
}
TABLE_CURVES: dict[str, ScalabilityCurve] = {
    name: ScalabilityCurve(TABLE_GRID, tuple(round(k * 1000.0, 6) for k in ksps))
    for name, ksps in _TABLE_KSPS.items()
}
