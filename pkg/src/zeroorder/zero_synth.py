"""Counting function n = floor(phi_1'), its integral N, and the zero sequence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex_reg import GridTooShort, PiecewiseLinearConvex

# absorbs rounding in hull slopes that are integers in exact arithmetic
SLOPE_TOL = 1e-9


@dataclass(frozen=True)
class CountingFunction:
    """n(e**x) as runs: value counts[j] on [starts[j], starts[j+1]), zero for x < 0."""

    minorant: PiecewiseLinearConvex
    starts: np.ndarray
    counts: np.ndarray

    @property
    def x_end(self) -> float:
        return self.minorant.x_end

    @property
    def max_count(self) -> int:
        return int(self.counts[-1])

    def n_at(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x > self.x_end):
            raise ValueError(f"x beyond the minorant range {self.x_end}")
        idx = np.searchsorted(self.starts, x, side="right") - 1
        out = np.where(idx < 0, 0, self.counts[np.maximum(idx, 0)])
        return out if out.ndim else int(out)

    def jump_sizes(self) -> np.ndarray:
        return np.diff(np.r_[0, self.counts])


def counting_function(minorant: PiecewiseLinearConvex) -> CountingFunction:
    if not minorant.extended:
        raise ValueError("counting function needs the left-extended minorant")
    seg = np.floor(minorant.slopes + SLOPE_TOL).astype(np.int64)
    if seg[0] < 1:
        raise ValueError("minorant slope at the origin is below 1")
    change = np.r_[True, seg[1:] != seg[:-1]]
    starts = minorant.breakpoints[:-1][change]
    return CountingFunction(minorant, starts.copy(), seg[change].copy())


@dataclass(frozen=True)
class ZeroSequence:
    log_zeros: np.ndarray
    counting: CountingFunction

    @property
    def count(self) -> int:
        return int(self.log_zeros.size)


def extract_zeros(counting: CountingFunction, max_n: int) -> ZeroSequence:
    """x_n = inf{x : phi_1'(x) >= n} for n = 1..max_n."""
    if max_n < 1:
        raise ValueError("max_n must be at least 1")
    if max_n > counting.max_count:
        raise GridTooShort(
            f"requested {max_n} zeros but the slope only reaches {counting.max_count} "
            f"by x={counting.x_end}"
        )
    n = np.arange(1, max_n + 1)
    idx = np.searchsorted(counting.counts, n, side="left")
    return ZeroSequence(counting.starts[idx], counting)


def all_zeros(counting: CountingFunction) -> ZeroSequence:
    return extract_zeros(counting, counting.max_count)


@dataclass(frozen=True)
class IntegratedCounting:
    """N(e**x): piecewise linear with slope ``slopes[j]`` from ``knots[j]``.

    Below ``knots[0]`` N equals ``left_value``; past the last knot it continues
    linearly with the final slope.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    left_value: float = 0.0
    record: dict = field(default_factory=dict)

    @property
    def x_first(self) -> float:
        return float(self.knots[0])

    def N_at(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side="right") - 1
        j = np.maximum(idx, 0)
        out = np.where(
            idx < 0, self.left_value, self.values[j] + self.slopes[j] * (x - self.knots[j])
        )
        return out if out.ndim else float(out)


def integrated_counting(counting: CountingFunction) -> IntegratedCounting:
    """N(e**x) = integral of n(e**u) du from the first zero, summed run by run."""
    starts = counting.starts
    counts = counting.counts.astype(float)
    widths = np.diff(starts)
    values = np.r_[0.0, np.cumsum(counts[:-1] * widths)]
    return IntegratedCounting(
        starts, values, counts, 0.0,
        {"method": "step-area", "runs": int(starts.size), "x_end": counting.x_end},
    )


def constant_counting(value: float, x_from: float = -1e6) -> IntegratedCounting:
    """N identically ``value``; used to probe kernel mass."""
    return IntegratedCounting(
        np.array([x_from]), np.array([value]), np.array([0.0]), value, {"method": "constant"}
    )
