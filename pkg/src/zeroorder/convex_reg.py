"""Support lines and the greatest convex minorant of a sampled growth curve."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import optimize

from .order_model import ProximateOrder

CONTACT_TOL = 1e-9
LEFT_LIMIT = 0.5
LEFT_RANGE = -40.0


class GridTooShort(ValueError):
    """The sampled range cannot resolve the requested slope or zero count."""


@dataclass(frozen=True)
class GrowthCurve:
    phi: Callable[[np.ndarray], np.ndarray]
    xs: np.ndarray
    ys: np.ndarray
    lipschitz: float

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])

    @property
    def step(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def excess(self, x) -> np.ndarray:
        """phi(x) - x - 1, which is exactly zero on [0, 1]."""
        x = np.asarray(x, dtype=float)
        return np.asarray(self.phi(x), dtype=float) - (x + 1.0)

    @cached_property
    def grid_excess(self) -> np.ndarray:
        return self.ys - (self.xs + 1.0)


def growth_curve(order: ProximateOrder, x_max: float, x_step: float = 1e-2) -> GrowthCurve:
    if not x_step > 0.0:
        raise ValueError("x_step must be positive")
    if order.x_hi < x_max:
        raise GridTooShort(f"{order.family_tag} is only defined up to x={order.x_hi}")
    n = int(round(x_max / x_step))
    xs = np.linspace(0.0, x_max, n + 1)
    ys = np.asarray(order.phi_at(xs), dtype=float)
    unit = xs <= 1.0
    if np.any(np.abs(ys[unit] - (xs[unit] + 1.0)) > 1e-12):
        raise ValueError("curve is not preconditioned: phi != x + 1 on [0, 1]")
    if np.any(ys < xs + 1.0 - 1e-12 * (1.0 + ys)):
        raise ValueError("curve is not preconditioned: phi < x + 1 somewhere")
    lip = float(np.max(np.abs(np.diff(ys))) / (xs[1] - xs[0]))
    return GrowthCurve(order.phi, xs, ys, lip)


def curve_from_samples(xs, ys, phi=None) -> GrowthCurve:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if phi is None:
        def phi(x):
            return np.interp(x, xs, ys)
    lip = float(np.max(np.abs(np.diff(ys)) / np.diff(xs)))
    return GrowthCurve(phi, xs, ys, lip)


@dataclass(frozen=True)
class SupportLine:
    k: float
    b: float
    x_lo: float
    x_hi: float


def _support_candidates(curve: GrowthCurve, k: float):
    xs = curve.xs
    # phi - k x written as excess + (1 - k) x + 1 so that b(k) = 1 holds exactly for k <= 1
    g = curve.grid_excess + (1.0 - k) * xs + 1.0
    i_min = int(np.argmin(g))
    if i_min == xs.size - 1:
        raise GridTooShort(f"minimum of phi - {k} x sits at the grid end x={xs[-1]}")
    g_min = float(g[i_min])
    slack = 0.5 * float(np.max(np.abs(np.diff(g))))
    left = np.r_[np.inf, g[:-1]]
    right = np.r_[g[1:], np.inf]
    local = np.flatnonzero((g <= left) & (g <= right) & (g <= g_min + slack))
    # collapse runs of tied minima to their ends
    if local.size > 2:
        brk = np.flatnonzero(np.diff(local) > 1)
        keep = np.unique(np.r_[local[0], local[brk], local[brk + 1], local[-1]])
        local = keep

    def g_at(t):
        return float(curve.excess(np.asarray(t)) + (1.0 - k) * t + 1.0)

    refined = []
    for i in local:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, xs.size - 1)]
        res = optimize.minimize_scalar(
            g_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-11}
        )
        refined.append((float(res.x), float(res.fun)))
    return g, refined


def support_value(curve: GrowthCurve, k: float) -> float:
    """b(k) = min over x >= 0 of phi(x) - k x."""
    g, refined = _support_candidates(curve, k)
    return min(float(g.min()), min(v for _, v in refined))


def contact_points(
    curve: GrowthCurve, k: float, contact_tol: float = CONTACT_TOL
) -> tuple[float, float]:
    """Least and greatest abscissae where the support line of slope k touches phi."""
    g, refined = _support_candidates(curve, k)
    b = min(float(g.min()), min(v for _, v in refined))
    pts = [x for x, v in refined if v <= b + contact_tol]
    pts.extend(curve.xs[g <= b + contact_tol].tolist())
    if not pts:
        raise ValueError(f"empty contact set at tolerance {contact_tol}")
    return min(pts), max(pts)


def support_line(curve: GrowthCurve, k: float, contact_tol: float = CONTACT_TOL) -> SupportLine:
    lo, hi = contact_points(curve, k, contact_tol)
    return SupportLine(k, support_value(curve, k), lo, hi)


def slope_ladder(curve: GrowthCurve, step: float = 0.5) -> np.ndarray:
    """Slopes 1, 1 + step, ... whose support minimum stays inside the grid.

    phi - k x is minimized at the last sample exactly when k reaches the
    largest chord slope into that sample.
    """
    xs, ys = curve.xs, curve.ys
    reach = float(np.max((ys[-1] - ys[:-1]) / (xs[-1] - xs[:-1])))
    return np.arange(1.0, reach, step)


@dataclass(frozen=True)
class PiecewiseLinearConvex:
    """Convex piecewise-linear function on [0, x_end] with an optional x < 0 tail.

    The tail, when attached, is (1 + e**(2x)) / 2: value 1 and slope 1 at the
    origin, limit ``left_limit`` and vanishing slope as x -> -infinity.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    left_limit: float | None = None

    @property
    def extended(self) -> bool:
        return self.left_limit is not None

    @property
    def x_end(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def _check_range(self, x: np.ndarray) -> None:
        lo = LEFT_RANGE if self.extended else 0.0
        if np.any(x < lo) or np.any(x > self.x_end):
            raise ValueError(f"x outside [{lo}, {self.x_end}]")

    def value_at(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.interp(np.maximum(x, 0.0), self.breakpoints, self.values)
        if self.extended:
            out = np.where(x < 0.0, 0.5 * (1.0 + np.exp(2.0 * np.minimum(x, 0.0))), inside)
        else:
            if np.any(x < 0.0):
                raise ValueError("minorant has no left extension")
            out = inside
        return out if out.ndim else float(out)

    def slope_at(self, x):
        """Right slope; the last segment's slope at x_end."""
        x = np.asarray(x, dtype=float)
        self._check_range(x)
        s = self.slopes
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, s.size - 1)
        out = np.where(x < 0.0, np.exp(2.0 * np.minimum(x, 0.0)), s[idx])
        return out if out.ndim else float(out)

    def to_rows(self):
        """(x, value, right slope) at every breakpoint."""
        s = self.slopes
        right = np.r_[s, s[-1]]
        return list(zip(self.breakpoints.tolist(), self.values.tolist(), right.tolist()))


def lower_hull(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull vertices of points sorted by x.

    Monotone chain using slope comparison, so that consecutive hull slopes
    computed as dy/dx are strictly increasing in floating point.
    """
    hx: list[float] = []
    hy: list[float] = []
    hi: list[int] = []
    for i, (x, y) in enumerate(zip(xs.tolist(), ys.tolist())):
        while len(hi) >= 2:
            s_prev = (hy[-1] - hy[-2]) / (hx[-1] - hx[-2])
            s_new = (y - hy[-1]) / (x - hx[-1])
            if s_prev >= s_new:
                hx.pop()
                hy.pop()
                hi.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
        hi.append(i)
    return np.asarray(hi, dtype=np.int64)


def convex_minorant(curve: GrowthCurve) -> PiecewiseLinearConvex:
    if curve.xs.size < 3:
        raise ValueError("need at least 3 grid points for a hull")
    idx = lower_hull(curve.xs, curve.ys)
    return PiecewiseLinearConvex(curve.xs[idx].copy(), curve.ys[idx].copy())


def extend_left(minorant: PiecewiseLinearConvex, tol: float = 1e-9) -> PiecewiseLinearConvex:
    if minorant.extended:
        return minorant
    v0 = float(minorant.values[0])
    s0 = float(minorant.slopes[0])
    if minorant.breakpoints[0] != 0.0 or abs(v0 - 1.0) > tol or abs(s0 - 1.0) > tol:
        raise ValueError(f"minorant must have value 1 and slope 1 at 0 (got {v0}, {s0})")
    return PiecewiseLinearConvex(minorant.breakpoints, minorant.values, LEFT_LIMIT)


def minorant_derivative(minorant: PiecewiseLinearConvex, x):
    return minorant.slope_at(x)


def _monotone_min(c: np.ndarray, w: np.ndarray, z: np.ndarray, budget: int = 1 << 21) -> np.ndarray:
    """min_j (c_j - w_j * z_i) for every i, where w and z are increasing.

    The smallest minimizing index is nondecreasing in z, so queries are split
    recursively and each half searches only its share of the candidates.
    """
    out = np.empty(z.size)

    def solve(q_lo: int, q_hi: int, j_lo: int, j_hi: int) -> None:
        nq = q_hi - q_lo
        nc = j_hi - j_lo + 1
        if nq <= 0:
            return
        if nq * nc <= budget or nq <= 2:
            block = c[None, j_lo:j_hi + 1] - z[q_lo:q_hi, None] * w[None, j_lo:j_hi + 1]
            out[q_lo:q_hi] = block.min(axis=1)
            return
        q_mid = (q_lo + q_hi) // 2
        row = c[j_lo:j_hi + 1] - z[q_mid] * w[j_lo:j_hi + 1]
        j_mid = j_lo + int(np.argmin(row))
        out[q_mid] = row[j_mid - j_lo]
        solve(q_lo, q_mid, j_lo, j_mid)
        solve(q_mid + 1, q_hi, j_mid, j_hi)

    solve(0, z.size, 0, c.size - 1)
    return out


def support_transform(curve: GrowthCurve, k_grid) -> np.ndarray:
    """b(k) on a sorted slope grid, as exact minima over the grid samples."""
    ks = np.asarray(k_grid, dtype=float)
    return _monotone_min(curve.ys, curve.xs, ks)


def biconjugate_check(
    curve: GrowthCurve, k_grid, minorant: PiecewiseLinearConvex | None = None
) -> float:
    """Max relative gap between sup_k (k x + b(k)) and the hull minorant on the grid."""
    ks = np.asarray(k_grid, dtype=float)
    if ks.size < 2 or np.any(np.diff(ks) <= 0.0):
        raise ValueError("k_grid must hold at least two strictly increasing slopes")
    if minorant is None:
        minorant = convex_minorant(curve)
    s = minorant.slopes
    if ks[0] > 1.0 or ks[-1] < s[-1]:
        raise ValueError(
            f"k_grid [{ks[0]}, {ks[-1]}] does not cover the slope range [1, {s[-1]}]"
        )
    b = support_transform(curve, ks)
    dual = -_monotone_min(-b, ks, curve.xs)
    hull = np.asarray(minorant.value_at(curve.xs), dtype=float)
    return float(np.max(np.abs(dual - hull) / np.maximum(1.0, np.abs(hull))))


def bridges(minorant: PiecewiseLinearConvex, min_length: float) -> list[tuple[float, float, float]]:
    """Hull segments at least ``min_length`` long, as (x_left, x_right, slope)."""
    bp = minorant.breakpoints
    lengths = np.diff(bp)
    s = minorant.slopes
    return [(float(bp[j]), float(bp[j + 1]), float(s[j])) for j in np.flatnonzero(lengths >= min_length)]


def bitangent_slope(curve: GrowthCurve, x_left: float, x_right: float, k0: float, iters: int = 50) -> float:
    """Slope whose support line touches phi near both x_left and x_right."""
    def local_min(center: float, k: float) -> tuple[float, float]:
        w = 2.0 * curve.step
        res = optimize.minimize_scalar(
            lambda t: float(curve.excess(np.asarray(t)) + (1.0 - k) * t + 1.0),
            bounds=(center - w, center + w), method="bounded", options={"xatol": 1e-12},
        )
        return float(res.x), float(res.fun)

    k = k0
    for _ in range(iters):
        xa, ma = local_min(x_left, k)
        xb, mb = local_min(x_right, k)
        step = (ma - mb) / (xb - xa)
        k -= step
        x_left, x_right = xa, xb
        if abs(step) < 1e-15 * max(1.0, abs(k)):
            break
    return k

