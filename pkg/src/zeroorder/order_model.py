"""Zero proximate orders, represented in log-radius coordinates.

An order is stored through its growth curve ``phi(x) = V(e**x)``; radii are
only materialized on request, so every quantity stays finite for log-radii
far beyond the float range of ``r`` itself.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate, optimize

PhiFn = Callable[[np.ndarray], np.ndarray]

FAMILY_KINDS = ("power-log", "quadratic-log", "wavy", "log-only", "sampled-table")

DEFAULT_WAVY_EPS = 0.1


class OrderError(ValueError):
    """Invalid order parameters or an evaluation outside the order's domain."""


class InadmissibleOrder(OrderError):
    """Raised when ln r / V(r) does not tend to zero on the probe ladder."""

    def __init__(self, message: str, verdict: "Admissibility"):
        super().__init__(message)
        self.verdict = verdict


@dataclass(frozen=True)
class OrderFamilySpec:
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    table: tuple[tuple[float, float], ...] = ()

    def validate(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise OrderError(f"unknown order family {self.kind!r}")
        allowed = {
            "power-log": {"p", "c"},
            "quadratic-log": set(),
            "wavy": {"eps"},
            "log-only": set(),
            "sampled-table": set(),
        }[self.kind]
        extra = set(self.params) - allowed
        if extra:
            raise OrderError(f"{self.kind}: unexpected parameters {sorted(extra)}")
        if self.kind == "power-log":
            p = float(self.params.get("p", 2.0))
            c = float(self.params.get("c", 1.0))
            if not p > 1.0:
                raise OrderError(f"power-log requires p > 1, got {p}")
            if not c > 0.0:
                raise OrderError(f"power-log requires c > 0, got {c}")
        elif self.kind == "wavy":
            eps = float(self.params.get("eps", DEFAULT_WAVY_EPS))
            if not 0.0 < eps <= 0.5:
                raise OrderError(f"wavy requires 0 < eps <= 0.5, got {eps}")
        elif self.kind == "sampled-table":
            if len(self.table) < 2:
                raise OrderError("sampled-table needs at least two (r, V) rows")
            r = np.array([row[0] for row in self.table], dtype=float)
            v = np.array([row[1] for row in self.table], dtype=float)
            if not np.all(np.isfinite(r)) or not np.all(np.isfinite(v)):
                raise OrderError("sampled-table contains non-finite entries")
            if np.any(r <= 0.0) or np.any(np.diff(r) <= 0.0):
                raise OrderError("sampled-table radii must be positive and strictly increasing")
            if np.any(v <= 0.0):
                raise OrderError("sampled-table values must be strictly positive")


@dataclass(frozen=True)
class ProximateOrder:
    """Growth scale V(r) = r**rho(r), held as phi(x) = V(e**x) on [x_lo, x_hi]."""

    phi: PhiFn
    family_tag: str
    x_lo: float = 0.0
    x_hi: float = math.inf
    symmetric: bool = False

    def phi_at(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_lo - 1e-12) or np.any(x > self.x_hi + 1e-12):
            raise OrderError(
                f"{self.family_tag}: log-radius outside [{self.x_lo}, {self.x_hi}]"
            )
        out = np.asarray(self.phi(x), dtype=float)
        return out if out.ndim else float(out)

    def v_at(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise OrderError("radius must be positive")
        return self.phi_at(np.log(r))

    def rho_at(self, r):
        """ln V(r) / ln r; NaN at r = 1 where the quotient is undefined."""
        x = np.log(np.asarray(r, dtype=float))
        v = np.asarray(self.phi_at(x), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(x == 0.0, np.nan, np.log(v) / np.where(x == 0.0, 1.0, x))
        return rho if rho.ndim else float(rho)


def read_table_csv(path: str | Path) -> tuple[tuple[float, float], ...]:
    """Read a two-column ``r,V`` CSV into table rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["r", "V"]:
            raise OrderError(f"{path}: expected header 'r,V', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise OrderError(f"{path}:{lineno}: expected two columns")
            rows.append((float(row[0]), float(row[1])))
    return tuple(rows)


def _quadratic_log(x):
    return np.where(x <= 1.0, x + 1.0, x + 1.0 + 0.5 * (x - 1.0) ** 2)


def build_order(spec: OrderFamilySpec) -> ProximateOrder:
    spec.validate()
    kind = spec.kind
    if kind == "power-log":
        p = float(spec.params.get("p", 2.0))
        c = float(spec.params.get("c", 1.0))
        return ProximateOrder(lambda x: x**p + c, f"power-log(p={p!r},c={c!r})")
    if kind == "quadratic-log":
        return ProximateOrder(_quadratic_log, "quadratic-log")
    if kind == "wavy":
        eps = float(spec.params.get("eps", DEFAULT_WAVY_EPS))

        def wavy(x):
            return np.maximum(x + 1.0, 0.5 * x * x * (1.0 + eps * np.sin(np.sqrt(x))))

        return ProximateOrder(wavy, f"wavy(eps={eps!r})")
    if kind == "log-only":
        return ProximateOrder(lambda x: x + 1.0, "log-only")
    # V is linear in ln r between table rows
    lnr = np.log(np.array([row[0] for row in spec.table], dtype=float))
    vals = np.array([row[1] for row in spec.table], dtype=float)
    return ProximateOrder(
        lambda x: np.interp(x, lnr, vals),
        f"sampled-table(rows={len(lnr)})",
        x_lo=float(lnr[0]),
        x_hi=float(lnr[-1]),
    )


@dataclass(frozen=True)
class Admissibility:
    xs: np.ndarray
    ratios: np.ndarray
    admissible: bool
    threshold: float

    @property
    def final_ratio(self) -> float:
        return float(self.ratios[-1])


def admissibility_ladder(x_max: float, levels: int = 8) -> np.ndarray:
    """Log-radii x_max / 2**j for j = levels-1, ..., 0."""
    return x_max / 2.0 ** np.arange(levels - 1, -1, -1)


def is_admissible(
    order: ProximateOrder,
    x_max: float = 600.0,
    threshold: float = 0.05,
    tail: int = 4,
) -> Admissibility:
    if x_max < 50.0:
        raise OrderError(f"admissibility needs x_max >= 50, got {x_max}")
    xs = admissibility_ladder(min(x_max, order.x_hi))
    ratios = xs / np.asarray(order.phi_at(xs), dtype=float)
    tail_vals = ratios[-tail:]
    ok = bool(np.all(np.diff(tail_vals) < 0.0) and ratios[-1] < threshold)
    return Admissibility(xs, ratios, ok, threshold)


def definition_residual(order: ProximateOrder, xs: Sequence[float], h: float = 1e-4) -> np.ndarray:
    """Finite-difference surrogate for r rho'(r) ln r, i.e. phi'/phi - rho in x."""
    xs = np.asarray(xs, dtype=float)
    lp = np.log(np.asarray(order.phi_at(xs + h), dtype=float))
    lm = np.log(np.asarray(order.phi_at(xs - h), dtype=float))
    dlog = (lp - lm) / (2.0 * h)
    rho = np.log(np.asarray(order.phi_at(xs), dtype=float)) / xs
    return dlog - rho


def _max_on_unit_interval(g: Callable[[np.ndarray], np.ndarray]) -> float:
    grid = np.linspace(0.0, 1.0, 2001)
    vals = np.asarray(g(grid), dtype=float)
    best = float(vals.max())
    i = int(vals.argmax())
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda t: -float(g(np.asarray(t))), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    return best


def precondition(order: ProximateOrder, x_max: float = 600.0) -> ProximateOrder:
    """Equivalent order with phi = x + 1 on [0, 1] and phi >= x + 1 for x >= 0.

    The construction is phi_new = max(x + 1, phi - c) with the smallest shift
    ``c`` that makes phi_new agree with x + 1 on [0, 1].
    """
    verdict = is_admissible(order, x_max)
    if not verdict.admissible:
        raise InadmissibleOrder(
            f"{order.family_tag}: ln r / V(r) does not tend to 0 "
            f"(final ratio {verdict.final_ratio:.6g})",
            verdict,
        )
    if order.x_lo > 0.0:
        raise OrderError(f"{order.family_tag}: order must be defined on [0, 1] to precondition")
    base = order.phi

    def excess(x):
        return base(x) - x - 1.0

    c = _max_on_unit_interval(excess)
    check = np.linspace(0.0, min(x_max, order.x_hi), 4001)
    if c <= 0.0 and np.all(base(check) >= check + 1.0):
        return order

    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 1.0, x + 1.0, np.maximum(x + 1.0, base(x) - c))

    return ProximateOrder(
        phi, f"preconditioned[{order.family_tag}](c={c!r})", x_lo=0.0, x_hi=order.x_hi
    )


def normalize_symmetric(order: ProximateOrder) -> ProximateOrder:
    """Extend to 0 < r < 1 through V(1/r) = 1 / V(r)."""
    if order.symmetric:
        return order
    if order.x_lo > 0.0:
        raise OrderError(f"{order.family_tag}: V must be defined at r = 1")
    v1 = float(order.phi(np.asarray(0.0)))
    if abs(v1 - 1.0) > 1e-12:
        raise OrderError(f"{order.family_tag}: V(1) = {v1!r}; symmetry forces V(1) = 1")
    base = order.phi

    def phi(x):
        x = np.asarray(x, dtype=float)
        vals = base(np.abs(x))
        return np.where(x >= 0.0, vals, 1.0 / vals)

    return ProximateOrder(
        phi, f"symmetric[{order.family_tag}]", x_lo=-order.x_hi, x_hi=order.x_hi,
        symmetric=True,
    )


def log_ratio_trace(order: ProximateOrder, log_t: float, log_r_grid) -> np.ndarray:
    """ln V(r t) - ln V(r) over a grid of log-radii."""
    xs = np.asarray(log_r_grid, dtype=float)
    return np.log(np.asarray(order.phi_at(xs + log_t), dtype=float)) - np.log(
        np.asarray(order.phi_at(xs), dtype=float)
    )


def default_gamma_grid(log_t: float, reach: float = 600.0, step: float = 1e-2) -> np.ndarray:
    span = abs(log_t) + reach
    n = int(round(2.0 * span / step))
    return np.linspace(-span, span, n + 1)


def log_gamma(order: ProximateOrder, log_t: float, log_r_grid=None) -> float:
    """ln gamma(e**log_t), gamma(t) = sup_r V(r t) / V(r), sup taken over the grid.

    The value is floored at 0 because V(r t) / V(r) -> 1 as r -> infinity for
    every zero proximate order, so gamma(t) >= 1 regardless of the grid.
    """
    if not order.symmetric:
        raise OrderError("gamma requires a symmetric-normalized order")
    log_t = float(log_t)
    if not math.isfinite(log_t):
        raise OrderError("gamma requires a finite ln t")
    grid = default_gamma_grid(log_t) if log_r_grid is None else np.asarray(log_r_grid, float)
    if grid.size == 0:
        raise OrderError("empty radius grid")
    return max(0.0, float(log_ratio_trace(order, log_t, grid).max()))


def log_gamma_of(order: ProximateOrder, t: float, log_r_grid=None) -> float:
    if not t > 0.0:
        raise OrderError("gamma requires t > 0")
    return log_gamma(order, math.log(t), log_r_grid)


def gamma_of(order: ProximateOrder, t: float, log_r_grid=None) -> float:
    return math.exp(log_gamma_of(order, t, log_r_grid))


def smooth_poisson(order: ProximateOrder, x: float, tail_rel: float = 1e-9) -> float:
    """V_1(e**x) = (1/pi) * integral of V(e**(x+u)) sech(u) du over the real line.

    The window [-U, U] grows from U = 30 in steps of 10 until the tail
    estimate drops below ``tail_rel`` of the head; U is capped at 80.
    """
    if not order.symmetric:
        raise OrderError("Poisson smoothing requires a symmetric-normalized order")

    def integrand(u):
        return float(order.phi_at(x + u)) / (math.pi * math.cosh(u))

    for big_u in range(30, 90, 10):
        head, _ = integrate.quad(
            integrand, -big_u, big_u, epsabs=0.0, epsrel=1e-12, limit=400, points=[0.0]
        )
        edge = float(order.phi_at(x + big_u)) + float(order.phi_at(x - big_u))
        tail = 2.0 * math.exp(-big_u) * edge / math.pi
        if tail < tail_rel * abs(head):
            return head
    raise OrderError(f"Poisson smoothing did not converge at x={x} (U capped at 80)")
