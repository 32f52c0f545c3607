"""Growth of the canonical product prod (1 - z / a_n) evaluated in log-radius.

ln M(r, f) is computed three ways that agree analytically:

* the zero sum  sum_n ln(1 + r / a_n),
* the counting integral  integral n(t) r / (t (t + r)) dt, closed form per run,
* the integrated-counting integral  integral N(t) r / (t + r)**2 dt, by quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .convex_reg import PiecewiseLinearConvex
from .order_model import ProximateOrder
from .zero_synth import CountingFunction, IntegratedCounting, ZeroSequence, integrated_counting

TAIL_TOL = 1e-12
INTEGRAL_TOL = 1e-6
KERNEL_HALF_WIDTH = 60.0
MAX_SPLIT_KNOTS = 4000

REPORT_COLUMNS = (
    "x", "phi", "phi1", "n", "N", "lnM_sum", "lnM_int_n", "lnM_int_N",
    "V", "V1", "ratio_V1", "ratio_V",
)


class ZerosTooShort(ValueError):
    """The zero list ends before the sum's tail can be certified."""


def softplus(u):
    """ln(1 + e**u) without overflow or underflow."""
    return np.logaddexp(0.0, u)


def softplus_diff(a, b):
    """softplus(a) - softplus(b), exact in the difference a - b when both are large."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    big = (a > 0.0) & (b > 0.0)
    sa = np.where(big, np.log1p(np.exp(-np.abs(a))), softplus(a))
    sb = np.where(big, np.log1p(np.exp(-np.abs(b))), softplus(b))
    return np.where(big, (a - b) + (sa - sb), sa - sb)


def logistic_density(z):
    """(1/4) sech(z/2)**2 = e**-|z| / (1 + e**-|z|)**2."""
    e = np.exp(-np.abs(z))
    return e / (1.0 + e) ** 2


def _tail_bound(log_zeros: np.ndarray, x: float, cut: int) -> float:
    """Upper bound on sum over n >= cut of softplus(x - x_n), given x_cut > x.

    Zeros are grouped into unit blocks after x_cut, each block bounded by its
    count times e**(x - block start); zeros past the list end are charged at
    the last block's density.
    """
    rest = log_zeros[cut:] - log_zeros[cut]
    counts = np.bincount(np.floor(rest).astype(np.int64))
    j = np.arange(counts.size)
    u = x - log_zeros[cut]
    listed = float(np.sum(counts * np.exp(u - j)))
    beyond = counts[-1] * math.exp(x - log_zeros[-1]) / -math.expm1(-1.0)
    return listed + beyond


def _truncation(log_zeros: np.ndarray, x: float, tail_tol: float) -> int:
    """Number of leading zeros to sum; the rest is certified below 10 * tail_tol."""
    u = x - log_zeros
    first = np.flatnonzero((u < 0.0) & (np.exp(np.minimum(u, 0.0)) < tail_tol))
    if first.size:
        start = int(first[0])
        step = 0
        while True:
            hits = np.flatnonzero(u <= u[start] - step)
            if not hits.size:
                break
            cut = int(hits[0])
            if _tail_bound(log_zeros, x, cut) < 10.0 * tail_tol:
                return cut
            step += 1
    raise ZerosTooShort(
        f"zeros end at x={log_zeros[-1] if log_zeros.size else float('nan')}; "
        f"cannot certify the tail at x={x}"
    )


def log_max_modulus_sum(zeros: ZeroSequence, x: float, tail_tol: float = TAIL_TOL) -> float:
    xs = zeros.log_zeros
    if xs.size == 0:
        return 0.0
    cut = _truncation(xs, x, tail_tol)
    return math.fsum(softplus(x - xs[:cut]).tolist())


def log_max_modulus_integral_n(counting: CountingFunction, x: float) -> float:
    """Integral of n(e**u) * logistic(x - u) du, summed exactly over constant runs.

    Past the last run the count is held at its final value.
    """
    starts = counting.starts
    ends = np.r_[starts[1:], counting.x_end]
    counts = counting.counts.astype(float)
    pieces = counts * softplus_diff(x - starts, x - ends)
    tail = counts[-1] * float(softplus(x - counting.x_end))
    return math.fsum(pieces.tolist() + [tail])


def log_max_modulus_integral_N(
    integrated: IntegratedCounting,
    x: float,
    integral_tol: float = INTEGRAL_TOL,
    half_width: float = KERNEL_HALF_WIDTH,
) -> float:
    """Integral of N(e**u) * (1/4) sech((u - x)/2)**2 du by adaptive quadrature.

    Integrates over [x - W, x + W], split at the knots of N and into unit
    pieces; N beyond the window is bounded by its monotonicity on the left and
    its linear extrapolation on the right.
    """
    lo, hi = x - half_width, x + half_width
    knots = integrated.knots
    inner = knots[(knots > lo) & (knots < hi)]
    if inner.size > MAX_SPLIT_KNOTS:
        # dense kinks: N is smooth at the unit-piece scale
        inner = inner[:0]
    cuts = np.unique(np.r_[lo, inner, np.arange(math.ceil(lo), hi), x, hi])
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]

    def integrand(u: float) -> float:
        return float(integrated.N_at(u)) * float(logistic_density(u - x))

    parts = []
    with warnings.catch_warnings():
        # unsplit dense kinks cap quad near 1e-13 relative, well inside integral_tol
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            val, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=50)
            parts.append(val)
    head = math.fsum(parts)
    n_hi = float(integrated.N_at(hi + 1.0)) - float(integrated.N_at(hi))
    tail = math.exp(-half_width) * (float(integrated.N_at(lo)) + float(integrated.N_at(hi)) + n_hi)
    if head > 0.0 and tail > 1e-3 * integral_tol * head:
        raise ValueError(f"N-integral tail bound {tail:.3g} too large at x={x}")
    return head


def log_modulus_at(zeros: ZeroSequence, x: float, theta: float, tail_tol: float = TAIL_TOL) -> float:
    """ln |f(e**x e**(i theta))| summed term by term in log form."""
    if not -math.pi <= theta <= math.pi:
        raise ValueError("theta must lie in [-pi, pi]")
    xs = zeros.log_zeros
    if xs.size == 0:
        return 0.0
    cut = _truncation(xs, x, tail_tol)
    u = x - xs[:cut]
    cos_t = math.cos(theta)
    # |1 - q e^{i theta}|^2 with q = e^u; for u > 0 factor out q^2
    q = np.exp(-np.abs(u))
    inner = q * q - 2.0 * q * cos_t
    gap = 1.0 + inner
    near = gap <= 1e-24
    if np.any(near):
        raise ValueError(f"evaluation point e^{x} e^(i {theta}) is at a zero")
    terms = np.where(u > 0.0, u, 0.0) + 0.5 * np.log1p(inner)
    return math.fsum(terms.tolist())


@dataclass
class GrowthReport:
    probes: list[dict]
    sigma_estimate: float
    trend_verdicts: dict[str, bool]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([p[name] for p in self.probes], dtype=float)


def _strictly(values: np.ndarray, decreasing: bool) -> bool:
    d = np.diff(values)
    return bool(np.all(d < 0.0) if decreasing else np.all(d > 0.0))


def growth_report(
    order: ProximateOrder,
    minorant: PiecewiseLinearConvex,
    zeros: ZeroSequence,
    probe_xs,
    integral_tol: float = INTEGRAL_TOL,
    tail_tol: float = TAIL_TOL,
    integrated: IntegratedCounting | None = None,
) -> GrowthReport:
    counting = zeros.counting
    same = counting.minorant is minorant or (
        np.array_equal(counting.minorant.breakpoints, minorant.breakpoints)
        and np.array_equal(counting.minorant.values, minorant.values)
    )
    if not same:
        raise ValueError("zeros were not derived from the given minorant")
    if integrated is None:
        integrated = integrated_counting(counting)
    rows = []
    for x in [float(v) for v in probe_xs]:
        lnm_sum = log_max_modulus_sum(zeros, x, tail_tol)
        lnm_n = log_max_modulus_integral_n(counting, x)
        lnm_big_n = log_max_modulus_integral_N(integrated, x, integral_tol)
        v = float(order.phi_at(x))
        v1 = float(minorant.value_at(x))
        rows.append({
            "x": x,
            "phi": v,
            "phi1": v1,
            "n": int(counting.n_at(x)),
            "N": float(integrated.N_at(x)),
            "lnM_sum": lnm_sum,
            "lnM_int_n": lnm_n,
            "lnM_int_N": lnm_big_n,
            "V": v,
            "V1": v1,
            "ratio_V1": lnm_sum / v1,
            "ratio_V": lnm_sum / v,
        })
    report = GrowthReport(rows, 0.0, {})
    lnm = report.column("lnM_sum")
    r1 = report.column("ratio_V1")
    rv = report.column("ratio_V")
    forms = np.vstack([lnm, report.column("lnM_int_n"), report.column("lnM_int_N")])
    spread = (forms.max(axis=0) - forms.min(axis=0)) / np.abs(forms).max(axis=0)
    report.sigma_estimate = float(rv.max()) if rv.size else float("nan")
    report.trend_verdicts = {
        "lnM_increasing": _strictly(lnm, decreasing=False),
        "ratio_V1_decreasing": _strictly(r1, decreasing=True),
        "ratio_V1_approaches_1": _strictly(np.abs(r1 - 1.0), decreasing=True),
        "ratio_V_le_ratio_V1": bool(np.all(rv <= r1 + 1e-12)),
        "triple_agreement": bool(np.all(spread <= integral_tol)),
    }
    report.meta = {"max_form_spread": float(spread.max()) if spread.size else 0.0}
    return report
