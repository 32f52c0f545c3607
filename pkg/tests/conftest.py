"""Shared pipeline fixtures; each family is built once per session."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import pytest

from zeroorder.convex_reg import (
    GrowthCurve,
    PiecewiseLinearConvex,
    convex_minorant,
    extend_left,
    growth_curve,
)
from zeroorder.order_model import (
    OrderFamilySpec,
    ProximateOrder,
    build_order,
    normalize_symmetric,
    precondition,
)
from zeroorder.zero_synth import (
    CountingFunction,
    IntegratedCounting,
    ZeroSequence,
    all_zeros,
    counting_function,
    integrated_counting,
)

GRID_END = 900.0


@dataclass(frozen=True)
class Built:
    order: ProximateOrder
    curve: GrowthCurve
    hull: PiecewiseLinearConvex
    minorant: PiecewiseLinearConvex
    counting: CountingFunction
    zeros: ZeroSequence
    integrated: IntegratedCounting


@lru_cache(maxsize=None)
def built(kind: str, params: tuple = (), grid_end: float = GRID_END, step: float = 1e-2) -> Built:
    spec = OrderFamilySpec(kind, dict(params))
    order = normalize_symmetric(precondition(build_order(spec)))
    curve = growth_curve(order, grid_end, step)
    hull = convex_minorant(curve)
    minorant = extend_left(hull)
    counting = counting_function(minorant)
    return Built(
        order, curve, hull, minorant, counting, all_zeros(counting), integrated_counting(counting)
    )


@pytest.fixture(scope="session")
def quad() -> Built:
    return built("quadratic-log")


@pytest.fixture(scope="session")
def wavy() -> Built:
    return built("wavy", (("eps", 0.1),))


@pytest.fixture(scope="session")
def power2() -> Built:
    return built("power-log", (("p", 2.0), ("c", 1.0)))
