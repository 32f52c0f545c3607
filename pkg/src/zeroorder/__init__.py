"""Entire functions of prescribed zero proximate order, built from their growth scale.

The pipeline regularizes a growth curve phi(x) = V(e**x) by its greatest convex
minorant, places zeros where the minorant's slope crosses each integer, and
checks that the canonical product over those zeros grows like V.
"""

from .convex_reg import (
    GridTooShort,
    GrowthCurve,
    PiecewiseLinearConvex,
    biconjugate_check,
    contact_points,
    convex_minorant,
    extend_left,
    growth_curve,
    support_value,
)
from .order_model import (
    InadmissibleOrder,
    OrderError,
    OrderFamilySpec,
    ProximateOrder,
    build_order,
    gamma_of,
    is_admissible,
    normalize_symmetric,
    precondition,
    smooth_poisson,
)
from .product_eval import (
    GrowthReport,
    ZerosTooShort,
    growth_report,
    log_max_modulus_integral_N,
    log_max_modulus_integral_n,
    log_max_modulus_sum,
    log_modulus_at,
)
from .verify import (
    TrendCheck,
    check_gamma_order,
    check_main_theorem,
    check_theorem_a,
    check_theorem_c,
)
from .zero_synth import (
    CountingFunction,
    IntegratedCounting,
    ZeroSequence,
    counting_function,
    extract_zeros,
    integrated_counting,
)

__version__ = "0.1.0"

__all__ = [
    "CountingFunction",
    "GridTooShort",
    "GrowthCurve",
    "GrowthReport",
    "InadmissibleOrder",
    "IntegratedCounting",
    "OrderError",
    "OrderFamilySpec",
    "PiecewiseLinearConvex",
    "ProximateOrder",
    "TrendCheck",
    "ZeroSequence",
    "ZerosTooShort",
    "biconjugate_check",
    "build_order",
    "check_gamma_order",
    "check_main_theorem",
    "check_theorem_a",
    "check_theorem_c",
    "contact_points",
    "convex_minorant",
    "counting_function",
    "extend_left",
    "extract_zeros",
    "gamma_of",
    "growth_curve",
    "growth_report",
    "integrated_counting",
    "is_admissible",
    "log_max_modulus_integral_N",
    "log_max_modulus_integral_n",
    "log_max_modulus_sum",
    "log_modulus_at",
    "normalize_symmetric",
    "precondition",
    "smooth_poisson",
    "support_value",
]
