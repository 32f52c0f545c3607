import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeroorder.order_model import (
    FAMILY_KINDS,
    InadmissibleOrder,
    OrderError,
    OrderFamilySpec,
    ProximateOrder,
    admissibility_ladder,
    build_order,
    definition_residual,
    gamma_of,
    is_admissible,
    log_gamma,
    log_gamma_of,
    log_ratio_trace,
    normalize_symmetric,
    precondition,
    read_table_csv,
    smooth_poisson,
)

BUILTIN = [
    OrderFamilySpec("quadratic-log"),
    OrderFamilySpec("power-log", {"p": 2.0, "c": 1.0}),
    OrderFamilySpec("power-log", {"p": 1.5, "c": 3.0}),
    OrderFamilySpec("wavy", {"eps": 0.1}),
    OrderFamilySpec("wavy", {"eps": 0.5}),
]


def quad_phi(x):
    return x + 1.0 + (x - 1.0) ** 2 / 2.0 if x > 1.0 else x + 1.0


def sym_quad():
    return normalize_symmetric(precondition(build_order(OrderFamilySpec("quadratic-log"))))


# build_order


def test_quadratic_log_closed_form():
    order = build_order(OrderFamilySpec("quadratic-log"))
    assert order.v_at(math.e**3) == pytest.approx(6.0, rel=1e-14)
    assert order.phi_at(3.0) == 6.0


def test_log_only_at_e():
    order = build_order(OrderFamilySpec("log-only"))
    assert order.v_at(math.e) == pytest.approx(2.0, rel=1e-15)


def test_power_log_at_one():
    order = build_order(OrderFamilySpec("power-log", {"p": 2.0, "c": 1.0}))
    assert order.v_at(1.0) == 1.0


def test_rho_is_nan_at_one_and_finite_elsewhere():
    order = build_order(OrderFamilySpec("quadratic-log"))
    assert math.isnan(order.rho_at(1.0))
    assert order.rho_at(math.e**3) == pytest.approx(math.log(6.0) / 3.0)


@pytest.mark.parametrize(
    "spec",
    [
        OrderFamilySpec("power-log", {"p": 1.0}),
        OrderFamilySpec("power-log", {"p": 2.0, "c": 0.0}),
        OrderFamilySpec("wavy", {"eps": 0.0}),
        OrderFamilySpec("wavy", {"eps": 0.6}),
        OrderFamilySpec("quadratic-log", {"p": 2.0}),
        OrderFamilySpec("nope"),
        OrderFamilySpec("sampled-table", table=((1.0, 1.0),)),
        OrderFamilySpec("sampled-table", table=((2.0, 1.0), (1.0, 2.0))),
        OrderFamilySpec("sampled-table", table=((1.0, 1.0), (2.0, -1.0))),
    ],
)
def test_invalid_specs_raise(spec):
    with pytest.raises(OrderError):
        build_order(spec)


def test_family_kinds_all_buildable():
    for kind in FAMILY_KINDS:
        if kind == "sampled-table":
            continue
        assert build_order(OrderFamilySpec(kind)).phi_at(0.0) == 1.0


def test_sampled_table_is_log_linear(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("r,V\n1,1\n2.718281828459045,3\n20.085536923187668,7\n")
    order = build_order(OrderFamilySpec("sampled-table", table=read_table_csv(path)))
    assert order.phi_at(0.5) == pytest.approx(2.0)
    assert order.phi_at(2.0) == pytest.approx(5.0)
    with pytest.raises(OrderError):
        order.phi_at(3.5)


def test_table_header_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,1\n")
    with pytest.raises(OrderError):
        read_table_csv(path)


# admissibility


def test_quadratic_admissible_final_ratio():
    verdict = is_admissible(build_order(OrderFamilySpec("quadratic-log")), x_max=400.0)
    assert verdict.admissible
    assert verdict.final_ratio == pytest.approx(400.0 / ((400.0**2 + 3.0) / 2.0), rel=1e-12)
    assert verdict.final_ratio == pytest.approx(0.005, abs=1e-4)


def test_log_only_not_admissible():
    verdict = is_admissible(build_order(OrderFamilySpec("log-only")))
    assert not verdict.admissible
    assert verdict.final_ratio > 0.99
    assert np.all(np.diff(verdict.ratios) > 0.0)


@pytest.mark.parametrize("spec", BUILTIN, ids=lambda s: f"{s.kind}{dict(s.params)}")
def test_builtin_families_admissible(spec):
    assert is_admissible(build_order(spec)).admissible


def test_admissibility_needs_x_max_50():
    with pytest.raises(OrderError):
        is_admissible(build_order(OrderFamilySpec("quadratic-log")), x_max=10.0)


def test_ladder_is_geometric():
    xs = admissibility_ladder(600.0)
    assert xs[-1] == 600.0
    assert np.allclose(xs[1:] / xs[:-1], 2.0)


def test_definition_residual_decays():
    order = build_order(OrderFamilySpec("quadratic-log"))
    res = np.abs(definition_residual(order, [50.0, 100.0, 200.0]))
    assert np.all(np.diff(res) < 0.0)


# precondition


def test_precondition_keeps_preconditioned_order():
    order = build_order(OrderFamilySpec("quadratic-log"))
    assert precondition(order) is order


def test_precondition_power_log_p2():
    old = build_order(OrderFamilySpec("power-log", {"p": 2.0, "c": 1.0}))
    new = precondition(old)
    assert new.phi_at(0.5) == 1.5
    xs = np.linspace(0.0, 1.0, 101)
    assert np.array_equal(new.phi_at(xs), xs + 1.0)
    assert new.phi_at(300.0) / old.phi_at(300.0) == pytest.approx(1.0, abs=0.02)


def test_precondition_shifts_large_offsets():
    old = build_order(OrderFamilySpec("power-log", {"p": 2.0, "c": 5.0}))
    new = precondition(old)
    xs = np.linspace(0.0, 1.0, 101)
    assert np.array_equal(new.phi_at(xs), xs + 1.0)
    # phi_old - x - 1 = x^2 - x + 4 peaks at 4 on [0, 1]
    assert new.phi_at(10.0) == pytest.approx(old.phi_at(10.0) - 4.0, rel=1e-12)


@pytest.mark.parametrize("spec", BUILTIN, ids=lambda s: f"{s.kind}{dict(s.params)}")
def test_preconditioned_lower_envelope(spec):
    new = precondition(build_order(spec))
    unit = np.linspace(0.0, 1.0, 1001)
    assert np.array_equal(new.phi_at(unit), unit + 1.0)
    xs = np.linspace(0.0, 600.0, 60001)
    assert np.all(new.phi_at(xs) >= xs + 1.0)


def test_precondition_rejects_log_only():
    with pytest.raises(InadmissibleOrder) as info:
        precondition(build_order(OrderFamilySpec("log-only")))
    assert not info.value.verdict.admissible


# symmetric normalization


def test_symmetric_value_at_inverse_radius():
    order = normalize_symmetric(build_order(OrderFamilySpec("log-only")))
    assert order.v_at(math.e) == pytest.approx(2.0)
    assert order.v_at(1.0 / math.e) == pytest.approx(0.5)
    assert order.v_at(1.0) == 1.0


def test_normalize_idempotent():
    once = sym_quad()
    twice = normalize_symmetric(once)
    assert twice.v_at(10.0) == once.v_at(10.0)
    assert twice.v_at(0.1) == once.v_at(0.1)


def test_normalize_requires_unit_value_at_one():
    order = ProximateOrder(lambda x: x + 2.0, "offset")
    with pytest.raises(OrderError):
        normalize_symmetric(order)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-300.0, max_value=300.0))
def test_inverse_identity(x):
    order = sym_quad()
    r = math.exp(x)
    assert order.v_at(r) * order.v_at(1.0 / r) == pytest.approx(1.0, rel=1e-12)


# gamma


def test_gamma_of_one():
    assert gamma_of(sym_quad(), 1.0) == 1.0


def test_gamma_at_e_bounded_by_ratio_at_one():
    assert gamma_of(sym_quad(), math.e) >= 2.0


def test_log_gamma_closed_form():
    # the sup of ln V(r t) - ln V(r) sits at ln r = -ln t / 2, where it is 2 ln phi(s / 2)
    order = sym_quad()
    assert log_gamma(order, 50.0) == pytest.approx(2.0 * math.log(quad_phi(25.0)), rel=1e-12)
    assert log_gamma_of(order, math.exp(50.0)) == pytest.approx(log_gamma(order, 50.0), rel=1e-12)


def test_log_gamma_zero_order_trend():
    order = sym_quad()
    ratios = [log_gamma(order, s) / s for s in (10.0, 20.0, 40.0)]
    assert np.all(np.diff(ratios) < 0.0)


def test_gamma_never_below_one():
    order = sym_quad()
    for t in (0.01, 0.5, 1.0, 2.0, 100.0):
        assert gamma_of(order, t) >= 1.0


def test_gamma_errors():
    order = sym_quad()
    with pytest.raises(OrderError):
        gamma_of(order, 0.0)
    with pytest.raises(OrderError):
        gamma_of(order, 2.0, np.array([]))
    with pytest.raises(OrderError):
        gamma_of(build_order(OrderFamilySpec("quadratic-log")), 2.0)


def test_ratio_trace_reflection():
    order = sym_quad()
    grid = np.linspace(-50.0, 50.0, 1001)
    forward = log_ratio_trace(order, 3.0, grid)
    backward = log_ratio_trace(order, -3.0, -grid)
    assert np.allclose(backward, -forward, rtol=0.0, atol=1e-9)


# Poisson smoothing


def test_smooth_constant_is_identity():
    one = ProximateOrder(lambda x: np.ones_like(x), "one", -math.inf, math.inf, True)
    assert smooth_poisson(one, 0.0) == pytest.approx(1.0, rel=1e-10)
    assert smooth_poisson(one, 40.0) == pytest.approx(1.0, rel=1e-10)


def test_smooth_equivalent_at_large_radius():
    order = sym_quad()
    assert smooth_poisson(order, 100.0) / order.phi_at(100.0) == pytest.approx(1.0, abs=0.05)


def test_smooth_commutes_with_inversion():
    order = sym_quad()
    mirrored = ProximateOrder(lambda x: order.phi(-x), "mirror", -math.inf, math.inf, True)
    for x in (-7.0, 0.0, 12.0):
        assert smooth_poisson(mirrored, x) == pytest.approx(smooth_poisson(order, -x), rel=1e-9)


def test_smooth_requires_symmetric():
    with pytest.raises(OrderError):
        smooth_poisson(build_order(OrderFamilySpec("quadratic-log")), 10.0)
