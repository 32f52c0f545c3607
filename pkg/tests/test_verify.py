import json
import math

import numpy as np
import pytest

from conftest import built
from zeroorder.order_model import (
    InadmissibleOrder,
    OrderFamilySpec,
    ProximateOrder,
    build_order,
    log_gamma,
    normalize_symmetric,
    precondition,
)
from zeroorder.product_eval import growth_report
from zeroorder.verify import (
    KERNELS,
    TrendCheck,
    check_gamma_order,
    check_main_theorem,
    check_theorem_a,
    check_theorem_c,
    kernel_average,
    order_from_counting,
    theorem_a_t_grid,
    verdicts_document,
)

PROBES = (75.0, 150.0, 300.0, 600.0)


def quad_phi(x):
    return x + 1.0 + (x - 1.0) ** 2 / 2.0


def constant_one():
    return ProximateOrder(lambda x: np.ones_like(x), "one", -math.inf, math.inf, True)


# Theorem A


def test_t_grid_is_log_uniform():
    ts = theorem_a_t_grid()
    assert ts.size == 33 and ts[0] == 0.5 and ts[-1] == pytest.approx(2.0)
    assert np.allclose(np.diff(np.log(ts)), np.log(4.0) / 32)
    with pytest.raises(ValueError):
        theorem_a_t_grid(2.0, 1.0)


def test_theorem_a_unit_scale_is_exact(quad):
    check = check_theorem_a(quad.order, [1.0], (100.0, 200.0, 400.0))
    assert check.values == [0.0, 0.0, 0.0]
    assert not check.verdict  # a constant trend is not decreasing


def test_theorem_a_quadratic_expansion(quad):
    check = check_theorem_a(quad.order, None, (100.0, 200.0, 400.0))
    x = 400.0
    closed = (quad_phi(x + math.log(2.0)) - quad_phi(x)) / quad_phi(x)
    assert check.values[-1] == pytest.approx(closed, rel=1e-12)
    assert check.values[-1] == pytest.approx(2.0 * math.log(2.0) / x, abs=1e-4)
    assert check.verdict


def test_theorem_a_log_only():
    order = normalize_symmetric(build_order(OrderFamilySpec("log-only")))
    check = check_theorem_a(order, None, (100.0, 200.0, 400.0))
    assert check.values[0] == pytest.approx(math.log(2.0) / 101.0, rel=1e-12)
    assert check.verdict


@pytest.mark.parametrize("spec", [
    OrderFamilySpec("quadratic-log"),
    OrderFamilySpec("wavy"),
    OrderFamilySpec("power-log", {"p": 2.0, "c": 1.0}),
    OrderFamilySpec("power-log", {"p": 1.5, "c": 1.0}),
], ids=lambda s: s.kind + str(dict(s.params)))
def test_theorem_a_all_families(spec):
    order = normalize_symmetric(precondition(build_order(spec)))
    check = check_theorem_a(order, None, (100.0, 200.0, 400.0))
    assert check.verdict
    assert check.values[-1] < 0.02


# Theorem C


@pytest.mark.parametrize("kernel", sorted(KERNELS))
def test_kernel_mass_on_constant(kernel):
    for x in (-10.0, 0.0, 300.0):
        assert kernel_average(constant_one(), kernel, x) == pytest.approx(KERNELS[kernel][1], rel=1e-12)


def test_theorem_c_quadratic_at_300(quad):
    lind = kernel_average(quad.order, "lindelof", 300.0)
    cauchy = kernel_average(quad.order, "cauchy", 300.0)
    assert abs(lind - 1.0) < 0.05
    assert abs(cauchy - math.pi / 2.0) < 0.05
    assert check_theorem_c(quad.order, "lindelof", PROBES).verdict
    assert check_theorem_c(quad.order, "cauchy", PROBES).verdict


def test_theorem_c_band_envelope_on_wavy(wavy):
    check = check_theorem_c(wavy.order, "lindelof", PROBES)
    assert check.verdict
    assert np.all(np.diff(check.detail["band_gap"]) < 0.0)
    # pointwise gaps are not monotone on the wavy family
    gaps = [abs(v - 1.0) for v in check.values]
    assert not np.all(np.diff(gaps) < 0.0)


def test_theorem_c_on_counting(quad, wavy):
    for b in (quad, wavy):
        check = check_theorem_c(order_from_counting(b.integrated), "lindelof", PROBES)
        assert abs(check.values[-1] - 1.0) < 0.05
        assert check.verdict


def test_theorem_c_unknown_kernel(quad):
    with pytest.raises(ValueError):
        check_theorem_c(quad.order, "gauss", PROBES)
    with pytest.raises(ValueError):
        kernel_average(quad.order, "gauss", 10.0)


# Theorem B


def test_gamma_at_e(quad):
    assert log_gamma(quad.order, 1.0) >= math.log(2.0)


def test_gamma_order_check(quad):
    check = check_gamma_order(quad.order, PROBES)
    assert check.verdict
    assert check.values[0] == pytest.approx(2.0 * math.log(quad_phi(37.5)) / 75.0, rel=1e-12)
    assert check.detail["inverse"] == [0.0] * 4


def test_gamma_order_closed_form_at_50(quad):
    # sup sits at ln r = -25: ln gamma(e^50) / 50 = 2 ln phi(25) / 50
    val = log_gamma(quad.order, 50.0) / 50.0
    assert val == pytest.approx(2.0 * math.log(quad_phi(25.0)) / 50.0, rel=1e-12)
    assert val == pytest.approx(0.2299757, abs=1e-7)


def test_gamma_order_fails_with_tight_threshold(quad):
    assert not check_gamma_order(quad.order, PROBES, threshold=1e-6).verdict


# main theorem


def test_main_theorem_quadratic(quad):
    rep = growth_report(quad.order, quad.minorant, quad.zeros, PROBES)
    check = check_main_theorem(rep)
    assert check.verdict
    assert 0.95 <= check.values[-1] <= 1.15


def test_main_theorem_wavy(wavy):
    rep = growth_report(wavy.order, wavy.minorant, wavy.zeros, PROBES)
    assert check_main_theorem(rep).verdict
    gap = rep.column("phi") - rep.column("phi1")
    off = gap > 1e-9 * rep.column("phi")
    assert np.any(off)
    assert np.all(rep.column("ratio_V")[off] < rep.column("ratio_V1")[off])


def test_main_theorem_needs_admissible_order():
    with pytest.raises(InadmissibleOrder):
        precondition(build_order(OrderFamilySpec("log-only")))


def test_main_theorem_bracket_respected(quad):
    rep = growth_report(quad.order, quad.minorant, quad.zeros, PROBES)
    assert not check_main_theorem(rep, bracket=(1.0, 1.15)).verdict


# verdict document


def test_verdicts_document_sorted_and_serializable(quad):
    checks = [
        check_theorem_a(quad.order, None, PROBES),
        check_gamma_order(quad.order, PROBES),
        TrendCheck("aaa", [1.0], [0.5], False, 0.1),
    ]
    doc = verdicts_document(checks)
    assert list(doc) == ["aaa", "theorem_a", "theorem_b_gamma_order"]
    assert doc["aaa"] == {"probes": [1.0], "values": [0.5], "verdict": "fail", "tolerance": 0.1}
    json.dumps(doc, allow_nan=False)


def test_checks_are_reproducible():
    a = built("wavy", (("eps", 0.1),))
    one = check_theorem_c(a.order, "cauchy", PROBES)
    two = check_theorem_c(a.order, "cauchy", PROBES)
    assert one.values == two.values and one.detail == two.detail
