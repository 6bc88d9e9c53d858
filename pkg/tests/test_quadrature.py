import inspect
import math

import numpy as np
import pytest
from scipy import integrate, special

from kroughpam.errors import RegimeError
from kroughpam.quadrature import (J_constant, J_spatial, J_truncated, angular_integral,
                                  border_slope_closed_form, c_n, c_n_spatial,
                                  constants_csv_rows, inner_time_integral,
                                  integrate_singular, slope_fit)
from kroughpam.spectral_model import HurstConfig, mollifier, normalization_constants

BORDER = HurstConfig(1, (0.4,), 0.8)


def _c2(hc):
    c0, ch = normalization_constants(hc)
    return (c0 * ch) ** 2


def test_unit_region_volume_against_rejection_sampling():
    hc = HurstConfig(1, (0.5,), 0.5)
    res = integrate_singular(lambda lam, xi: 1.0, hc, "unit", tol=1e-9)
    rng = np.random.default_rng(11)
    n = 400_000
    pts = rng.uniform(-1, 1, (n, 2))
    inside = pts[:, 0] ** 2 + pts[:, 1] ** 4 <= 1.0
    est = 4.0 * inside.mean()
    se = 4.0 * inside.std() / math.sqrt(n)
    assert res.converged
    assert abs(res.value - est) < 4 * se


def test_separable_integrand_is_product_of_line_integrals():
    hc = HurstConfig(1, (0.7,), 0.6)
    f = lambda lam, xi: math.exp(-lam * lam - 0.5 * xi[0] ** 2)
    res = integrate_singular(f, hc, "full", tol=1e-10, symmetric=True)
    line0 = 2 * integrate.quad(lambda u: u ** -0.2 * math.exp(-u * u), 0, np.inf,
                               epsabs=1e-13, limit=200)[0]
    line1 = 2 * integrate.quad(lambda u: u ** -0.4 * math.exp(-0.5 * u * u), 0, np.inf,
                               epsabs=1e-13, limit=200)[0]
    assert res.value == pytest.approx(line0 * line1, rel=1e-8)


def test_exterior_region_against_incomplete_gamma_oracle():
    hc = HurstConfig(1, (0.7,), 0.6)
    a0, a1 = -0.2, -0.4
    f = lambda lam, xi: math.exp(-lam * lam - xi[0] ** 2)
    res = integrate_singular(f, hc, "exterior", tol=1e-10, symmetric=True)
    full = special.gamma((a0 + 1) / 2) * special.gamma((a1 + 1) / 2)
    # unit region: inner xi integral in closed form, outer by adaptive quadrature
    inner = lambda lam: special.gammainc((a1 + 1) / 2, math.sqrt(1 - lam * lam)) \
        * special.gamma((a1 + 1) / 2)
    unit = 2 * integrate.quad(lambda lam: lam ** a0 * math.exp(-lam * lam) * inner(lam),
                              0, 1, epsabs=1e-13, limit=200)[0]
    assert res.value == pytest.approx(full - unit, rel=1e-7)


def test_halving_tolerance_moves_less_than_error_estimate():
    hc = HurstConfig(1, (0.6,), 0.6)
    f = lambda lam, xi: math.exp(-lam * lam - xi[0] ** 2) * math.cos(lam)
    a = integrate_singular(f, hc, "full", tol=1e-6, symmetric=True)
    b = integrate_singular(f, hc, "full", tol=5e-7, symmetric=True)
    assert a.converged and b.converged
    assert abs(a.value - b.value) <= a.error_estimate + 1e-15


@pytest.mark.parametrize("kind", ["gauss-gauss", "indicator-heat"])
def test_sub_critical_constant_finite_positive_and_cutoff_stable(kind, rough1):
    m = mollifier(kind, 1)
    # the indicator factor decays only like 1/lam^2, so ask for less
    J = J_constant(m, rough1, tol=1e-9 if kind == "gauss-gauss" else 1e-6)
    assert J.converged and J.value > 0 and math.isfinite(J.value)
    if kind == "gauss-gauss":
        tail = [J_truncated(m, rough1, r) for r in (16.0, 32.0)]
        assert abs(tail[1] - J.value) < 1e-6 * J.value
        assert abs(tail[0] - tail[1]) < 1e-6 * J.value


def test_sub_critical_constant_depends_on_mollifier(rough1):
    a = J_constant(mollifier("gauss-gauss", 1), rough1).value
    b = J_constant(mollifier("indicator-heat", 1), rough1).value
    assert abs(a - b) > 1e-3 * a


def test_sub_critical_constant_permutation_invariant():
    hc = HurstConfig(2, (0.6, 0.7), 0.7)
    m = mollifier("gauss-gauss", 2)
    a = J_constant(m, hc, tol=1e-7).value
    b = J_constant(m, hc.permuted((1, 0)), tol=1e-7).value
    assert a == pytest.approx(b, rel=1e-6)


def test_constant_rejects_border_and_young():
    with pytest.raises(RegimeError):
        J_constant(mollifier("gauss-gauss", 1), BORDER)
    with pytest.raises(RegimeError):
        c_n(mollifier("gauss-gauss", 1), HurstConfig(1, (0.55,), 0.75), 3)


def test_sub_critical_level_ratio_exact(rough1, gauss1):
    vals = [c_n(gauss1, rough1, n) for n in (2, 3, 4, 5)]
    ratio = 2.0 ** (2 * (2 - rough1.effective))
    for lo, hi in zip(vals, vals[1:]):
        assert hi / lo == pytest.approx(ratio, rel=1e-12)


def test_level_slope_just_below_young_boundary(gauss1):
    # 2 h0 + H = 1.95: the constant stays finite and grows like 2^{0.1 n}
    hc = HurstConfig(1, (0.55,), 0.7)
    ns = list(range(2, 9))
    slope = slope_fit(ns, np.log2([c_n(gauss1, hc, n) for n in ns]))[0]
    assert slope == pytest.approx(0.1, abs=1e-6)
    J = J_constant(gauss1, hc).value
    assert J_truncated(gauss1, hc, 32.0) == pytest.approx(J, rel=1e-6)


def test_border_increments_settle(gauss1):
    vals = [c_n(gauss1, BORDER, n) for n in range(2, 10)]
    inc = np.diff(vals)
    assert np.all(inc > 0)
    assert abs(inc[-1] - inc[-2]) < 0.05 * abs(inc[-1])
    assert abs(inc[-1] - inc[-2]) < abs(inc[0] - inc[1])


def test_border_level_one_against_dense_quadrature(gauss1):
    # c^2 * 4 * int over the positive quadrant minus |lam| + xi^2 < 1/4
    def inner(xi):
        lo = max(0.0, 0.25 - xi * xi)
        a = 0.5 * xi * xi
        g = lambda lam: (math.exp(-lam * lam - xi * xi) * a / (a * a + lam * lam)
                         * lam ** -0.6 * xi ** 0.2)
        return integrate.quad(g, lo, 9.0, epsabs=1e-13, epsrel=1e-11, limit=400)[0]

    outer = integrate.quad(inner, 0.0, 9.0, points=[0.5], epsabs=1e-12, epsrel=1e-10,
                           limit=400)[0]
    ref = _c2(BORDER) * 4.0 * outer
    assert c_n(gauss1, BORDER, 1) == pytest.approx(ref, rel=1e-6)


def test_inner_time_integral():
    assert inner_time_integral(2.0) == pytest.approx(1.0)
    xi2 = 0.7
    assert inner_time_integral(xi2) == pytest.approx(
        integrate.quad(lambda s: math.exp(-0.5 * s * xi2), 0, np.inf)[0], rel=1e-10)


def test_spatial_white_noise_grows_linearly():
    hc = HurstConfig(2, (0.5, 0.5))
    m = mollifier("heat", 2, "spatial")
    vals = np.array([c_n_spatial(m, hc, n) for n in range(2, 10)])
    inc = np.diff(vals)
    assert np.all(inc > 0)
    assert np.ptp(inc[-3:]) < 0.02 * inc[-1]


def test_spatial_sub_critical_slope():
    hc = HurstConfig(3, (0.6, 0.6, 0.6))
    m = mollifier("heat", 3, "spatial")
    ns = [2, 3, 4, 5]
    vals = [c_n_spatial(m, hc, n, tol=1e-7) for n in ns]
    assert slope_fit(ns, np.log2(vals))[0] == pytest.approx(0.4, abs=1e-9)
    assert J_spatial(m, hc, tol=1e-7).value > 0


def test_slope_fit_exact_affine():
    ns = [1, 2, 3, 4, 5]
    slope, icpt, res = slope_fit(ns, [3 * n + 2 for n in ns])
    assert slope == pytest.approx(3.0, abs=1e-12)
    assert icpt == pytest.approx(2.0, abs=1e-12)
    assert res < 1e-12


def test_slope_fit_input_guards():
    with pytest.raises(ValueError):
        slope_fit([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        slope_fit([1, 2, 3, 4], [5, 5, 5, 5])


def test_angular_integral_finite_and_matches_plain_quadrature():
    val = angular_integral(BORDER)
    p = 2 * 1 - 2 * 0.4 + 1
    q = 3 - 4 * 0.8
    ref = integrate.quad(lambda t: math.cos(t) ** p * math.sin(t) ** q
                         / (math.cos(t) ** 4 / 4 + math.sin(t) ** 4), 0, math.pi / 2,
                         limit=400, epsabs=1e-13)[0]
    assert math.isfinite(val) and val == pytest.approx(ref, rel=1e-8)


def test_closed_form_slope_needs_border_and_no_mollifier():
    with pytest.raises(RegimeError):
        border_slope_closed_form(HurstConfig(1, (0.6,), 0.6))
    assert list(inspect.signature(border_slope_closed_form).parameters) == ["hurst"]


def test_csv_rows_shape(rough1, gauss1):
    rows = constants_csv_rows(gauss1, rough1, [2, 3])
    assert len(rows) == 2 and len(rows[0]) == 7
