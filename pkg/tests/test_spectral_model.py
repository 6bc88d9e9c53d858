import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kroughpam.errors import SingularArgumentError
from kroughpam.spectral_model import (SPATIAL, HurstConfig, SpectralWeight,
                                      eval_spectral_weight, fbm_integral, mollifier,
                                      normalization_constants, verify_assumption_rho)

index = st.floats(0.05, 0.95)
freq = st.floats(0.01, 50.0) | st.floats(-50.0, -0.01)


def test_weight_is_one_for_white_indices():
    w = SpectralWeight(HurstConfig(2, (0.5, 0.5), 0.5))
    assert eval_spectral_weight(w, 3.7, [-0.2, 11.0]) == 1.0


def test_weight_direct_arithmetic():
    w = SpectralWeight(HurstConfig(1, (0.5,), 0.75))
    assert eval_spectral_weight(w, 4.0, [1.0]) == pytest.approx(0.5, rel=1e-15)


def test_weight_against_high_precision_product():
    w = SpectralWeight(HurstConfig(2, (0.4, 0.3), 0.9))
    with mp.workdps(40):
        ref = (mp.mpf(2) ** (1 - 2 * mp.mpf("0.9")) * mp.mpf(3) ** (1 - 2 * mp.mpf("0.4"))
               * mp.mpf(5) ** (1 - 2 * mp.mpf("0.3")))
    assert eval_spectral_weight(w, 2.0, [3.0, 5.0]) == pytest.approx(float(ref), rel=1e-14)


def test_weight_rejects_singular_coordinate():
    w = SpectralWeight(HurstConfig(1, (0.7,), 0.6))
    with pytest.raises(SingularArgumentError):
        eval_spectral_weight(w, 1.0, [0.0])
    with pytest.raises(SingularArgumentError):
        eval_spectral_weight(w, 0.0, [1.0])
    # a zero coordinate with a nonnegative exponent is harmless
    w2 = SpectralWeight(HurstConfig(1, (0.3,), 0.6))
    assert eval_spectral_weight(w2, 1.0, [0.0]) == 0.0


def test_spatial_weight_ignores_time():
    w = SpectralWeight(HurstConfig(2, (0.3, 0.4)), mode=SPATIAL)
    assert eval_spectral_weight(w, None, [2.0, 3.0]) == pytest.approx(
        2.0 ** 0.4 * 3.0 ** 0.2, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(h0=index, h1=index, h2=index, lam=freq, x1=freq, x2=freq)
def test_weight_separable_and_sign_symmetric(h0, h1, h2, lam, x1, x2):
    hc = HurstConfig(2, (h1, h2), h0)
    w = SpectralWeight(hc)
    val = eval_spectral_weight(w, lam, [x1, x2])
    parts = w.time_factor(lam) * w.space_factor(0, x1) * w.space_factor(1, x2)
    assert val == pytest.approx(float(parts), rel=1e-12)
    assert val == pytest.approx(eval_spectral_weight(w, -lam, [-x1, x2]), rel=1e-12)
    assert val > 0 and math.isfinite(val)


@pytest.mark.parametrize("h", [0.3, 0.5, 0.7])
def test_fbm_integral_two_schemes_agree(h):
    a, _ = fbm_integral(h, "weighted")
    b, _ = fbm_integral(h, "oscillatory")
    assert a > 0 and math.isfinite(a)
    assert a == pytest.approx(b, rel=1e-6)


def test_fbm_integral_white_value():
    # int |e^{ix} - 1|^2 / x^2 dx = 2 pi
    assert fbm_integral(0.5)[0] == pytest.approx(2.0 * math.pi, rel=1e-9)


def test_normalization_product_property():
    _, c12 = normalization_constants(HurstConfig(2, (0.3, 0.7), 0.6))
    _, c1 = normalization_constants(HurstConfig(1, (0.3,), 0.6))
    _, c2 = normalization_constants(HurstConfig(1, (0.7,), 0.6))
    assert c12 == pytest.approx(c1 * c2, rel=1e-12)


def test_normalization_permutation_symmetry():
    hc = HurstConfig(3, (0.3, 0.55, 0.8), 0.6)
    assert normalization_constants(hc)[1] == pytest.approx(
        normalization_constants(hc.permuted((2, 0, 1)))[1], rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.2])
def test_degenerate_indices_rejected(bad):
    with pytest.raises(ValueError):
        HurstConfig(1, (bad,), 0.6)
    with pytest.raises(ValueError):
        HurstConfig(1, (0.5,), bad)


def test_spatial_mode_needs_two_dimensions():
    with pytest.raises(ValueError):
        HurstConfig(1, (0.5,))


@pytest.mark.parametrize("h0,h1,regime,border", [
    (0.6, 0.6, "rough", False),
    (0.8, 0.4, "rough", True),
    (0.75, 0.55, "young", False),
    (0.3, 0.3, "unsupported", False),
])
def test_regime_classification(h0, h1, regime, border):
    hc = HurstConfig(1, (h1,), h0)
    assert hc.regime() == regime
    assert hc.is_border == border


def test_spatial_regime():
    assert HurstConfig(2, (0.5, 0.5)).is_border
    assert HurstConfig(2, (0.5, 0.5)).regime() == "rough"
    assert HurstConfig(3, (0.6, 0.6, 0.6)).regime() == "rough"
    assert HurstConfig(2, (0.8, 0.8)).regime() == "young"


@pytest.mark.parametrize("kind", ["gauss-gauss", "indicator-heat"])
@settings(max_examples=30, deadline=None)
@given(lam=st.floats(-40, 40), xi=st.floats(-40, 40))
def test_mollifier_transform_bounded_and_even(kind, lam, xi):
    m = mollifier(kind, 1)
    v = m.fourier(np.array(lam), np.array([xi]))
    assert abs(v) <= 1.0 + 1e-12
    assert abs(v) == pytest.approx(abs(m.fourier(np.array(-lam), np.array([-xi]))), abs=1e-14)


def test_gauss_transform_real_and_unit_at_origin():
    m = mollifier("gauss-gauss", 2)
    pts = np.random.default_rng(0).normal(size=(50, 2)) * 3
    v = m.fourier(np.linspace(-3, 3, 50), pts)
    assert np.all(np.imag(v) == 0)
    assert m.fourier(np.zeros(1), np.zeros((1, 2)))[0] == 1.0
    assert mollifier("indicator-heat", 2).fourier(np.zeros(1), np.zeros((1, 2)))[0] == 1.0


def test_certificate_bounded_tau_zero():
    rep = verify_assumption_rho(mollifier("gauss-gauss", 1), [(0.0, 0.0)],
                                np.geomspace(0.01, 30, 30))
    assert rep.rows[0][1] == pytest.approx(1.0, abs=1e-3)
    assert rep.passed


def test_certificate_finite_for_unit_time_exponent():
    rep = verify_assumption_rho(mollifier("gauss-gauss", 1), [(1.0, 0.0)],
                                np.geomspace(0.01, 30, 30))
    # max of u e^{-u^2/2} is e^{-1/2}
    assert rep.rows[0][1] == pytest.approx(math.exp(-0.5), rel=1e-2)
    assert rep.rows[0][2] == "ok"


def test_certificate_indicator_heat_passes_grid():
    taus = [(a, b) for a in (0.0, 0.5, 1.0) for b in (0.0, 0.5, 1.0)]
    rep = verify_assumption_rho(mollifier("indicator-heat", 1), taus, np.geomspace(0.05, 60, 40))
    assert rep.passed
    assert "tau,c_tau,status" in rep.to_csv()


def test_certificate_flags_divergence():
    # tau_0 > 1 makes |lam|^tau |F 1_[0,1]| grow along the grid
    rep = verify_assumption_rho(mollifier("indicator-heat", 1), [(1.5, 0.0)],
                                np.geomspace(0.05, 200, 40))
    assert rep.rows[0][2] == "diverging"
    assert not rep.passed


def test_certificate_malformed_grid():
    with pytest.raises(ValueError):
        verify_assumption_rho(mollifier("gauss-gauss", 1), [(0.0, 0.0)], [1.0])
    with pytest.raises(ValueError):
        verify_assumption_rho(mollifier("gauss-gauss", 1), [(0.0,)], [1.0, 2.0])
