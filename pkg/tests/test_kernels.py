import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kroughpam.errors import SingularArgumentError
from kroughpam.kernels import (build_localized_kernel, check_decay_exponents, fourier_K_direct,
                               fourier_R_direct, heat_fourier, heat_kernel, ray_decay_slopes)


def test_heat_kernel_peak_value():
    assert heat_kernel(1.0, 0.0) == pytest.approx(0.3989422804014327, rel=1e-15)


def test_heat_kernel_unit_mass_in_two_dimensions():
    t = 0.37
    g = np.linspace(-8, 8, 801)
    X, Y = np.meshgrid(g, g, indexing="ij")
    vals = heat_kernel(t, np.stack([X, Y], axis=-1))
    h = g[1] - g[0]
    assert vals.sum() * h * h == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(delta=st.floats(0.1, 10.0), s=st.floats(0.01, 5.0), x=st.floats(-3.0, 3.0))
def test_heat_kernel_parabolic_scaling(delta, s, x):
    lhs = heat_kernel(delta ** 2 * s, delta * x)
    assert lhs == pytest.approx(heat_kernel(s, x) / delta, rel=1e-12)


def test_heat_kernel_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        heat_kernel(0.0, 0.0)


def test_heat_fourier_special_points():
    assert heat_fourier(0.0, [math.sqrt(2.0)]) == pytest.approx(1.0)
    assert heat_fourier(1.0, [0.0]) == pytest.approx(-1j)
    with pytest.raises(SingularArgumentError):
        heat_fourier(0.0, [0.0])


@pytest.mark.parametrize("lam,xi", [(0.7, 1.3), (-2.5, 0.4), (0.1, 2.2)])
def test_heat_fourier_against_numeric_transform(lam, xi):
    # space transform of p_s via x = sqrt(s) z with a trapezoid rule, then time quadrature
    z = np.linspace(-12, 12, 2401)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    hz = z[1] - z[0]

    def space(s):
        return float(np.sum(phi * np.cos(xi * math.sqrt(s) * z)) * hz)

    S = 40.0 / (0.5 * xi * xi)
    re = integrate.quad(space, 0, S, weight="cos", wvar=lam, limit=400)[0]
    im = -integrate.quad(space, 0, S, weight="sin", wvar=lam, limit=400)[0]
    assert re + 1j * im == pytest.approx(complex(heat_fourier(lam, [xi])), abs=1e-7)


def test_partition_of_unity_residual(kernel1, kernel2):
    assert kernel1.check_partition(n_points=100) < 1e-10
    assert kernel2.check_partition(n_points=100) < 1e-10


@pytest.mark.parametrize("d", [1, 2])
def test_kernel_plus_remainder_is_heat_kernel(d):
    kern = build_localized_kernel(d)
    rng = np.random.default_rng(3)
    s = 2.0 ** rng.uniform(-12, 2, 100)
    x = rng.normal(size=(100, d)) * np.sqrt(s)[:, None]
    err = np.abs(kern.eval_K(s, x) + kern.eval_R(s, x) - heat_kernel(s, x))
    assert err.max() < 1e-8 * max(1.0, heat_kernel(s, x).max())


def test_kernel_vanishes_for_nonpositive_time(kernel1):
    x = np.linspace(-1, 1, 11)[:, None]
    assert np.all(kernel1.eval_K(-0.3, x) == 0.0)
    assert np.all(kernel1.eval_K(0.0, x) == 0.0)


def test_series_matches_closed_form(kernel1):
    rng = np.random.default_rng(5)
    s = rng.uniform(1e-4, 1.2, 50)
    x = rng.uniform(-1.2, 1.2, (50, 1))
    assert np.allclose(kernel1.eval_K(s, x), kernel1.eval_K_closed(s, x), atol=1e-13)


@pytest.mark.parametrize("ell", [0, 1, 3])
def test_dyadic_term_support(kernel1, ell):
    s = np.linspace(-0.5, 1.5, 201) * 4.0 ** -ell
    x = np.linspace(-1.5, 1.5, 151) * 2.0 ** -ell
    S, X = np.meshgrid(s, x, indexing="ij")
    vals = kernel1.term(ell, S, X[..., None])
    outside = (S > 4.0 ** -ell) | (np.abs(X) > 2.0 ** -ell) | (S <= 0)
    assert np.all(vals[outside] == 0.0)
    assert np.any(vals[~outside] > 0.0)


def test_short_series_rejected():
    with pytest.raises(ValueError):
        build_localized_kernel(1, L_max=3)


@pytest.mark.parametrize("lam,xi", [(0.3, 0.8), (-4.0, 1.5), (12.0, 3.0), (0.02, 0.1)])
def test_fourier_split_reconstructs_heat_transform(kernel1, lam, xi):
    total = kernel1.fourier_K(lam, [[xi]]) + kernel1.fourier_R(lam, [[xi]])
    assert total[0] == pytest.approx(complex(heat_fourier(lam, [xi])), rel=1e-9)


@pytest.mark.parametrize("lam,xi", [(0.5, 0.5), (3.0, 0.0), (0.0, 2.0), (-7.0, 1.0)])
def test_tabulated_transform_against_direct_quadrature(kernel1, lam, xi):
    tab = kernel1.fourier_R(lam, [[xi]])[0]
    ref = fourier_R_direct(kernel1, lam, [xi])
    assert abs(tab - ref) < 1e-7
    assert abs(kernel1.fourier_K(lam, [[xi]])[0] - fourier_K_direct(kernel1, lam, [xi])) < 1e-7


def test_decay_slopes_reported_per_ray(kernel1):
    slopes = ray_decay_slopes(kernel1, "K")
    assert len(slopes) == 2
    assert slopes[0] == pytest.approx(-1.0, abs=0.05)
    assert slopes[1] == pytest.approx(-2.0, abs=0.05)


def test_decay_exponent_checks_reject_inadmissible_tuples(kernel1):
    with pytest.raises(ValueError):
        check_decay_exponents(kernel1, [(0.6, 0.5)], "K")
    with pytest.raises(ValueError):
        check_decay_exponents(kernel1, [(0.3, 0.3)], "R")


def test_tilde_kernel_symmetric_and_matches_time_integral(kernel1):
    x = np.array([[0.13], [-0.13], [0.41]])
    vals = kernel1.tilde_K(x)
    assert vals[0] == pytest.approx(vals[1], rel=1e-14)
    ref = integrate.quad(lambda s: float(kernel1.eval_K(s, [[0.41]])[0]), 0, 1,
                         points=[1e-3, 1e-2, 0.1], limit=400, epsabs=1e-12)[0]
    assert vals[2] == pytest.approx(ref, rel=1e-8)


def test_tilde_kernel_integrable(kernel1):
    # midpoint sums at two resolutions agree, so int |K-tilde| is finite
    def l1(n):
        h = 1.0 / n
        x = (np.arange(n) + 0.5) * h
        return 2.0 * h * np.abs(kernel1.tilde_K(x[:, None])).sum()

    a, b = l1(25), l1(100)
    assert np.isfinite(b) and abs(a - b) < 1e-3 * b


def test_tilde_kernel_rejects_origin(kernel1):
    with pytest.raises(SingularArgumentError):
        kernel1.tilde_K([[0.0]])
