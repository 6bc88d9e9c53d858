import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kroughpam import testfn
from kroughpam.errors import RegimeError, ResolutionError
from kroughpam.field_synthesis import Lattice, deterministic_field, sample_field
from kroughpam.krough import (DepthError, Weight, besov_norm_estimate, cauchy_study,
                              chen_increment, exact_var_first, exact_var_first_difference,
                              exact_var_second, mean_error_parts, mean_error_term, pair_first,
                              pair_second_at, pair_second_raw, pair_second_renormalized,
                              rough_distance, sample_difference, sample_rough_path)
from kroughpam.quadrature import c_n
from kroughpam.spectral_model import HurstConfig, mollifier

LAT = Lattice(1, 32, 1 / 8, 128, 1 / 32)


def _lattice_mass(psi, ell):
    # the lattice quadrature of psi^l, which the pairings use for constants
    return pair_first(deterministic_field(LAT, 1.0), psi, ell)


@settings(max_examples=60, deadline=None)
@given(kappa=st.floats(0, 4), x=st.floats(-50, 50), step=st.floats(-3, 3))
def test_weight_ratio_bounds(kappa, x, step):
    w = Weight(kappa)
    lo, hi = w.ratio_bounds(3.0)
    r = w(x + step) / w(x)
    assert lo * (1 - 1e-12) <= r <= hi * (1 + 1e-12)


def test_weight_rejects_negative_exponent():
    with pytest.raises(ValueError):
        Weight(-0.5)


def test_constant_field_pairs_to_mass(psi1):
    # node sums of psi^l: fewer nodes per support at larger l, so the error
    # grows with l and is small once the support spans 16 space cells
    err = [abs(_lattice_mass(psi1, ell) / psi1.integral() - 1.0) for ell in (2, 1, 0)]
    assert err[0] > err[1] > err[2]
    assert err[2] < 1e-5


def test_pairing_is_linear(rough1, gauss1, psi1):
    f = sample_field(rough1, gauss1, 1, LAT, 0)
    g = sample_field(rough1, gauss1, 1, LAT, 1)
    both = f.with_values(2.0 * f.values - 3.0 * g.values)
    lhs = pair_first(both, psi1, 1, 0.25, 0.5)
    rhs = 2.0 * pair_first(f, psi1, 1, 0.25, 0.5) - 3.0 * pair_first(g, psi1, 1, 0.25, 0.5)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_pairing_guards(psi1):
    one = deterministic_field(LAT, 1.0)
    with pytest.raises(ResolutionError):
        pair_first(one, psi1, 3)
    with pytest.raises(ValueError):
        pair_first(one, psi1, 0, s=1.5)
    with pytest.raises(ValueError):
        pair_first(one, psi1, -1)


def test_second_level_of_constant_field_is_minus_constant(kernel1, psi1):
    # K*1 is constant, so the increment vanishes and only -c int psi^l remains
    one = deterministic_field(LAT, 1.0)
    c = 0.37
    val = pair_second_renormalized(one, kernel1, c, psi1, 1, 0.25, 0.5)
    assert val == pytest.approx(-c * _lattice_mass(psi1, 1), rel=1e-9)
    assert pair_second_raw(one, kernel1, psi1, 1, 0.25, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_renormalization_shifts_by_mass(rough1, gauss1, kernel1, psi1):
    f = sample_field(rough1, gauss1, 1, LAT, 3)
    centre = (0.25, 0.5)
    a = pair_second_at(f, kernel1, 0.1, psi1, 1, centre, centre)
    b = pair_second_at(f, kernel1, 0.9, psi1, 1, centre, centre)
    assert a - b == pytest.approx(0.8 * _lattice_mass(psi1, 1), rel=1e-9)


def test_chen_relation_small(rough1, gauss1, kernel1, psi1):
    f = sample_field(rough1, gauss1, 1, LAT, 4)
    centre, a, b = (0.0, 0.0), (0.125, -0.25), (-0.5, 0.75)
    lhs = (pair_second_at(f, kernel1, 0.3, psi1, 1, centre, a)
           - pair_second_at(f, kernel1, 0.3, psi1, 1, centre, b))
    rhs = chen_increment(f, kernel1, psi1, 1, centre, a, b)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_base_point_must_be_a_node(rough1, gauss1, kernel1, psi1):
    f = sample_field(rough1, gauss1, 1, LAT, 0)
    with pytest.raises(ValueError):
        pair_second_at(f, kernel1, 0.0, psi1, 0, (0.0, 0.0), (0.01, 0.0))


def test_first_variance_scaling_identity(rough1, gauss1, psi1):
    # rescaling psi^l to unit scale moves the mollifier to level n - l, so
    # shifting (n, l) by one multiplies the variance by 2^{3 - 0.6}
    for n, ell in [(2, 0), (3, 1), (4, 2)]:
        ratio = exact_var_first(rough1, gauss1, n + 1, psi1, ell + 1) / \
            exact_var_first(rough1, gauss1, n, psi1, ell)
        assert ratio == pytest.approx(2.0 ** 2.4, rel=1e-8)


def test_first_variance_against_monte_carlo(rough1, gauss1, psi1):
    exact = exact_var_first(rough1, gauss1, 1, psi1, 0)
    vals = np.array([pair_first(sample_field(rough1, gauss1, 1, LAT, s), psi1, 0)
                     for s in range(1500)])
    assert abs(np.mean(vals ** 2) - exact) < 4 * exact * math.sqrt(2.0 / vals.size)


def test_first_difference_properties(rough1, gauss1, psi1):
    assert exact_var_first_difference(rough1, gauss1, 4, 4, psi1, 1) == 0.0
    ab = exact_var_first_difference(rough1, gauss1, 5, 3, psi1, 1)
    ba = exact_var_first_difference(rough1, gauss1, 3, 5, psi1, 1)
    assert ab == pytest.approx(ba, rel=1e-10)
    va = exact_var_first(rough1, gauss1, 5, psi1, 1)
    vb = exact_var_first(rough1, gauss1, 3, psi1, 1)
    assert 0.0 < ab <= (math.sqrt(va) + math.sqrt(vb)) ** 2
    assert exact_var_first_difference(rough1, gauss1, 5, None, psi1, 1) == pytest.approx(va)


def test_first_difference_against_coupled_monte_carlo(rough1, gauss1, psi1):
    exact = exact_var_first_difference(rough1, gauss1, 2, 1, psi1, 0)
    lat = Lattice(1, 32, 1 / 8, 256, 1 / 64)
    vals = np.array([pair_first(sample_field(rough1, gauss1, 2, lat, s), psi1, 0)
                     - pair_first(sample_field(rough1, gauss1, 1, lat, s), psi1, 0)
                     for s in range(1500)])
    assert abs(np.mean(vals ** 2) - exact) < 4 * exact * math.sqrt(2.0 / vals.size)


def test_mean_error_split(rough1, gauss1, kernel1, psi1):
    const, kpart = mean_error_parts(rough1, gauss1, kernel1, 3, psi1, 1)
    assert mean_error_term(rough1, gauss1, kernel1, 3, psi1, 1) == pytest.approx(const - kpart)
    assert math.isfinite(const) and math.isfinite(kpart)


def test_second_moment_decomposition(rough1, gauss1, kernel1, psi1):
    mom = exact_var_second(rough1, gauss1, kernel1, 2, psi1, 0)
    assert mom.v_exact
    assert mom.total == pytest.approx(mom.mean ** 2 + mom.U + mom.V, rel=1e-14)
    assert mom.U > 0
    # Cauchy-Schwarz: |V| <= U
    assert abs(mom.V) <= mom.U * (1 + 1e-6)
    assert float(mom) == mom.total


def test_second_moment_majorant_in_two_dimensions(kernel2):
    hc = HurstConfig(2, (0.75, 0.75), 0.6)
    m = mollifier("gauss-gauss", 2)
    psi = testfn.make_test_function(2)
    mom = exact_var_second(hc, m, kernel2, 1, psi, 0, tol=1e-5)
    assert not mom.v_exact and mom.V == mom.U
    with pytest.raises(ValueError):
        exact_var_second(hc, m, kernel2, 1, psi, 0, v_mode="exact")


def test_second_moment_rejects_young_regime(gauss1, kernel1, psi1):
    with pytest.raises(RegimeError):
        exact_var_second(HurstConfig(1, (0.55,), 0.75), gauss1, kernel1, 2, psi1, 0)


@pytest.fixture(scope="module")
def path_sample(rough1, gauss1, kernel1, psi1):
    f = sample_field(rough1, gauss1, 1, LAT, 0)
    return f, sample_rough_path(f, kernel1, 0.0, [psi1], [0, 1], 0.5, [(-0.5, 0.5)])


def test_norm_of_zero_field_is_zero(kernel1, psi1):
    zero = deterministic_field(LAT, 0.0)
    s = sample_rough_path(zero, kernel1, 0.0, [psi1], [0, 1], 0.5, [(-0.5, 0.5)])
    assert besov_norm_estimate(s, -0.5, Weight(1.0), 0.5, "both") == 0.0


def test_norm_homogeneity(path_sample, kernel1, psi1):
    f, s = path_sample
    s3 = sample_rough_path(f.scaled(3.0), kernel1, 0.0, [psi1], [0, 1], 0.5, [(-0.5, 0.5)])
    w = Weight(1.0)
    assert besov_norm_estimate(s3, -0.5, w, 0.5) == pytest.approx(
        3.0 * besov_norm_estimate(s, -0.5, w, 0.5), rel=1e-12)
    # with c = 0 the second level is quadratic in the field
    assert besov_norm_estimate(s3, -0.5, w, 0.5, "second") == pytest.approx(
        9.0 * besov_norm_estimate(s, -0.5, w, 0.5, "second"), rel=1e-12)


def test_norm_depth_guard(path_sample):
    _, s = path_sample
    with pytest.raises(DepthError):
        besov_norm_estimate(s, -0.5, Weight(), 0.5, depth=2)
    with pytest.raises(ValueError):
        besov_norm_estimate(s, -0.5, Weight(), 0.5, order="third")


def test_distance_of_a_path_to_itself(path_sample):
    _, s = path_sample
    assert rough_distance(sample_difference(s, s), -0.5, Weight(1.0), 2) == 0.0


def test_distance_bounded(path_sample, kernel1, psi1):
    f, s = path_sample
    other = sample_rough_path(f.scaled(-50.0), kernel1, 0.0, [psi1], [0, 1], 0.5,
                              [(-0.5, 0.5)])
    d = rough_distance(sample_difference(s, other), -0.5, Weight(1.0), 3)
    assert 0.0 < d < 1.0 - 2.0 ** -3


def test_cauchy_table_structure(rough1, gauss1, kernel1):
    table = cauchy_study(rough1, gauss1, kernel1, [1, 2], -0.5, Weight(1.0), 0.5, 2, 0,
                         ells=(0,), lattice=Lattice(1, 32, 1 / 8, 256, 1 / 64))
    diag = [r for r in table.rows if r["n"] == r["m"]]
    assert diag and all(r["first_moment"] == 0 and r["distance"] == 0 for r in diag)
    assert table.to_csv().splitlines()[0] == "n,m,ell,first_moment,second_moment,distance"
    ms, vals = table.moments(2, 0)
    assert list(ms) == [1, 2] and vals[0] > 0
    with pytest.raises(ValueError):
        table.decay_slope(2, 0)


def test_constant_used_by_study_is_the_level_constant(rough1, gauss1):
    assert c_n(gauss1, rough1, 2) > c_n(gauss1, rough1, 1) > 0
