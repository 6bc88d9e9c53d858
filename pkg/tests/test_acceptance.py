"""Acceptance criteria, one test each; every test prints one pass/fail line."""

import math

import numpy as np
import pytest

from kroughpam.errors import RegimeError
from kroughpam.field_synthesis import Lattice, deterministic_field, sample_field
from kroughpam.kernels import build_localized_kernel, check_decay_exponents, heat_kernel
from kroughpam.krough import (Weight, cauchy_study, chen_increment, exact_var_first,
                              exact_var_first_difference, exact_var_second, pair_first,
                              pair_second_at, pair_second_renormalized)
from kroughpam.pam_solver import convergence_study, heat_exact, initial_condition, solve_pam
from kroughpam.quadrature import (J_constant, J_truncated, border_slope_closed_form, c_n,
                                  c_n_spatial, slope_fit)
from kroughpam.spectral_model import SPATIAL, HurstConfig, mollifier

pytestmark = pytest.mark.acceptance

ROUGH = HurstConfig(1, (0.6,), 0.6)
BORDER = HurstConfig(1, (0.4,), 0.8)
LAT_N2 = Lattice(1, 128, 1 / 16, 512, 1 / 64)
LAT_N3 = Lattice(1, 256, 1 / 32, 1024, 1 / 128)


def _mc_agrees(samples, exact, k=3.0):
    sq = np.asarray(samples) ** 2
    se = float(sq.std() / math.sqrt(sq.size))
    return abs(float(sq.mean()) - exact) <= k * se, float(sq.mean()), se


def test_criterion_01_kernel_reconstruction(report):
    kern = build_localized_kernel(1, L_max=24)
    rng = np.random.default_rng(20)
    s = 2.0 ** rng.uniform(-20.0, 2.0, 200)
    x = rng.normal(size=(200, 1)) * np.sqrt(s)[:, None]
    p = heat_kernel(s, x)
    err = float(np.max(np.abs(kern.eval_K(s, x) + kern.eval_R(s, x) - p)))
    # second route: each dyadic term evaluated at its own rescaled argument
    terms = sum(kern.term(ell, s, x) for ell in range(-kern.L_max, kern.L_max + 1))
    err_terms = float(np.max(np.abs(terms - p)))
    ok = report(1, "kernel reconstruction", max(err, err_terms) < 1e-8,
                f"max |K + R - p| = {err:.2e}, term by term {err_terms:.2e}")
    assert ok


def test_criterion_02_fourier_decay_exponents(report, kernel1):
    rng = np.random.default_rng(2)
    k_tuples = rng.dirichlet(np.ones(3), 5)[:, :-1] * 0.95
    r_tuples = rng.dirichlet(np.ones(2), 5) * 1.5
    results = (check_decay_exponents(kernel1, k_tuples, "K", tol=0.1)
               + check_decay_exponents(kernel1, r_tuples, "R", tol=0.1))
    ok = all(r[-1] for r in results)
    worst = max(r[2] - r[3] for r in results)
    report(2, "Fourier decay exponents", ok,
           f"{len(results)} ray fits, worst slope excess {worst:+.3f}")
    assert ok


def test_criterion_03_sub_critical_constant_scaling(report, gauss1):
    # the stated indices give 2 h0 + h = 2.05 > d + 1 = 2: the Young regime,
    # where the constant integral diverges at the origin
    hurst = HurstConfig(1, (0.55,), 0.75)
    target = 2 * (hurst.d + 1 - hurst.effective)
    radial = hurst.d + 2 - 2 + hurst.homogeneity - 1
    try:
        ns = list(range(2, 9))
        vals = [c_n(gauss1, hurst, n) for n in ns]
        slope = slope_fit(ns, np.log2(vals))[0]
        J = J_constant(gauss1, hurst, tol=1e-9).value
        stable = abs(J_truncated(gauss1, hurst, 32.0) - J) <= 1e-6 * J
        ok = abs(slope - target) <= 1e-6 and stable
        report(3, "sub-critical constant scaling", ok, f"slope {slope:.8f} target {target:.2f}")
    except RegimeError as exc:
        report(3, "sub-critical constant scaling", False,
               f"2h0+h = {hurst.effective:.2f} exceeds d+1 = 2; low-frequency radial power "
               f"{radial:.2f} <= -1, so the constant is infinite ({exc})")
        raise
    assert ok


def test_criterion_04_border_slope(report, gauss1):
    ns = list(range(2, 11))
    ref = border_slope_closed_form(BORDER)
    slopes = {}
    for kind in ("gauss-gauss", "indicator-heat"):
        m = gauss1 if kind == "gauss-gauss" else mollifier(kind, 1)
        slopes[kind] = slope_fit(ns, [c_n(m, BORDER, n) for n in ns])[0]
    a, b = slopes["gauss-gauss"], slopes["indicator-heat"]
    ok = all(abs(s / ref - 1) <= 0.05 for s in (a, b)) and abs(a / b - 1) <= 0.02
    report(4, "border slope", ok, f"gauss {a:.6f} indicator {b:.6f} closed form {ref:.6f}")
    assert ok


def test_criterion_05_spatial_border_slope(report, kernel2):
    hurst = HurstConfig(2, (0.5, 0.5))
    ref = border_slope_closed_form(hurst)
    ns = list(range(2, 11))
    other = build_localized_kernel(2, inner=0.3)
    parts, ok = [], True
    for kind in ("heat", "sech2"):
        m = mollifier(kind, 2, SPATIAL)
        for name, kern in (("inner 0.5", kernel2), ("inner 0.3", other)):
            s = slope_fit(ns, [c_n_spatial(m, hurst, n, kern) for n in ns])[0]
            ok &= abs(s / ref - 1) <= 0.05
            parts.append(f"{kind}/{name} {s:.5f}")
    report(5, "spatial border slope", ok, f"closed form {ref:.5f}; " + ", ".join(parts))
    assert ok


def test_criterion_06_first_level_moments(report, gauss1, psi1):
    ells = list(range(7))
    exact = [exact_var_first(ROUGH, gauss1, 12, psi1, ell) for ell in ells]
    slope = float(np.polyfit(ells, np.log2(exact), 1)[0])
    target = 2 * (ROUGH.d + 2 - ROUGH.effective)
    slope_ok = abs(slope - target) <= 0.1
    # all three (l, n) pairs use level-2 fields on one lattice
    pairs = [(0, 2), (1, 2), (2, 2)]
    draws = {p: [] for p in pairs}
    for seed in range(2000):
        fld = sample_field(ROUGH, gauss1, 2, LAT_N2, seed)
        for ell, n in pairs:
            draws[(ell, n)].append(pair_first(fld, psi1, ell))
    mc = []
    for ell, n in pairs:
        agree, mean, se = _mc_agrees(draws[(ell, n)], exact_var_first(ROUGH, gauss1, n, psi1, ell))
        mc.append(agree)
    ok = slope_ok and all(mc)
    report(6, "first-level moment scaling", ok,
           f"slope {slope:.4f} target {target:.2f}; Monte Carlo within 3 se at {sum(mc)}/3 pairs")
    assert ok


def test_criterion_07_second_level_moments(report, gauss1, kernel1, psi1):
    ells = list(range(6))
    exact = [exact_var_second(ROUGH, gauss1, kernel1, ell + 2, psi1, ell).total for ell in ells]
    slope = float(np.polyfit(ells, np.log2(exact), 1)[0])
    bound = 4 * (1 + ROUGH.d - ROUGH.effective) + 0.2
    mc = []
    for ell, n, lat in [(0, 2, LAT_N2), (1, 3, LAT_N3)]:
        c = c_n(gauss1, ROUGH, n)
        vals = [pair_second_renormalized(sample_field(ROUGH, gauss1, n, lat, seed), kernel1, c,
                                         psi1, ell) for seed in range(2000)]
        target = exact_var_second(ROUGH, gauss1, kernel1, n, psi1, ell).total
        mc.append(_mc_agrees(vals, target)[0])
    ok = slope <= bound and all(mc)
    report(7, "second-level moment scaling", ok,
           f"slope {slope:.4f} bound {bound:.2f}; Monte Carlo within 3 se at {sum(mc)}/2 points")
    assert ok


def test_criterion_08_cauchy_decay(report, gauss1, kernel1, psi1):
    n = 5
    ms = [2, 3, 4]
    exact = [exact_var_first_difference(ROUGH, gauss1, n, m, psi1, 0) for m in ms]
    exact_slope = float(np.polyfit(ms, np.log2(exact), 1)[0])
    table = cauchy_study(ROUGH, gauss1, kernel1, [2, 3, 4, 5], -0.5, Weight(1.0), 1.0, 4, 0,
                         psis=[psi1], ells=(0, 1))
    mc = {f"{w} l={ell}": table.decay_slope(n, ell, w) for ell in (0, 1)
          for w in ("first", "second")}
    ok = exact_slope < 0 and all(v < 0 for v in mc.values())
    report(8, "Cauchy decay", ok, f"exact slope {exact_slope:.3f}; sampled "
           + ", ".join(f"{k} {v:.3f}" for k, v in mc.items()))
    assert ok


def test_criterion_09_k_chen_identity(report, gauss1, kernel1, psi1):
    fld = sample_field(ROUGH, gauss1, 2, LAT_N2, 7)
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        centre = (rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        a = (rng.integers(-32, 33) / 64, rng.integers(-16, 17) / 16)
        b = (rng.integers(-32, 33) / 64, rng.integers(-16, 17) / 16)
        lhs = (pair_second_at(fld, kernel1, 0.7, psi1, 1, centre, a)
               - pair_second_at(fld, kernel1, 0.7, psi1, 1, centre, b))
        rhs = chen_increment(fld, kernel1, psi1, 1, centre, a, b)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    ok = report(9, "K-Chen identity", worst <= 1e-10, f"worst relative gap {worst:.2e}")
    assert ok


def test_criterion_10_renormalized_pde(report, gauss1):
    T = 0.5
    lat = Lattice(1, 512, 1 / 64, 8192, 1 / 8192)
    dt = 1 / 4096
    bump = initial_condition("bump", 1, lat.nx, lat.dx)
    heat = solve_pam(deterministic_field(lat, 0.0), 0.0, bump, T, dt, check=False)
    heat_err = float(np.max(np.abs(heat.final - heat_exact(bump, lat.dx, T))))
    const = solve_pam(deterministic_field(lat, 1.3), 0.0, 1.0, T, dt, check=False)
    const_err = float(np.max(np.abs(const.snapshots - np.exp(1.3 * const.times)[:, None])))
    fld = sample_field(ROUGH, gauss1, 5, lat, 0)
    c = c_n(gauss1, ROUGH, 5)
    a = solve_pam(fld, c, 1.0, T, dt).snapshots
    b = solve_pam(fld.with_values(fld.values - c), 0.0, 1.0, T, dt, check=False).snapshots
    shift_exact = np.array_equal(a, b)
    table = convergence_study(ROUGH, gauss1, None, [3, 4, 5], "one", T, 0, lattice=lat, dt=dt)
    ren, ctl = table.column("renormalized"), table.column("control")
    trend = bool(np.all(np.diff(ren) < 0) and np.all(np.diff(ctl) > 0))
    ok = heat_err <= 1e-6 and const_err <= 1e-6 and shift_exact and trend
    report(10, "renormalized PDE", ok,
           f"heat {heat_err:.1e}, constant noise {const_err:.1e}, shift identity "
           f"{'exact' if shift_exact else 'broken'}, renormalized {ren.round(3).tolist()}, "
           f"control {ctl.round(3).tolist()}")
    assert ok
