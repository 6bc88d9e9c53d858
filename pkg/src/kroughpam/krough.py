"""First- and second-level pairings of the mollified noise with test functions,
their exact second moments, dyadic Besov-norm estimators and the Cauchy study.

Pairings are lattice quadratures of ``int W(z) psi^l_{s,x}(z) dz`` where
``psi^l_{s,x}`` is the parabolic rescaling of a tensor bump to scale ``2^-l``
centred at ``(s, x)``.  Lattice coordinates are centred: node ``i`` of an axis
with ``n`` nodes and step ``h`` sits at ``(i - n/2) h``.

Exact moments are Fourier integrals.  Rescaling a test function to unit scale
moves the mollifier to level ``n - l`` and the kernel to

    K_l(lam, xi) = 4^l F K(4^l lam, 2^l xi),

whose physical form is ``chi(2^-l N(s, x)) p_s(x)``.  The variance of the
renormalized second-level pairing splits (Wick) into a squared mean, a term
``U`` built from the covariance of the convolved field, and a mixed term ``V``
built from the cross covariance ``q(z) = E[(K*W)(0) W(z)]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy import integrate, interpolate, signal, special

from .errors import KRoughError, QuadratureError, ResolutionError
from .field_synthesis import Lattice, sample_field
from .kernels import _radial_fourier_matrix
from .quadrature import _c2, _legendre, c_n, polar_integral, raw_mean
from .spectral_model import SPACE_TIME
from .testfn import dyadic_lattice

__all__ = [
    "Weight",
    "KRoughPathSample",
    "DepthError",
    "SecondMoment",
    "pair_first",
    "pair_second_renormalized",
    "pair_second_raw",
    "pair_second_at",
    "chen_increment",
    "exact_var_first",
    "exact_var_first_difference",
    "mean_error_term",
    "mean_error_parts",
    "exact_var_second",
    "cross_covariance_profile",
    "sample_rough_path",
    "sample_difference",
    "besov_norm_estimate",
    "rough_distance",
    "cauchy_study",
    "CauchyTable",
]


class DepthError(KRoughError, ValueError):
    """Samples do not reach the requested dyadic depth."""


@dataclass(frozen=True)
class Weight:
    """Polynomial weight ``w(x) = (1 + |x|)^kappa``."""

    kappa: float = 0.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x) if x.ndim == 0 else np.linalg.norm(np.atleast_2d(x), axis=-1)
        out = (1.0 + r) ** self.kappa
        return out if x.ndim > 1 else (float(out[0]) if x.ndim == 1 else float(out))

    def ratio_bounds(self, M):
        """Constants ``(c1, c2)`` with ``c1 <= w(x)/w(y) <= c2`` for ``|x-y| <= M``."""
        return (1.0 + M) ** -self.kappa, (1.0 + M) ** self.kappa


# -- pairings -----------------------------------------------------------------

def _centred_axes(lattice):
    return [(np.arange(n) - n // 2) * h for n, h in zip(lattice.shape, lattice.steps)]


def _half_widths(mode, d, ell):
    dl = 2.0 ** -ell
    return ([dl * dl] if mode == SPACE_TIME else []) + [dl] * d


def _centre(mode, d, s, x):
    x = [float(v) for v in np.atleast_1d(0.0 if x is None else x)]
    if len(x) == 1 and d > 1:
        x = x * d
    if len(x) != d:
        raise ValueError(f"x must have {d} components")
    return ([float(s)] if mode == SPACE_TIME else []) + x


def _block(field, psi, ell, centre):
    """Index slices and per-axis factor vectors of ``psi^l`` centred at ``centre``."""
    lat = field.lattice
    if psi.d != lat.d or psi.mode != lat.mode:
        raise ValueError("test function and field disagree on dimension or mode")
    if ell < 0:
        raise ValueError("scale index must be nonnegative")
    slices, vecs = [], []
    for coord, h, half, c, f in zip(_centred_axes(lat), lat.steps,
                                    _half_widths(lat.mode, lat.d, ell), centre, psi.factors):
        off = len(coord) // 2
        if c - half <= coord[0] or c + half >= coord[-1]:
            raise ValueError(f"support [{c - half:g}, {c + half:g}] leaves the lattice domain")
        i0 = math.ceil((c - half) / h - 1e-9) + off
        i1 = math.floor((c + half) / h + 1e-9) + off
        if i1 - i0 + 1 < 4:
            raise ResolutionError(
                f"scale {ell} has {i1 - i0 + 1} nodes across a support of width {2 * half:g} "
                f"(step {h:g}); refine the lattice")
        slices.append(slice(i0, i1 + 1))
        vecs.append(f((coord[i0:i1 + 1] - c) / half) / half)
    return tuple(slices), vecs


def _contract(arr, vecs):
    for v in reversed(vecs):
        arr = arr @ v
    return float(arr)


def _node_index(field, point):
    lat = field.lattice
    idx = []
    for coord_c, n, h in zip(point, lat.shape, lat.steps):
        k = coord_c / h
        if abs(k - round(k)) > 1e-9:
            raise ValueError(f"base point coordinate {coord_c:g} is not a lattice node")
        i = int(round(k)) + n // 2
        if not 0 <= i < n:
            raise ValueError("base point outside the lattice")
        idx.append(i)
    return tuple(idx)


def pair_first(field, psi, ell, s=0.0, x=None):
    """Lattice quadrature of ``int W psi^l_{s,x}``.

    Parameters
    ----------
    field : LatticeField
    psi : TestFunction
    ell : int
        Scale index; the support has half widths ``4^-l`` in time and
        ``2^-l`` in space.
    s, x : float, sequence
        Centre (``s`` ignored in spatial mode).

    Raises
    ------
    ResolutionError
        Fewer than four nodes across a scaled support axis.
    """
    centre = _centre(field.mode, field.d, s, x)
    sl, vecs = _block(field, psi, ell, centre)
    return psi.scale * field.lattice.cell_volume * _contract(field.values[sl], vecs)


def pair_second_at(field, kernel, c_value, psi, ell, centre, base):
    """``int [((K*W)(z) - (K*W)(base)) W(z) - c] psi^l_centre(z) dz``.

    ``centre`` and ``base`` are full coordinate tuples (time first); ``base``
    must be a lattice node.
    """
    sl, vecs = _block(field, psi, ell, list(centre))
    kw = field.kfield(kernel)
    inc = kw[sl] - kw[_node_index(field, base)]
    integrand = inc * field.values[sl] - c_value
    return psi.scale * field.lattice.cell_volume * _contract(integrand, vecs)


def pair_second_renormalized(field, kernel, c_value, psi, ell, s=0.0, x=None):
    """Renormalized second-level pairing with base point equal to the centre.

    The base point ``(s, x)`` must be a lattice node; the convolved field is
    cached on ``field``.
    """
    centre = _centre(field.mode, field.d, s, x)
    return pair_second_at(field, kernel, c_value, psi, ell, centre, centre)


def pair_second_raw(field, kernel, psi, ell, s=0.0, x=None):
    """Second-level pairing without renormalization."""
    return pair_second_renormalized(field, kernel, 0.0, psi, ell, s, x)


def chen_increment(field, kernel, psi, ell, centre, base_a, base_b):
    """Right side of the K-Chen relation, ``((K*W)(b) - (K*W)(a)) int W phi``,
    for the base points ``a`` and ``b`` and ``phi = psi^l_centre``."""
    kw = field.kfield(kernel)
    diff = kw[_node_index(field, base_b)] - kw[_node_index(field, base_a)]
    sl, vecs = _block(field, psi, ell, list(centre))
    return diff * psi.scale * field.lattice.cell_volume * _contract(field.values[sl], vecs)


# -- one-dimensional rules ----------------------------------------------------

def _half_line_rule(a, inner, outer, step, order=16):
    """Nodes and weights on ``[0, outer]`` for ``int g(u) u^a du``.

    A Gauss-Jacobi panel on ``[0, inner]``, doubling panels up to ``step``,
    then uniform panels of width ``step``.
    """
    y, w = special.roots_jacobi(order, 0.0, a)
    us = [0.5 * inner * (1.0 + y)]
    ws = [w * (0.5 * inner) ** (a + 1.0)]
    lo = inner
    while lo < min(step, outer):
        hi = min(2.0 * lo, step, outer)
        u, wu = _legendre(lo, hi, order)
        us.append(u)
        ws.append(wu * u ** a)
        lo = hi
    if lo < outer:
        panels = max(1, math.ceil((outer - lo) / step - 1e-9))
        edges = np.linspace(lo, outer, panels + 1)
        x, wx = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * x).ravel()
        us.append(u)
        ws.append((half[:, None] * wx).ravel() * u ** a)
    return np.concatenate(us), np.concatenate(ws)


def _axis_data(hurst, m, n_eff):
    """Per axis: (exponent, level scale, |g|^2 callable, g callable)."""
    out = []
    if hurst.mode == SPACE_TIME:
        S = 4.0 ** n_eff
        out.append((1.0 - 2.0 * hurst.h0, S, m.time_factor))
    S = 2.0 ** n_eff
    for h in hurst.h:
        out.append((1.0 - 2.0 * h, S, m.space_factor))
    return out


def _factor_overlap(g, S1, S2, f, a, outer=400.0):
    """``int_R Re[g(u/S1) conj g(u/S2)] f(u)^2 |u|^a du``."""
    smin = min(S1, S2)
    inner = min(0.5, smin / 8.0)
    step = min(0.5, max(smin, 1e-3) / 4.0)
    u, w = _half_line_rule(a, inner, outer, step)
    gg = (g(u / S1) * np.conj(g(u / S2))).real
    return 2.0 * float(np.sum(w * gg * f.fourier(u) ** 2))


def _check_first(hurst, m, psi):
    if not m.separable:
        raise ValueError("exact moments need a separable mollifier")
    if m.mode != hurst.mode or psi.mode != hurst.mode or m.d != hurst.d or psi.d != hurst.d:
        raise ValueError("indices, mollifier and test function disagree")


def _first_prefactor(hurst, ell):
    dims = hurst.d + 2 if hurst.mode == SPACE_TIME else hurst.d
    return 2.0 ** (ell * (hurst.homogeneity + dims))


def exact_var_first(hurst, m, n, psi, ell):
    """Variance of the first-level pairing at level ``n`` and scale ``l``.

    Computed as ``c^2 2^{l(h + D)} C^2 prod_j I_j`` with ``h`` the homogeneity
    of the spectral weight, ``D`` the parabolic dimension and ``I_j`` the
    one-dimensional integrals of ``|g_j(u / S_j)|^2 f_j(u)^2 |u|^{a_j}`` at the
    unit-scale mollifier level ``n - l``.
    """
    return exact_var_first_difference(hurst, m, n, None, psi, ell)


def exact_var_first_difference(hurst, m, n, n_other, psi, ell):
    """``E|<W^n - W^k, psi^l>|^2`` for levels ``n`` and ``k = n_other``.

    ``n_other=None`` gives the plain variance at level ``n``.  The squared
    difference of mollifier transforms expands into three separable terms.
    """
    _check_first(hurst, m, psi)
    pre = _c2(hurst) * _first_prefactor(hurst, ell) * psi.scale ** 2

    def prod(n1, n2):
        val = 1.0
        for (a, _, g), (_, S1, _), (_, S2, _), f in zip(
                _axis_data(hurst, m, n1 - ell), _axis_data(hurst, m, n1 - ell),
                _axis_data(hurst, m, n2 - ell), psi.factors):
            val *= _factor_overlap(g, S1, S2, f, a)
        return val

    if n_other is None:
        return pre * prod(n, n)
    if n_other == n:
        return 0.0
    return pre * (prod(n, n) + prod(n_other, n_other) - 2.0 * prod(n, n_other))


# -- mean of the renormalized second level --------------------------------------

def _scaled_kernel(kernel, ell, lam, xi):
    d = kernel.d
    shape = lam.shape
    fk = kernel.fourier_K(4.0 ** ell * lam.ravel(), 2.0 ** ell * xi.reshape(-1, d))
    return 4.0 ** ell * fk.reshape(shape)


def _origin_panel(n_eff, ell):
    # K_l follows the heat transform down to radius 2^-l, the mollifier
    # cuts at 2^(n - l); the first polar panel must sit below both
    return min(0.5, 2.0 ** n_eff / 8.0, 2.0 ** -ell / 8.0)


def _check_second(hurst, m, kernel, psi):
    if hurst.mode != SPACE_TIME:
        raise ValueError("second-level moments are implemented for space-time noise")
    _check_first(hurst, m, psi)
    if kernel.d != hurst.d:
        raise ValueError("kernel and indices disagree on the dimension")
    hurst.require_rough()


def _second_prefactor(hurst, ell):
    return 2.0 ** (2 * ell * (hurst.d + 1.0 - hurst.effective))


def mean_error_parts(hurst, m, kernel, n, psi, ell, tol=1e-6):
    """The two pieces of the mean error pairing.

    Returns
    -------
    constant_part : float
        ``(raw mean - c_n) int psi``.
    kernel_part : float
        ``int q(z) psi^l(z) dz`` with ``q(z) = E[(K*W)(0) W(z)]``.
    """
    _check_second(hurst, m, kernel, psi)
    raw = raw_mean(m, hurst, kernel, n, tol).value
    const = (raw - c_n(m, hurst, n)) * psi.integral()
    n_eff = n - ell

    def func(lam, xi):
        rho2 = np.abs(m.fourier_level(n_eff, lam, xi)) ** 2
        kl = _scaled_kernel(kernel, ell, lam, xi)
        return rho2 * kl.real * psi.fourier(lam, xi)

    res = polar_integral(func, hurst, tol=tol, r_start=_origin_panel(n_eff, ell), order=16)
    if not res.converged:
        raise QuadratureError("mean error integral did not converge", res.error_estimate)
    kpart = _c2(hurst) * _second_prefactor(hurst, ell) * res.value
    return const, kpart


def mean_error_term(hurst, m, kernel, n, psi, ell, tol=1e-6):
    """Mean of the renormalized second-level pairing at scale ``l``."""
    const, kpart = mean_error_parts(hurst, m, kernel, n, psi, ell, tol)
    return const - kpart


# -- second moment ------------------------------------------------------------

@dataclass(frozen=True)
class SecondMoment:
    """Second moment of the renormalized second-level pairing.

    ``total = mean**2 + U + V``; ``v_exact`` is False when ``V`` was replaced
    by its Cauchy-Schwarz majorant ``U``.
    """

    mean: float
    U: float
    V: float
    total: float
    v_exact: bool

    def __float__(self):
        return float(self.total)


_WINDOW = 40.0


def _axis_tables(a, S, g, f, u_max, step=1.0 / 16.0, order=8):
    """Splines of ``P(u) = int b(v) f(u+v)^2 dv`` and
    ``X(u) = int b(v) f(u+v) f(v) dv`` on ``[0, u_max]``, with
    ``b(v) = |g(v/S)|^2 |v|^a``.  Both are even in ``u``."""
    v_max = u_max + _WINDOW
    pw = min(0.5, S / 4.0)
    v, wv = _half_line_rule(a, pw, v_max, pw, order)
    v = np.concatenate([-v[::-1], v])
    wv = np.concatenate([wv[::-1], wv])
    bw = wv * np.abs(g(v / S)) ** 2
    fv = f.fourier(v)
    u = np.arange(0.0, u_max + 2 * step, step)
    P = np.empty_like(u)
    X = np.zeros_like(u)
    chunk = 64
    for i in range(0, u.size, chunk):
        uc = u[i:i + chunk]
        sel = (v >= -uc[-1] - _WINDOW) & (v <= -uc[0] + _WINDOW)
        fu = f.fourier(uc[:, None] + v[sel][None, :])
        P[i:i + chunk] = (fu ** 2) @ bw[sel]
        if uc[0] <= 2.0 * _WINDOW:
            X[i:i + chunk] = fu @ (bw[sel] * fv[sel])
    X[u > 2.0 * _WINDOW] = 0.0
    return (interpolate.CubicSpline(u, P, extrapolate=False),
            interpolate.CubicSpline(u, X, extrapolate=False), float(P[0]))


def _u_term(hurst, m, kernel, n, psi, ell, tol):
    n_eff = n - ell
    lam_max, xi_max = m.bandwidth(n_eff, 1e-14)
    if not (math.isfinite(lam_max) and math.isfinite(xi_max)):
        raise ValueError("exact second moments need a mollifier with Gaussian decay")
    tables = []
    for (a, S, g), f, top in zip(_axis_data(hurst, m, n_eff), psi.factors,
                                 [lam_max] + [xi_max] * hurst.d):
        tables.append(_axis_tables(a, S, g, f, top))
    p0 = float(np.prod([t[2] for t in tables]))

    def even_eval(spl, x):
        out = spl(np.abs(x))
        return np.nan_to_num(out, nan=0.0)

    def func(lam, xi):
        coords = [lam] + [xi[..., i] for i in range(hurst.d)]
        pp = np.ones(lam.shape)
        xx = np.ones(lam.shape)
        for (P, X, _), c in zip(tables, coords):
            pp = pp * even_eval(P, c)
            xx = xx * even_eval(X, c)
        g_sym = pp + p0 - 2.0 * xx
        rho2 = np.abs(m.fourier_level(n_eff, lam, xi)) ** 2
        return rho2 * np.abs(_scaled_kernel(kernel, ell, lam, xi)) ** 2 * g_sym

    res = polar_integral(func, hurst, tol=tol, r_start=_origin_panel(n_eff, ell), order=16)
    if not res.converged:
        raise QuadratureError("second-moment integral did not converge", res.error_estimate)
    return _c2(hurst) ** 2 * _second_prefactor(hurst, ell) ** 2 * psi.scale ** 2 * res.value


def _time_covariance_table(a, S, g, u_max, fine_top, fine_step):
    """Spline of ``C0(u) = int_R |g(l/S)|^2 |l|^a cos(l u) dl`` for ``u >= 0``."""
    lam_top = S
    while abs(g(np.array([lam_top / S]))[0]) ** 2 > 1e-18:
        lam_top *= 1.25
    pw = min(0.25, 0.5 / max(fine_top, 1.0))
    lam, wl = _half_line_rule(a, min(pw, S / 8.0), lam_top, pw, 8)
    wl = wl * np.abs(g(lam / S)) ** 2
    u_fine = np.arange(0.0, fine_top + fine_step, fine_step)
    c_fine = np.empty_like(u_fine)
    for i in range(0, u_fine.size, 256):
        c_fine[i:i + 256] = 2.0 * np.cos(np.outer(u_fine[i:i + 256], lam)) @ wl
    spl_fine = interpolate.CubicSpline(u_fine, c_fine)
    if u_max <= fine_top:
        return lambda u: spl_fine(np.abs(u))
    # far range: QAWF on the cosine transform, spline of C0 * u^(a+1) in log u
    u_far = np.geomspace(fine_top * 0.9, u_max * 1.05, 160)
    f = lambda l: abs(g(np.array([l / S]))[0]) ** 2 * l ** a if l > 0 else 0.0
    c_far = np.empty_like(u_far)
    for i, u in enumerate(u_far):
        val, err = integrate.quad(f, 0.0, np.inf, weight="cos", wvar=u, limlst=200)
        c_far[i] = 2.0 * val
    spl_far = interpolate.CubicSpline(np.log(u_far), c_far * u_far ** (a + 1.0))

    def c0(u):
        u = np.abs(u)
        out = np.empty_like(u)
        near = u <= fine_top
        out[near] = spl_fine(u[near])
        uf = u[~near]
        out[~near] = spl_far(np.log(uf)) * uf ** -(a + 1.0)
        return out
    return c0


def _scaled_slice(kernel, ell, s, k):
    """Spatial transform of ``chi(2^-l N(s, .)) p_s``."""
    d = kernel.d
    reach = 9.0 * math.sqrt(s)
    top = 2.0 ** ell
    if (reach ** 4 + s * s) ** 0.25 <= kernel.inner * top:
        return np.exp(-0.5 * s * k ** 2)
    rmax = min(top, reach)
    r, w = _legendre(0.0, rmax, 200)
    prof = kernel.cutoff_radial(s / 4.0 ** ell, r / top) * kernel._heat_radial(s, r, d)
    return (w * prof) @ _radial_fourier_matrix(d, r, k)


def _s_rule(n_eff, ell, order=8):
    top = 4.0 ** ell
    fine = min(3.0, top)
    width = 4.0 ** -n_eff / 4.0
    panels = max(1, math.ceil(fine / width))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, fine, panels + 1)
    if top > fine:
        geo = [fine]
        while geo[-1] < top:
            geo.append(min(top, geo[-1] * 1.25))
        edges = np.concatenate([edges, geo[1:]])
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def cross_covariance_profile(hurst, m, kernel, n, ell, tau, y):
    """Unit-scale cross covariance ``q'(tau, y)`` (without ``c^2``) for d = 1.

    ``q'(v) = int K^(l)(z) C'(v + z) dz`` with ``K^(l)`` the kernel at scale
    ``l`` and ``C'`` the noise covariance at level ``n - l``; returns an array
    of shape ``(len(tau), len(y))``.
    """
    if hurst.d != 1:
        raise ValueError("the physical cross covariance is implemented for d = 1")
    n_eff = n - ell
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    (a0, S0, g0), (a1, S1, g1) = _axis_data(hurst, m, n_eff)
    s, ws = _s_rule(n_eff, ell)
    u_max = float(np.max(np.abs(tau))) + 4.0 ** ell + 1.0
    fine_top = min(u_max, float(np.max(np.abs(tau))) + 4.0)
    c0 = _time_covariance_table(a0, S0, g0, u_max, fine_top, 4.0 ** -n_eff / 32.0)
    # spatial rule in xi: graded toward 0, where k_s concentrates for large s
    xi_top = S1
    while abs(g1(np.array([xi_top / S1]))[0]) ** 2 > 1e-18:
        xi_top *= 1.25
    xi, wx = _half_line_rule(a1, 2.0 ** -12, xi_top, min(0.25, S1 / 8.0), 8)
    wx = wx * np.abs(g1(xi / S1)) ** 2
    cos_y = 2.0 * np.cos(np.outer(xi, y))
    S_mat = np.empty((s.size, y.size))
    for i, si in enumerate(s):
        S_mat[i] = (wx * _scaled_slice(kernel, ell, si, xi)) @ cos_y
    out = np.empty((tau.size, y.size))
    for i in range(0, tau.size, 64):
        tc = tau[i:i + 64]
        cm = c0((tc[:, None] + s[None, :]).ravel()).reshape(tc.size, s.size)
        out[i:i + 64] = (cm * ws) @ S_mat
    return out


def _correlate(a, b):
    """``out[v] = sum_z a(z) b(z + v)`` on full lag range (same step grid)."""
    return signal.fftconvolve(a[::-1, ::-1], b, mode="full")


def _v_term(hurst, m, kernel, n, psi, ell):
    n_eff = n - ell
    ht = 4.0 ** -max(n_eff, 0) / 8.0
    hx = 2.0 ** -max(n_eff, 0) / 8.0
    nt, nx = int(round(1.0 / ht)), int(round(1.0 / hx))
    t = np.arange(-nt, nt + 1) * ht
    y = np.arange(-nx, nx + 1) * hx
    lag_t = np.arange(-2 * nt, 2 * nt + 1) * ht
    lag_y = np.arange(-2 * nx, 2 * nx + 1) * hx
    q = cross_covariance_profile(hurst, m, kernel, n, ell, lag_t, lag_y)
    psi_grid = psi(t[:, None], y[None, :])
    h = ht * hx
    auto = _correlate(psi_grid, psi_grid) * h          # lags -2..2
    t1 = float(np.sum(auto * q * q[::-1, ::-1]) * h)
    q_in = q[nt:3 * nt + 1, nx:3 * nx + 1]            # q at z in [-1, 1]
    # G(z) = sum_w psi(w) q(w - z) h
    G = signal.fftconvolve(q, psi_grid[::-1, ::-1], mode="valid") * h
    G = G[::-1, ::-1]
    t2 = float(np.sum(psi_grid * q_in * G) * h)
    t4 = float(np.sum(psi_grid * q_in) * h) ** 2
    return _c2(hurst) ** 2 * _second_prefactor(hurst, ell) ** 2 * (t1 - 2.0 * t2 + t4)


def exact_var_second(hurst, m, kernel, n, psi, ell, tol=1e-6, v_mode="auto"):
    """Second moment of the renormalized second-level pairing.

    Parameters
    ----------
    v_mode : {'auto', 'exact', 'majorant'}
        ``'auto'`` evaluates the mixed term exactly for d = 1 and replaces it
        by its Cauchy-Schwarz majorant ``U`` for d = 2.

    Returns
    -------
    SecondMoment

    Raises
    ------
    ValueError
        For d > 2, or a mollifier without Gaussian decay.
    """
    _check_second(hurst, m, kernel, psi)
    if hurst.d > 2:
        raise ValueError("exact second moments are supported for d <= 2")
    if v_mode == "auto":
        v_mode = "exact" if hurst.d == 1 else "majorant"
    if v_mode == "exact" and hurst.d != 1:
        raise ValueError("the exact mixed term is implemented for d = 1")
    mean = mean_error_term(hurst, m, kernel, n, psi, ell, tol)
    U = _u_term(hurst, m, kernel, n, psi, ell, tol)
    V = _v_term(hurst, m, kernel, n, psi, ell) if v_mode == "exact" else U
    return SecondMoment(mean, U, V, mean * mean + U + V, v_mode == "exact")


# -- samples and norms ------------------------------------------------------------

@dataclass
class KRoughPathSample:
    """Pairings of one field with a family of test functions on dyadic lattices.

    Attributes
    ----------
    level : int or None
    c_value : float
        Renormalization constant used in the second-level pairings.
    depth : int
        Largest scale index sampled.
    first, second : dict
        ``(psi index, l) -> (points, values)``; ``points`` has one row per
        base point (time first).
    """

    level: Optional[int]
    c_value: float
    depth: int
    mode: str
    first: dict = dc_field(default_factory=dict)
    second: dict = dc_field(default_factory=dict)

    def scales(self):
        return sorted({k[1] for k in self.first})


def _admissible(field, psi, ell, pt):
    try:
        _block(field, psi, ell, list(pt))
    except ValueError as exc:
        if isinstance(exc, ResolutionError):
            raise
        return False
    return True


def sample_rough_path(field, kernel, c_value, psis, ells, T, box):
    """Pair ``field`` with every ``psi^l_{s,x}`` on the dyadic lattice of level
    ``l`` inside ``[-T, T] x box``.

    Base points whose scaled support leaves the lattice domain are dropped.
    """
    mode = field.mode
    out = KRoughPathSample(field.level, float(c_value), max(ells), mode)
    for j, psi in enumerate(psis):
        for ell in ells:
            pts = dyadic_lattice(ell, T, box, mode)
            pts = np.array([p for p in pts if _admissible(field, psi, ell, p)])
            if pts.size == 0:
                raise ValueError(f"no admissible base points at scale {ell}")
            first = np.array([_pair_first_pt(field, psi, ell, p) for p in pts])
            out.first[(j, ell)] = (pts, first)
            if kernel is not None and mode == SPACE_TIME:
                second = np.array([pair_second_at(field, kernel, c_value, psi, ell, p, p)
                                   for p in pts])
                out.second[(j, ell)] = (pts, second)
    return out


def _pair_first_pt(field, psi, ell, pt):
    sl, vecs = _block(field, psi, ell, list(pt))
    return psi.scale * field.lattice.cell_volume * _contract(field.values[sl], vecs)


def sample_difference(a, b):
    """Pairing differences ``a - b`` on identical base points."""
    if a.first.keys() != b.first.keys() or a.second.keys() != b.second.keys():
        raise ValueError("samples cover different test functions or scales")
    out = KRoughPathSample(None, a.c_value - b.c_value, min(a.depth, b.depth), a.mode)
    for name in ("first", "second"):
        src_a, src_b, dst = getattr(a, name), getattr(b, name), getattr(out, name)
        for key, (pa, va) in src_a.items():
            pb, vb = src_b[key]
            if pa.shape != pb.shape or not np.allclose(pa, pb):
                raise ValueError("samples use different base points")
            dst[key] = (pa, va - vb)
    return out


def besov_norm_estimate(samples, alpha, w, T, order="first", depth=None):
    """Dyadic supremum estimate of a weighted Besov norm.

    ``order='first'`` returns ``sup 2^{l alpha} |<chi, psi^l_{s,x}>| / w(x)^2``,
    ``order='second'`` the same with exponent ``2 alpha + 2`` on the second
    level, and ``order='both'`` their sum.  The supremum runs over test
    functions, scales ``l <= depth`` and base points with ``|s| <= T``.

    Raises
    ------
    DepthError
        If the samples stop before ``depth``.
    """
    if order == "both":
        return (besov_norm_estimate(samples, alpha, w, T, "first", depth)
                + besov_norm_estimate(samples, alpha, w, T, "second", depth))
    if order not in ("first", "second"):
        raise ValueError(f"unknown order {order!r}")
    depth = samples.depth if depth is None else depth
    if depth > samples.depth:
        raise DepthError(f"samples reach depth {samples.depth}, {depth} requested")
    data = samples.first if order == "first" else samples.second
    if order == "second" and not data:
        return 0.0
    expo = alpha if order == "first" else 2.0 * alpha + 2.0
    off = 1 if samples.mode == SPACE_TIME else 0
    best = 0.0
    for (_, ell), (pts, vals) in data.items():
        if ell > depth:
            continue
        keep = np.abs(pts[:, 0]) <= T + 1e-12 if off else np.ones(len(pts), bool)
        if not np.any(keep):
            continue
        wx = np.atleast_1d(w(pts[keep, off:]))
        best = max(best, float(np.max(2.0 ** (ell * expo) * np.abs(vals[keep]) / wx ** 2)))
    return best


def rough_distance(diff, alpha, w, k_max):
    """Truncated distance ``sum_{k <= k_max} 2^-k x_k / (1 + x_k)`` with
    ``x_k`` the first- plus second-level norm over ``|s| <= k``."""
    total = 0.0
    for k in range(1, k_max + 1):
        x = besov_norm_estimate(diff, alpha, w, k, "both")
        total += 2.0 ** -k * x / (1.0 + x)
    return total


# -- Cauchy study ---------------------------------------------------------------

@dataclass
class CauchyTable:
    """Distances and pairing moments between levels.

    ``rows`` holds dicts with keys ``n``, ``m``, ``ell``, ``first_moment``,
    ``second_moment`` (replica and base-point averages of squared pairing
    differences) and ``distance`` (replica mean of the truncated distance).
    """

    rows: list
    config: dict

    def moments(self, n, ell, which="first"):
        key = f"{which}_moment"
        sel = sorted((r["m"], r[key]) for r in self.rows if r["n"] == n and r["ell"] == ell)
        return np.array([s[0] for s in sel]), np.array([s[1] for s in sel])

    def decay_slope(self, n, ell, which="first"):
        """Slope of ``log2`` of the moments against ``m`` for fixed ``n``."""
        ms, vals = self.moments(n, ell, which)
        ms, vals = ms[ms < n], vals[ms < n]
        if ms.size < 2:
            raise ValueError("slope needs at least two levels below n")
        # slope_fit insists on four levels; three pairs are enough here
        return float(np.polyfit(ms, np.log2(vals), 1)[0])

    def to_csv(self):
        buf = io.StringIO()
        cols = ["n", "m", "ell", "first_moment", "second_moment", "distance"]
        wr = csv.DictWriter(buf, fieldnames=cols)
        wr.writeheader()
        for r in self.rows:
            wr.writerow({c: r[c] for c in cols})
        return buf.getvalue()


def cauchy_study(hurst, m, kernel, levels, alpha, w, T, replicas, seed, psis=None,
                 ells=(0, 1), lattice=None, k_max=None):
    """Estimate distances between coupled levels of the renormalized pair.

    Fields at all ``levels`` share one coefficient stream per replica.  For
    each pair ``m <= n`` of levels the study averages squared pairing
    differences over base points and replicas, and the truncated distance
    over replicas.

    Parameters
    ----------
    levels : sequence of int
    alpha : float
        First-level regularity exponent (negative).
    w : Weight
    T : float
        Time window of the base points; the spatial box is ``[-T, T]^d``.
    replicas : int
    seed : int
        Replica ``r`` uses the seed ``seed + r``.
    lattice : Lattice, optional
        Defaults to a lattice resolving the finest level with periods
        ``2T + 2`` in every direction.
    """
    from .testfn import make_test_function

    hurst.require_rough()
    if hurst.mode != SPACE_TIME:
        raise ValueError("the Cauchy study runs on space-time noise")
    levels = sorted(int(v) for v in levels)
    psis = [make_test_function(hurst.d)] if psis is None else list(psis)
    top = levels[-1]
    if lattice is None:
        lam_max, xi_max = m.bandwidth(top, 1e-12)
        dt = 2.0 ** -math.ceil(math.log2(lam_max / math.pi))
        dx = 2.0 ** -math.ceil(math.log2(xi_max / math.pi))
        span = 2.0 * T + 2.0
        lattice = Lattice.covering(hurst.d, span, dx, span, dt)
    k_max = max(1, int(math.floor(T))) if k_max is None else k_max
    box = [(-T, T)] * hurst.d
    consts = {n: c_n(m, hurst, n) for n in levels}
    acc = {}
    for r in range(replicas):
        samples = {}
        for n in levels:
            fld = sample_field(hurst, m, n, lattice, seed + r)
            samples[n] = sample_rough_path(fld, kernel, consts[n], psis, ells, T, box)
        for i, n in enumerate(levels):
            for mm in levels[:i + 1]:
                diff = sample_difference(samples[n], samples[mm])
                dist = rough_distance(diff, alpha, w, k_max)
                for ell in ells:
                    f2 = np.mean([np.mean(diff.first[(j, ell)][1] ** 2) for j in range(len(psis))])
                    s2 = np.mean([np.mean(diff.second[(j, ell)][1] ** 2) for j in range(len(psis))])
                    a = acc.setdefault((n, mm, ell), [0.0, 0.0, 0.0])
                    a[0] += f2 / replicas
                    a[1] += s2 / replicas
                    a[2] += dist / replicas
    rows = [{"n": n, "m": mm, "ell": ell, "first_moment": v[0], "second_moment": v[1],
             "distance": v[2]} for (n, mm, ell), v in sorted(acc.items())]
    config = {"levels": levels, "alpha": alpha, "kappa": w.kappa, "T": T,
              "replicas": replicas, "seed": seed, "ells": list(ells),
              "lattice": lattice.to_dict(), "k_max": k_max}
    return CauchyTable(rows, config)
