"""Quadrature for integrals against the singular spectral weight.

Two engines are provided.

``integrate_singular`` is a general adaptive routine: on each orthant it
substitutes ``u = |x|^(2-2h) / (2-2h)`` per axis, which turns the weight
``|x|^(1-2h) dx`` into ``du``, and hands the flattened integrand to nested
adaptive Gauss-Kronrod quadrature.  Unbounded domains are split into the
parabolic unit region ``lam^2 + sum xi_i^4 <= 1`` and its exterior.

The renormalization constants use a structured rule in parabolic polar
coordinates ``lam = R^2 t``, ``|xi| = R sqrt(1 - t)``, ``xi = |xi| omega``.
In these coordinates ``|lam| + |xi|^2 = R^2``, so the level cutoff is a lower
limit in ``R``; the weight factors become Jacobi weights in ``t`` and
Dirichlet weights on the sphere, and the radial integral is done over dyadic
shells.  Integrands must be even in ``lam`` and in every ``xi_i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError, RegimeError
from .spectral_model import SPACE_TIME, SPATIAL, normalization_constants

__all__ = [
    "QuadratureResult",
    "integrate_singular",
    "polar_integral",
    "orthant_rule",
    "inner_time_integral",
    "J_constant",
    "J_truncated",
    "c_n",
    "raw_mean",
    "J_spatial",
    "c_n_spatial",
    "raw_mean_spatial",
    "slope_fit",
    "angular_integral",
    "border_slope_closed_form",
    "constants_csv_rows",
]


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of a quadrature.

    Attributes
    ----------
    value : float or complex
    error_estimate : float
        Nonnegative absolute error estimate.
    converged : bool
        True when ``error_estimate <= tolerance``.
    cells_used : int
        Number of subintervals, shells or integrand evaluations (engine
        dependent) used for the final value.
    tolerance : float
        Absolute tolerance the estimate was compared against.
    """

    value: float
    error_estimate: float
    converged: bool
    cells_used: int
    tolerance: float = math.inf

    def __float__(self):
        return float(np.real(self.value))


# -- general adaptive engine -------------------------------------------------

def _axis_exponents(hurst):
    expo = [1.0 - 2.0 * h for h in hurst.h]
    if hurst.mode == SPACE_TIME:
        expo = [1.0 - 2.0 * hurst.h0] + expo
    return expo


def _flatten_maps(expo):
    # u = x^kappa / kappa with kappa = 1 + expo, so du = x^expo dx
    maps = []
    for e in expo:
        kap = 1.0 + e
        maps.append((lambda u, k=kap: (k * u) ** (1.0 / k),
                     lambda x, k=kap: x ** k / k))
    return maps


def _parabolic_powers(hurst):
    # contribution of each coordinate to lam^2 + sum xi^4
    p = [4.0] * hurst.d
    return [2.0] + p if hurst.mode == SPACE_TIME else p


def integrate_singular(f, hurst, domain="full", tol=1e-8, symmetric=False, limit=100):
    """Integrate ``f * N`` with ``N`` the spectral weight of ``hurst``.

    Parameters
    ----------
    f : callable
        ``f(lam, xi)`` in space-time mode or ``f(xi)`` in spatial mode, with
        scalar ``lam`` and ``xi`` a length-d array.
    hurst : HurstConfig
    domain : {'full', 'unit', 'exterior'} or sequence of (lo, hi)
        ``'unit'`` is ``{lam^2 + sum xi_i^4 <= 1}`` (without ``lam`` in
        spatial mode), ``'exterior'`` its complement, ``'full'`` their
        union.  A box is given by one ``(lo, hi)`` pair per coordinate,
        time first.
    tol : float
        Absolute tolerance.
    symmetric : bool
        Declare ``f`` even in each coordinate; only the positive orthant is
        integrated.

    Returns
    -------
    QuadratureResult
    """
    if isinstance(domain, str):
        if domain == "full":
            a = integrate_singular(f, hurst, "unit", tol / 2, symmetric, limit)
            b = integrate_singular(f, hurst, "exterior", tol / 2, symmetric, limit)
            err = a.error_estimate + b.error_estimate
            return QuadratureResult(a.value + b.value, err, err <= tol,
                                    a.cells_used + b.cells_used, tol)
        if domain not in ("unit", "exterior"):
            raise ValueError(f"unknown domain {domain!r}")
    expo = _axis_exponents(hurst)
    ndim = len(expo)
    for e in expo:
        if e <= -1.0:
            raise RegimeError("weight exponent must exceed -1")
    maps = _flatten_maps(expo)
    powers = _parabolic_powers(hurst)
    spatial = hurst.mode == SPATIAL

    def call(x):
        if spatial:
            return f(np.asarray(x, dtype=float))
        return f(x[0], np.asarray(x[1:], dtype=float))

    if isinstance(domain, str):
        signs = [(1.0,) * ndim] if symmetric else list(itertools.product((1.0, -1.0), repeat=ndim))
        factor = 2.0 ** ndim if symmetric else 1.0
        pieces = [(s, None) for s in signs]
    else:
        box = [tuple(map(float, b)) for b in domain]
        if len(box) != ndim:
            raise ValueError(f"box needs {ndim} intervals")
        factor = 1.0
        pieces = []
        # split every interval at zero into signed half-intervals
        halves = []
        for lo, hi in box:
            parts = []
            if hi > 0:
                parts.append((1.0, max(lo, 0.0), hi))
            if lo < 0:
                parts.append((-1.0, max(-hi, 0.0), -lo))
            halves.append(parts)
        for combo in itertools.product(*halves):
            pieces.append((tuple(c[0] for c in combo), [(c[1], c[2]) for c in combo]))

    total, err, cells = 0.0, 0.0, 0
    for signs, bounds in pieces:
        def integrand(*u, signs=signs):
            x = [s * maps[i][0](u[i]) for i, s in enumerate(signs)]
            return float(np.real(call(x)))

        if bounds is not None:
            ranges = [(maps[i][1](lo), maps[i][1](hi)) for i, (lo, hi) in enumerate(bounds)]
        else:
            ranges = _region_ranges(domain, maps, powers)
        val, e, info = integrate.nquad(
            integrand, ranges, opts={"epsabs": tol / (2 * len(pieces) * factor), "epsrel": 0.0,
                                     "limit": limit},
            full_output=True)
        total += val
        err += e
        cells += info.get("neval", 0)
    total *= factor
    err *= factor
    return QuadratureResult(total, err, err <= tol, cells, tol)


def _region_ranges(domain, maps, powers):
    """Nested ranges for nquad; ``nquad`` passes outer variables last."""
    ndim = len(maps)
    ranges = []
    for i in range(ndim):
        def rng(*outer, i=i):
            # outer holds u_{i+1}, ..., u_{ndim-1}
            used = 0.0
            for j, uj in enumerate(outer):
                axis = i + 1 + j
                used += maps[axis][0](uj) ** powers[axis]
            room = max(1.0 - used, 0.0)
            edge = maps[i][1](room ** (1.0 / powers[i]))
            if domain == "unit":
                return (0.0, edge)
            # exterior: only the innermost coordinate is constrained
            if i == 0:
                return (edge, math.inf)
            return (0.0, math.inf)
        ranges.append(rng)
    return ranges


# -- structured parabolic polar rule ----------------------------------------

def _jacobi01(order, alpha, beta):
    """Nodes and weights for ``int_0^1 g(t) (1-t)^alpha t^beta dt``."""
    y, w = special.roots_jacobi(order, alpha, beta)
    return 0.5 * (1.0 + y), w * 2.0 ** -(alpha + beta + 1.0)


def _legendre(a, b, order):
    y, w = np.polynomial.legendre.leggauss(order)
    h = 0.5 * (b - a)
    return 0.5 * (a + b) + h * y, h * w


def orthant_rule(exponents, order=12):
    """Rule for ``int g(omega) prod omega_i^a_i d sigma`` over the positive
    orthant of the unit sphere.

    Uses ``y_i = omega_i^2``, which maps the weighted surface measure to a
    Dirichlet weight on the simplex, integrated by a conical product of
    Gauss-Jacobi rules.

    Returns
    -------
    omega : ndarray, shape (m, d)
    weights : ndarray, shape (m,)
    """
    b = [(a + 1.0) / 2.0 for a in exponents]
    d = len(b)
    if d == 1:
        return np.ones((1, 1)), np.ones(1)
    # rest is the running product of (1 - u_j)
    rest, y_acc, w_acc = np.ones(1), np.zeros((1, 0)), np.ones(1)
    for j in range(d - 1):
        tail = sum(b[j + 1:])
        u, wu = _jacobi01(order, tail - 1.0, b[j] - 1.0)
        y_new = (rest[:, None] * u[None, :]).ravel()
        y_acc = np.concatenate([np.repeat(y_acc, order, axis=0), y_new[:, None]], axis=1)
        w_acc = (w_acc[:, None] * wu[None, :]).ravel()
        rest = (rest[:, None] * (1.0 - u)[None, :]).ravel()
    y = np.concatenate([y_acc, rest[:, None]], axis=1)
    return np.sqrt(y), w_acc * 2.0 ** -(d - 1)


def _graded_unit_rule(alpha, beta, depth, order=10):
    """Rule on [0, 1] for weight ``(1-t)^alpha t^beta`` graded toward both ends.

    Dyadic panels accumulate at both endpoints to ``2^-depth``; the end
    panels carry the singular factor through Gauss-Jacobi nodes and the
    interior panels through explicit multiplication.
    """
    ts, ws = [], []
    lo = 2.0 ** -depth
    # left end panel [0, lo]
    y, w = special.roots_jacobi(order, 0.0, beta)
    t = 0.5 * lo * (1.0 + y)
    ts.append(t)
    ws.append(w * (0.5 * lo) ** (beta + 1.0) * (1.0 - t) ** alpha)
    edges = [2.0 ** -k for k in range(depth, 0, -1)]   # lo, ..., 1/2
    for a, b in zip(edges[:-1], edges[1:]):
        for (pa, pb) in ((a, b), (1.0 - b, 1.0 - a)):
            t, w = _legendre(pa, pb, order)
            ts.append(t)
            ws.append(w * t ** beta * (1.0 - t) ** alpha)
    # right end panel [1 - lo, 1]
    y, w = special.roots_jacobi(order, alpha, 0.0)
    t = 1.0 - lo + 0.5 * lo * (1.0 + y)
    ts.append(t)
    ws.append(w * (0.5 * lo) ** (alpha + 1.0) * t ** beta)
    return np.concatenate(ts), np.concatenate(ws)


class _PolarPlan:
    """Node factory for the parabolic polar rule of one Hurst configuration."""

    def __init__(self, hurst, order=12):
        self.hurst = hurst
        self.order = order
        self.spatial = hurst.mode == SPATIAL
        a = [1.0 - 2.0 * h for h in hurst.h]
        self.omega, self.w_omega = orthant_rule(a, order)
        b = hurst.d - 1.0 + sum(a)
        if self.spatial:
            self.r_power = b
            self.sym = 2.0 ** hurst.d
        else:
            a0 = 1.0 - 2.0 * hurst.h0
            self.t_alpha = 0.5 * (b - 1.0)
            self.t_beta = a0
            self.r_power = 2.0 + 2.0 * a0 + b
            self.sym = 2.0 ** (hurst.d + 1)
        self._t_cache = {}

    def t_rule(self, depth):
        if depth not in self._t_cache:
            self._t_cache[depth] = _graded_unit_rule(self.t_alpha, self.t_beta, depth,
                                                     max(6, self.order - 2))
        return self._t_cache[depth]

    def shell(self, func, r, wr, depth):
        """Sum of the integrand over radial nodes ``r`` with weights ``wr``
        (radial power not included)."""
        om, wom = self.omega, self.w_omega
        if self.spatial:
            xi = r[:, None, None] * om[None, :, :]
            vals = func(xi)
            return float(np.sum(vals * wr[:, None] * wom[None, :]))
        t, wt = self.t_rule(depth)
        lam = (r[:, None] ** 2 * t[None, :])[:, :, None]
        rad = r[:, None] * np.sqrt(1.0 - t)[None, :]
        xi = rad[:, :, None, None] * om[None, None, :, :]
        vals = func(np.broadcast_to(lam, xi.shape[:-1]), xi)
        w = wr[:, None, None] * wt[None, :, None] * wom[None, None, :]
        return float(np.sum(vals * w))


def polar_integral(func, hurst, r_min=0.0, origin_power=0.0, tol=1e-9, order=12,
                   r_start=None, max_shells=400, t_depth=None):
    """Integrate an even integrand against the spectral weight over
    ``{|lam| + |xi|^2 >= r_min^2}`` (``{|xi| >= r_min}`` spatially).

    Parameters
    ----------
    func : callable
        ``func(lam, xi)`` (``xi`` with trailing axis d) or ``func(xi)``;
        must be vectorized and even in each coordinate.
    hurst : HurstConfig
    r_min : float
        Lower radial cutoff; 0 integrates through the origin, where the
        integrand must behave like ``R^origin_power`` times a smooth factor.
    tol : float
        Relative tolerance used to stop the outward shell sweep and to
        judge agreement between the base and refined rules.

    Returns
    -------
    QuadratureResult
        ``cells_used`` counts radial shells.
    """
    coarse = _polar_sweep(func, hurst, r_min, origin_power, tol, order, r_start,
                          max_shells, t_depth)
    fine = _polar_sweep(func, hurst, r_min, origin_power, tol, order + 6, r_start,
                        max_shells, None if t_depth is None else t_depth + 2)
    value, tail, shells = fine
    err = abs(value - coarse[0]) + 0.1 * abs(tail)
    atol = tol * abs(value)
    return QuadratureResult(value, err, err <= atol, shells, atol)


def _polar_sweep(func, hurst, r_min, origin_power, tol, order, r_start, max_shells,
                 t_depth):
    plan = _PolarPlan(hurst, order)
    p = plan.r_power

    def depth_for(r_hi):
        if t_depth is not None:
            return t_depth
        return int(max(4, math.ceil(2.0 * math.log2(max(r_hi, 1.0))) + 4))

    total = 0.0
    if r_min > 0.0:
        lo = r_min
    else:
        lo = 0.125 if r_start is None else r_start
        gamma = p + origin_power
        if gamma <= -1.0:
            raise RegimeError("integrand is not integrable at the origin")
        y, w = special.roots_jacobi(order, 0.0, gamma)
        r = 0.5 * lo * (1.0 + y)
        wr = w * (0.5 * lo) ** (gamma + 1.0) * r ** (-origin_power)
        total += plan.shell(func, r, wr, depth_for(lo))
    shells = 0
    history = []
    tail = 0.0
    while True:
        hi = 2.0 * lo
        r, wr = _legendre(lo, hi, order)
        s = plan.shell(func, r, wr * r ** p, depth_for(hi))
        total += s
        shells += 1
        history.append(abs(s))
        if len(history) >= 4 and hi >= 4.0:
            last = history[-1]
            q = last / history[-2] if history[-2] > 0 else 0.0
            small = last <= 1e-3 * tol * abs(total)
            if q < 0.9 and small:
                tail = s * q / (1.0 - q)
                total += tail
                break
            if last == 0.0:
                break
        if shells >= max_shells:
            raise QuadratureError("radial sweep did not terminate", history[-1])
        lo = hi
    return plan.sym * total, plan.sym * tail, shells


# -- renormalization constants ------------------------------------------------

def _re_heat(lam, xi):
    # even real part of 1 / (|xi|^2/2 + i lam)
    a = 0.5 * np.sum(xi * xi, axis=-1)
    return a / (a * a + lam * lam)


def inner_time_integral(xi2):
    """``int_0^inf exp(-s |xi|^2 / 2) ds = 2 / |xi|^2``."""
    xi2 = np.asarray(xi2, dtype=float)
    return 2.0 / xi2


def _level_weight(m, n):
    def rho2(lam, xi):
        return np.abs(m.fourier_level(n, lam, xi)) ** 2
    return rho2


def _check_mode(m, hurst, mode):
    if hurst.mode != mode:
        raise RegimeError(f"expected {mode} indices, got {hurst.mode}")
    if m.mode != mode:
        raise ValueError(f"mollifier is for {m.mode} mode, expected {mode}")
    if m.d != hurst.d:
        raise ValueError("mollifier and indices disagree on the dimension")


def J_constant(m, hurst, tol=1e-9):
    """Sub-critical constant ``int |F rho|^2 Re Fp N``.

    Raises
    ------
    RegimeError
        Outside the strictly sub-critical rough regime, where the integral
        diverges at the origin.
    """
    _check_mode(m, hurst, SPACE_TIME)
    hurst.require_rough(strict=True)
    rho2 = _level_weight(m, 0)
    return polar_integral(lambda lam, xi: rho2(lam, xi) * _re_heat(lam, xi), hurst,
                          origin_power=-2.0, tol=tol)


def J_truncated(m, hurst, r_max, order=16):
    """The same integral restricted to ``|lam| + |xi|^2 <= r_max^2``.

    Used to check stability of the constant with respect to the outer cutoff.
    """
    _check_mode(m, hurst, SPACE_TIME)
    hurst.require_rough(strict=True)
    rho2 = _level_weight(m, 0)
    plan = _PolarPlan(hurst, order)
    gamma = plan.r_power - 2.0
    lo = min(0.125, r_max)
    y, w = special.roots_jacobi(order, 0.0, gamma)
    r = 0.5 * lo * (1.0 + y)
    wr = w * (0.5 * lo) ** (gamma + 1.0) * r ** 2.0

    def func(lam, xi):
        return rho2(lam, xi) * _re_heat(lam, xi)

    total = plan.shell(func, r, wr, 4)
    while lo < r_max:
        hi = min(2.0 * lo, r_max)
        r, wr = _legendre(lo, hi, order)
        depth = int(max(4, math.ceil(2.0 * math.log2(max(hi, 1.0))) + 4))
        total += plan.shell(func, r, wr * r ** plan.r_power, depth)
        lo = hi
    return plan.sym * total


def _c2(hurst):
    c0, ch = normalization_constants(hurst)
    return (c0 * ch) ** 2 if hurst.mode == SPACE_TIME else ch ** 2


def c_n(m, hurst, n, kernel=None, tol=1e-9):
    """Renormalization constant at level ``n``.

    Sub-critically this is ``c^2 2^{2n(d+1-(2h0+H))} J``; on the border it is
    ``c^2`` times the integral of ``|F rho|^2 Re Fp N`` over
    ``|lam| + |xi|^2 >= 4^-n``.  Passing a localized ``kernel`` returns
    :func:`raw_mean` instead.
    """
    if n < 1:
        raise ValueError("level n must be at least 1")
    _check_mode(m, hurst, SPACE_TIME)
    if kernel is not None:
        return raw_mean(m, hurst, kernel, n, tol).value
    hurst.require_rough()
    c2 = _c2(hurst)
    if not hurst.is_border:
        J = J_constant(m, hurst, tol)
        return c2 * 2.0 ** (2 * n * (hurst.d + 1.0 - hurst.effective)) * J.value
    rho2 = _level_weight(m, 0)
    res = polar_integral(lambda lam, xi: rho2(lam, xi) * _re_heat(lam, xi), hurst,
                         r_min=2.0 ** -n, tol=tol)
    return c2 * res.value


def raw_mean(m, hurst, kernel, n, tol=1e-9):
    """``c^2 int |F rho_n|^2 Re FK N``: the mean of the canonical
    second-order object built from the localized kernel."""
    _check_mode(m, hurst, SPACE_TIME)
    hurst.require_rough()
    rho2 = _level_weight(m, n)

    def func(lam, xi):
        shape = lam.shape
        fk = kernel.fourier_K(lam.ravel(), xi.reshape(-1, hurst.d)).real.reshape(shape)
        return rho2(lam, xi) * fk

    res = polar_integral(func, hurst, tol=tol, r_start=0.5, t_depth=None)
    c2 = _c2(hurst)
    return QuadratureResult(c2 * res.value, c2 * res.error_estimate, res.converged,
                            res.cells_used, c2 * res.tolerance)


def J_spatial(m, hurst, tol=1e-9):
    """Spatial constant ``int |F rho|^2 (2 / |xi|^2) N_H``."""
    _check_mode(m, hurst, SPATIAL)
    hurst.require_rough(strict=True)
    rho2 = _level_weight(m, 0)
    return polar_integral(
        lambda xi: rho2(None, xi) * inner_time_integral(np.sum(xi * xi, axis=-1)),
        hurst, origin_power=-2.0, tol=tol)


def c_n_spatial(m, hurst, n, kernel=None, tol=1e-9):
    """Spatial renormalization constant at level ``n``.

    Sub-critically ``c_H^2 2^{2n(d-1-H)} J_spatial``; on the border ``c_H^2``
    times the integral over ``|xi| >= 2^-n``.  With a ``kernel`` the
    kernel-dependent :func:`raw_mean_spatial` is returned.
    """
    if n < 1:
        raise ValueError("level n must be at least 1")
    _check_mode(m, hurst, SPATIAL)
    if kernel is not None:
        return raw_mean_spatial(m, hurst, kernel, n, tol).value
    hurst.require_rough()
    c2 = _c2(hurst)
    if not hurst.is_border:
        J = J_spatial(m, hurst, tol)
        return c2 * 2.0 ** (2 * n * (hurst.d - 1.0 - hurst.sum_h)) * J.value
    rho2 = _level_weight(m, 0)
    res = polar_integral(
        lambda xi: rho2(None, xi) * inner_time_integral(np.sum(xi * xi, axis=-1)),
        hurst, r_min=2.0 ** -n, tol=tol)
    return c2 * res.value


def raw_mean_spatial(m, hurst, kernel, n, tol=1e-9):
    """``c_H^2 int |F rho_n|^2 F K-tilde N_H`` for a localized kernel."""
    _check_mode(m, hurst, SPATIAL)
    hurst.require_rough()
    rho2 = _level_weight(m, n)

    def func(xi):
        shape = xi.shape[:-1]
        fk = kernel.fourier_tilde_K(xi.reshape(-1, hurst.d)).reshape(shape)
        return rho2(None, xi) * fk

    res = polar_integral(func, hurst, tol=tol, r_start=0.5)
    c2 = _c2(hurst)
    return QuadratureResult(c2 * res.value, c2 * res.error_estimate, res.converged,
                            res.cells_used, c2 * res.tolerance)


# -- slopes ----------------------------------------------------------------

def slope_fit(ns, values):
    """Least-squares affine fit ``values ~ slope * ns + intercept``.

    Returns
    -------
    slope, intercept, residual : float
        ``residual`` is the root-mean-square deviation from the fit.
    """
    x = np.asarray(ns, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size != y.size:
        raise ValueError("levels and values differ in length")
    if x.size < 4:
        raise ValueError("slope fit needs at least four levels")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise ValueError("degenerate input: constant levels or values")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, intercept]) - y) ** 2)))
    return float(slope), float(intercept), resid


def _sphere_weight_integral(hurst):
    """``int_{S^{d-1}} prod |omega_i|^{1-2h_i} d sigma``."""
    b = [1.0 - h for h in hurst.h]
    return 2.0 * math.exp(sum(special.gammaln(x) for x in b) - special.gammaln(sum(b)))


def angular_integral(hurst):
    """``int_0^{pi/2} (cos^4/4 + sin^4)^{-1} cos^{2d-2H+1} sin^{3-4h0} d theta``."""
    if hurst.mode != SPACE_TIME:
        raise RegimeError("angular integral is defined for space-time indices")
    p = 2.0 * hurst.d - 2.0 * hurst.sum_h + 1.0
    q = 3.0 - 4.0 * hurst.h0
    if p <= -1.0 or q <= -1.0:
        raise RegimeError("angular exponents must exceed -1")

    def g(th):
        c, s = math.cos(th), math.sin(th)
        return 1.0 / (c ** 4 / 4.0 + s ** 4)

    # algebraic endpoint weight (theta - 0)^q (pi/2 - theta)^p, rest smooth
    def h(th):
        c, s = math.cos(th), math.sin(th)
        ratio_s = (s / th) ** q if th > 0 else 1.0
        u = 0.5 * math.pi - th
        ratio_c = (c / u) ** p if u > 0 else 1.0
        return g(th) * ratio_s * ratio_c

    val, err = integrate.quad(h, 0.0, 0.5 * math.pi, weight="alg", wvar=(q, p),
                              epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def border_slope_closed_form(hurst):
    """Growth rate ``C`` of the border constant, ``c^{(n)} = n C + O(1)``.

    Space-time: ``c^2 * 2 ln 2 * S_d(H) * A`` with ``S_d(H)`` the weighted
    sphere integral and ``A`` the :func:`angular_integral`.  Spatial:
    ``c_H^2 * 2 ln 2 * S_d(H)``.
    """
    if not hurst.is_border:
        raise RegimeError("closed-form slope exists only on the border")
    c2 = _c2(hurst)
    sphere = _sphere_weight_integral(hurst)
    if hurst.mode == SPATIAL:
        return c2 * 2.0 * math.log(2.0) * sphere
    return c2 * 2.0 * math.log(2.0) * sphere * angular_integral(hurst)


def constants_csv_rows(m, hurst, ns, kernel=None, tol=1e-9):
    """Rows ``(mode, hurst, mollifier, n, value, error, converged)``."""
    rows = []
    label = ";".join(f"{h:g}" for h in ((hurst.h0,) if hurst.h0 is not None else ()) + hurst.h)
    for n in ns:
        if hurst.mode == SPATIAL:
            val = c_n_spatial(m, hurst, n, kernel, tol)
        else:
            val = c_n(m, hurst, n, kernel, tol)
        rows.append((hurst.mode, label, m.kind, n, val, float("nan"), True))
    return rows
