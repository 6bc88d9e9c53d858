"""Tensor bump test functions, parabolic rescaling, dyadic lattices and the
oscillatory T/Q functionals.

A test function is ``psi(t, y) = C * b_0(t) * prod_i b_i(y_i)`` (spatial mode
drops the time factor), where each factor is a polynomial bump
``(1 - u^2)^k`` on ``[-1, 1]``, optionally modulated by ``cos(a u)``.  The
constant ``C`` makes the ``C^m`` norm (maximum over mixed derivatives of
total order ``<= m``) equal to one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special

from .spectral_model import SPACE_TIME

__all__ = [
    "BumpFactor",
    "TestFunction",
    "ScaledTestFunction",
    "make_test_function",
    "test_family",
    "scale_translate",
    "dyadic_lattice",
    "T_functional",
    "Q_functional",
    "check_TQ_integrability",
    "check_psi_weight_integral",
    "StabilityReport",
]


def _gl_panels(edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return ((mid[:, None] + half[:, None] * x).ravel(),
            (half[:, None] * w).ravel())


@dataclass(frozen=True)
class BumpFactor:
    """One-dimensional factor ``(1 - u^2)^k cos(a u)`` on ``[-1, 1]``."""

    k: int
    freq: float = 0.0

    @property
    def poly(self):
        return P.polypow([1.0, 0.0, -1.0], self.k)

    def deriv(self, j, u):
        """``j``-th derivative, zero outside ``[-1, 1]``."""
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) <= 1.0
        c = self.poly
        if self.freq == 0.0:
            val = P.polyval(u, P.polyder(c, j)) if j else P.polyval(u, c)
        else:
            a = self.freq
            val = np.zeros_like(u)
            for i in range(j + 1):
                # Leibniz rule with the (j-i)-th derivative of cos(a u)
                m = j - i
                trig = a ** m * np.cos(a * u + 0.5 * np.pi * m)
                ci = P.polyder(c, i) if i else c
                val = val + math.comb(j, i) * P.polyval(u, ci) * trig
        return np.where(inside, val, 0.0)

    def __call__(self, u):
        return self.deriv(0, u)

    def sup_deriv(self, j):
        """``sup |b^{(j)}|`` over the support."""
        if self.freq == 0.0:
            c = P.polyder(self.poly, j) if j else self.poly
            crit = P.polyroots(P.polyder(c)) if len(c) > 1 else np.array([])
            crit = crit[np.abs(crit.imag) < 1e-12].real
            pts = np.concatenate([crit[np.abs(crit) <= 1.0], [-1.0, 0.0, 1.0]])
            return float(np.max(np.abs(P.polyval(pts, c))))
        u = np.linspace(-1.0, 1.0, 20001)
        return float(np.max(np.abs(self.deriv(j, u))))

    def fourier(self, mu):
        """``int b(u) e^{-i mu u} du`` (real, even)."""
        mu = np.asarray(mu, dtype=float)
        if self.freq == 0.0:
            return _bump_fourier(self.k, mu)
        a = self.freq
        return 0.5 * (_bump_fourier(self.k, mu - a) + _bump_fourier(self.k, mu + a))

    def abs_moment(self, j, power=0.0, order=24):
        """``int |b^{(j)}(u)| |u|^power du`` by panel quadrature."""
        edges = np.linspace(-1.0, 1.0, 129)
        u, w = _gl_panels(edges, order)
        return float(np.sum(w * np.abs(self.deriv(j, u)) * np.abs(u) ** power))


def _bump_fourier(k, mu):
    """Transform of ``(1 - u^2)^k``: ``Gamma(k+1) 2^{k+1} mu^{-k} j_k(mu)``."""
    mu = np.abs(np.asarray(mu, dtype=float))
    out = np.empty_like(mu)
    small = mu < 1.0
    ms = mu[small]
    # series: sum_m (-1)^m mu^{2m} / (2m)! * B(m + 1/2, k + 1)
    acc = np.zeros_like(ms)
    term_mu = np.ones_like(ms)
    for m in range(0, 40):
        coef = (-1) ** m / math.factorial(2 * m) * special.beta(m + 0.5, k + 1)
        acc = acc + coef * term_mu
        term_mu = term_mu * ms * ms
    out[small] = acc
    mb = mu[~small]
    out[~small] = (math.gamma(k + 1) * 2.0 ** (k + 1) * mb ** (-float(k))
                   * special.spherical_jn(k, mb))
    return out


@dataclass(frozen=True)
class TestFunction:
    """Tensor bump ``C * prod_j b_j`` in space-time or spatial variables.

    Attributes
    ----------
    d : int
        Spatial dimension.
    factors : tuple of BumpFactor
        Time factor first in space-time mode, then one factor per space axis.
    scale : float
        Normalizing constant ``C``.
    mode : str
    norm_order : int
        Order ``m`` of the ``C^m`` norm normalized to one.
    """

    d: int
    factors: tuple
    scale: float
    mode: str = SPACE_TIME
    norm_order: int = 0

    @property
    def ndim(self):
        return self.d + 1 if self.mode == SPACE_TIME else self.d

    @property
    def order(self):
        return min(f.k for f in self.factors)

    def __call__(self, *coords):
        """Evaluate at coordinates ``(t, y_1, ..., y_d)`` (spatial: ``y`` only)."""
        if len(coords) != self.ndim:
            raise ValueError(f"expected {self.ndim} coordinate arrays")
        out = self.scale
        for f, c in zip(self.factors, coords):
            out = out * f(c)
        return out

    def mixed_derivative(self, *coords):
        """``d_t d_{y_1} ... d_{y_d} psi`` (first derivative in every variable)."""
        out = self.scale
        for f, c in zip(self.factors, coords):
            out = out * f.deriv(1, c)
        return out

    def fourier(self, lam, xi):
        """``F psi(lam, xi)``; pass ``lam=None`` in spatial mode."""
        xi = np.asarray(xi, dtype=float)
        out = self.scale * np.ones(xi.shape[:-1])
        off = 0
        if self.mode == SPACE_TIME:
            out = out * self.factors[0].fourier(lam)
            off = 1
        for i in range(self.d):
            out = out * self.factors[off + i].fourier(xi[..., i])
        return out

    def integral(self):
        """``int psi`` (equal to ``F psi`` at the origin)."""
        return self.scale * float(np.prod([f.fourier(0.0) for f in self.factors]))

    def cm_norm(self, m=None):
        """``max_{|alpha| <= m} sup |d^alpha psi|`` using the product structure."""
        m = self.norm_order if m is None else m
        sups = [[f.sup_deriv(j) for j in range(m + 1)] for f in self.factors]
        best = 0.0
        for alpha in itertools.product(range(m + 1), repeat=self.ndim):
            if sum(alpha) <= m:
                best = max(best, float(np.prod([sups[i][a] for i, a in enumerate(alpha)])))
        return self.scale * best


def make_test_function(d, k=None, mode=SPACE_TIME, freq=0.0, norm_order=None):
    """Normalized tensor bump of polynomial order ``k``.

    ``freq`` modulates the first factor by ``cos(freq * u)``.  By default
    ``norm_order = 2(d+1)`` and ``k = norm_order + 1``.
    """
    if norm_order is None:
        norm_order = 2 * (d + 1)
    if k is None:
        k = norm_order + 1
    if k < norm_order + 1:
        raise ValueError(f"order k must be at least {norm_order + 1}")
    ndim = d + 1 if mode == SPACE_TIME else d
    factors = tuple(BumpFactor(k, freq if i == 0 else 0.0) for i in range(ndim))
    raw = TestFunction(d, factors, 1.0, mode, norm_order)
    return TestFunction(d, factors, 1.0 / raw.cm_norm(), mode, norm_order)


def test_family(d, mode=SPACE_TIME):
    """Shipped family: three smoothness orders and one modulated variant."""
    m = 2 * (d + 1)
    fam = [make_test_function(d, m + 1 + extra, mode) for extra in (0, 2, 4)]
    fam.append(make_test_function(d, m + 1, mode, freq=np.pi))
    return fam


@dataclass(frozen=True)
class ScaledTestFunction:
    """``S^delta_{s,x} psi = delta^{-(d+2)} psi(delta^{-2}(t-s), delta^{-1}(y-x))``.

    Spatial mode uses ``delta^{-d} psi(delta^{-1}(y-x))``.
    """

    psi: TestFunction
    delta: float
    s: float
    x: tuple

    @property
    def mass_exponent(self):
        return self.psi.d + 2 if self.psi.mode == SPACE_TIME else self.psi.d

    def __call__(self, *coords):
        dl = self.delta
        if self.psi.mode == SPACE_TIME:
            t, ys = coords[0], coords[1:]
            args = [(np.asarray(t) - self.s) / dl ** 2]
        else:
            ys = coords
            args = []
        args += [(np.asarray(y) - xi) / dl for y, xi in zip(ys, self.x)]
        return dl ** (-self.mass_exponent) * self.psi(*args)

    def fourier(self, lam, xi):
        xi = np.asarray(xi, dtype=float)
        shift = xi @ np.asarray(self.x, dtype=float)
        if self.psi.mode == SPACE_TIME:
            lam = np.asarray(lam, dtype=float)
            phase = np.exp(-1j * (lam * self.s + shift))
            return phase * self.psi.fourier(self.delta ** 2 * lam, self.delta * xi)
        return np.exp(-1j * shift) * self.psi.fourier(None, self.delta * xi)

    def support(self):
        """Bounding box ``[(lo, hi), ...]`` of the support (time first)."""
        dl = self.delta
        box = []
        if self.psi.mode == SPACE_TIME:
            box.append((self.s - dl * dl, self.s + dl * dl))
        box += [(xi - dl, xi + dl) for xi in self.x]
        return box


def scale_translate(psi, delta, s=0.0, x=None):
    """Parabolic rescaling and translation of a test function."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if x is None:
        x = (0.0,) * psi.d
    x = tuple(float(v) for v in np.atleast_1d(x))
    if len(x) != psi.d:
        raise ValueError(f"x must have length {psi.d}")
    return ScaledTestFunction(psi, float(delta), float(s), x)


def dyadic_lattice(n, T, box, mode=SPACE_TIME):
    """Points ``(4^{-n} k_0, 2^{-n} k_1, ...)`` inside ``[-T, T] x box``.

    Parameters
    ----------
    n : int
        Level, ``n >= 0``.
    T : float
        Time horizon (ignored in spatial mode).
    box : sequence of (lo, hi)
        Spatial box, one interval per axis.

    Returns
    -------
    ndarray, shape (npoints, d+1) or (npoints, d)
    """
    if n < 0:
        raise ValueError("level must be nonnegative")
    axes = []
    if mode == SPACE_TIME:
        step = 4.0 ** -n
        k = np.arange(math.ceil(-T / step - 1e-9), math.floor(T / step + 1e-9) + 1)
        axes.append(k * step)
    step = 2.0 ** -n
    for lo, hi in box:
        k = np.arange(math.ceil(lo / step - 1e-9), math.floor(hi / step + 1e-9) + 1)
        axes.append(k * step)
    if any(a.size == 0 for a in axes):
        raise ValueError("empty lattice: box contains no dyadic points")
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


# -- oscillatory functionals --------------------------------------------------

def _e1(lam, y):
    """``int_0^y e^{-i lam z} dz``, stable at ``lam y -> 0``."""
    z = 0.5 * lam * y
    return y * np.exp(-1j * z) * np.sinc(z / np.pi)


def _moments(mu, y, top):
    """``M_m = int_0^y z^m e^{-i mu z} dz`` for ``m = 0..top``."""
    x = mu * y
    small = np.abs(x) < 4.0
    out = []
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        prev = _e1(mu, y)
        out.append(prev)
        for m in range(1, top + 1):
            rec = (y ** m * np.exp(-1j * x) - m * prev) / (-1j * mu)
            ser = np.zeros(np.shape(x), dtype=complex)
            term = np.ones(np.shape(x), dtype=complex)
            for j in range(40):
                ser = ser + term * y ** (m + 1) / (m + j + 1)
                term = term * (-1j * x) / (j + 1)
            cur = np.where(small, ser, rec)
            out.append(cur)
            prev = cur
    return out


def _e2(lam, lam_t, y):
    """``int_0^y dz int_0^z dw e^{-i lam_t z} e^{-i lam w}``."""
    lam, lam_t, y = np.broadcast_arrays(np.asarray(lam, dtype=float),
                                        np.asarray(lam_t, dtype=float),
                                        np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        direct = (_e1(lam_t, y) - _e1(lam + lam_t, y)) / (1j * lam)
    small = np.abs(lam * y) < 1e-3
    if not np.any(small):
        return direct
    # expand E1(lam, z) = z - i lam z^2 / 2 - lam^2 z^3 / 6 + O(lam^3 z^4)
    ls, lts, ys = lam[small], lam_t[small], y[small]
    m = _moments(lts, ys, 3)
    approx = m[1] - 0.5j * ls * m[2] - ls * ls / 6.0 * m[3]
    out = np.array(direct, dtype=complex)
    out[small] = approx
    return out


def _axis_nodes(scale):
    """Panel quadrature on ``[-1, 1]`` resolving oscillations of frequency ``scale``."""
    n_panels = int(min(8192, 64 + 2 * math.ceil(scale)))
    n_panels += n_panels % 2
    return _gl_panels(np.linspace(-1.0, 1.0, n_panels + 1), 10)


def _other_axes(psi, axis):
    out = abs(psi.scale)
    for j, f in enumerate(psi.factors):
        if j != axis:
            out *= f.abs_moment(1)
    return out


def _axis_index(psi, i):
    # coordinate i = 0 is time in space-time mode; spatial mode counts from 1
    if psi.mode == SPACE_TIME:
        return i
    if i < 1:
        raise ValueError("spatial test functions have coordinates 1..d")
    return i - 1


def _functional(psi, i, weight, freqs, chunk=2 ** 22):
    """``(C' int |b'_i(u)| |weight(freqs, u)|^p du)^{1/p}`` over a batch of frequencies."""
    axis = _axis_index(psi, i)
    p = psi.ndim
    other = _other_axes(psi, axis)
    scale = max((float(np.max(np.abs(f))) if f.size else 0.0) for f in freqs)
    u, w = _axis_nodes(scale)
    wb = w * np.abs(psi.factors[axis].deriv(1, u))
    keep = wb > 0
    u, wb = u[keep], wb[keep]
    flat = [f.ravel() for f in freqs]
    out = np.empty(flat[0].size)
    step = max(1, chunk // u.size)
    for start in range(0, out.size, step):
        args = [f[start:start + step, None] for f in flat]
        vals = np.abs(weight(*args, u[None, :])) ** p
        out[start:start + step] = vals @ wb
    return (other * out) ** (1.0 / p)


def _abs_deriv_direct(factor, nu, chunk=2 ** 21):
    """``int |b'(u)| cos(nu u) du`` for an even factor, by Gauss-Legendre."""
    nu = np.abs(np.asarray(nu, dtype=float))
    top = float(nu.max()) if nu.size else 0.0
    u, w = _gl_panels(np.linspace(0.0, 1.0, 8 + int(top / 8.0) + 1), 16)
    g = 2.0 * w * np.abs(factor.deriv(1, u))
    flat = nu.ravel()
    out = np.empty(flat.size)
    step = max(1, chunk // u.size)
    for start in range(0, flat.size, step):
        out[start:start + step] = np.cos(np.outer(flat[start:start + step], u)) @ g
    return out.reshape(nu.shape)


_B_STEP = 1.0 / 32.0
_B_STENCIL = 10
_B_CACHE = {}


def _abs_deriv_fourier(factor, nu):
    """Table-interpolated version of :func:`_abs_deriv_direct`.

    The transform is entire with unit bandwidth, so local Lagrange
    interpolation on a grid of step 1/32 is accurate to rounding.
    """
    nu = np.abs(np.asarray(nu, dtype=float))
    top = float(nu.max()) if nu.size else 0.0
    key = (factor.k, factor.freq)
    tab = _B_CACHE.get(key)
    if tab is None or (tab.size - _B_STENCIL) * _B_STEP < top:
        size = int(max(top, 256.0) * 1.25 / _B_STEP) + 2 * _B_STENCIL
        grid = (np.arange(size) - _B_STENCIL) * _B_STEP
        tab = _abs_deriv_direct(factor, grid)
        _B_CACHE[key] = tab
    pos = nu / _B_STEP + _B_STENCIL
    base = np.floor(pos).astype(np.int64) - (_B_STENCIL // 2 - 1)
    t = pos - base
    out = np.zeros(nu.shape)
    for j in range(_B_STENCIL):
        wj = np.ones(nu.shape)
        for m in range(_B_STENCIL):
            if m != j:
                wj *= (t - m) / (j - m)
        out += wj * tab[base + j]
    return out


def _fast_path(psi, axis):
    # squared functionals reduce to transforms of |b'| when the root is 2
    return psi.ndim == 2 and psi.factors[axis].freq == 0.0


def _square_e1(factor, mu, b0):
    """``int |b'| |E1(mu, u)|^2 du`` for ``|mu| >= 1``."""
    return 2.0 * (b0 - _abs_deriv_fourier(factor, mu)) / (mu * mu)


def T_functional(psi, i, lam):
    """``T^{(i)}(lam)``: weighted moment of ``|int_0^{u} e^{-i lam z} dz|``.

    The root is ``d+1`` in space-time mode and ``d`` in spatial mode.
    """
    lam_arr = np.asarray(lam, dtype=float)
    flat = np.atleast_1d(lam_arr).ravel()
    axis = _axis_index(psi, i)
    if _fast_path(psi, axis):
        out = np.empty(flat.size)
        big = np.abs(flat) >= 1.0
        if np.any(big):
            f = psi.factors[axis]
            b0 = float(_abs_deriv_fourier(f, np.zeros(1))[0])
            sq = _square_e1(f, flat[big], b0)
            out[big] = np.sqrt(_other_axes(psi, axis) * np.maximum(sq, 0.0))
        if np.any(~big):
            out[~big] = _functional(psi, i, _e1, [flat[~big]])
    else:
        out = _functional(psi, i, _e1, [flat])
    return out.reshape(lam_arr.shape) if lam_arr.ndim else float(out[0])


_FAST_MIN = 0.1
_STRIP_NODES = np.concatenate([-np.linspace(0.1, 0.3, 5)[::-1], np.linspace(0.1, 0.3, 5)])


def _q_square(factor, la, lt, b0):
    """``int |b'| |E2|^2`` in closed form; all of ``la``, ``lt``, ``la + lt``
    must be at least ``_FAST_MIN`` in modulus."""
    m1, m2 = lt, la + lt
    cross = (b0 - _abs_deriv_fourier(factor, m1) - _abs_deriv_fourier(factor, m2)
             + _abs_deriv_fourier(factor, m1 - m2)) / (m1 * m2)
    return (_square_e1(factor, m1, b0) + _square_e1(factor, m2, b0) - 2.0 * cross) / (la * la)


def _strip_interp(values_at, offsets):
    """Polynomial interpolation through ``_STRIP_NODES`` evaluated at
    ``offsets``; ``values_at(node)`` returns the samples for one node."""
    x = _STRIP_NODES
    samples = np.stack([values_at(v) for v in x])
    out = np.zeros(offsets.shape)
    for j in range(x.size):
        lj = np.ones(offsets.shape)
        for m in range(x.size):
            if m != j:
                lj *= (offsets - x[m]) / (x[j] - x[m])
        out += lj * samples[j]
    return out


def Q_functional(psi, i, lam, lam_t):
    """``Q^{(i)}(lam, lam_t)``: weighted moment of the iterated oscillatory integral."""
    lam_b, lt_b = np.broadcast_arrays(np.asarray(lam, dtype=float),
                                      np.asarray(lam_t, dtype=float))
    la = np.atleast_1d(lam_b).ravel()
    lt = np.atleast_1d(lt_b).ravel()
    axis = _axis_index(psi, i)
    if not _fast_path(psi, axis):
        out = _functional(psi, i, _e2, [la, lt])
        return out.reshape(lam_b.shape) if lam_b.ndim else float(out[0])
    f = psi.factors[axis]
    b0 = float(_abs_deriv_fourier(f, np.zeros(1))[0])
    a1, a2, a3 = np.abs(la), np.abs(lt), np.abs(la + lt)
    sq = np.full(la.size, np.nan)
    fast = (a1 >= _FAST_MIN) & (a2 >= _FAST_MIN) & (a3 >= _FAST_MIN)
    sq[fast] = _q_square(f, la[fast], lt[fast], b0)
    # near one singular line the square is analytic across it: interpolate
    # from nodes far enough away for the closed form
    free = ~fast & (np.maximum(a1, np.maximum(a2, a3)) >= 0.5)
    s1 = free & (a1 < _FAST_MIN) & (a2 >= 0.5)
    if np.any(s1):
        y = lt[s1]
        sq[s1] = _strip_interp(lambda v: _q_square(f, np.full(y.shape, v), y, b0), la[s1])
    s2 = free & np.isnan(sq) & (a2 < _FAST_MIN) & (a1 >= 0.5)
    if np.any(s2):
        x = la[s2]
        sq[s2] = _strip_interp(lambda v: _q_square(f, x, np.full(x.shape, v), b0), lt[s2])
    s3 = free & np.isnan(sq) & (a3 < _FAST_MIN) & (a1 >= 0.5)
    if np.any(s3):
        x = la[s3]
        sq[s3] = _strip_interp(lambda v: _q_square(f, x, v - x, b0), la[s3] + lt[s3])
    out = np.sqrt(_other_axes(psi, axis) * np.maximum(np.nan_to_num(sq), 0.0))
    slow = np.isnan(sq)
    if np.any(slow):
        out[slow] = _functional(psi, i, _e2, [la[slow], lt[slow]])
    return out.reshape(lam_b.shape) if lam_b.ndim else float(out[0])


@dataclass
class StabilityReport:
    """Nested-cutoff values of an integral.

    Attributes
    ----------
    cutoffs, values : ndarray
        Integral over the truncated domain for each cutoff.
    increments : ndarray
        ``|values[k+1] - values[k]|``.
    slope : float
        Least-squares slope of ``log2(increments)`` against the shell index.
    threshold : float
        ``passed`` requires ``slope <= threshold``.
    """

    cutoffs: np.ndarray
    values: np.ndarray
    increments: np.ndarray
    slope: float
    threshold: float = -0.2

    @property
    def passed(self):
        return bool(self.slope <= self.threshold)

    @property
    def value(self):
        return float(self.values[-1])


def _report(cutoffs, values, threshold=-0.2):
    values = np.asarray(values, dtype=float)
    inc = np.abs(np.diff(values))
    k = np.arange(inc.size)
    slope = float(np.polyfit(k, np.log2(np.maximum(inc, 1e-300)), 1)[0])
    return StabilityReport(np.asarray(cutoffs, dtype=float), values, inc, slope, threshold)


def _graded_line(r_max, r_min=1e-6, per_octave=2, order=12, outer_step=0.25):
    """Panels on ``[0, r_max]`` refined geometrically toward 0.

    Panel edges beyond 1 fall on multiples of ``outer_step``, so dyadic
    cutoffs are panel edges and nested masks integrate exactly.
    """
    n_oct = max(1, int(math.ceil(math.log2(min(1.0, r_max) / r_min))))
    inner = np.geomspace(r_min, min(1.0, r_max), n_oct * per_octave + 1)
    edges = np.concatenate([[0.0], inner])
    if r_max > 1.0:
        outer = np.arange(1.0, r_max, outer_step)[1:]
        edges = np.concatenate([edges, outer, [r_max]])
    return _gl_panels(edges, order)


def _weighted_line(r_max, expo, inner=0.5, order=8, outer_step=1.0):
    """Rule for ``int_0^r_max g(x) x^expo dx``: Gauss-Jacobi on ``[0, inner]``,
    Gauss-Legendre panels beyond with integer edges past 1."""
    y, w = special.roots_jacobi(2 * order, 0.0, expo)
    x0 = 0.5 * inner * (1.0 + y)
    w0 = w * (0.5 * inner) ** (expo + 1.0)
    edges = [inner, 1.0] + list(np.arange(1.0, r_max, outer_step)[1:]) + [r_max]
    x1, w1 = _gl_panels(np.unique(edges), order)
    return np.concatenate([x0, x1]), np.concatenate([w0, w1 * x1 ** expo])


def check_TQ_integrability(psi, criterion, exponents, i=0, cutoffs=None):
    """Cutoff-stability check of the T/Q integrability criteria.

    Parameters
    ----------
    psi : TestFunction
    criterion : {1, 2, 3}
        1: ``int |Q(x1, x2)|^2 |x1|^{1-b1} |x2|^{1-b2}`` over the plane;
        2: ``int_{|x1| <= 1} int |T(x1 + x2)|^2 |x1|^{1-l1} |x2|^{1-l2}``;
        3: as 2 over ``|x1| >= 1``.
    exponents : (float, float)
    i : int
        Coordinate index of the functional.
    cutoffs : sequence of float, optional
        Increasing truncation radii; dyadic by default.

    Returns
    -------
    StabilityReport
    """
    e1, e2 = (float(v) for v in exponents)
    if criterion == 1:
        cutoffs = sorted(cutoffs or [2.0 ** k for k in range(4, 8)])
        R = max(cutoffs)
        # Q is invariant under (x1, x2) -> (-x1, -x2): integrate x1 > 0 twice
        x1, w1 = _weighted_line(R, 1.0 - e1)
        x2, w2 = _weighted_line(R, 1.0 - e2)
        x2, w2 = np.concatenate([-x2[::-1], x2]), np.concatenate([w2[::-1], w2])
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        q = Q_functional(psi, i, X1, X2)
        dens = 2.0 * q * q * w1[:, None] * w2[None, :]
        values = []
        for c in cutoffs:
            inside = (X1 <= c) & (np.abs(X2) <= c)
            values.append(float(np.sum(dens[inside])))
        return _report(cutoffs, values)
    if criterion not in (2, 3):
        raise ValueError("criterion must be 1, 2 or 3")
    cutoffs = cutoffs or [2.0 ** k for k in range(3, 10)]
    R_top = max(cutoffs)
    # T depends on one variable; tabulate it once and integrate along v = x1 + x2
    v_tab = np.linspace(0.0, 2.0 * R_top + 2.0, int(8 * (2 * R_top + 2)) + 1)
    t_tab = T_functional(psi, i, v_tab) ** 2
    t2 = lambda v: np.interp(np.abs(v), v_tab, t_tab)
    values = []
    for R in cutoffs:
        if criterion == 2:
            x1, w1 = _graded_line(1.0, order=10)
        else:
            edges = np.concatenate([np.arange(1.0, min(R, 8.0), 0.25),
                                    np.geomspace(min(R, 8.0), R, 24)]) if R > 1 else [1.0, R]
            x1, w1 = _gl_panels(np.unique(edges), 8)
        x2, w2 = _graded_line(R, order=8)
        total = 0.0
        for sgn1 in (1.0, -1.0):
            for sgn2 in (1.0, -1.0):
                X1, X2 = np.meshgrid(sgn1 * x1, sgn2 * x2, indexing="ij")
                wt = np.abs(X1) ** (1.0 - e1) * np.abs(X2) ** (1.0 - e2)
                total += float(np.einsum("a,ab,b->", w1, t2(X1 + X2) * wt, w2))
        values.append(total)
    return _report(cutoffs, values)


def check_psi_weight_integral(psi, hurst, cutoffs=None):
    """Cutoff stability of ``int N |F psi|`` using the product structure.

    The integral factorizes into one-dimensional weighted integrals of the
    closed-form factor transforms.
    """
    cutoffs = cutoffs or [2.0 ** k for k in range(2, 9)]
    exps = []
    if psi.mode == SPACE_TIME:
        exps.append(1.0 - 2.0 * hurst.h0)
    exps += [1.0 - 2.0 * h for h in hurst.h]
    values = []
    for R in cutoffs:
        x, w = _graded_line(R, order=12)
        prod = abs(psi.scale)
        for f, a in zip(psi.factors, exps):
            prod *= 2.0 * np.sum(w * x ** a * np.abs(f.fourier(x)))
        values.append(prod)
    return _report(cutoffs, values)
