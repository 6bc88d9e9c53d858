"""Heat kernel, its localized singular part K, the remainder R and K-tilde.

The localized kernel is built from a smooth cutoff ``chi`` of the parabolic
quasi-norm ``N(s, x) = (s^2 + |x|^4)^{1/4}``, which satisfies
``N(4^l s, 2^l x) = 2^l N(s, x)``.  With ``phi = chi(N) - chi(2N)`` the base
function is ``K0 = phi * p`` and the dyadic terms are

    term_l(s, x) = 2^{l d} K0(4^l s, 2^l x) = phi(4^l s, 2^l x) p_s(x),

so ``K = sum_{l >= 0} term_l = chi(N) p`` and ``R = sum_{l < 0} term_l =
(1 - chi(N)) p``.  ``K0`` is supported in ``{N <= 1}``, inside ``[-1, 1]^{d+1}``.

Fourier transforms of K and R are assembled from a tabulated transform of K0
through ``FK(w) = sum_l 4^{-l} FK0(4^{-l} lam, 2^{-l} xi)`` and
``FR(w) = sum_{j >= 1} 4^j FK0(4^j lam, 2^j xi)``.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError, SingularArgumentError, TailBoundError

__all__ = [
    "heat_kernel",
    "heat_fourier",
    "smooth_step",
    "FK0Table",
    "LocalizedHeatKernel",
    "build_localized_kernel",
    "fourier_K",
    "fourier_R",
    "tilde_K",
    "fourier_R_direct",
    "fourier_K_direct",
    "ray_decay_slopes",
    "check_decay_exponents",
]

_TABLE_VERSION = 2


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != d:
        if d == 1:
            x = x[..., None]
        else:
            raise ValueError(f"spatial argument needs trailing axis of length {d}")
    return x


def heat_kernel(s, x):
    """Gaussian density ``p_s(x) = (2 pi s)^{-d/2} exp(-|x|^2 / 2s)``.

    Parameters
    ----------
    s : float or ndarray
        Positive times.
    x : ndarray
        Points with trailing axis of length ``d``; a scalar means ``d = 1``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("heat kernel needs s > 0")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    return (2.0 * np.pi * s) ** (-0.5 * d) * np.exp(-0.5 * r2 / s)


def heat_fourier(lam, xi):
    """Space-time transform of the heat kernel, ``1 / (|xi|^2/2 + i lam)``.

    ``xi`` has a trailing axis of length d.

    Raises
    ------
    SingularArgumentError
        At the origin ``(0, 0)``.
    """
    lam = np.asarray(lam, dtype=float)
    xi = np.asarray(xi, dtype=float)
    a = 0.5 * np.sum(xi * xi, axis=-1) + 1j * lam
    if np.any(a == 0):
        raise SingularArgumentError("heat transform is singular at the origin")
    return 1.0 / a


def smooth_step(t, order=None):
    """Monotone step rising from 0 at ``t <= 0`` to 1 at ``t >= 1``.

    ``order=None`` gives the C-infinity step ``e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})``;
    an integer ``k`` gives the C^k polynomial step (regularized incomplete
    beta function with parameters ``k+1, k+1``).  Both satisfy
    ``step(t) + step(1 - t) = 1``.
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    if order is not None:
        k = int(order)
        return special.betainc(k + 1, k + 1, t)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def _gauss_legendre_panels(a, b, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _radial_fourier_matrix(d, r, k):
    """Matrix ``B[r, k]`` with ``int f(|x|) e^{-i k.x} dx = sum_r f(r) B[r, k] dr``."""
    kr = np.outer(r, k)
    if d == 1:
        return 2.0 * np.cos(kr)
    if d == 2:
        return 2.0 * np.pi * r[:, None] * special.j0(kr)
    if d == 3:
        return 4.0 * np.pi * r[:, None] ** 2 * np.sinc(kr / np.pi)
    nu = 0.5 * d - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (2.0 * np.pi) ** (0.5 * d) * r[:, None] ** (d - 1) * special.jv(nu, kr) / kr ** nu
    limit = (2.0 * np.pi) ** (0.5 * d) / (2.0 ** nu * special.gamma(nu + 1.0))
    return np.where(kr == 0, limit * r[:, None] ** (d - 1), out)


def _sphere_area(d):
    return 2.0 * np.pi ** (0.5 * d) / special.gamma(0.5 * d)


def _default_cache_dir():
    env = os.environ.get("KROUGHPAM_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "kroughpam"


@dataclass(frozen=True)
class FK0Grid:
    """Resolution parameters of the tabulated base transform."""

    time_samples: int = 4096
    pad_factor: int = 16
    lam_max: float = 2048.0
    k_step: float = 0.25
    k_max: float = 512.0
    r_panels: int = 64
    r_order: int = 12

    @property
    def lam_step(self):
        return 2.0 * np.pi / self.pad_factor


class FK0Table:
    """Tabulated ``F K0(lam, |xi|)`` with local Lagrange interpolation.

    The stored array is ``FK0(lam, k) * exp(i lam / 2)``; removing the phase
    of the support centre makes the table slowly varying in ``lam``.  Rows
    cover ``lam >= 0`` (the transform at ``-lam`` is the conjugate) and
    columns ``k = |xi| >= 0`` (the base function is radial).  Outside the
    table the transform is taken to be zero; the build grid is chosen so
    that the discarded values are below ``1e-10`` relative.
    """

    stencil = 8

    def __init__(self, kernel, grid=None, cache_dir=None, rebuild=False):
        self.grid = grid or FK0Grid()
        self.d = kernel.d
        key = (f"v{_TABLE_VERSION}-d{kernel.d}-inner{kernel.inner!r}-smooth{kernel.smoothness!r}"
               f"-{self.grid!r}")
        self.key = hashlib.sha1(key.encode()).hexdigest()[:16]
        path = None
        if cache_dir is not False:
            path = Path(cache_dir or _default_cache_dir()) / f"fk0-{self.key}.npz"
        if path is not None and path.exists() and not rebuild:
            with np.load(path) as data:
                self.values = data["values"]
                self.moments = tuple(data["moments"])
        else:
            self.values, self.moments = self._build(kernel)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".tmp.npz")
                np.savez(tmp, values=self.values, moments=np.array(self.moments))
                os.replace(tmp, path)
        self.path = path
        self.origin = self.values[self.stencil // 2, self.stencil // 2].real

    def _build(self, kernel):
        g = self.grid
        d = kernel.d
        m = g.time_samples
        hs = 1.0 / m
        s = np.arange(m + 1) * hs
        r, wr = _gauss_legendre_panels(0.0, 1.0, g.r_panels, g.r_order)
        n_k = int(round(g.k_max / g.k_step)) + 1
        k = np.arange(n_k) * g.k_step
        a = kernel.k0_radial(s[:, None], r[None, :])
        spatial = a @ (_radial_fourier_matrix(d, r, k) * wr[:, None])

        # moments for the small-frequency expansion
        area = _sphere_area(d)
        mass_s = a @ (wr * r ** (d - 1)) * area * hs
        m2 = a @ (wr * r ** (d + 1)) * area * hs
        moments = (float(mass_s.sum()), float((s * mass_s).sum()), float(m2.sum()) / d)

        n_lam = int(math.ceil(g.lam_max / g.lam_step)) + 1
        lam = np.arange(n_lam) * g.lam_step
        p = g.pad_factor * m
        phase = np.exp(0.5j * lam)[:, None]
        table = np.empty((n_lam, n_k), dtype=complex)
        chunk = 32
        for j in range(0, n_k, chunk):
            block = np.fft.fft(spatial[:, j:j + chunk], n=p, axis=0)[:n_lam]
            table[:, j:j + chunk] = block * hs * phase
        del spatial

        h = self.stencil // 2
        # mirrored ghost rows/columns before zero, zero padding after the end
        full = np.zeros((n_lam + 2 * h, n_k + 2 * h), dtype=complex)
        full[h:h + n_lam, h:h + n_k] = table
        full[:h, h:h + n_k] = np.conj(table[h:0:-1])
        full[:, :h] = full[:, 2 * h:h:-1]
        return full, moments

    def _weights(self, pos):
        """Lagrange weights for fractional table positions."""
        p = self.stencil
        base = np.floor(pos).astype(np.int64) - (p // 2 - 1)
        u = pos - base
        w = np.ones(pos.shape + (p,))
        for j in range(p):
            for mm in range(p):
                if mm != j:
                    w[..., j] *= (u - mm) / (j - mm)
        return base, w

    def __call__(self, lam, k, chunk=65536):
        """Interpolate ``FK0`` at time frequencies ``lam`` and radii ``k >= 0``."""
        lam = np.asarray(lam, dtype=float)
        k = np.abs(np.asarray(k, dtype=float))
        lam, k = np.broadcast_arrays(lam, k)
        shape = lam.shape
        lam = lam.ravel()
        k = k.ravel()
        out = np.zeros(lam.size, dtype=complex)
        g = self.grid
        h = self.stencil // 2
        n_rows, n_cols = self.values.shape
        inside = (np.abs(lam) <= g.lam_max) & (k <= g.k_max)
        idx = np.nonzero(inside)[0]
        offs = np.arange(self.stencil)
        for start in range(0, idx.size, chunk):
            sel = idx[start:start + chunk]
            al = np.abs(lam[sel])
            bi, wi = self._weights(al / g.lam_step + h)
            bj, wj = self._weights(k[sel] / g.k_step + h)
            bi = np.clip(bi, 0, n_rows - self.stencil)
            bj = np.clip(bj, 0, n_cols - self.stencil)
            vals = self.values[bi[:, None, None] + offs[None, :, None],
                               bj[:, None, None] + offs[None, None, :]]
            res = np.einsum("na,nab,nb->n", wi, vals, wj)
            res = res * np.exp(-0.5j * al)
            neg = lam[sel] < 0
            res[neg] = np.conj(res[neg])
            out[sel] = res
        return out.reshape(shape)


class LocalizedHeatKernel:
    """Localized heat kernel with dyadic base function.

    Parameters
    ----------
    d : int
        Spatial dimension.
    L_max : int
        Series truncation depth; terms ``-L_max <= l <= L_max`` are summed in
        physical space.
    inner : float
        The cutoff ``chi`` equals 1 on ``N <= inner`` and 0 on ``N >= 1``.
        Different values give different admissible splittings.
    smoothness : int or None
        ``None`` for a C-infinity cutoff, an integer k for a C^k one.
    grid : FK0Grid, optional
        Resolution of the tabulated base transform.
    cache_dir : path, None or False
        Where to cache the table; ``False`` disables caching.
    rebuild : bool
        Ignore any cached table.
    """

    def __init__(self, d, L_max=24, inner=0.5, smoothness=None, grid=None,
                 cache_dir=None, rebuild=False):
        if L_max < 4:
            raise ValueError("L_max must be at least 4")
        if not 0.0 < inner < 1.0:
            raise ValueError("inner radius must lie in (0, 1)")
        self.d = int(d)
        self.L_max = int(L_max)
        self.inner = float(inner)
        self.smoothness = smoothness
        self._grid = grid
        self._cache_dir = cache_dir
        self._rebuild = rebuild
        self._table = None

    # -- physical space ---------------------------------------------------
    @staticmethod
    def quasi_norm(s, r):
        """Smooth parabolic quasi-norm ``(s^2 + r^4)^{1/4}``."""
        return (np.asarray(s, dtype=float) ** 2 + np.asarray(r, dtype=float) ** 4) ** 0.25

    def cutoff_radial(self, s, r):
        n = self.quasi_norm(s, r)
        return 1.0 - smooth_step((n - self.inner) / (1.0 - self.inner), self.smoothness)

    def partition_radial(self, s, r):
        """Annulus bump ``phi = chi(N) - chi(2N)``, supported in ``inner/2 <= N <= 1``."""
        n = self.quasi_norm(s, r)
        st = lambda v: smooth_step((v - self.inner) / (1.0 - self.inner), self.smoothness)
        return st(2.0 * n) - st(n)

    def partition(self, s, x):
        x = _as_points(x, self.d)
        return self.partition_radial(s, np.linalg.norm(x, axis=-1))

    @staticmethod
    def _heat_radial(s, r, d):
        s = np.asarray(s, dtype=float)
        pos = s > 0
        safe = np.where(pos, s, 1.0)
        val = (2.0 * np.pi * safe) ** (-0.5 * d) * np.exp(-0.5 * np.asarray(r) ** 2 / safe)
        return np.where(pos, val, 0.0)

    def k0_radial(self, s, r):
        return self.partition_radial(s, r) * self._heat_radial(s, r, self.d)

    def k0(self, s, x):
        """Base function ``K0(s, x)``."""
        x = _as_points(x, self.d)
        return self.k0_radial(s, np.linalg.norm(x, axis=-1))

    def term(self, ell, s, x):
        """Dyadic term ``2^{l d} K0(4^l s, 2^l x)``."""
        x = _as_points(x, self.d)
        return 2.0 ** (ell * self.d) * self.k0(4.0 ** ell * np.asarray(s, dtype=float),
                                               2.0 ** ell * x)

    def _series(self, ells, s, x):
        x = _as_points(x, self.d)
        s = np.asarray(s, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        s, r = np.broadcast_arrays(s, r)
        phi = np.zeros(s.shape)
        for ell in ells:
            phi = phi + self.partition_radial(4.0 ** ell * s, 2.0 ** ell * r)
        # term_l = phi(D_l z) p_s(x) exactly, so factor the heat kernel out
        return phi * self._heat_radial(s, r, self.d)

    def eval_K(self, s, x):
        """``K(s, x)`` as the sum of dyadic terms ``0 <= l <= L_max``."""
        return self._series(range(0, self.L_max + 1), s, x)

    def eval_R(self, s, x):
        """``R(s, x)`` as the sum of dyadic terms ``-L_max <= l < 0``."""
        return self._series(range(-self.L_max, 0), s, x)

    def eval_K_closed(self, s, x):
        """Closed form ``chi(N) p_s(x)`` of the full series."""
        x = _as_points(x, self.d)
        r = np.linalg.norm(x, axis=-1)
        return self.cutoff_radial(s, r) * self._heat_radial(s, r, self.d)

    def eval_R_closed(self, s, x):
        x = _as_points(x, self.d)
        r = np.linalg.norm(x, axis=-1)
        return (1.0 - self.cutoff_radial(s, r)) * self._heat_radial(s, r, self.d)

    def partition_residual(self, s, x, depth=60):
        """``sum_l phi(4^l s, 2^l x) - 1`` over ``|l| <= depth``."""
        x = _as_points(x, self.d)
        r = np.linalg.norm(x, axis=-1)
        tot = 0.0
        for ell in range(-depth, depth + 1):
            tot = tot + self.partition_radial(4.0 ** ell * np.asarray(s, dtype=float),
                                              2.0 ** ell * r)
        return tot - 1.0

    def check_partition(self, n_points=100, tol=1e-10, seed=0):
        """Verify the partition of unity at random points; raise on failure."""
        rng = np.random.default_rng(seed)
        s = rng.uniform(-1.0, 1.0, n_points)
        x = rng.uniform(-1.0, 1.0, (n_points, self.d))
        res = np.abs(self.partition_residual(s, x))
        worst = float(res.max())
        if worst > tol:
            raise ValueError(f"partition-of-unity residual {worst:.3e} exceeds {tol:.1e}")
        return worst

    # -- time integral -----------------------------------------------------
    def _k0_time_integral(self, r):
        # int_0^1 K0(s, r) ds; K0 vanishes for s >= 1
        f = lambda s: float(self.k0_radial(s, r))
        val, err = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
        return val

    def tilde_K(self, x):
        """``int_0^inf K(s, x) ds`` summed term by term.

        Term ``l`` contributes ``2^{l(d-2)} int K0(s, 2^l x) ds``, which
        vanishes once ``2^l |x| >= 1``.
        """
        x = _as_points(x, self.d)
        r = np.linalg.norm(x, axis=-1)
        if np.any(r == 0):
            raise SingularArgumentError("tilde K is evaluated away from x = 0")
        out = np.zeros(r.shape)
        for idx in np.ndindex(r.shape):
            ri = r[idx]
            top = int(math.floor(-math.log2(ri))) + 1 if ri < 1 else 0
            acc = 0.0
            for ell in range(0, top + 1):
                y = 2.0 ** ell * ri
                if y >= 1.0:
                    break
                acc += 2.0 ** (ell * (self.d - 2)) * self._k0_time_integral(y)
            out[idx] = acc
        return out

    # -- Fourier side ------------------------------------------------------
    @property
    def table(self):
        if self._table is None:
            self._table = FK0Table(self, self._grid, self._cache_dir, self._rebuild)
        return self._table

    def fourier_K0(self, lam, xi):
        xi = _as_points(xi, self.d)
        return self.table(lam, np.linalg.norm(xi, axis=-1))

    def _split(self, lam, xi):
        lam = np.asarray(lam, dtype=float)
        xi = _as_points(xi, self.d)
        k = np.linalg.norm(xi, axis=-1)
        lam, k = np.broadcast_arrays(lam, k)
        return lam.astype(float), k.astype(float)

    def _fk_small(self, lam, k, delta=1e-5):
        """Series for FK with an analytic tail once arguments are tiny."""
        tab = self.table
        _, m_s, m_x2 = tab.moments
        f0 = tab.origin
        c_lam = -1j * m_s
        c_k = -0.5 * m_x2
        out = np.zeros(lam.shape, dtype=complex)
        active = np.ones(lam.shape, dtype=bool)
        ell = 0
        while np.any(active) and ell <= self.L_max:
            la = lam[active] / 4.0 ** ell
            k2 = (k[active] / 2.0 ** ell) ** 2
            zone = (np.abs(la) <= delta) & (k2 <= delta)
            sub = np.zeros(la.shape, dtype=complex)
            # geometric tail of the linear expansion around the origin
            sub[zone] = (f0 * 4.0 ** -ell * 4.0 / 3.0
                         + (c_lam * lam[active][zone] + c_k * k[active][zone] ** 2)
                         * 16.0 ** -ell * 16.0 / 15.0)
            rest = ~zone
            sub[rest] = 4.0 ** -ell * tab(la[rest], np.sqrt(k2[rest]))
            out[active] += sub
            ids = np.nonzero(active)[0]
            active[ids[zone]] = False
            ell += 1
        if np.any(active):
            # truncated at L_max: add the constant-term tail
            out[active] += f0 * 4.0 ** -ell * 4.0 / 3.0
        return out

    def _fr_large(self, lam, k):
        tab = self.table
        g = tab.grid
        out = np.zeros(lam.shape, dtype=complex)
        j = 1
        active = np.ones(lam.shape, dtype=bool)
        while np.any(active):
            la = 4.0 ** j * lam
            kk = 2.0 ** j * k
            active &= (np.abs(la) <= g.lam_max) & (kk <= g.k_max)
            if not np.any(active):
                break
            out[active] += 4.0 ** j * tab(la[active], kk[active])
            j += 1
        return out

    def tail_bound(self, L=None):
        """Bound on the part of the K series beyond depth ``L``."""
        L = self.L_max if L is None else L
        return abs(self.table.origin) * 4.0 ** -(L + 1) * 4.0 / 3.0

    def fourier_K(self, lam, xi, tol=None):
        """``F K(lam, xi)``.

        Small parabolic frequencies ``|lam| + |xi|^2 < 1`` use the dyadic
        series directly; larger ones use ``Fp - FR`` with the rapidly
        converging remainder series.
        """
        if tol is not None and self.tail_bound() > tol:
            raise TailBoundError(f"tail bound {self.tail_bound():.2e} above {tol:.1e}")
        lam, k = self._split(lam, xi)
        q = np.abs(lam) + k * k
        out = np.empty(lam.shape, dtype=complex)
        small = q < 1.0
        out[small] = self._fk_small(lam[small], k[small])
        big = ~small
        lb, kb = lam[big], k[big]
        out[big] = 1.0 / (0.5 * kb * kb + 1j * lb) - self._fr_large(lb, kb)
        return out

    def fourier_R(self, lam, xi):
        """``F R(lam, xi)``; singular at the origin like the heat transform."""
        lam, k = self._split(lam, xi)
        q = np.abs(lam) + k * k
        if np.any(q == 0):
            raise SingularArgumentError("F R is singular at the origin")
        out = np.empty(lam.shape, dtype=complex)
        small = q < 1.0
        ls, ks = lam[small], k[small]
        out[small] = 1.0 / (0.5 * ks * ks + 1j * ls) - self._fk_small(ls, ks)
        big = ~small
        out[big] = self._fr_large(lam[big], k[big])
        return out

    def fourier_tilde_K(self, xi):
        """Spatial transform of K-tilde, equal to ``F K(0, xi)`` (real)."""
        xi = _as_points(xi, self.d)
        return self.fourier_K(np.zeros(xi.shape[:-1]), xi).real


def build_localized_kernel(d, L_max=24, smoothness=None, inner=0.5, check=True, **kwargs):
    """Construct a :class:`LocalizedHeatKernel` and verify its partition of unity."""
    kern = LocalizedHeatKernel(d, L_max=L_max, inner=inner, smoothness=smoothness, **kwargs)
    if check:
        kern.check_partition()
    return kern


def fourier_K(kernel, lam, xi, tol=None):
    return kernel.fourier_K(lam, xi, tol=tol)


def fourier_R(kernel, lam, xi):
    return kernel.fourier_R(lam, xi)


def tilde_K(kernel, x):
    return kernel.tilde_K(x)


# -- independent reference evaluation --------------------------------------

def _spatial_transform_remainder(kernel, s, k):
    """``F^x[(1 - chi(N(s, .))) p_s](k)`` for ``0 < s < 1`` by radial quadrature."""
    d = kernel.d
    full = math.exp(-0.5 * s * k * k)
    reach = min(1.0, 14.0 * math.sqrt(s))
    r, w = _gauss_legendre_panels(0.0, reach, 48, 16)
    vals = kernel.cutoff_radial(s, r) * kernel._heat_radial(s, r, d)
    inner = float((vals * w) @ _radial_fourier_matrix(d, r, np.array([k]))[:, 0])
    return full - inner


def fourier_R_direct(kernel, lam, xi):
    """Reference ``F R(lam, xi)`` by nested adaptive quadrature.

    Uses ``R = (1 - chi(N)) p``: the part ``s >= 1`` is the closed form
    ``e^{-a} / a`` with ``a = |xi|^2/2 + i lam``; the part ``0 < s < 1`` is an
    adaptive time quadrature of radially transformed slices.  Independent of
    the tabulated transform; intended for verification at a few points.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    k = float(np.linalg.norm(xi))
    lam = float(lam)
    a = 0.5 * k * k + 1j * lam
    if a == 0:
        raise SingularArgumentError("F R is singular at the origin")
    late = np.exp(-a) / a
    g = lambda s: _spatial_transform_remainder(kernel, s, k) if s > 0 else 0.0
    opts = dict(epsabs=1e-13, epsrel=1e-11, limit=400)
    if lam == 0.0:
        re, e1 = integrate.quad(g, 0.0, 1.0, **opts)
        im, e2 = 0.0, 0.0
    else:
        re, e1 = integrate.quad(g, 0.0, 1.0, weight="cos", wvar=lam, **opts)
        im, e2 = integrate.quad(g, 0.0, 1.0, weight="sin", wvar=lam, **opts)
        im = -im
    if max(e1, e2) > 1e-8:
        raise QuadratureError("reference F R did not converge", max(e1, e2))
    return late + re + 1j * im


def fourier_K_direct(kernel, lam, xi):
    """Reference ``F K = F p - F R`` built on :func:`fourier_R_direct`."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    a = 0.5 * float(xi @ xi) + 1j * float(lam)
    return 1.0 / a - fourier_R_direct(kernel, lam, xi)


def ray_decay_slopes(kernel, which="K", t_min=2.0 ** 5, t_max=2.0 ** 10, points=16):
    """Fitted slopes of ``log |F K|`` (or ``|F R|``) against ``log t`` along the
    coordinate rays ``lam = t`` and ``xi_i = t``, other coordinates zero.

    Returns a list with the time ray first.  Values that underflow to zero
    are dropped; a ray with fewer than three positive values reports
    ``-inf`` (faster than any power).
    """
    f = kernel.fourier_K if which == "K" else kernel.fourier_R
    t = np.geomspace(t_min, t_max, points)
    out = []
    for axis in range(kernel.d + 1):
        lam = t if axis == 0 else np.zeros_like(t)
        xi = np.zeros((t.size, kernel.d))
        if axis:
            xi[:, axis - 1] = t
        mag = np.abs(f(lam, xi))
        keep = mag > 1e-280
        if keep.sum() < 3:
            out.append(-math.inf)
            continue
        out.append(float(np.polyfit(np.log(t[keep]), np.log(mag[keep]), 1)[0]))
    return out


def check_decay_exponents(kernel, tuples, which="K", tol=0.1, **kwargs):
    """Compare ray slopes with the decay exponents of each tuple.

    Along the time ray the transform must decay at least like ``t^-a_0``,
    along the ``xi_i`` ray like ``t^{-2 a_i}``; a slope passes when it is at
    most ``-exponent + tol``.  Tuples must satisfy ``sum a < 1`` for ``K``
    and ``sum a > 1`` for ``R``.

    Returns
    -------
    list of (tuple, axis, slope, required, passed)
    """
    slopes = ray_decay_slopes(kernel, which, **kwargs)
    rows = []
    for a in tuples:
        a = tuple(float(v) for v in a)
        if len(a) != kernel.d + 1 or min(a) < 0:
            raise ValueError(f"tuple {a} must have {kernel.d + 1} nonnegative entries")
        total = sum(a)
        if (which == "K" and total >= 1.0) or (which == "R" and total <= 1.0):
            raise ValueError(f"tuple {a} is not admissible for F{which}")
        for axis, slope in enumerate(slopes):
            req = -(a[0] if axis == 0 else 2.0 * a[axis])
            rows.append((a, axis, slope, req, bool(slope <= req + tol)))
    return rows
