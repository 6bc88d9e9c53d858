"""Hurst configuration, spectral weight, normalization constants and mollifiers.

The noise is a centered Gaussian field whose spectral density is proportional
to ``|lam|**(1 - 2*h0) * prod_i |xi_i|**(1 - 2*h_i)``.  Its mollified version
at level ``n`` is built from a unit-mass kernel ``rho`` through the parabolic
rescaling ``rho_n(s, x) = 2**(n*(d+2)) * rho(4**n * s, 2**n * x)``, whose
Fourier transform is ``F rho(lam / 4**n, xi / 2**n)``.

Fourier transforms use the convention ``F f(lam, xi) = int e^{-i(lam s + xi.x)} f``.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import QuadratureError, RegimeError, SingularArgumentError

__all__ = [
    "SPACE_TIME",
    "SPATIAL",
    "HurstConfig",
    "SpectralWeight",
    "Mollifier",
    "CertificateReport",
    "eval_spectral_weight",
    "fbm_integral",
    "normalization_constants",
    "mollifier",
    "verify_assumption_rho",
]

SPACE_TIME = "space-time"
SPATIAL = "spatial"
_BORDER_TOL = 1e-12


def _check_index(value, name):
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return value


@dataclass(frozen=True)
class HurstConfig:
    """Hurst indices of the noise.

    Parameters
    ----------
    d : int
        Spatial dimension.
    h : sequence of float
        Spatial indices ``H_1..H_d``, each in (0, 1).
    h0 : float or None
        Time index.  ``None`` selects the spatial (time-independent) mode.
    """

    d: int
    h: tuple
    h0: Optional[float] = None

    def __post_init__(self):
        d = int(self.d)
        if d < 1:
            raise ValueError("dimension d must be at least 1")
        h = tuple(_check_index(v, f"h[{i}]") for i, v in enumerate(self.h))
        if len(h) != d:
            raise ValueError(f"expected {d} spatial indices, got {len(h)}")
        h0 = None if self.h0 is None else _check_index(self.h0, "h0")
        if h0 is None and d < 2:
            raise ValueError("spatial mode requires d >= 2")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "h0", h0)

    @property
    def mode(self):
        return SPATIAL if self.h0 is None else SPACE_TIME

    @property
    def sum_h(self):
        """Sum of the spatial indices."""
        return float(sum(self.h))

    @property
    def effective(self):
        """Scaling index: ``2*h0 + H`` in space-time mode, ``H`` in spatial mode."""
        if self.h0 is None:
            return self.sum_h
        return 2.0 * self.h0 + self.sum_h

    @property
    def critical(self):
        """Upper end of the rough range (``d+1``, or ``d-1`` spatially)."""
        return self.d + 1.0 if self.h0 is not None else self.d - 1.0

    @property
    def homogeneity(self):
        """Scaling degree of the spectral weight under the parabolic dilation.

        ``N(4**k lam, 2**k xi) = 2**(k * homogeneity) * N(lam, xi)`` in
        space-time mode; the spatial mode uses the isotropic dilation.
        """
        if self.h0 is None:
            return self.d - 2.0 * self.sum_h
        return self.d + 2.0 - 2.0 * self.effective

    @property
    def is_border(self):
        return abs(self.effective - self.critical) <= _BORDER_TOL

    def regime(self):
        """Return ``'young'``, ``'rough'`` or ``'unsupported'``."""
        e, top = self.effective, self.critical
        if e > top + _BORDER_TOL:
            return "young"
        if e > top - 0.5:
            return "rough"
        return "unsupported"

    def require_rough(self, strict=False):
        """Raise :class:`RegimeError` unless in the rough regime.

        With ``strict=True`` the border case is rejected as well.
        """
        reg = self.regime()
        if reg != "rough":
            raise RegimeError(
                f"{self.mode} indices give {reg} regime "
                f"(scaling index {self.effective:.6g}, critical {self.critical:g}); "
                "choose indices with the scaling index in the rough window")
        if strict and self.is_border:
            raise RegimeError(
                "border case: the untruncated constant diverges; "
                "use the truncated level constant instead")

    def permuted(self, order):
        """Return the configuration with spatial indices permuted."""
        return HurstConfig(self.d, tuple(self.h[i] for i in order), self.h0)


def _power(x, expo):
    # |x|**expo with the convention 0**0 = 1
    x = np.abs(np.asarray(x, dtype=float))
    if expo == 0.0:
        return np.ones_like(x)
    return x ** expo


@dataclass(frozen=True)
class SpectralWeight:
    """Spectral weight ``|lam|^{1-2h0} prod |xi_i|^{1-2h_i}``.

    The spatial mode drops the time factor.
    """

    hurst: HurstConfig
    mode: str = SPACE_TIME

    def __post_init__(self):
        if self.mode not in (SPACE_TIME, SPATIAL):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == SPACE_TIME and self.hurst.h0 is None:
            raise ValueError("space-time weight needs a time index")

    @property
    def time_exponent(self):
        return 1.0 - 2.0 * self.hurst.h0

    @property
    def space_exponents(self):
        return tuple(1.0 - 2.0 * h for h in self.hurst.h)

    def time_factor(self, lam):
        return _power(lam, self.time_exponent)

    def space_factor(self, i, xi_i):
        return _power(xi_i, self.space_exponents[i])

    def __call__(self, lam, xi):
        """Vectorized evaluation; ``xi`` has trailing axis of length d."""
        xi = np.asarray(xi, dtype=float)
        out = np.ones(xi.shape[:-1])
        for i in range(self.hurst.d):
            out = out * self.space_factor(i, xi[..., i])
        if self.mode == SPACE_TIME:
            out = out * self.time_factor(lam)
        return out


def eval_spectral_weight(w, lam, xi):
    """Evaluate the spectral weight at one frequency with argument checks.

    Parameters
    ----------
    w : SpectralWeight
    lam : float or None
        Time frequency (ignored, and may be ``None``, in spatial mode).
    xi : sequence of float
        Spatial frequency of length d.

    Returns
    -------
    float

    Raises
    ------
    SingularArgumentError
        If a coordinate with positive exponent ``2H-1`` is exactly zero.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != w.hurst.d:
        raise ValueError(f"xi must have length {w.hurst.d}")
    if w.mode == SPACE_TIME:
        if lam is None:
            raise ValueError("space-time mode requires lam")
        if lam == 0.0 and w.time_exponent < 0.0:
            raise SingularArgumentError("lam = 0 with h0 > 1/2")
    for i, e in enumerate(w.space_exponents):
        if xi[i] == 0.0 and e < 0.0:
            raise SingularArgumentError(f"xi[{i}] = 0 with h[{i}] > 1/2")
    val = 1.0
    if w.mode == SPACE_TIME and w.time_exponent != 0.0:
        val *= abs(lam) ** w.time_exponent
    for i, e in enumerate(w.space_exponents):
        if e != 0.0:
            val *= abs(xi[i]) ** e
    return float(val)


@functools.lru_cache(maxsize=256)
def fbm_integral(h, method="weighted", rtol=1e-8):
    """Compute ``I(h) = int_R |e^{i xi} - 1|^2 / |xi|^{2h+1} d xi``.

    Parameters
    ----------
    h : float
        Index in (0, 1).
    method : {'weighted', 'oscillatory'}
        ``'weighted'`` integrates the algebraic singularity at the origin with
        an ``alg`` weight and the tail with a Fourier-cosine weight.
        ``'oscillatory'`` is an independent tanh-sinh scheme with
        period-by-period summation, kept as a cross-check.
    rtol : float
        Required relative accuracy.

    Returns
    -------
    value, error : float
    """
    h = _check_index(h, "h")
    if method == "weighted":
        # on [0, 1]: 4 sin^2(x/2) / x^2 is smooth, x^{1-2h} goes in the weight
        smooth = lambda x: np.sinc(x / (2.0 * np.pi)) ** 2
        head, e1 = integrate.quad(smooth, 0.0, 1.0, weight="alg",
                                  wvar=(1.0 - 2.0 * h, 0.0),
                                  epsabs=0.0, epsrel=1e-13, limit=200)
        cos_tail, e2 = integrate.quad(lambda x: x ** (-2.0 * h - 1.0), 1.0,
                                      np.inf, weight="cos", wvar=1.0,
                                      epsabs=1e-14, limlst=200,
                                      full_output=1)[:2]
        half = head + 1.0 / h - 2.0 * cos_tail
        err = e1 + 2.0 * e2
    elif method == "oscillatory":
        import mpmath as mp

        with mp.workdps(20):
            # subtract the leading x^{1-2h} behaviour and add it back exactly
            head = mp.quad(lambda x: (4 * mp.sin(x / 2) ** 2 - x * x) / x ** (2 * h + 1),
                           [0, 1]) + 1 / (2 - 2 * mp.mpf(h))
            cos_tail = mp.quadosc(lambda x: mp.cos(x) / x ** (2 * h + 1),
                                  [1, mp.inf], omega=1)
            half = float(head + 1 / mp.mpf(h) - 2 * cos_tail)
        err = abs(half) * 1e-12
    else:
        raise ValueError(f"unknown method {method!r}")
    value = 2.0 * half
    err = 2.0 * err
    if not np.isfinite(value) or err > rtol * abs(value):
        raise QuadratureError(f"fbm integral for h={h} did not converge", err)
    return value, err


def normalization_constants(hurst, method="weighted"):
    """Return ``(c_H0, c_H)`` for a Hurst configuration.

    ``c_H0`` is ``nan`` in spatial mode.  ``c_H`` is the product of the
    per-axis constants.
    """
    c0 = float("nan")
    if hurst.h0 is not None:
        c0 = fbm_integral(hurst.h0, method)[0] ** -0.5
    ch = 1.0
    for h in hurst.h:
        ch *= fbm_integral(h, method)[0] ** -0.5
    return c0, ch


def combined_constant(hurst):
    """``c_H0 * c_H`` in space-time mode, ``c_H`` in spatial mode."""
    c0, ch = normalization_constants(hurst)
    return ch if hurst.h0 is None else c0 * ch


# -- mollifiers -------------------------------------------------------------

def _gauss(u):
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u)


def _indicator(lam):
    # F 1_[0,1](lam) = (1 - e^{-i lam}) / (i lam)
    lam = np.asarray(lam, dtype=float)
    return np.exp(-0.5j * lam) * np.sinc(lam / (2.0 * np.pi))


def _sech2(u):
    # transform of sech(x)^2 / 2, namely (pi u / 2) / sinh(pi u / 2)
    z = 0.5 * np.pi * np.abs(np.asarray(u, dtype=float))
    out = np.ones_like(z)
    big = z > 1e-4
    zb = z[big]
    out[big] = 2.0 * zb * np.exp(-zb) / (-np.expm1(-2.0 * zb))
    zs = z[~big]
    out[~big] = 1.0 - zs * zs / 6.0
    return out


@dataclass(frozen=True)
class Mollifier:
    """Unit-mass smoothing kernel described through its Fourier transform.

    Catalog kernels are separable: the transform is a time factor times a
    product of identical one-dimensional space factors, which lets
    downstream code split multi-dimensional integrals.

    Parameters
    ----------
    kind : str
        Catalog name or ``'user'``.
    d : int
        Spatial dimension.
    mode : str
        ``'space-time'`` or ``'spatial'``.
    time_factor, space_factor : callable or None
        One-dimensional transforms of the separable factors.
    fourier_fn : callable or None
        Full transform ``(lam, xi) -> complex`` for non-separable kernels
        (``xi`` only in spatial mode).
    decay : dict
        Largest algebraic decay exponent guaranteed per axis
        (``inf`` for Gaussian decay).
    """

    kind: str
    d: int
    mode: str = SPACE_TIME
    time_factor: Optional[Callable] = None
    space_factor: Optional[Callable] = None
    fourier_fn: Optional[Callable] = None
    decay: dict = field(default_factory=dict)

    @property
    def separable(self):
        return self.fourier_fn is None

    def fourier(self, lam, xi):
        """Transform at ``(lam, xi)``; pass ``lam=None`` in spatial mode."""
        xi = np.asarray(xi, dtype=float)
        if not self.separable:
            if self.mode == SPATIAL:
                return np.asarray(self.fourier_fn(xi), dtype=complex)
            return np.asarray(self.fourier_fn(lam, xi), dtype=complex)
        out = np.ones(xi.shape[:-1], dtype=complex)
        for i in range(self.d):
            out = out * self.space_factor(xi[..., i])
        if self.mode == SPACE_TIME:
            out = out * self.time_factor(lam)
        return out

    def fourier_level(self, n, lam, xi):
        """Transform of the level-``n`` rescaled kernel."""
        xi = np.asarray(xi, dtype=float) / 2.0 ** n
        if self.mode == SPATIAL:
            return self.fourier(None, xi)
        return self.fourier(np.asarray(lam, dtype=float) / 4.0 ** n, xi)

    def abs2_time(self, lam, n=0):
        """``|time factor|^2`` at level ``n`` (separable kernels only)."""
        lam = np.asarray(lam, dtype=float) / 4.0 ** n
        return np.abs(self.time_factor(lam)) ** 2

    def abs2_space(self, xi_i, n=0):
        """``|space factor|^2`` along one axis at level ``n``."""
        xi_i = np.asarray(xi_i, dtype=float) / 2.0 ** n
        return np.abs(self.space_factor(xi_i)) ** 2

    def bandwidth(self, n=0, eps=1e-16):
        """Frequencies ``(lam_max, xi_max)`` beyond which ``|F rho_n|^2 < eps``.

        Algebraically decaying factors return ``inf``.
        """
        def radius(f, decay):
            if decay != math.inf:
                return math.inf
            r = 1.0
            while np.abs(f(np.array([r]))[0]) ** 2 > eps:
                r *= 1.25
            return r

        xi_max = radius(self.space_factor, self.decay.get("space", math.inf)) * 2.0 ** n
        if self.mode == SPATIAL:
            return None, xi_max
        lam_max = radius(self.time_factor, self.decay.get("time", math.inf)) * 4.0 ** n
        return lam_max, xi_max


def mollifier(kind, d, mode=SPACE_TIME):
    """Catalog mollifiers.

    Space-time kinds: ``'gauss-gauss'`` (``p_1(s) p_1(x)``) and
    ``'indicator-heat'`` (``1_[0,1](s) p_1(x)``).  Spatial kinds: ``'heat'``
    (``p_1(x)``) and ``'sech2'`` (``prod sech(x_i)^2 / 2``).
    """
    inf = math.inf
    if mode == SPACE_TIME:
        if kind == "gauss-gauss":
            return Mollifier(kind, d, mode, _gauss, _gauss,
                             decay={"time": inf, "space": inf})
        if kind == "indicator-heat":
            return Mollifier(kind, d, mode, _indicator, _gauss,
                             decay={"time": 1.0, "space": inf})
    elif mode == SPATIAL:
        if kind == "heat":
            return Mollifier(kind, d, mode, None, _gauss, decay={"space": inf})
        if kind == "sech2":
            return Mollifier(kind, d, mode, None, _sech2, decay={"space": inf})
    raise ValueError(f"unknown {mode} mollifier {kind!r}")


# -- decay certificates -----------------------------------------------------

@dataclass
class CertificateReport:
    """Outcome of :func:`verify_assumption_rho`.

    ``rows`` holds ``(tau, c_tau, status)`` triples.
    """

    rows: list
    lipschitz: float
    lipschitz_coarse: float
    unit_mass: float
    max_modulus: float

    @property
    def passed(self):
        return (all(r[2] == "ok" for r in self.rows)
                and abs(self.unit_mass - 1.0) < 1e-12
                and self.max_modulus <= 1.0 + 1e-12
                and self.lipschitz <= 2.0 * self.lipschitz_coarse + 1e-12)

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["tau", "c_tau", "status"])
        for tau, c, status in self.rows:
            wr.writerow([" ".join(repr(float(t)) for t in tau), repr(float(c)), status])
        return buf.getvalue()


def verify_assumption_rho(m, tau_grid, sample_grid, growth_tol=0.05):
    """Empirical decay constants of a mollifier transform.

    For every exponent tuple ``tau`` the report gives
    ``c_tau = max |F rho(z)| |z_0|^{tau_0} ... |z_d|^{tau_d}`` over the tensor
    grid built from ``+-sample_grid`` on every axis.  A tuple is flagged
    ``'diverging'`` when the maximum over the full grid exceeds the maximum
    over the inner three quarters of the sampled magnitudes by more than
    ``growth_tol``.

    Parameters
    ----------
    m : Mollifier
    tau_grid : sequence of sequences
        Exponent tuples of length d+1 (d in spatial mode), entries in [0, 1].
    sample_grid : array_like
        Positive sample magnitudes.
    """
    mags = np.unique(np.abs(np.asarray(sample_grid, dtype=float)))
    mags = mags[mags > 0]
    tau_grid = [tuple(float(t) for t in tau) for tau in tau_grid]
    if mags.size < 2 or not tau_grid:
        raise ValueError("malformed grid: need >= 2 positive samples and >= 1 tau")
    ndim = m.d + (1 if m.mode == SPACE_TIME else 0)
    if any(len(t) != ndim for t in tau_grid):
        raise ValueError(f"each tau must have {ndim} entries")
    axis = np.concatenate([-mags[::-1], mags])
    mesh = np.meshgrid(*([axis] * ndim), indexing="ij")
    pts = np.stack(mesh, axis=-1)
    if m.mode == SPACE_TIME:
        values = m.fourier(pts[..., 0], pts[..., 1:])
    else:
        values = m.fourier(None, pts)
    mod = np.abs(values)
    inner = np.max(np.abs(pts), axis=-1) <= np.quantile(mags, 0.75)

    rows = []
    for tau in tau_grid:
        prod = mod.copy()
        for k, t in enumerate(tau):
            prod = prod * np.abs(pts[..., k]) ** t
        full, half = prod.max(), prod[inner].max()
        status = "ok" if full <= (1.0 + growth_tol) * half else "diverging"
        rows.append((tau, float(full), status))

    def lipschitz(vals, grid):
        best = 0.0
        for k in range(ndim):
            dv = np.abs(np.diff(vals, axis=k))
            dz = np.diff(grid).reshape([-1 if j == k else 1 for j in range(ndim)])
            best = max(best, float((dv / dz).max()))
        return best

    lip = lipschitz(values, axis)
    coarse = values[tuple([slice(None, None, 2)] * ndim)]
    lip_coarse = lipschitz(coarse, axis[::2])
    if m.mode == SPACE_TIME:
        origin = m.fourier(np.zeros(1), np.zeros((1, m.d)))[0]
    else:
        origin = m.fourier(None, np.zeros((1, m.d)))[0]
    return CertificateReport(rows, lip, lip_coarse, float(abs(origin)),
                             float(mod.max()))
