"""Spectral synthesis of the mollified noise on a periodic lattice.

The field is a finite harmonizable sum

    W_n(z) = sqrt(2) Re sum_k s_k Z_k exp(i w_k . z),

over the frequency lattice ``w_k = 2 pi k / L`` of a periodic box, with
``s_k^2 = c^2 * int_{cell k} |F rho_n|^2 N`` (cell-integrated spectral mass)
and i.i.d. standard complex Gaussians ``Z_k``.  Its covariance is the
lattice discretization of ``c^2 int |F rho_n|^2 N exp(i w . lag) dw``.

Gaussian coefficients are drawn per dyadic frequency shell: the shell of an
index ``k`` along one axis is the bit length of ``|k|``, and each tuple of
per-axis shells owns an independent substream derived from the master seed.
Fields at different levels, or on a refined lattice with the same periods,
therefore share all common coefficients.
"""

from __future__ import annotations

import json
import math
import sys
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError, ResolutionError
from .kernels import _radial_fourier_matrix
from .quadrature import _c2, polar_integral
from .spectral_model import SPACE_TIME, SPATIAL

__all__ = [
    "Lattice",
    "LatticeField",
    "ResolutionWarning",
    "sample_field",
    "sample_field_spatial",
    "deterministic_field",
    "exact_cov",
    "exact_cov_Kfield",
    "exact_cov_tildeK_field",
    "convolve_K",
    "convolve_tildeK",
    "kernel_multiplier",
    "lattice_covariance",
    "spectral_weights",
    "write_field_binary",
    "read_field_binary",
    "write_field_csv",
]

_CELL_ORDER = 16
_MAGIC = "kroughpam-field"


class ResolutionWarning(UserWarning):
    """The lattice truncates a non-negligible part of the spectrum."""


def _is_pow2(n):
    return n >= 2 and n & (n - 1) == 0


@dataclass(frozen=True)
class Lattice:
    """Periodic lattice with power-of-two node counts.

    Parameters
    ----------
    d : int
        Spatial dimension.
    nx : int
        Nodes per spatial axis.
    dx : float
        Spatial step.
    nt : int
        Time nodes (1 in spatial mode).
    dt : float
        Time step (ignored in spatial mode).
    mode : str
    """

    d: int
    nx: int
    dx: float
    nt: int = 1
    dt: float = 1.0
    mode: str = SPACE_TIME

    def __post_init__(self):
        if not _is_pow2(self.nx) or self.nx < 4:
            raise ValueError("nx must be a power of two, at least 4")
        if self.mode == SPACE_TIME and (not _is_pow2(self.nt) or self.nt < 4):
            raise ValueError("nt must be a power of two, at least 4")
        if self.mode == SPATIAL and self.nt != 1:
            raise ValueError("spatial lattices have nt = 1")
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("steps must be positive")

    @classmethod
    def covering(cls, d, period_x, dx, period_t=None, dt=None, mode=SPACE_TIME):
        """Smallest lattice with the given steps whose periods are at least
        ``period_x`` (and ``period_t``)."""
        nx = 1 << max(2, math.ceil(math.log2(period_x / dx - 1e-9)))
        if mode == SPATIAL:
            return cls(d, nx, float(dx), mode=SPATIAL)
        nt = 1 << max(2, math.ceil(math.log2(period_t / dt - 1e-9)))
        return cls(d, nx, float(dx), nt, float(dt), mode)

    @property
    def shape(self):
        sp = (self.nx,) * self.d
        return sp if self.mode == SPATIAL else (self.nt,) + sp

    @property
    def steps(self):
        sp = (self.dx,) * self.d
        return sp if self.mode == SPATIAL else (self.dt,) + sp

    @property
    def periods(self):
        return tuple(n * h for n, h in zip(self.shape, self.steps))

    @property
    def cell_volume(self):
        return float(np.prod(self.steps))

    def axes(self):
        """Node coordinates per axis (time first in space-time mode)."""
        return [np.arange(n) * h for n, h in zip(self.shape, self.steps)]

    def frequencies(self):
        """Angular frequencies per axis in FFT order."""
        return [2.0 * np.pi * np.fft.fftfreq(n, h) for n, h in zip(self.shape, self.steps)]

    def nyquist(self):
        return tuple(np.pi / h for h in self.steps)

    def to_dict(self):
        return {"d": self.d, "nx": self.nx, "dx": self.dx, "nt": self.nt,
                "dt": self.dt, "mode": self.mode}


class LatticeField:
    """Samples of the mollified noise on a lattice.

    Attributes
    ----------
    lattice : Lattice
    level : int or None
        Mollification level; ``None`` for deterministic fields.
    seed : int or None
    values : ndarray
        Real samples, shape ``lattice.shape``; read-only.
    spectrum : ndarray or None
        Complex coefficients ``s_k Z_k`` in FFT layout, so that
        ``values = sqrt(2) Re(N ifft(spectrum))`` with ``N`` the node count.
    truncation : tuple
        Per-axis angular frequency radius kept by the lattice.
    """

    def __init__(self, lattice, values, level=None, seed=None, spectrum=None,
                 hurst=None, mollifier=None):
        self.lattice = lattice
        self.level = level
        self.seed = seed
        values = np.ascontiguousarray(values, dtype=float)
        if values.shape != lattice.shape:
            raise ValueError(f"values must have shape {lattice.shape}")
        values.setflags(write=False)
        self.values = values
        self.spectrum = spectrum
        self.hurst = hurst
        self.mollifier = mollifier
        self.truncation = lattice.nyquist()
        self._conv = {}

    @property
    def d(self):
        return self.lattice.d

    @property
    def mode(self):
        return self.lattice.mode

    def kfield(self, kernel, method="spectral", levels=None):
        """Cached convolution with the localized kernel (K-tilde in spatial mode)."""
        key = (id(kernel), method, levels)
        if key not in self._conv:
            if self.mode == SPATIAL:
                out = convolve_tildeK(self, kernel)
            else:
                out = convolve_K(self, kernel, method=method, levels=levels)
            out.setflags(write=False)
            self._conv[key] = (kernel, out)
        return self._conv[key][1]

    def scaled(self, factor):
        """Field multiplied by a constant (coefficients scaled alike)."""
        spec = None if self.spectrum is None else factor * self.spectrum
        return LatticeField(self.lattice, factor * self.values, self.level, self.seed,
                            spec, self.hurst, self.mollifier)

    def with_values(self, values):
        """Deterministic field on the same lattice with new node values."""
        return LatticeField(self.lattice, values, self.level, self.seed, None,
                            self.hurst, self.mollifier)


def deterministic_field(lattice, values):
    """Wrap prescribed node values (a constant or an array) as a field."""
    values = np.broadcast_to(np.asarray(values, dtype=float), lattice.shape).copy()
    return LatticeField(lattice, values)


# -- spectral weights ---------------------------------------------------------

def _cell_integrals(n, step, g2, a):
    """``int_{cell k} g2(u) |u|^a du`` for the FFT-ordered frequency cells.

    The Nyquist cell is dropped so the index set stays symmetric.
    """
    width = 2.0 * np.pi / (n * step)
    k = np.fft.fftfreq(n, 1.0 / n)
    out = np.zeros(n)
    x, w = np.polynomial.legendre.leggauss(_CELL_ORDER)
    pos = (k != 0) & (np.abs(k) < n // 2)
    centers = k[pos] * width
    u = centers[:, None] + 0.5 * width * x[None, :]
    out[pos] = 0.5 * width * np.sum(w * g2(u) * np.abs(u) ** a, axis=1)
    # origin cell: 2 int_0^{width/2} g2(u) u^a du with a Jacobi rule
    y, wj = special.roots_jacobi(_CELL_ORDER, 0.0, a)
    half = 0.5 * width
    u0 = 0.5 * half * (1.0 + y)
    out[0] = 2.0 * np.sum(wj * g2(u0)) * (0.5 * half) ** (a + 1.0)
    return out


def _axis_exponents(hurst):
    a = [1.0 - 2.0 * h for h in hurst.h]
    return a if hurst.mode == SPATIAL else [1.0 - 2.0 * hurst.h0] + a


def spectral_weights(hurst, m, n, lattice):
    """Per-axis cell weights whose outer product times ``c^2`` is ``s_k^2``."""
    if not m.separable:
        raise ValueError("lattice synthesis requires a separable mollifier")
    expo = _axis_exponents(hurst)
    out = []
    for axis, (size, step) in enumerate(zip(lattice.shape, lattice.steps)):
        if lattice.mode == SPACE_TIME and axis == 0:
            g2 = lambda u: m.abs2_time(u, n)
        else:
            g2 = lambda u: m.abs2_space(u, n)
        out.append(_cell_integrals(size, step, g2, expo[axis]))
    return out


def _shell_members(n):
    """FFT positions grouped by shell ``bit_length(|k|)``, canonical order."""
    groups = [np.array([0])]
    s = 1
    while (1 << (s - 1)) < n // 2:
        lo, hi = 1 << (s - 1), min(1 << s, n // 2)
        pos = np.arange(lo, hi)
        groups.append(np.concatenate([pos, n - pos]))
        s += 1
    return groups


def _shell_noise(seed, shape, tag):
    """Complex standard Gaussians in FFT layout, one substream per shell tuple.

    The Nyquist plane stays zero.
    """
    z = np.zeros(shape, dtype=complex)
    groups = [_shell_members(n) for n in shape]
    for combo in np.ndindex(*[len(g) for g in groups]):
        idx = [groups[ax][s] for ax, s in enumerate(combo)]
        count = int(np.prod([len(i) for i in idx]))
        ss = np.random.SeedSequence(seed, spawn_key=(tag,) + tuple(int(c) for c in combo))
        rng = np.random.Generator(np.random.PCG64(ss))
        draw = rng.standard_normal((2, count))
        block = (draw[0] + 1j * draw[1]) * math.sqrt(0.5)
        z[np.ix_(*idx)] = block.reshape([len(i) for i in idx])
    return z


def _check_bandwidth(m, n, lattice, strict, eps=1e-12):
    lam_max, xi_max = m.bandwidth(n, eps)
    ny = lattice.nyquist()
    need = (xi_max,) * lattice.d if lattice.mode == SPATIAL else (lam_max,) + (xi_max,) * lattice.d
    short = [i for i, (a, b) in enumerate(zip(need, ny)) if a > b]
    if short:
        msg = (f"lattice Nyquist radii {ny} below the level-{n} mollifier bandwidth "
               f"{need} on axes {short}")
        if strict:
            raise ResolutionError(msg)
        warnings.warn(msg, ResolutionWarning, stacklevel=3)


_AMPLITUDES = {}


def _synthesize(hurst, m, n, lattice, seed, strict):
    if m.d != hurst.d or lattice.d != hurst.d:
        raise ValueError("indices, mollifier and lattice disagree on the dimension")
    if m.mode != lattice.mode or hurst.mode != lattice.mode:
        raise ValueError("indices, mollifier and lattice disagree on the mode")
    _check_bandwidth(m, n, lattice, strict)
    key = (hurst, id(m), n, lattice)
    if key not in _AMPLITUDES:
        if len(_AMPLITUDES) > 64:
            _AMPLITUDES.clear()
        weights = spectral_weights(hurst, m, n, lattice)
        # the mollifier is stored with the amplitudes so its id stays reserved
        _AMPLITUDES[key] = (m, math.sqrt(_c2(hurst)) * _outer_sqrt(weights))
    amp = _AMPLITUDES[key][1]
    tag = 0 if lattice.mode == SPACE_TIME else 1
    spectrum = amp * _shell_noise(seed, lattice.shape, tag)
    values = _from_spectrum(spectrum)
    return LatticeField(lattice, values, n, seed, spectrum, hurst, m)


def _outer_sqrt(weights):
    out = np.sqrt(weights[0])
    for w in weights[1:]:
        out = np.multiply.outer(out, np.sqrt(w))
    return out


def _from_spectrum(spectrum):
    total = spectrum.size
    return math.sqrt(2.0) * total * np.fft.ifftn(spectrum).real


def sample_field(hurst, m, n, lattice, seed, strict=False):
    """Synthesize the level-``n`` mollified space-time noise.

    Parameters
    ----------
    hurst : HurstConfig
        Space-time indices.  Any regime is accepted: the mollified field has
        finite variance whenever every index lies in (0, 1).
    m : Mollifier
        Separable space-time mollifier.
    n : int
        Level.
    lattice : Lattice
        Space-time lattice.
    seed : int
        Master seed.
    strict : bool
        Turn the bandwidth warning into :class:`ResolutionError`.

    Returns
    -------
    LatticeField
    """
    if hurst.mode != SPACE_TIME:
        raise ValueError("use sample_field_spatial for spatial indices")
    return _synthesize(hurst, m, n, lattice, seed, strict)


def sample_field_spatial(hurst, m, n, lattice, seed, strict=False):
    """Synthesize the level-``n`` mollified time-independent noise."""
    if hurst.mode != SPATIAL:
        raise ValueError("spatial synthesis needs spatial indices")
    if hurst.d < 2:
        raise ValueError("spatial mode requires d >= 2")
    return _synthesize(hurst, m, n, lattice, seed, strict)


def lattice_covariance(field, lag_index):
    """Exact covariance of the synthesized field at an integer lag (mean of
    ``W(z) W(z + lag)`` under the lattice law)."""
    if field.spectrum is None:
        raise ValueError("deterministic fields have no covariance")
    hurst, m = field.hurst, field.mollifier
    w = spectral_weights(hurst, m, field.level, field.lattice)
    s2 = _c2(hurst) * _outer_sqrt(w) ** 2
    phase = np.ones(field.lattice.shape)
    for ax, (f, h, j) in enumerate(zip(field.lattice.frequencies(), field.lattice.steps,
                                       lag_index)):
        shape = [1] * len(field.lattice.shape)
        shape[ax] = -1
        phase = phase * np.cos(f * h * j).reshape(shape)
    return float(np.sum(s2 * phase))


# -- exact covariances ----------------------------------------------------------

def _cov_factor(g2, a, tau, scale, tol):
    """``int_R g2(u) |u|^a cos(u tau) du`` for an even factor ``g2``."""
    tau = abs(float(tau))
    kw = dict(epsabs=tol * 1e-3, epsrel=tol, limit=400)
    f = lambda u: g2(np.array([u]))[0] * u ** a
    # algebraic weight only near the origin; the long oscillatory stretch
    # goes to the cosine-weighted rule
    near = min(scale, 1.0)
    head, e1 = integrate.quad(lambda u: g2(np.array([u]))[0] * math.cos(u * tau), 0.0, near,
                              weight="alg", wvar=(a, 0.0), **kw)
    if scale > near:
        extra = dict(weight="cos", wvar=tau) if tau > 0.0 else {}
        mid, e3 = integrate.quad(f, near, scale, **extra, **kw)
        head += mid
        e1 += e3
    if tau == 0.0:
        tail, e2 = integrate.quad(f, scale, np.inf, **kw)
    else:
        tail, e2 = integrate.quad(f, scale, np.inf, weight="cos", wvar=tau,
                                  epsabs=tol * 1e-3, limlst=100)
    val = 2.0 * (head + tail)
    err = 2.0 * (e1 + e2)
    if err > max(tol * abs(val), 1e-14):
        raise QuadratureError("oscillatory covariance factor", err)
    return val


def exact_cov(hurst, m, n, lag, tol=1e-8):
    """``c^2 int |F rho_n|^2 N cos(w . lag) dw`` as a product of
    one-dimensional oscillatory integrals.

    ``lag`` is ``(tau, y_1..y_d)``, or ``(y_1..y_d)`` in spatial mode.
    """
    if not m.separable:
        raise ValueError("exact_cov requires a separable mollifier")
    lag = np.atleast_1d(np.asarray(lag, dtype=float))
    expo = _axis_exponents(hurst)
    if lag.size != len(expo):
        raise ValueError(f"lag must have {len(expo)} components")
    val = _c2(hurst)
    for axis, (a, tau) in enumerate(zip(expo, lag)):
        if hurst.mode == SPACE_TIME and axis == 0:
            g2, scale = (lambda u: m.abs2_time(u, n)), 4.0 ** n
        else:
            g2, scale = (lambda u: m.abs2_space(u, n)), 2.0 ** n
        val *= _cov_factor(g2, a, tau, scale, tol)
    return val


def _cos_product(lag, lam, xi):
    out = np.ones(xi.shape[:-1])
    if lam is not None:
        out = out * np.cos(lam * lag[0])
        lag = lag[1:]
    for i, y in enumerate(lag):
        out = out * np.cos(xi[..., i] * y)
    return out


def exact_cov_Kfield(hurst, m, kernel, n, lag=None, tol=1e-7):
    """``c^2 int |F rho_n|^2 |F K|^2 N cos(w . lag) dw``: covariance of the
    convolved field."""
    if hurst.mode != SPACE_TIME:
        raise ValueError("space-time indices required")
    lag = np.zeros(hurst.d + 1) if lag is None else np.asarray(lag, dtype=float)

    def func(lam, xi):
        shape = lam.shape
        fk = kernel.fourier_K(lam.ravel(), xi.reshape(-1, hurst.d)).reshape(shape)
        rho2 = np.abs(m.fourier_level(n, lam, xi)) ** 2
        return rho2 * np.abs(fk) ** 2 * _cos_product(lag, lam, xi)

    res = polar_integral(func, hurst, tol=tol, r_start=0.5)
    return _c2(hurst) * res.value


def exact_cov_tildeK_field(hurst, m, kernel, n, lag=None, tol=1e-7):
    """Spatial analogue with ``F K-tilde(xi) = F K(0, xi)``."""
    if hurst.mode != SPATIAL:
        raise ValueError("spatial indices required")
    lag = np.zeros(hurst.d) if lag is None else np.asarray(lag, dtype=float)

    def func(xi):
        shape = xi.shape[:-1]
        fk = kernel.fourier_tilde_K(xi.reshape(-1, hurst.d)).reshape(shape)
        rho2 = np.abs(m.fourier_level(n, None, xi)) ** 2
        return rho2 * fk ** 2 * _cos_product(lag, None, xi)

    res = polar_integral(func, hurst, tol=tol, r_start=0.5)
    return _c2(hurst) * res.value


# -- convolution with the localized kernel -------------------------------------

_MULTIPLIERS = {}


def _radius_grid(lattice):
    """Unique spatial frequency radii and the inverse map onto the grid."""
    freqs = lattice.frequencies()
    sp = freqs[1:] if lattice.mode == SPACE_TIME else freqs
    mesh = np.meshgrid(*sp, indexing="ij")
    k = np.sqrt(sum(g * g for g in mesh))
    radii, inv = np.unique(np.round(k, 12), return_inverse=True)
    return radii, inv.reshape(k.shape)


def _truncated_fk(kernel, lam, k, levels):
    tab = kernel.table
    out = np.zeros(lam.shape, dtype=complex)
    for ell in range(levels + 1):
        out += 4.0 ** -ell * tab(lam / 4.0 ** ell, k / 2.0 ** ell)
    return out


def kernel_multiplier(kernel, lattice, levels=None):
    """``F K`` on the lattice frequencies (cached per lattice and kernel).

    With ``levels`` the kernel series is truncated after that many dyadic
    terms.  Spatial lattices return ``F K-tilde``.
    """
    key = (lattice, id(kernel), levels)
    hit = _MULTIPLIERS.get(key)
    if hit is not None and hit[0] is kernel:
        return hit[1]
    radii, inv = _radius_grid(lattice)
    if lattice.mode == SPATIAL:
        zero = np.zeros(radii.size)
        if levels is None:
            vals = kernel.fourier_K(zero, radii[:, None] * _unit(lattice.d)).real
        else:
            vals = _truncated_fk(kernel, zero, radii, levels).real
        out = vals[inv]
    else:
        lam = lattice.frequencies()[0]
        L, R = np.meshgrid(lam, radii, indexing="ij")
        if levels is None:
            xi = R.ravel()[:, None] * _unit(lattice.d)
            vals = kernel.fourier_K(L.ravel(), xi).reshape(L.shape)
        else:
            vals = _truncated_fk(kernel, L, R, levels)
        out = vals[:, inv]
    out.setflags(write=False)
    if len(_MULTIPLIERS) > 16:
        _MULTIPLIERS.clear()
    _MULTIPLIERS[key] = (kernel, out)
    return out


def _unit(d):
    e = np.zeros(d)
    e[0] = 1.0
    return e


def _check_levels(field, levels):
    if levels is None:
        return
    if 2.0 ** -levels < 2.0 * field.lattice.dx:
        raise ResolutionError(
            f"finest retained kernel scale 2^-{levels} is below twice the grid step "
            f"{field.lattice.dx:g}; lower the number of levels or refine the lattice")


def convolve_K(field, kernel, method="spectral", levels=None):
    """Space-time convolution ``K * W`` on the periodic lattice.

    Parameters
    ----------
    field : LatticeField
        Space-time field.
    kernel : LocalizedHeatKernel
    method : {'spectral', 'causal'}
        ``'spectral'`` multiplies the lattice transform by ``F K``; for a
        synthesized field it acts on the stored coefficients, so the result
        is the exact convolution of the trigonometric sum.  ``'causal'``
        integrates over past times only: the field is interpolated linearly
        between time nodes and each time slab is convolved in space through
        the spatial transform of ``K(s, .)``.
    levels : int, optional
        Keep only the dyadic kernel terms ``0..levels``.

    Returns
    -------
    ndarray
        Samples of the convolution at the lattice nodes.
    """
    lat = field.lattice
    if lat.mode != SPACE_TIME:
        raise ValueError("convolve_K needs a space-time field; use convolve_tildeK")
    if kernel.d != lat.d:
        raise ValueError("field and kernel dimensions differ")
    _check_levels(field, levels)
    if method == "spectral":
        mult = kernel_multiplier(kernel, lat, levels)
        if field.spectrum is not None:
            # K acts on e^{iwz} as multiplication by F K(w)
            return _from_spectrum(field.spectrum * mult)
        return np.fft.ifftn(np.fft.fftn(field.values) * mult).real
    if method == "causal":
        return _causal_convolution(field, kernel, levels)
    raise ValueError(f"unknown method {method!r}")


def _slice_transform(kernel, s, radii, levels):
    """Spatial transform of ``K(s, .)`` at the radii, for one time ``s``."""
    d = kernel.d
    reach = 9.0 * math.sqrt(s)
    if levels is None and (reach * reach * reach * reach + s * s) ** 0.25 <= kernel.inner:
        # cutoff identically one where the heat kernel lives
        return np.exp(-0.5 * s * radii ** 2)
    top = min(1.0, reach)
    r, w = np.polynomial.legendre.leggauss(160)
    r = 0.5 * top * (1.0 + r)
    w = 0.5 * top * w
    if levels is None:
        prof = kernel.cutoff_radial(s, r)
    else:
        prof = kernel.cutoff_radial(s, r) - kernel.cutoff_radial(
            4.0 ** (levels + 1) * s, 2.0 ** (levels + 1) * r)
    prof = prof * kernel._heat_radial(s, r, d)
    return (w * prof) @ _radial_fourier_matrix(d, r, radii)


def _causal_weights(kernel, lattice, levels, order=8):
    dt = lattice.dt
    radii, inv = _radius_grid(lattice)
    steps = int(math.ceil(1.0 / dt - 1e-9))
    x, w = np.polynomial.legendre.leggauss(order)
    theta = 0.5 * (1.0 + x)
    A = np.zeros((steps, radii.size))
    B = np.zeros((steps, radii.size))
    for j in range(steps):
        for th, wt in zip(theta, w):
            s = (j + th) * dt
            if s >= 1.0:
                continue
            ks = _slice_transform(kernel, s, radii, levels)
            A[j] += 0.5 * dt * wt * (1.0 - th) * ks
            B[j] += 0.5 * dt * wt * th * ks
    return A[:, inv], B[:, inv]


def _causal_convolution(field, kernel, levels):
    lat = field.lattice
    A, B = _causal_weights(kernel, lat, levels)
    sp_axes = tuple(range(1, lat.d + 1))
    what = np.fft.fftn(field.values, axes=sp_axes)
    out = np.zeros_like(what)
    for j in range(A.shape[0]):
        out += A[j] * np.roll(what, j, axis=0) + B[j] * np.roll(what, j + 1, axis=0)
    return np.fft.ifftn(out, axes=sp_axes).real


def convolve_tildeK(field, kernel):
    """Spatial convolution with ``K-tilde`` via its transform ``F K(0, xi)``."""
    lat = field.lattice
    if lat.mode != SPATIAL:
        raise ValueError("convolve_tildeK needs a spatial field")
    if kernel.d != lat.d:
        raise ValueError("field and kernel dimensions differ")
    mult = kernel_multiplier(kernel, lat)
    if field.spectrum is not None:
        return _from_spectrum(field.spectrum * mult)
    return np.fft.ifftn(np.fft.fftn(field.values) * mult).real


# -- export ----------------------------------------------------------------------

def write_field_binary(path, field):
    """Write a header line (JSON) followed by row-major float64 samples."""
    order = "little" if sys.byteorder == "little" else "big"
    header = {"format": _MAGIC, "lattice": field.lattice.to_dict(), "level": field.level,
              "seed": field.seed, "endianness": order, "dtype": "float64",
              "shape": list(field.lattice.shape)}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(field.values).tobytes(order="C"))


def read_field_binary(path):
    """Inverse of :func:`write_field_binary` (returns a deterministic field)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != _MAGIC:
            raise ValueError("not a field snapshot")
        raw = fh.read()
    dtype = np.dtype("<f8" if header["endianness"] == "little" else ">f8")
    values = np.frombuffer(raw, dtype=dtype).astype(float).reshape(header["shape"])
    lattice = Lattice(**header["lattice"])
    return LatticeField(lattice, values, header["level"], header["seed"])


def write_field_csv(path, field, max_nodes=1 << 16):
    """CSV with one row per node: coordinates then value."""
    if field.values.size > max_nodes:
        raise ValueError(f"CSV export limited to {max_nodes} nodes")
    axes = field.lattice.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    names = (["t"] if field.mode == SPACE_TIME else []) + [f"y{i + 1}" for i in range(field.d)]
    cols = np.column_stack([g.ravel() for g in mesh] + [field.values.ravel()])
    np.savetxt(path, cols, delimiter=",", header=",".join(names + ["value"]), comments="",
               fmt="%.17g")
