"""Renormalized mollified parabolic Anderson equation on a periodic grid.

Solves ``du = (1/2) Lap u dt + u (W - c) dt`` by Strang splitting: an exact
half step of the heat semigroup in Fourier space, a pointwise multiplication
by ``exp((W(t_mid) - c) dt)`` with the noise taken at the step midpoint, and
a second heat half step.  The noise enters only through the exponent, so
solving with a constant shift ``c`` is the same computation as solving with
the noise ``W - c`` and no shift.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import KRoughError, ResolutionError
from .field_synthesis import Lattice, sample_field, sample_field_spatial
from .quadrature import c_n, c_n_spatial
from .spectral_model import SPATIAL

__all__ = [
    "NonFiniteError",
    "PamRun",
    "solve_pam",
    "heat_exact",
    "initial_condition",
    "convergence_study",
    "ConvergenceTable",
]


class NonFiniteError(KRoughError, FloatingPointError):
    """The solution overflowed or became NaN."""


@dataclass
class PamRun:
    """Trajectory of one solve.

    Attributes
    ----------
    level, seed : int or None
        Taken from the driving field.
    c_used : float
    psi0 : ndarray
        Initial condition on the spatial grid.
    T, dt : float
    times : ndarray
        Snapshot times, starting at 0.
    snapshots : ndarray
        ``u`` at ``times``; shape ``(len(times),) + spatial shape``.
    """

    level: object
    seed: object
    c_used: float
    psi0: np.ndarray
    T: float
    dt: float
    dx: float
    times: np.ndarray
    snapshots: np.ndarray

    @property
    def final(self):
        return self.snapshots[-1]

    def sup_norm(self):
        return float(np.max(np.abs(self.snapshots)))


def _wavenumbers2(d, nx, dx):
    k = 2.0 * np.pi * np.fft.fftfreq(nx, dx)
    k2 = np.zeros((nx,) * d)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = nx
        k2 = k2 + (k ** 2).reshape(shape)
    return k2


def initial_condition(kind, d, nx, dx, width=0.5):
    """Shipped initial conditions on the centred spatial grid.

    ``'one'`` is the constant 1; ``'bump'`` is ``prod (1 - (y/width)^2)^4``
    on ``|y| < width``.
    """
    if kind == "one":
        return np.ones((nx,) * d)
    if kind == "bump":
        y = (np.arange(nx) - nx // 2) * dx
        f = np.where(np.abs(y) < width, (1.0 - (y / width) ** 2) ** 4, 0.0)
        out = f
        for _ in range(d - 1):
            out = np.multiply.outer(out, f)
        return out
    raise ValueError(f"unknown initial condition {kind!r}")


def heat_exact(psi0, dx, t):
    """Heat semigroup ``exp(t Lap / 2)`` applied spectrally on the periodic grid."""
    psi0 = np.asarray(psi0, dtype=float)
    k2 = _wavenumbers2(psi0.ndim, psi0.shape[0], dx)
    return np.fft.ifftn(np.fft.fftn(psi0) * np.exp(-0.5 * t * k2)).real


def solve_pam(field, c_value, psi0, T, dt=None, snapshot_every=1, check=True):
    """Strang-split solve of the renormalized equation driven by ``field``.

    Parameters
    ----------
    field : LatticeField
        Space-time field (time axis from 0 in steps of ``dt_f``) or a spatial
        field, which is used as time-constant noise.
    c_value : float
        Renormalization constant subtracted from the noise.
    psi0 : float or ndarray
        Initial condition on the spatial grid of the field.
    T : float
        Horizon; must be a multiple of ``dt``.
    dt : float, optional
        Solver step.  Space-time fields need ``dt`` to be an even multiple of
        the field step (default ``2 dt_f``) so the midpoints are nodes;
        spatial fields require it.
    snapshot_every : int
        Store ``u`` every that many steps (and at ``T``).
    check : bool
        Enforce ``dt <= 4^-n / 4`` for a level-``n`` field.

    Raises
    ------
    ResolutionError
        Step too coarse for the field level, or horizon beyond the field.
    NonFiniteError
        Overflow; the message reports the step and the last finite sup norm.
    """
    lat = field.lattice
    d, nx, dx = lat.d, lat.nx, lat.dx
    spatial = lat.mode == SPATIAL
    if spatial and dt is None:
        raise ValueError("spatial noise needs an explicit time step")
    if not spatial:
        dt = 2.0 * lat.dt if dt is None else float(dt)
        ratio = dt / lat.dt
        stride = int(round(ratio))
        if abs(ratio - stride) > 1e-9 or stride % 2:
            raise ResolutionError("dt must be an even multiple of the field time step")
    steps = int(round(T / dt))
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be a positive multiple of dt")
    if check and field.level is not None and dt > 4.0 ** -field.level / 4.0 + 1e-15:
        raise ResolutionError(
            f"dt = {dt:g} does not resolve level {field.level} (need <= {4.0 ** -field.level / 4:g})")
    if not spatial and steps * stride > lat.nt:
        raise ResolutionError("horizon exceeds the time extent of the field")
    u = np.broadcast_to(np.asarray(psi0, dtype=float), (nx,) * d).copy()
    psi = u.copy()
    half = np.exp(-0.25 * dt * _wavenumbers2(d, nx, dx))
    times, snaps = [0.0], [u.copy()]
    last_sup = float(np.max(np.abs(u)))
    for k in range(steps):
        w = field.values if spatial else field.values[(2 * k + 1) * stride // 2]
        # overflow is detected below and reported with context
        with np.errstate(over="ignore", invalid="ignore"):
            u = np.fft.ifftn(np.fft.fftn(u) * half).real
            u = u * np.exp((w - c_value) * dt)
            u = np.fft.ifftn(np.fft.fftn(u) * half).real
        if not np.all(np.isfinite(u)):
            raise NonFiniteError(f"non-finite solution at step {k + 1} of {steps} "
                                 f"(t = {(k + 1) * dt:g}); last sup norm {last_sup:.3e}")
        last_sup = float(np.max(np.abs(u)))
        if (k + 1) % snapshot_every == 0 or k + 1 == steps:
            times.append((k + 1) * dt)
            snaps.append(u.copy())
    return PamRun(field.level, field.seed, float(c_value), psi, float(T), dt, dx,
                  np.array(times), np.array(snaps))


@dataclass
class ConvergenceTable:
    """Sup-norm differences between consecutive levels.

    Each row holds ``n``, ``m`` (the finer and coarser level), the
    renormalized difference ``renormalized``, the unrenormalized control
    difference ``control``, the constants and the sup norms of both runs.
    """

    rows: list
    config: dict

    def column(self, key):
        return np.array([r[key] for r in self.rows])

    def to_csv(self):
        buf = io.StringIO()
        cols = list(self.rows[0]) if self.rows else []
        wr = csv.DictWriter(buf, fieldnames=cols)
        wr.writeheader()
        for r in self.rows:
            wr.writerow(r)
        return buf.getvalue()


def convergence_study(hurst, m, kernel, levels, psi0, T, seed, lattice=None, dt=None,
                      constants=None, control=True):
    """Solve at each level on coupled fields and compare consecutive levels.

    Parameters
    ----------
    kernel : LocalizedHeatKernel or None
        Unused by the default constants; kept so callers can pass
        ``constants='raw'`` to subtract the kernel-dependent raw means.
    levels : sequence of int
    psi0 : str or ndarray
        ``'one'``, ``'bump'`` or node values.
    lattice : Lattice, optional
        Defaults to ``dt_f = 4^-top / 8``, ``dx = 2^-top / 2`` with time
        extent ``2T`` and spatial period 8.
    constants : None, 'raw', 'zero' or dict
        ``None`` uses the level constants of the quadrature module;
        Young-regime indices fall back to zero.
    control : bool
        Also solve with ``c = 0``.
    """
    levels = sorted(int(v) for v in levels)
    top = levels[-1]
    spatial = hurst.mode == SPATIAL
    if lattice is None:
        if spatial:
            lattice = Lattice(hurst.d, 1 << max(2, math.ceil(math.log2(8.0 * 2 ** (top + 1)))),
                              2.0 ** -(top + 1), mode=SPATIAL)
        else:
            dtf = 4.0 ** -top / 8.0
            nt = 1 << max(2, math.ceil(math.log2(2.0 * T / dtf - 1e-9)))
            lattice = Lattice(hurst.d, 1 << (top + 4), 2.0 ** -(top + 1), nt, dtf)
    if dt is None:
        dt = 4.0 ** -top / 4.0 if spatial else 2.0 * lattice.dt
    if isinstance(psi0, str):
        psi0 = initial_condition(psi0, hurst.d, lattice.nx, lattice.dx)

    def const(n):
        if isinstance(constants, dict):
            return float(constants[n])
        if constants == "zero" or hurst.regime() == "young":
            return 0.0
        if spatial:
            return c_n_spatial(m, hurst, n, kernel if constants == "raw" else None)
        return c_n(m, hurst, n, kernel if constants == "raw" else None)

    runs, ctrl, cs = {}, {}, {}
    for n in levels:
        fld = (sample_field_spatial if spatial else sample_field)(hurst, m, n, lattice, seed)
        cs[n] = const(n)
        runs[n] = solve_pam(fld, cs[n], psi0, T, dt)
        if control:
            ctrl[n] = solve_pam(fld, 0.0, psi0, T, dt)
    rows = []
    for lo, hi in zip(levels[:-1], levels[1:]):
        row = {"n": hi, "m": lo,
               "renormalized": float(np.max(np.abs(runs[hi].snapshots - runs[lo].snapshots))),
               "c_n": cs[hi], "c_m": cs[lo],
               "sup_u_n": runs[hi].sup_norm()}
        if control:
            row["control"] = float(np.max(np.abs(ctrl[hi].snapshots - ctrl[lo].snapshots)))
            row["sup_control_n"] = ctrl[hi].sup_norm()
        rows.append(row)
    config = {"levels": levels, "T": T, "dt": dt, "seed": seed,
              "lattice": lattice.to_dict(), "mode": hurst.mode,
              "regime": hurst.regime(), "constants": constants if isinstance(constants, str) else
              ("table" if isinstance(constants, dict) else "level")}
    return ConvergenceTable(rows, config)
