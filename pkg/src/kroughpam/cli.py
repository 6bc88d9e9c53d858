"""Experiment driver.

Every subcommand reads an INI file (section ``[run]``), applies ``--set
key=value`` overrides, validates the regime before computing anything,
writes CSV tables atomically into the output directory together with a
``manifest.json``, and exits with status 0 only when every asserted
invariant of the run holds.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import click
import numpy as np
import scipy

from . import __version__
from .errors import KRoughError, RegimeError
from .field_synthesis import Lattice, deterministic_field, sample_field, sample_field_spatial
from .kernels import build_localized_kernel, check_decay_exponents, heat_kernel
from .krough import exact_var_first, exact_var_second, pair_first, pair_second_renormalized
from .pam_solver import convergence_study, heat_exact, initial_condition, solve_pam
from .quadrature import border_slope_closed_form, c_n, c_n_spatial, slope_fit
from .spectral_model import SPACE_TIME, SPATIAL, HurstConfig, mollifier, verify_assumption_rho
from .testfn import make_test_function

EXIT_FAIL = 1
EXIT_CONFIG = 2


def _ints(text):
    return tuple(int(v) for v in str(text).replace(",", " ").split())


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Configuration shared by all subcommands.

    ``h0 = None`` selects the spatial mode.  Lists are stored as tuples so the
    configuration is hashable and serializes canonically.
    """

    d: int = 1
    h: tuple = (0.6,)
    h0: object = 0.6
    mollifier: str = "gauss-gauss"
    kernel_L_max: int = 24
    kernel_inner: float = 0.5
    kernel_smoothness: object = None
    levels: tuple = (2, 3, 4, 5, 6)
    pam_levels: tuple = (3, 4, 5)
    seed: int = 0
    replicas: int = 0
    tol: float = 1e-9
    slope_tol: float = 1e-6
    ells: tuple = (0, 1, 2, 3, 4, 5, 6)
    ells_second: tuple = (0, 1, 2)
    n_first: int = 12
    n_offset: int = 2
    T: float = 0.5
    dt: float = 1.0 / 4096.0
    dx: float = 1.0 / 64.0
    period_x: float = 8.0
    psi0: str = "one"
    out: str = "runs"

    @property
    def mode(self):
        return SPATIAL if self.h0 is None else SPACE_TIME

    @property
    def hurst(self):
        return HurstConfig(self.d, self.h, self.h0)

    def mollifier_obj(self):
        return mollifier(self.mollifier, self.d, self.mode)

    def kernel(self):
        return build_localized_kernel(self.d, L_max=self.kernel_L_max, inner=self.kernel_inner,
                                      smoothness=self.kernel_smoothness)

    # -- serialization ----------------------------------------------------
    def to_mapping(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                out[f.name] = "none"
            elif isinstance(v, tuple):
                out[f.name] = " ".join(repr(x) for x in v)
            else:
                out[f.name] = repr(v) if isinstance(v, float) else str(v)
        return out

    def to_ini(self):
        cp = configparser.ConfigParser()
        cp["run"] = self.to_mapping()
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self):
        return hashlib.sha256(self.to_ini().encode()).hexdigest()

    @classmethod
    def from_mapping(cls, mapping):
        kinds = {f.name: f.default for f in dataclasses.fields(cls)}
        # INI parsing lowercases keys, so match names without case
        names = {k.lower(): k for k in kinds}
        values = {}
        for key, raw in mapping.items():
            if key.lower() not in names:
                raise click.UsageError(f"unknown configuration key {key!r}")
            key = names[key.lower()]
            raw = str(raw).strip()
            default = kinds[key]
            if raw.lower() == "none":
                values[key] = None
            elif key in ("levels", "pam_levels", "ells", "ells_second"):
                values[key] = _ints(raw)
            elif key == "h":
                values[key] = _floats(raw)
            elif key in ("h0",):
                values[key] = float(raw)
            elif key == "kernel_smoothness":
                values[key] = int(raw)
            elif isinstance(default, bool):
                values[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                values[key] = int(raw)
            elif isinstance(default, float):
                values[key] = float(raw)
            else:
                values[key] = raw
        return cls(**values)

    @classmethod
    def from_ini_text(cls, text):
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if "run" not in cp:
            raise click.UsageError("configuration needs a [run] section")
        return cls.from_mapping(dict(cp["run"]))


def load_config(path, overrides, mode=None):
    mapping = {}
    if path:
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise click.UsageError(f"cannot read configuration {path}")
        if "run" not in cp:
            raise click.UsageError("configuration needs a [run] section")
        mapping.update(cp["run"])
    for item in overrides:
        if "=" not in item:
            raise click.UsageError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        mapping[key.strip()] = value.strip()
    if mode == SPATIAL:
        mapping.setdefault("h0", "none")
        mapping.setdefault("d", "2")
        mapping.setdefault("h", "0.5 0.5")
        mapping.setdefault("mollifier", "heat")
    cfg = RunConfig.from_mapping(mapping)
    try:
        cfg.hurst
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    if mode is not None and cfg.mode != mode:
        raise click.UsageError(f"this subcommand needs {mode} indices (set h0 accordingly)")
    return cfg


def _require_regime(cfg, allow_young=False):
    reg = cfg.hurst.regime()
    if reg == "rough" or (allow_young and reg == "young"):
        return
    raise RegimeError(
        f"indices give the {reg} regime (scaling index {cfg.hurst.effective:g}, "
        f"critical {cfg.hurst.critical:g}); lower the indices below the critical value "
        f"and keep the scaling index within 0.5 of it")


# -- output -------------------------------------------------------------------

def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf)
    wr.writerow(header)
    for r in rows:
        wr.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


class Run:
    """Collects outputs and invariant results of one subcommand."""

    def __init__(self, command, cfg, argv):
        self.command = command
        self.cfg = cfg
        self.argv = argv
        self.out = Path(cfg.out) / command
        self.files = []
        self.invariants = []
        self.started = time.time()

    def table(self, name, header, rows):
        _atomic_write(self.out / name, _csv_text(header, rows))
        self.files.append(name)

    def check(self, name, passed, detail=""):
        self.invariants.append({"name": name, "passed": bool(passed), "detail": detail})
        mark = "PASS" if passed else "FAIL"
        click.echo(f"[{mark}] {name} {detail}".rstrip())

    def finish(self):
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "config": self.cfg.to_mapping(),
            "config_sha256": self.cfg.digest(),
            "seed": self.cfg.seed,
            "versions": {"kroughpam": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "outputs": self.files,
            "invariants": self.invariants,
            "seconds": round(time.time() - self.started, 3),
        }
        _atomic_write(self.out / "config.ini", self.cfg.to_ini())
        _atomic_write(self.out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
        ok = all(i["passed"] for i in self.invariants)
        sys.exit(0 if ok else EXIT_FAIL)


def _common(f):
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     default=None, help="INI file with a [run] section.")(f)
    f = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                     help="Override one configuration key; repeatable.")(f)
    return f


def _start(command, config_path, overrides, mode=None, allow_young=False):
    cfg = load_config(config_path, overrides, mode)
    try:
        _require_regime(cfg, allow_young)
    except RegimeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    return Run(command, cfg, sys.argv[1:])


class _Group(click.Group):
    """Reports library errors as one line with the configuration exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except KRoughError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_CONFIG)


@click.group(cls=_Group)
@click.version_option(__version__)
def main():
    """Renormalized rough-noise experiments."""


# -- renormalization constants -----------------------------------------------------

def _constants(run, spatial):
    cfg = run.cfg
    hurst, m = cfg.hurst, cfg.mollifier_obj()
    ns = list(cfg.levels)
    fn = c_n_spatial if spatial else c_n
    vals = [fn(m, hurst, n, None, cfg.tol) for n in ns]
    run.table("constants.csv", ["n", "c_n"], zip(ns, vals))
    rows = []
    if hurst.is_border:
        slope = slope_fit(ns, vals)[0]
        ref = border_slope_closed_form(hurst)
        rows.append(("linear", slope, ref))
        run.check("border slope matches closed form", abs(slope / ref - 1.0) <= 0.05,
                  f"fit {slope:.6g} closed form {ref:.6g}")
    else:
        slope = slope_fit(ns, np.log2(vals))[0]
        ref = 2.0 * (hurst.critical - hurst.effective)
        rows.append(("log2", slope, ref))
        run.check("sub-critical slope", abs(slope - ref) <= cfg.slope_tol,
                  f"fit {slope:.10g} expected {ref:.10g}")
    run.table("slopes.csv", ["scale", "fitted", "reference"], rows)


@main.command("renorm-constants")
@_common
def renorm_constants(config_path, overrides):
    """Renormalization constants across levels with slope checks."""
    run = _start("renorm-constants", config_path, overrides, SPACE_TIME)
    _constants(run, False)
    run.finish()


@main.command("spatial-renorm-constants")
@_common
def spatial_renorm_constants(config_path, overrides):
    """Spatial-noise constants (defaults: d = 2, white noise, heat mollifier)."""
    run = _start("spatial-renorm-constants", config_path, overrides, SPATIAL)
    _constants(run, True)
    run.finish()


# -- moment scaling -------------------------------------------------------------------

def _mc_lattice(cfg, n, ell):
    dt = min(4.0 ** -n / 16.0, 4.0 ** -ell / 8.0)
    dx = min(2.0 ** -n / 4.0, 2.0 ** -ell / 8.0)
    return Lattice.covering(cfg.d, 8.0, dx, 8.0, dt)


def _moments(run, spatial):
    cfg = run.cfg
    hurst, m = cfg.hurst, cfg.mollifier_obj()
    psi = make_test_function(cfg.d, mode=cfg.mode)
    ells = list(cfg.ells)
    first = [exact_var_first(hurst, m, cfg.n_first, psi, ell) for ell in ells]
    dims = cfg.d if spatial else cfg.d + 2
    ref = hurst.homogeneity + dims
    slope = float(np.polyfit(ells, np.log2(first), 1)[0])
    run.check("first-level slope", abs(slope - ref) <= 0.1, f"fit {slope:.4f} expected {ref:.4f}")
    rows = [("first", ell, cfg.n_first, v) for ell, v in zip(ells, first)]
    slope_rows = [("first", slope, ref)]
    if not spatial:
        kern = cfg.kernel()
        es = list(cfg.ells_second)
        second = [exact_var_second(hurst, m, kern, ell + cfg.n_offset, psi, ell).total
                  for ell in es]
        rows += [("second", ell, ell + cfg.n_offset, v) for ell, v in zip(es, second)]
        bound = 4.0 * (hurst.d + 1.0 - hurst.effective) + 0.2
        s2 = float(np.polyfit(es, np.log2(second), 1)[0])
        run.check("second-level slope bound", s2 <= bound, f"fit {s2:.4f} bound {bound:.4f}")
        slope_rows.append(("second", s2, bound))
    run.table("moments.csv", ["order", "ell", "n", "exact"], rows)
    run.table("slopes.csv", ["order", "fitted", "reference"], slope_rows)
    if cfg.replicas > 0:
        mc_rows = []
        n = cfg.n_offset
        lat = _mc_lattice(cfg, n, 0)
        vals = []
        for r in range(cfg.replicas):
            fld = sample_field(hurst, m, n, lat, cfg.seed + r)
            vals.append(pair_first(fld, psi, 0, 0.0, 0.0))
        vals = np.array(vals) ** 2
        ex = exact_var_first(hurst, m, n, psi, 0)
        se = float(np.std(vals) / math.sqrt(vals.size))
        mc_rows.append(("first", 0, n, float(vals.mean()), ex, se))
        run.check("first-level Monte Carlo within 3 se", abs(vals.mean() - ex) <= 3 * se,
                  f"mc {vals.mean():.4e} exact {ex:.4e} se {se:.2e}")
        if not spatial:
            c = c_n(m, hurst, n)
            xs = []
            for r in range(cfg.replicas):
                fld = sample_field(hurst, m, n, lat, cfg.seed + r)
                xs.append(pair_second_renormalized(fld, kern, c, psi, 0, 0.0, 0.0))
            xs = np.array(xs) ** 2
            ex2 = exact_var_second(hurst, m, kern, n, psi, 0).total
            se2 = float(np.std(xs) / math.sqrt(xs.size))
            mc_rows.append(("second", 0, n, float(xs.mean()), ex2, se2))
            run.check("second-level Monte Carlo within 3 se", abs(xs.mean() - ex2) <= 3 * se2,
                      f"mc {xs.mean():.4e} exact {ex2:.4e} se {se2:.2e}")
        run.table("monte_carlo.csv", ["order", "ell", "n", "mc_mean_square", "exact", "se"],
                  mc_rows)


@main.command("moment-scaling")
@_common
def moment_scaling(config_path, overrides):
    """Exact pairing moments across scales, with optional Monte Carlo checks."""
    run = _start("moment-scaling", config_path, overrides, SPACE_TIME)
    _moments(run, False)
    run.finish()


@main.command("spatial-moment-scaling")
@_common
def spatial_moment_scaling(config_path, overrides):
    """First-level moment scaling for spatial noise."""
    run = _start("spatial-moment-scaling", config_path, overrides, SPATIAL)
    _moments(run, True)
    run.finish()


# -- PAM convergence ---------------------------------------------------------------------

def _pam(run, spatial):
    cfg = run.cfg
    hurst, m = cfg.hurst, cfg.mollifier_obj()
    top = max(cfg.pam_levels)
    nx = 1 << math.ceil(math.log2(cfg.period_x / cfg.dx - 1e-9))
    if spatial:
        lat = Lattice(cfg.d, nx, cfg.dx, mode=SPATIAL)
        dt = cfg.dt
    else:
        dtf = cfg.dt / 2.0
        nt = 1 << math.ceil(math.log2(2.0 * cfg.T / dtf - 1e-9))
        lat = Lattice(cfg.d, nx, cfg.dx, nt, dtf)
        dt = cfg.dt
    psi0 = initial_condition(cfg.psi0, cfg.d, nx, cfg.dx)
    # heat-only sanity on a bump
    bump = initial_condition("bump", cfg.d, nx, cfg.dx)
    zero = deterministic_field(lat, 0.0)
    heat = solve_pam(zero, 0.0, bump, cfg.T, dt, check=False)
    err = float(np.max(np.abs(heat.final - heat_exact(bump, cfg.dx, cfg.T))))
    run.check("heat-only solution", err <= 1e-6, f"sup error {err:.2e}")
    table = convergence_study(hurst, m, None, cfg.pam_levels, psi0, cfg.T, cfg.seed, lattice=lat,
                              dt=dt)
    cols = list(table.rows[0])
    run.table("convergence.csv", cols, [[r[c] for c in cols] for r in table.rows])
    # renormalization identity on the finest level
    fld = (sample_field_spatial(hurst, m, top, lat, cfg.seed) if spatial
           else sample_field(hurst, m, top, lat, cfg.seed))
    c = table.rows[-1]["c_n"]
    a = solve_pam(fld, c, psi0, cfg.T, dt, check=False).final
    b = solve_pam(fld.with_values(fld.values - c), 0.0, psi0, cfg.T, dt, check=False).final
    gap = float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))
    run.check("shift equals subtraction", gap <= 1e-12, f"relative gap {gap:.1e}")


@main.command("pam-converge")
@_common
def pam_converge(config_path, overrides):
    """Cross-level sup-norm differences of renormalized PAM solutions."""
    run = _start("pam-converge", config_path, overrides, SPACE_TIME, allow_young=True)
    _pam(run, False)
    run.finish()


@main.command("spatial-pam-converge")
@_common
def spatial_pam_converge(config_path, overrides):
    """Spatial-noise PAM convergence table."""
    run = _start("spatial-pam-converge", config_path, overrides, SPATIAL, allow_young=True)
    _pam(run, True)
    run.finish()


# -- verification ------------------------------------------------------------------------

@main.command("verify-kernel")
@_common
def verify_kernel(config_path, overrides):
    """Partition of unity, kernel reconstruction and Fourier decay exponents."""
    cfg = load_config(config_path, overrides)
    run = Run("verify-kernel", cfg, sys.argv[1:])
    kern = cfg.kernel()
    run.check("partition of unity", kern.check_partition() <= 1e-10)
    rng = np.random.default_rng(cfg.seed)
    s = 2.0 ** rng.uniform(-20.0, 2.0, 200)
    x = rng.normal(size=(200, cfg.d)) * np.sqrt(s)[:, None]
    recon = kern.eval_K(s, x) + kern.eval_R(s, x)
    err = float(np.max(np.abs(recon - heat_kernel(s, x))))
    run.check("K + R reconstructs the heat kernel", err < 1e-8, f"max error {err:.2e}")
    k_tuples = rng.dirichlet(np.ones(cfg.d + 2), 5)[:, :-1] * 0.95
    r_tuples = rng.dirichlet(np.ones(cfg.d + 1), 5) * 1.5
    rows = []
    for which, tuples in (("K", k_tuples), ("R", r_tuples)):
        res = check_decay_exponents(kern, tuples, which)
        rows += [(which, " ".join(f"{v:.4f}" for v in a), ax, sl, req, ok)
                 for a, ax, sl, req, ok in res]
        run.check(f"F{which} decay exponents", all(r[-1] for r in res))
    run.table("decay.csv", ["transform", "tuple", "axis", "slope", "required", "passed"], rows)
    run.finish()


@main.command("verify-mollifier")
@_common
def verify_mollifier(config_path, overrides):
    """Decay certificate of the configured mollifier."""
    cfg = load_config(config_path, overrides)
    run = Run("verify-mollifier", cfg, sys.argv[1:])
    m = cfg.mollifier_obj()
    ndim = cfg.d + (1 if cfg.mode == SPACE_TIME else 0)
    taus = [tuple([t] * ndim) for t in (0.0, 0.25, 0.5, 1.0 / ndim)]
    rep = verify_assumption_rho(m, taus, np.geomspace(0.05, 40.0, 24))
    _atomic_write(run.out / "certificate.csv", rep.to_csv())
    run.files.append("certificate.csv")
    run.check("mollifier certificate", rep.passed,
              f"unit mass {rep.unit_mass:.12g} max modulus {rep.max_modulus:.12g}")
    run.finish()


if __name__ == "__main__":
    main()
