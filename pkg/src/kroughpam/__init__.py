"""Renormalized rough-noise toolkit: fractional space-time noise, localized
heat kernels, renormalization constants, K-rough path pairings and the
renormalized parabolic Anderson solver."""

__version__ = "0.1.0"

from .errors import (KRoughError, QuadratureError, RegimeError, ResolutionError,
                     SingularArgumentError, TailBoundError)
from .spectral_model import HurstConfig, Mollifier, mollifier
from .kernels import LocalizedHeatKernel, build_localized_kernel
from .quadrature import J_constant, c_n, c_n_spatial, raw_mean, slope_fit
from .testfn import TestFunction, make_test_function, scale_translate
from .field_synthesis import Lattice, LatticeField, sample_field, sample_field_spatial
from .krough import (Weight, besov_norm_estimate, cauchy_study, exact_var_first,
                     exact_var_second, mean_error_term, pair_first,
                     pair_second_renormalized)
from .pam_solver import convergence_study, solve_pam

__all__ = [
    "__version__",
    "KRoughError", "QuadratureError", "RegimeError", "ResolutionError",
    "SingularArgumentError", "TailBoundError",
    "HurstConfig", "Mollifier", "mollifier",
    "LocalizedHeatKernel", "build_localized_kernel",
    "J_constant", "c_n", "c_n_spatial", "raw_mean", "slope_fit",
    "TestFunction", "make_test_function", "scale_translate",
    "Lattice", "LatticeField", "sample_field", "sample_field_spatial",
    "Weight", "besov_norm_estimate", "cauchy_study", "exact_var_first",
    "exact_var_second", "mean_error_term", "pair_first", "pair_second_renormalized",
    "convergence_study", "solve_pam",
]
