"""Critical-point statistics of stationary isotropic Gaussian random fields.

Exact GOE ordered-eigenvalue densities, mean critical-point counts by Morse
index, two-point correlation functions of critical points, and a simulation
lab that cross-validates the analytic formulas against synthesised fields.
"""

from .covariance import CovarianceModel, ModelError, parse_model_spec
from .goe import (
    closed_form_density,
    gamma_const,
    gamma_const_indexed,
    joint_eigen_density,
    normalization_constant,
    ordered_eigen_density,
    sample_goe_spectra,
)
from .pfaffian import SkewMatrix, pfaffian
from .quadrature import Interval, QuadratureError, integrate_1d

__version__ = "0.1.0"

__all__ = [
    "CovarianceModel",
    "ModelError",
    "parse_model_spec",
    "closed_form_density",
    "gamma_const",
    "gamma_const_indexed",
    "joint_eigen_density",
    "normalization_constant",
    "ordered_eigen_density",
    "sample_goe_spectra",
    "SkewMatrix",
    "pfaffian",
    "Interval",
    "QuadratureError",
    "integrate_1d",
    "__version__",
]
