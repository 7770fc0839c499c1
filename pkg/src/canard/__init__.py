"""Singular Hopf bifurcation and canard analysis for planar slow-fast systems.

Submodules:
  jet         truncated multivariate Taylor polynomials and their algebra
  normalform  coefficient record of the slow-fast normal form, closed-form
              Hopf/canard quantities, criticality classification
  blowup      rescaling to the family chart, numeric Hopf location and a
              Lyapunov coefficient oracle independent of the closed forms
  allee       predator-prey model with strong Allee effect: equilibria,
              critical branches, normal-form reduction, bifurcation curves
  sdi         slow divergence integrals and cyclicity bounds for canard
              cycles of the model
  dynamics    explicit Runge-Kutta integration, return maps, limit cycle
              location
  cli         command line entry points
"""

from .errors import DomainError, NumericsError
from .normalform import (
    COEFF_NAMES,
    Criticality,
    HopfAnalysis,
    NormalFormCoefficients,
    analyze_record,
    classify_hopf,
    compute_A,
    l1_series,
    lambda_H,
    lambda_c,
    omega_coefficients,
    rho_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "COEFF_NAMES",
    "Criticality",
    "DomainError",
    "HopfAnalysis",
    "NormalFormCoefficients",
    "NumericsError",
    "analyze_record",
    "classify_hopf",
    "compute_A",
    "l1_series",
    "lambda_H",
    "lambda_c",
    "omega_coefficients",
    "rho_coefficients",
    "__version__",
]
