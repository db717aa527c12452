"""Decoherence and entanglement sudden death of two Brownian particles.

Bath kinetics (Green function, mean-square displacement, velocity variance),
Gaussian two-packet states, their Wigner and position distributions, and the
separability criterion built from the coherent-state P-function.
"""
__version__ = "0.1.0"

from .bath import (BathModel, BathSpec, KineticCoefficients, debroglie_wavelength, green_function,
                   kinetic_coefficients, kinetics_series, mean_square_displacement, velocity_variance)
from .entanglement import (SeparabilityReport, calibrate_sigma, criterion_at, initial_criterion,
                           separability_criterion, separability_time, tilde_coefficients)
from .errors import (BracketError, ConfigError, DegeneracyError, DivergenceError, InconsistentStateError,
                     InvalidInputError, QBMError, QuadratureError, UnsupportedModelError)
from .state import CovarianceTriple, SuperpositionSpec, covariance_coefficients
from .wigner import GridSpec, coherence_visibility, position_probability, wigner_function

__all__ = [
    "BathModel", "BathSpec", "KineticCoefficients", "debroglie_wavelength", "green_function",
    "kinetic_coefficients", "kinetics_series", "mean_square_displacement", "velocity_variance",
    "SeparabilityReport", "calibrate_sigma", "criterion_at", "initial_criterion",
    "separability_criterion", "separability_time", "tilde_coefficients",
    "BracketError", "ConfigError", "DegeneracyError", "DivergenceError", "InconsistentStateError",
    "InvalidInputError", "QBMError", "QuadratureError", "UnsupportedModelError",
    "CovarianceTriple", "SuperpositionSpec", "covariance_coefficients",
    "GridSpec", "coherence_visibility", "position_probability", "wigner_function",
]
