"""Initial two-packet superposition and its time-dependent Gaussian coefficients."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import KineticCoefficients
from .errors import InvalidInputError, UnsupportedModelError


@dataclass(frozen=True)
class SuperpositionSpec:
    """Packet width ``sigma`` and separation ``d`` (lengths), particle mass ``m``.

    The packets of particle 1 sit at ``+-d/2`` while those of particle 2 sit at
    ``-+d/2``; the state is centred on the origin.
    """

    sigma: float
    d: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidInputError("sigma must be positive and finite")
        if not (self.d >= 0 and math.isfinite(self.d)):
            raise InvalidInputError("d must be non-negative and finite")
        if not self.m > 0:
            raise InvalidInputError("m must be positive")

    @property
    def overlap_exponent(self) -> float:
        """``d^2 / 4 sigma^2``; ``exp(-this)`` is the packet overlap."""
        return self.d ** 2 / (4.0 * self.sigma ** 2)


@dataclass(frozen=True)
class CovarianceTriple:
    """Single-packet phase-space covariance at time ``t``.

    ``a11`` is length^2, ``a12`` action, ``a22`` momentum^2.
    """

    a11: float
    a12: float
    a22: float
    t: float = 0.0

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 ** 2

    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])


@dataclass(frozen=True)
class KLCoefficients:
    k1: float
    k2: float
    l1: float
    l2: float


def covariance_coefficients(kin: KineticCoefficients, state: SuperpositionSpec) -> CovarianceTriple:
    """Free-particle covariance of one propagated wave packet.

    A11 = sigma^2 + s + hbar^2 G^2 / 4 sigma^2
    A12 = m sdot / 2 + hbar^2 m Gdot G / 4 sigma^2
    A22 = m^2 <xdot^2> + hbar^2 m^2 Gdot^2 / 4 sigma^2
    """
    m, hbar = state.m, kin.hbar
    q = hbar ** 2 / (4.0 * state.sigma ** 2)
    a11 = state.sigma ** 2 + kin.s + q * kin.G ** 2
    a12 = 0.5 * m * kin.sdot + q * m * kin.Gdot * kin.G
    a22 = m ** 2 * kin.v2 + q * m ** 2 * kin.Gdot ** 2
    return CovarianceTriple(a11, a12, a22, kin.t)


def kl_coefficients(kin: KineticCoefficients, Q1: float, P1: float, Q2: float, P2: float) -> KLCoefficients:
    """``K_n = (c P_n + m cdot Q_n) / <x^2>``, ``L_n = G P_n + m Gdot Q_n``."""
    if kin.free or kin.c is None:
        raise UnsupportedModelError("K_n needs a finite <x^2>; use the free-particle characteristic function")
    m = kin.m

    def k(Q, P):
        return (kin.c * P + m * kin.cdot * Q) / kin.x2

    def l(Q, P):
        return kin.G * P + m * kin.Gdot * Q

    return KLCoefficients(k(Q1, P1), k(Q2, P2), l(Q1, P1), l(Q2, P2))
