"""
Exact time-dependent phase-space distributions of the two-packet state.

Characteristic functions use the convention

    W~(Q1, P1; Q2, P2) = int W(q1, p1; q2, p2) exp(-i sum_n (q_n P_n + p_n Q_n) / hbar)

so every distribution here integrates to one and every characteristic
function equals one at the origin. All evaluators broadcast over numpy
arrays.

The two-packet mixture prefactor of the Wigner function and of the
coordinate probability is ``1 / 2(1 + exp(-d^2/4 sigma^2))``; unit trace of
the characteristic function fixes the sign in front of the overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .bath import KineticCoefficients
from .errors import InvalidInputError, UnsupportedModelError
from .numerics import centered_axis, dft_nd
from .state import CovarianceTriple, SuperpositionSpec, kl_coefficients


class PhasePoint4(NamedTuple):
    q1: float
    p1: float
    q2: float
    p2: float


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid for distribution dumps.

    ``half_widths`` are in marginal standard deviations: a position axis spans
    ``d/2 + hw * sqrt(A11)`` either side of zero and a momentum axis
    ``hw * sqrt(A22)``.
    """

    counts: tuple[int, ...] = (48, 48, 48, 48)
    half_widths: tuple[float, ...] = (6.0, 6.0, 6.0, 6.0)

    def __post_init__(self):
        if len(self.counts) != len(self.half_widths) or not 1 <= len(self.counts) <= 4:
            raise InvalidInputError("counts and half_widths must have equal length (1 to 4)")
        for n in self.counts:
            if n < 8 or n % 2:
                raise InvalidInputError(f"grid point counts must be even and >= 8, got {n}")
        for hw in self.half_widths:
            if not hw > 0:
                raise InvalidInputError("grid half widths must be positive")

    @classmethod
    def uniform(cls, n: int = 48, half_width: float = 6.0, ndim: int = 4) -> "GridSpec":
        return cls((n,) * ndim, (half_width,) * ndim)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))


def _overlap(state):
    return math.exp(-state.overlap_exponent)


# -- characteristic functions ---------------------------------------------

def char_fn_general(kin: KineticCoefficients, state: SuperpositionSpec, Q1, P1, Q2, P2):
    """Characteristic function for a bound particle (finite ``<x^2>``).

    Evaluated exactly as the general closed form, including the
    ``<x^2> K^2 / (<x^2> + sigma^2)`` compensation term.
    """
    if kin.free:
        raise UnsupportedModelError("infinite <x^2>: use char_fn_free")
    hbar, m, x2, sig2, d = kin.hbar, kin.m, kin.x2, state.sigma ** 2, state.d
    kl = kl_coefficients(kin, Q1, P1, Q2, P2)
    shrink = x2 / (x2 + sig2)
    expo = 0.0
    for Q, P, K, L in ((Q1, P1, kl.k1, kl.l1), (Q2, P2, kl.k2, kl.l2)):
        expo = expo + (x2 * (P ** 2 - shrink * K ** 2) + m ** 2 * kin.v2 * Q ** 2
                       + hbar ** 2 * L ** 2 / (4 * sig2)) / (2 * hbar ** 2)
    overlap = math.exp(-shrink * d ** 2 / (4 * sig2))
    kappa = (kl.l1 - kl.l2) * d / (4 * sig2)
    inter = 0.5 * overlap * (np.exp(kappa - expo) + np.exp(-kappa - expo))
    direct = np.cos(shrink * (kl.k1 - kl.k2) * d / (2 * hbar)) * np.exp(-expo)
    return (direct + inter) / (1 + overlap)


def char_fn_free(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec, Q1, P1, Q2, P2):
    """Free-particle characteristic function: Gaussian envelope with covariance
    ``cov`` times the interference factor."""
    hbar, m, d, sig2 = kin.hbar, kin.m, state.d, state.sigma ** 2
    expo = (cov.a11 * (P1 ** 2 + P2 ** 2) + 2 * cov.a12 * (Q1 * P1 + Q2 * P2)
            + cov.a22 * (Q1 ** 2 + Q2 ** 2)) / (2 * hbar ** 2)
    overlap = _overlap(state)
    kappa = (kin.G * (P1 - P2) + m * kin.Gdot * (Q1 - Q2)) * d / (4 * sig2)
    inter = 0.5 * overlap * (np.exp(kappa - expo) + np.exp(-kappa - expo))
    direct = np.cos((P1 - P2) * d / (2 * hbar)) * np.exp(-expo)
    return (direct + inter) / (1 + overlap)


# -- Wigner function -------------------------------------------------------

def single_packet_wigner(cov: CovarianceTriple, q, p):
    """Normalised Gaussian Wigner function of one propagated packet."""
    det = cov.det
    if not det > 0:
        raise InvalidInputError("covariance determinant must be positive")
    quad = (cov.a22 * q ** 2 - 2 * cov.a12 * q * p + cov.a11 * p ** 2) / (2 * det)
    return np.exp(-quad) / (2 * math.pi * math.sqrt(det))


def interference_phase(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec, q, p):
    """Fringe phase as a function of the relative coordinates ``q1-q2, p1-p2``."""
    m = kin.m
    num = (kin.G * cov.a22 - m * kin.Gdot * cov.a12) * q + (m * kin.Gdot * cov.a11 - kin.G * cov.a12) * p
    return num / cov.det * kin.hbar * state.d / (4 * state.sigma ** 2)


def attenuation_exponent(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec) -> float:
    """Exponent ``A(t)`` damping the Wigner interference term."""
    hbar, m = kin.hbar, kin.m
    q = hbar ** 2 / (4 * state.sigma ** 2)
    b11 = cov.a11 - q * kin.G ** 2
    b22 = cov.a22 - q * m ** 2 * kin.Gdot ** 2
    b12 = cov.a12 - q * m * kin.G * kin.Gdot
    return (b11 * b22 - b12 ** 2) / cov.det * state.overlap_exponent


def wigner_function(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec, point):
    """Two-particle Wigner function at ``point = (q1, p1, q2, p2)``.

    Two displaced products of single-packet Gaussians (direct terms) plus the
    ``exp(-A) cos(Phi)`` interference term.
    """
    q1, p1, q2, p2 = point
    h = 0.5 * state.d
    w0 = lambda q, p: single_packet_wigner(cov, q, p)
    direct = w0(q1 - h, p1) * w0(q2 + h, p2) + w0(q1 + h, p1) * w0(q2 - h, p2)
    inter = (2 * math.exp(-attenuation_exponent(cov, kin, state)) * w0(q1, p1) * w0(q2, p2)
             * np.cos(interference_phase(cov, kin, state, q1 - q2, p1 - p2)))
    return (direct + inter) / (2 * (1 + _overlap(state)))


def _packet_probability(cov, q):
    return np.exp(-q ** 2 / (2 * cov.a11)) / math.sqrt(2 * math.pi * cov.a11)


def position_probability(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec, q1, q2):
    """Joint coordinate probability density ``P(q1, q2)``."""
    h = 0.5 * state.d
    p0 = lambda q: _packet_probability(cov, q)
    direct = p0(q1 - h) * p0(q2 + h) + p0(q1 + h) * p0(q2 - h)
    amp = coherence_visibility(kin, state) * math.exp(-state.d ** 2 / (4 * cov.a11))
    k = kin.hbar * kin.G * state.d / (4 * cov.a11 * state.sigma ** 2)
    inter = 2 * amp * p0(q1) * p0(q2) * np.cos(k * (q1 - q2))
    return (direct + inter) / (2 * (1 + _overlap(state)))


def fringe_wavelength(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec) -> float:
    """Spatial period of the coordinate-space fringes along ``q1 - q2``."""
    k = kin.hbar * kin.G * state.d / (4 * cov.a11 * state.sigma ** 2)
    return math.inf if k == 0 else 2 * math.pi / abs(k)


def coherence_visibility(kin: KineticCoefficients, state: SuperpositionSpec) -> float:
    """Visibility ``a(t)`` of the coordinate-space interference pattern."""
    sig2 = state.sigma ** 2
    denom = sig2 + kin.s + kin.hbar ** 2 * kin.G ** 2 / (4 * sig2)
    return math.exp(-kin.s / denom * state.overlap_exponent)


# -- grids -----------------------------------------------------------------

def phase_space_axes(cov: CovarianceTriple, state: SuperpositionSpec, grid: GridSpec) -> list[np.ndarray]:
    """Axes in the order ``q1, p1, q2, p2`` (truncated to ``len(grid.counts)``).

    For 2-d grids the axes are ``q1, q2``.
    """
    q_scale, p_scale = math.sqrt(cov.a11), math.sqrt(cov.a22)
    if len(grid.counts) == 2:
        kinds = ("q", "q")
    else:
        kinds = ("q", "p", "q", "p")[: len(grid.counts)]
    axes = []
    for kind, n, hw in zip(kinds, grid.counts, grid.half_widths):
        half = 0.5 * state.d + hw * q_scale if kind == "q" else hw * p_scale
        axes.append(np.linspace(-half, half, n))
    return axes


def wigner_grid(cov, kin, state, grid: GridSpec | None = None):
    grid = grid or GridSpec.uniform()
    axes = phase_space_axes(cov, state, grid)
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    return axes, wigner_function(cov, kin, state, mesh)


def probability_grid(cov, kin, state, grid: GridSpec | None = None):
    grid = grid or GridSpec.uniform(ndim=2)
    axes = phase_space_axes(cov, state, grid)
    q1, q2 = np.meshgrid(*axes, indexing="ij", sparse=True)
    return axes, position_probability(cov, kin, state, q1, q2)


def wigner_from_characteristic(cov: CovarianceTriple, kin: KineticCoefficients, state: SuperpositionSpec,
                               n: int = 48) -> tuple[list[np.ndarray], np.ndarray]:
    """Wigner function obtained by a discrete 4-d inverse Fourier transform of
    :func:`char_fn_free`.

    Grid extents are balanced so that the position/momentum grids (beyond the
    packet offsets) and their conjugate grids (beyond the interference-term
    shift) reach the same number of standard deviations.

    Returns axes ``(q1, p1, q2, p2)`` and the real part of the transform.
    """
    hbar, m, d, sig2 = kin.hbar, kin.m, state.d, state.sigma ** 2
    det = cov.det
    b_P = kin.G * d / (4 * sig2)
    b_Q = m * kin.Gdot * d / (4 * sig2)
    shift_P = hbar ** 2 * (cov.a22 * b_P - cov.a12 * b_Q) / det
    shift_Q = hbar ** 2 * (cov.a11 * b_Q - cov.a12 * b_P) / det
    half_product = 0.5 * n * math.pi * hbar  # L_direct * L_conjugate for n points

    def balanced_spacing(offset, width, conj_offset, conj_width):
        # (offset + k width) (conj_offset + k conj_width) = half_product
        a = width * conj_width
        b = width * conj_offset + offset * conj_width
        c = offset * conj_offset - half_product
        k = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
        return 2 * (offset + k * width) / n

    dq = balanced_spacing(0.5 * d, math.sqrt(cov.a11), abs(shift_P), hbar * math.sqrt(cov.a22 / det))
    dp = balanced_spacing(0.0, math.sqrt(cov.a22), abs(shift_Q), hbar * math.sqrt(cov.a11 / det))
    dP = 2 * math.pi * hbar / (n * dq)
    dQ = 2 * math.pi * hbar / (n * dp)

    P = centered_axis(n, dP)
    Q = centered_axis(n, dQ)
    P1, Q1, P2, Q2 = np.meshgrid(P, Q, P, Q, indexing="ij", sparse=True)
    chi = char_fn_free(cov, kin, state, Q1, P1, Q2, P2)
    W, _ = dft_nd(chi, (dP, dQ, dP, dQ), hbar=hbar, inverse=True)
    axes = [centered_axis(n, dq), centered_axis(n, dp), centered_axis(n, dq), centered_axis(n, dp)]
    return axes, W.real
