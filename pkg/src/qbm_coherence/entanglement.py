"""
Separability of the evolving two-packet state.

The density matrix is expanded over products of strong-form coherent wave
functions (Gaussians that saturate the Schroedinger-Robertson uncertainty
relation). With the packet parameters chosen optimally the expansion weight
``P`` is pointwise non-negative, i.e. the state is separable, exactly when
the scalar criterion ``C(t) >= 0``. The first time ``C`` changes sign is the
entanglement sudden-death time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .bath import BathSpec, debroglie_wavelength, kinetic_coefficients, KineticCoefficients
from .errors import DegeneracyError, InconsistentStateError, InvalidInputError
from .numerics import find_root_bracketed
from .state import CovarianceTriple, SuperpositionSpec, covariance_coefficients


@dataclass(frozen=True)
class StrongCoherentParams:
    sigma0_sq: float
    delta0: float

    def __post_init__(self):
        if not self.sigma0_sq > 0:
            raise InvalidInputError("sigma0_sq must be positive")


@dataclass(frozen=True)
class TildeCoefficients:
    """Diagonal of the optimised positivity quadratic form.

    ``t11`` multiplies ``P^2`` (length^2), ``t22`` multiplies ``Q^2`` (momentum^2).
    """

    t11: float
    t22: float


@dataclass(frozen=True)
class Crossing:
    t_lo: float
    t_hi: float
    t_star: float


@dataclass(frozen=True)
class SeparabilityReport:
    samples: tuple[tuple[float, float], ...]
    crossing: Optional[Crossing]
    long_time_value: float
    sign_changes: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([c for _, c in self.samples])


# -- positivity quadratic form --------------------------------------------

def quadratic_form(cov: CovarianceTriple, params: StrongCoherentParams, hbar: float = 1.0) -> np.ndarray:
    """Symmetric 2x2 matrix (in ``(P, Q)`` order) whose positive definiteness
    guarantees the coherent-state expansion exists."""
    off = cov.a12 - 0.5 * hbar * params.delta0
    return np.array([
        [cov.a11 - params.sigma0_sq, off],
        [off, cov.a22 - hbar ** 2 * (1 + params.delta0 ** 2) / (4 * params.sigma0_sq)],
    ])


def optimal_parameters(cov: CovarianceTriple, hbar: float = 1.0) -> StrongCoherentParams:
    """Diagonalise the quadratic form and maximise the product of its diagonal."""
    delta0 = 2 * cov.a12 / hbar
    sigma0_sq = math.sqrt((hbar ** 2 + 4 * cov.a12 ** 2) * cov.a11 / (4 * cov.a22))
    return StrongCoherentParams(sigma0_sq, delta0)


def tilde_coefficients(cov: CovarianceTriple, hbar: float = 1.0) -> TildeCoefficients:
    if not cov.det > 0.25 * hbar ** 2:
        raise DegeneracyError(
            f"A11*A22 - A12^2 = {cov.det:.6g} <= hbar^2/4: covariance does not describe a mixed state")
    root = math.sqrt(cov.a11 * cov.a22) - math.sqrt(cov.a12 ** 2 + 0.25 * hbar ** 2)
    return TildeCoefficients(math.sqrt(cov.a11 / cov.a22) * root, math.sqrt(cov.a22 / cov.a11) * root)


# -- P function and criterion ---------------------------------------------

def _criterion_terms(tilde, kin, state):
    sig2 = state.sigma ** 2
    g = kin.hbar ** 2 * kin.G ** 2 / (4 * sig2 * tilde.t11)
    h = kin.hbar ** 2 * kin.m ** 2 * kin.Gdot ** 2 / (4 * sig2 * tilde.t22)
    return g, h, sig2 / tilde.t11


def separability_criterion(tilde: TildeCoefficients, kin: KineticCoefficients, state: SuperpositionSpec) -> float:
    """``C(t)``: the state is separable iff ``C >= 0``. Independent of ``d``."""
    g, h, w = _criterion_terms(tilde, kin, state)
    return 1.0 - g - h - w


def _fringe_coefficients(tilde, kin, state):
    sig2 = state.sigma ** 2
    a = kin.hbar * kin.G * state.d / (4 * sig2 * tilde.t11)
    b = kin.hbar * kin.m * kin.Gdot * state.d / (4 * sig2 * tilde.t22)
    return a, b


def p_bracket(tilde: TildeCoefficients, kin: KineticCoefficients, state: SuperpositionSpec, dx, dp):
    """Sign-determining factor of ``P`` as a function of ``xbar1 - xbar2`` and
    ``pbar1 - pbar2``."""
    D = state.overlap_exponent
    C = separability_criterion(tilde, kin, state)
    a, b = _fringe_coefficients(tilde, kin, state)
    y = dx * state.d / (2 * tilde.t11)
    return np.exp(C * D) * np.cosh(y) + np.cos(a * dx + b * dp)


def p_function(tilde: TildeCoefficients, kin: KineticCoefficients, state: SuperpositionSpec,
               xbar1, pbar1, xbar2, pbar2):
    """Weight of the coherent-state product expansion of the density matrix.

    Normalised so that ``int P d^2alpha1 d^2alpha2 = 1`` with
    ``d^2alpha = dxbar dpbar / 2 hbar``.
    """
    hbar = kin.hbar
    D = state.overlap_exponent
    g, h, w = _criterion_terms(tilde, kin, state)
    C = 1.0 - g - h - w
    a, b = _fringe_coefficients(tilde, kin, state)
    pref = hbar ** 2 / (math.pi ** 2 * tilde.t11 * tilde.t22 * (1 + math.exp(-D)))
    gauss = (-(pbar1 ** 2 + pbar2 ** 2) / (2 * tilde.t22) - (xbar1 ** 2 + xbar2 ** 2) / (2 * tilde.t11)
             - (1 - g - h) * D)
    dx = xbar1 - xbar2
    y = dx * state.d / (2 * tilde.t11)
    direct = 0.5 * (np.exp(gauss + C * D + y) + np.exp(gauss + C * D - y))
    inter = np.exp(gauss) * np.cos(a * dx + b * (pbar1 - pbar2))
    return pref * (direct + inter)


def min_p_bracket(tilde: TildeCoefficients, kin: KineticCoefficients, state: SuperpositionSpec,
                  n: int = 201) -> float:
    """Grid search plus local polish for the minimum of :func:`p_bracket`.

    The search window spans several fringe periods along both difference
    coordinates; it is an oracle for the closed-form criterion, so it does not
    use the location of the analytic minimum.
    """
    a, b = _fringe_coefficients(tilde, kin, state)
    x_width = 2 * tilde.t11 / max(state.d, 1e-300)
    if a != 0:
        x_width = max(x_width, 2 * math.pi / abs(a))
    xs = np.linspace(-2 * x_width, 2 * x_width, n)
    if b != 0 and math.isfinite(2 * math.pi / abs(b)):
        ps = np.linspace(-2 * math.pi / abs(b), 2 * math.pi / abs(b), n)
    else:
        ps = np.array([0.0])
    X, P = np.meshgrid(xs, ps, indexing="ij")
    vals = p_bracket(tilde, kin, state, X, P)
    best = float(vals.min())
    order = np.argsort(vals, axis=None)[:5]
    for idx in order:
        i, j = np.unravel_index(idx, vals.shape)
        x0 = np.array([X[i, j], P[i, j]])
        scale = np.array([xs[1] - xs[0], (ps[1] - ps[0]) if ps.size > 1 else 1.0])
        res = minimize(lambda z: float(p_bracket(tilde, kin, state, x0[0] + scale[0] * z[0],
                                                 x0[1] + scale[1] * z[1])),
                       np.zeros(2), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
        best = min(best, float(res.fun))
    return best


def initial_criterion(sigma: float, lambda_bar: float) -> float:
    """Closed form of ``C(0)`` in terms of ``sigma`` and the de Broglie wavelength."""
    if not (sigma > 0 and lambda_bar > 0):
        raise InvalidInputError("sigma and lambda_bar must be positive")
    ratio = 4 * sigma ** 2 / lambda_bar ** 2
    root = math.sqrt(1 + ratio)
    # root - 1 written without cancellation
    return -(1 + 1 / root) / (ratio / (root + 1))


def criterion_at(bath: BathSpec, state: SuperpositionSpec, t: float) -> float:
    """``C(t)`` through the full bath -> covariance -> tilde pipeline."""
    kin = kinetic_coefficients(bath, t)
    cov = covariance_coefficients(kin, state)
    return separability_criterion(tilde_coefficients(cov, bath.hbar), kin, state)


# -- crossing search -------------------------------------------------------

def locate_crossing(func: Callable[[float], float], times: Sequence[float], *,
                    rtol: float = 1e-6, ftol: float = 1e-8) -> SeparabilityReport:
    """Sample ``func`` on ``times`` and refine its first negative-to-non-negative
    transition by bisection."""
    times = [float(t) for t in times]
    values = [float(func(t)) for t in times]
    separable = [v >= 0 for v in values]
    changes = sum(1 for u, v in zip(separable, separable[1:]) if u != v)
    crossing = None
    for i in range(len(times) - 1):
        if not separable[i] and separable[i + 1]:
            lo, hi = times[i], times[i + 1]
            if values[i + 1] == 0.0:
                crossing = Crossing(lo, hi, hi)
            else:
                root = find_root_bracketed(func, lo, hi, rtol=rtol, ftol=ftol)
                crossing = Crossing(lo, hi, root)
            break
    return SeparabilityReport(tuple(zip(times, values)), crossing, values[-1], changes)


def sample_times(t_max: float, n_samples: int, t_min: float | None = None, spacing: str = "log") -> np.ndarray:
    """``0`` followed by ``n_samples - 1`` log- or linearly-spaced times."""
    if not t_max > 0:
        raise InvalidInputError("t_max must be positive")
    if n_samples < 2:
        raise InvalidInputError("need at least two samples")
    if spacing == "linear":
        return np.linspace(0.0, t_max, n_samples)
    if spacing != "log":
        raise InvalidInputError(f"unknown spacing {spacing!r}")
    t_min = t_min if t_min is not None else 1e-3 * t_max
    if not 0 < t_min < t_max:
        raise InvalidInputError("need 0 < t_min < t_max")
    return np.concatenate([[0.0], np.geomspace(t_min, t_max, n_samples - 1)])


def separability_time(bath: BathSpec, state: SuperpositionSpec, t_max: float, n_samples: int = 64, *,
                      t_min: float | None = None, spacing: str = "log",
                      rtol: float = 1e-6, ftol: float = 1e-8) -> SeparabilityReport:
    """Sample ``C(t)`` and locate the sudden-death time.

    Raises :class:`InconsistentStateError` if ``C(0) >= 0`` since the initial
    superposition is necessarily entangled.
    """
    if not bath.model.is_free:
        raise InvalidInputError("the separability criterion is derived for free particles only")
    if n_samples < 16:
        raise InvalidInputError("n_samples must be at least 16")
    if t_min is None:
        t_min = min(1e-3 * bath.m / bath.zeta, 1e-3 * t_max)
    times = sample_times(t_max, n_samples, t_min, spacing)
    report = locate_crossing(lambda t: criterion_at(bath, state, t), times, rtol=rtol, ftol=ftol)
    if report.samples[0][1] >= 0:
        raise InconsistentStateError(f"C(0) = {report.samples[0][1]:.6g} >= 0 but the initial state is entangled")
    return report


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of the packet-width sweep matching a target crossing time."""

    lambda_bar: float
    sigma_factors: tuple[float, ...]
    crossing_times: tuple[Optional[float], ...]
    candidates: tuple[float, ...]
    sigma: Optional[float]
    t_star: Optional[float]
    target: float = field(default=6.0)


def calibrate_sigma(bath: BathSpec, target: float = 6.0, *, factor_range: tuple[float, float] = (0.1, 10.0),
                    n_sigma: int = 25, t_max: float = 100.0, n_samples: int = 64,
                    sigma_rtol: float = 1e-6) -> CalibrationResult:
    """Scan ``sigma / lambda_bar`` log-uniformly and solve ``t*(sigma) = target``.

    Every solution is refined by bisection in ``log sigma``; the largest one is
    selected (packets wider than the de Broglie wavelength).
    """
    lam = debroglie_wavelength(bath)

    def t_star(factor):
        rep = separability_time(bath, SuperpositionSpec(sigma=factor * lam, m=bath.m), t_max, n_samples)
        return rep.crossing.t_star if rep.crossing else None

    factors = np.geomspace(*factor_range, n_sigma)
    times = [t_star(f) for f in factors]
    candidates = []
    for (f0, t0), (f1, t1) in zip(zip(factors, times), zip(factors[1:], times[1:])):
        if t0 is None or t1 is None or (t0 - target) * (t1 - target) > 0:
            continue
        log_root = find_root_bracketed(lambda u: t_star(math.exp(u)) - target, math.log(f0), math.log(f1),
                                       rtol=0.0, ftol=0.0, max_iter=int(math.log2(math.log(f1 / f0) / sigma_rtol)) + 1)
        candidates.append(math.exp(log_root) * lam)
    sigma = max(candidates) if candidates else None
    ts = t_star(sigma / lam) if sigma else None
    return CalibrationResult(lam, tuple(float(f) for f in factors), tuple(times), tuple(candidates), sigma, ts, target)


# -- strong-form coherent states ------------------------------------------

def coherent_wavefunction(x, xbar: float, pbar: float, params: StrongCoherentParams, hbar: float = 1.0):
    """Gaussian wave function saturating the strong uncertainty relation."""
    s2 = params.sigma0_sq
    return ((2 * math.pi * s2) ** -0.25
            * np.exp(-(1 - 1j * params.delta0) / (4 * s2) * (x - xbar) ** 2
                     + 1j * pbar * x / hbar - 1j * xbar * pbar / (2 * hbar)))


def wavefunction_moments(params: StrongCoherentParams, xbar: float = 0.0, pbar: float = 0.0,
                         hbar: float = 1.0, half_width: float = 12.0) -> dict[str, float]:
    """Position/momentum variances and symmetrised covariance, by numerical
    integration on a grid with spectral differentiation."""
    s0 = math.sqrt(params.sigma0_sq)
    L = half_width * s0
    k_max = abs(pbar) / hbar + abs(params.delta0) * L / (2 * params.sigma0_sq) + 12.0 / s0
    n = 1 << max(10, math.ceil(math.log2(4 * L * k_max / math.pi)))
    if n > 1 << 22:
        raise InvalidInputError("wave function too oscillatory for the moment grid")
    x = xbar + np.linspace(-L, L, n, endpoint=False)
    dx = x[1] - x[0]
    phi = coherent_wavefunction(x, xbar, pbar, params, hbar)
    k = 2 * math.pi * np.fft.fftfreq(n, dx)
    dphi = np.fft.ifft(1j * k * np.fft.fft(phi))
    rho = np.abs(phi) ** 2
    norm = rho.sum() * dx
    mean_x = (x * rho).sum() * dx / norm
    p_phi = -1j * hbar * dphi
    mean_p = (np.conj(phi) * p_phi).sum().real * dx / norm
    var_x = ((x - mean_x) ** 2 * rho).sum() * dx / norm
    var_p = hbar ** 2 * (np.abs(dphi) ** 2).sum() * dx / norm - mean_p ** 2
    # symmetrised <(dx dp + dp dx)/2> is the real part of <dx dp>
    cov_xp = ((np.conj(phi) * (x - mean_x) * p_phi).sum().real * dx
              - mean_p * ((x - mean_x) * rho).sum() * dx) / norm
    return {"norm": norm, "mean_x": mean_x, "mean_p": mean_p, "var_x": var_x, "var_p": var_p, "cov_xp": cov_xp,
            "defect": var_x * var_p - cov_xp ** 2 - 0.25 * hbar ** 2}
