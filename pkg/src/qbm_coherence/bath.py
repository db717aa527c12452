"""
Linear passive heat baths: response and fluctuation functions.

Three models are supported, each specified by a :class:`BathSpec`:

``OHMIC_FREE``
    free particle, frequency-independent friction ``zeta``.
``SINGLE_RELAXATION_FREE``
    free particle, memory friction ``zeta / (1 - i omega tau)``.
``OHMIC_OSCILLATOR``
    harmonically bound particle (frequency ``omega0``) with Ohmic friction.

Fluctuation quantities come from the fluctuation-dissipation spectral
integrals

    s(t)       = (2 hbar / pi) int_0^inf F(w) (1 - cos wt) dw
    <xdot^2>   = (hbar / pi)   int_0^inf w^2 F(w) dw
    <x^2>      = (hbar / pi)   int_0^inf F(w) dw

with ``F(w) = coth(hbar w / 2kT) Im alpha(w)`` (times ``Lambda^2/(Lambda^2+w^2)``
when a UV ``cutoff`` Lambda is set). All functions are pure; results for a
given ``(spec, t)`` are memoised.
"""
from __future__ import annotations

import enum
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError, InvalidInputError, UnsupportedModelError
from .numerics import QuadratureResult, integrate_semi_infinite

DEFAULT_TOL = 1e-10
_BALLISTIC_PHASE = 1e-8
_MIN_RESOLVED_PHASE = 1e-100


class BathModel(str, enum.Enum):
    OHMIC_FREE = "ohmic"
    SINGLE_RELAXATION_FREE = "srt"
    OHMIC_OSCILLATOR = "oscillator"

    @property
    def is_free(self) -> bool:
        return self is not BathModel.OHMIC_OSCILLATOR


@dataclass(frozen=True)
class BathSpec:
    """Bath model and physical parameters.

    Units are any consistent set; the defaults are natural units
    ``hbar = m = 1`` with time measured in ``m / zeta``.

    Attributes
    ----------
    model : BathModel
    zeta : float
        Friction constant (mass / time).
    tau : float
        Memory time of the single-relaxation-time model (time).
    kT : float
        Temperature as an energy.
    m : float
        Particle mass.
    omega0 : float
        Oscillator angular frequency, only for ``OHMIC_OSCILLATOR``.
    cutoff : float or None
        UV angular frequency regularising the fluctuation integrals.
    hbar : float
        Action scale.
    """

    model: BathModel = BathModel.OHMIC_FREE
    zeta: float = 1.0
    tau: float = 0.0
    kT: float = 0.0
    m: float = 1.0
    omega0: float = 0.0
    cutoff: Optional[float] = None
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "model", BathModel(self.model))
        for name in ("zeta", "tau", "kT", "m", "omega0", "hbar"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidInputError(f"{name} must be finite, got {value}")
        if self.zeta <= 0 or self.m <= 0 or self.hbar <= 0:
            raise InvalidInputError("zeta, m and hbar must be positive")
        if self.kT < 0 or self.tau < 0:
            raise InvalidInputError("kT and tau must be non-negative")
        if self.model is BathModel.SINGLE_RELAXATION_FREE and self.tau <= 0:
            raise InvalidInputError("the single relaxation time model needs tau > 0")
        if self.model is BathModel.OHMIC_OSCILLATOR and self.omega0 <= 0:
            raise InvalidInputError("the oscillator model needs omega0 > 0")
        if self.model.is_free and self.omega0 != 0:
            raise InvalidInputError("omega0 is only meaningful for the oscillator model")
        if self.cutoff is not None and not (self.cutoff > 0 and math.isfinite(self.cutoff)):
            raise InvalidInputError("cutoff must be positive and finite")

    @property
    def gamma(self) -> float:
        """Ohmic relaxation rate ``zeta / m``."""
        return self.zeta / self.m

    def rates(self) -> list[float]:
        """Characteristic angular frequencies of the spectral functions."""
        out = [self.gamma]
        if self.tau > 0:
            out.append(1.0 / self.tau)
        if self.omega0 > 0:
            out.append(self.omega0)
        if self.cutoff is not None:
            out.append(self.cutoff)
        if self.kT > 0:
            out.append(self.kT / self.hbar)
        return sorted(out)


@dataclass(frozen=True)
class KineticCoefficients:
    """Time-dependent scalars feeding every distribution formula.

    ``x2`` is ``math.inf`` for free models, in which case ``c`` and ``cdot``
    are ``None``. ``v2`` is ``nan`` only when built with ``strict=False`` for
    a bath whose velocity variance diverges.
    """

    t: float
    G: float
    Gdot: float
    s: float
    sdot: float
    v2: float
    x2: float = math.inf
    c: Optional[float] = None
    cdot: Optional[float] = None
    m: float = field(default=1.0, repr=False)
    hbar: float = field(default=1.0, repr=False)

    @property
    def free(self) -> bool:
        return math.isinf(self.x2)


def _check_time(t):
    if not (math.isfinite(t) and t >= 0):
        raise InvalidInputError(f"time must be finite and >= 0, got {t}")
    if 0 < t < sys.float_info.min:
        raise InvalidInputError(f"time {t!r} is subnormal; use 0 or a normal float")


# -- response --------------------------------------------------------------

def susceptibility(spec: BathSpec, omega):
    """Retarded response ``alpha(omega + i0)``; scalar or array ``omega``."""
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("omega must be finite")
    if spec.model.is_free and np.any(w == 0):
        raise InvalidInputError("free-particle susceptibility has a pole at omega = 0")
    m, zeta = spec.m, spec.zeta
    if spec.model is BathModel.OHMIC_FREE:
        denom = -m * w ** 2 - 1j * zeta * w
    elif spec.model is BathModel.SINGLE_RELAXATION_FREE:
        denom = -m * w ** 2 - 1j * zeta * w / (1 - 1j * w * spec.tau)
    else:
        denom = m * (spec.omega0 ** 2 - w ** 2) - 1j * zeta * w
    out = 1.0 / denom
    return complex(out) if out.ndim == 0 else out


def _im_alpha(spec: BathSpec, w):
    # rational closed forms; avoid the complex division in the hot path
    m, zeta = spec.m, spec.zeta
    if spec.model is BathModel.OHMIC_FREE:
        with np.errstate(over="ignore"):
            return zeta / (w * (m * m * w * w + zeta * zeta))
    if spec.model is BathModel.SINGLE_RELAXATION_FREE:
        # w is factored out of Re/Im of the denominator so tiny w cannot underflow
        with np.errstate(over="ignore"):  # overflow at huge w correctly yields 0
            lorentz = 1.0 / (1 + (w * spec.tau) ** 2)
            a = zeta * spec.tau * lorentz - m
            b = zeta * lorentz
            return b / (w * (w * w * a * a + b * b))
    with np.errstate(over="ignore"):
        return zeta * w / ((m * (spec.omega0 ** 2 - w * w)) ** 2 + (zeta * w) ** 2)


def _coth_factor(spec: BathSpec, w):
    if spec.kT == 0:
        return np.ones_like(w)
    with np.errstate(over="ignore"):  # x = inf gives coth = 1, the zero-temperature value
        x = spec.hbar * w / (2.0 * spec.kT)
    out = np.empty_like(x)
    small = np.abs(x) < 5e-7
    xs = x[small]
    out[small] = 1.0 / xs + xs / 3.0
    out[~small] = 1.0 / np.tanh(x[~small])
    return out


def spectral_weight(spec: BathSpec, omega):
    """``coth(hbar w / 2kT) Im alpha(w)``, cutoff-regularised if requested."""
    w = np.asarray(omega, dtype=float)
    out = _coth_factor(spec, w) * _im_alpha(spec, w)
    if spec.cutoff is not None:
        out = out * spec.cutoff ** 2 / (spec.cutoff ** 2 + w * w)
    return out


def _integrate(spec, f, tol, **kw):
    # rates far below the fastest one carry no resolvable structure and would
    # only stretch the panel ladder
    rates = spec.rates()
    rates = [r for r in rates if r >= 1e-9 * rates[-1]]
    return integrate_semi_infinite(f, scale=rates[0], points=rates, tol=tol, **kw)


# -- Green function --------------------------------------------------------

def _srt_poles(spec: BathSpec):
    # non-zero roots of m tau z^2 + m z + zeta (numerically stable form)
    a, b, c = spec.m * spec.tau, spec.m, spec.zeta
    disc = complex(b * b - 4 * a * c)
    q = -0.5 * (b + np.sqrt(disc))
    return q / a, c / q


def green_function(spec: BathSpec, t: float) -> tuple[float, float]:
    """Retarded Green function ``G(t)`` and its derivative.

    ``G(0) = 0``, ``Gdot(0) = 1/m``. Units: time/mass and 1/mass.
    """
    _check_time(t)
    m, zeta = spec.m, spec.zeta
    if t == 0:
        return 0.0, 1.0 / m
    if spec.model is BathModel.OHMIC_FREE:
        e = math.exp(-zeta * t / m)
        return -math.expm1(-zeta * t / m) / zeta, e / m
    if spec.model is BathModel.OHMIC_OSCILLATOR:
        return _oscillator_green(spec, t)

    # G~(z) = (1 + z tau) / (z (m tau z^2 + m z + zeta)); residues at 0, r1, r2
    tau = spec.tau
    r1, r2 = _srt_poles(spec)
    G, Gdot = 1.0 / zeta, 0.0
    if abs(r1 - r2) <= 1e-7 * abs(r1):
        r = 0.5 * (r1 + r2)
        e = np.exp(r * t)
        G = G + e * (-1.0 / r ** 2 + (1.0 / r + tau) * t) / (m * tau)
        Gdot = Gdot + e * ((1 + r * tau) * t + tau) / (m * tau)
    else:
        for r, other in ((r1, r2), (r2, r1)):
            res = (1 + r * tau) / (r * m * tau * (r - other))
            e = np.exp(r * t)
            G = G + res * e
            Gdot = Gdot + res * r * e
    return float(np.real(G)), float(np.real(Gdot))


def _oscillator_green(spec, t):
    m = spec.m
    half_gamma = 0.5 * spec.gamma
    disc = spec.omega0 ** 2 - half_gamma ** 2
    decay = math.exp(-half_gamma * t)
    scale = spec.omega0 ** 2
    if abs(disc) <= 1e-12 * scale:
        return t * decay / m, decay * (1 - half_gamma * t) / m
    if disc > 0:
        w1 = math.sqrt(disc)
        sn, cs = math.sin(w1 * t), math.cos(w1 * t)
        return decay * sn / (m * w1), decay * (cs - half_gamma * sn / w1) / m
    k = math.sqrt(-disc)
    sh, ch = math.sinh(k * t), math.cosh(k * t)
    return decay * sh / (m * k), decay * (ch - half_gamma * sh / k) / m


# -- fluctuations ----------------------------------------------------------

def _msd_results(spec: BathSpec, t: float, tol: float):
    if t == 0:
        zero = QuadratureResult(0.0, 0.0, 0)
        return zero, zero
    x = t * spec.rates()[-1]
    if _strict_ohmic(spec):
        if x < _MIN_RESOLVED_PHASE:
            raise InvalidInputError(
                f"t = {t!r} is below the resolvable range for strict Ohmic friction (t * rate < 1e-100)")
    elif x < _BALLISTIC_PHASE:
        # s = <xdot^2> t^2 (1 + O(x^2 log x)); the correction is below double precision here
        v2 = velocity_variance(spec, tol)
        return (QuadratureResult(v2 * t * t, 1e-16 * v2 * t * t, 0),
                QuadratureResult(2 * v2 * t, 2e-16 * v2 * t, 0))
    pref = 2.0 * spec.hbar / math.pi
    f = lambda w: spectral_weight(spec, w)
    g = lambda w: w * spectral_weight(spec, w)
    s = _integrate(spec, f, tol, weight="1-cos", freq=t)
    sdot = _integrate(spec, g, tol, weight="sin", freq=t)
    return s.scaled(pref), sdot.scaled(pref)


@lru_cache(maxsize=8192)
def _msd_cached(spec, t, tol):
    s, sdot = _msd_results(spec, t, tol)
    return max(s.value, 0.0), sdot.value


def mean_square_displacement(spec: BathSpec, t: float, *, tol: float = DEFAULT_TOL,
                             full_output: bool = False):
    """Mean square displacement ``s(t) = <(x(t) - x(0))^2>`` and ``ds/dt``.

    With ``full_output`` the two :class:`QuadratureResult` objects (carrying
    error estimates) are returned instead of floats.
    """
    _check_time(t)
    if full_output:
        return _msd_results(spec, t, tol)
    return _msd_cached(spec, float(t), tol)


def _strict_ohmic(spec):
    return spec.model in (BathModel.OHMIC_FREE, BathModel.OHMIC_OSCILLATOR) and spec.cutoff is None


@lru_cache(maxsize=256)
def velocity_variance(spec: BathSpec, tol: float = DEFAULT_TOL) -> float:
    """Equilibrium ``<xdot^2>``.

    Strict Ohmic friction gives a spectral integrand ``~ 1/w`` at large ``w``
    (zero-point motion), so these models raise :class:`DivergenceError` unless
    a cutoff is set.
    """
    if _strict_ohmic(spec):
        raise DivergenceError(
            "velocity variance diverges logarithmically for strict Ohmic friction; set a cutoff")
    res = _integrate(spec, lambda w: w * w * spectral_weight(spec, w), tol)
    return res.value * spec.hbar / math.pi


@lru_cache(maxsize=256)
def position_variance(spec: BathSpec, tol: float = DEFAULT_TOL) -> float:
    """Equilibrium ``<x^2>``; finite only for the oscillator model."""
    if spec.model.is_free:
        raise UnsupportedModelError("<x^2> is infinite for a free particle")
    res = _integrate(spec, lambda w: spectral_weight(spec, w), tol)
    return res.value * spec.hbar / math.pi


def correlation_function(spec: BathSpec, t: float, *, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Symmetrised position correlation ``c(t) = <x^2> - s(t)/2`` and ``dc/dt``."""
    if spec.model.is_free:
        raise UnsupportedModelError("c(t) needs a finite <x^2>; use the free-particle path")
    s, sdot = mean_square_displacement(spec, t, tol=tol)
    return position_variance(spec, tol) - 0.5 * s, -0.5 * sdot


def debroglie_wavelength(spec: BathSpec, tol: float = DEFAULT_TOL) -> float:
    return spec.hbar / (spec.m * math.sqrt(velocity_variance(spec, tol)))


def kinetic_coefficients(spec: BathSpec, t: float, *, tol: float = DEFAULT_TOL,
                         strict: bool = True) -> KineticCoefficients:
    """Bundle ``G, Gdot, s, sdot, v2`` (and ``x2, c, cdot`` for the oscillator)."""
    G, Gdot = green_function(spec, t)
    s, sdot = mean_square_displacement(spec, t, tol=tol)
    try:
        v2 = velocity_variance(spec, tol)
    except DivergenceError:
        if strict:
            raise
        v2 = math.nan
    x2, c, cdot = math.inf, None, None
    if not spec.model.is_free:
        x2 = position_variance(spec, tol)
        c, cdot = x2 - 0.5 * s, -0.5 * sdot
    return KineticCoefficients(t=float(t), G=G, Gdot=Gdot, s=s, sdot=sdot, v2=v2,
                               x2=x2, c=c, cdot=cdot, m=spec.m, hbar=spec.hbar)


def _kin_worker(args):
    spec, t, tol, strict = args
    return kinetic_coefficients(spec, t, tol=tol, strict=strict)


def kinetics_series(spec: BathSpec, times: Sequence[float], *, tol: float = DEFAULT_TOL,
                    strict: bool = True, workers: int = 1) -> list[KineticCoefficients]:
    """Evaluate :func:`kinetic_coefficients` on many times, in input order."""
    jobs = [(spec, float(t), tol, strict) for t in times]
    if workers <= 1 or len(jobs) < 2:
        return [_kin_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_kin_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
