"""
Shared numerical machinery.

Adaptive Gauss-Legendre quadrature on finite intervals, a semi-infinite
integrator for spectral integrals with oscillatory kernels (panels split at
kernel zeros, Wynn epsilon acceleration on the partial sums), centred-grid
discrete Fourier transforms with an explicit ``hbar`` convention, grid
integration and bracketed bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import BracketError, InvalidInputError, QuadratureError

_EPS = np.finfo(float).eps
_LOW_ORDER = 20
_HIGH_ORDER = 40


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    panels: int

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise InvalidInputError("error_estimate must be non-negative")

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(self.value + other.value,
                                self.error_estimate + other.error_estimate,
                                self.panels + other.panels)

    def __sub__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(self.value - other.value,
                                self.error_estimate + other.error_estimate,
                                self.panels + other.panels)

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(factor * self.value, abs(factor) * self.error_estimate, self.panels)


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def integrate_interval(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, *,
                       rtol: float = 1e-10, atol: float = 0.0,
                       points: Sequence[float] = (),
                       max_intervals: int = 20000) -> QuadratureResult:
    """Globally adaptive Gauss-Legendre quadrature of a vectorised integrand.

    Each subinterval is evaluated with 20- and 40-point rules; their
    difference (plus a round-off floor) is the error estimate. Intervals are
    bisected until the local error is below ``rtol`` of either the local or
    the running total value (pro rata by width), or below ``atol`` pro rata.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidInputError("integrate_interval needs finite limits")
    if b == a:
        return QuadratureResult(0.0, 0.0, 0)
    if b < a:
        return integrate_interval(f, b, a, rtol=rtol, atol=atol, points=points,
                                  max_intervals=max_intervals).scaled(-1.0)

    edges = np.unique(np.concatenate([[a, b], [p for p in points if a < p < b]]))
    lo, hi = edges[:-1], edges[1:]
    length = b - a
    x1, w1 = _gauss_legendre(_LOW_ORDER)
    x2, w2 = _gauss_legendre(_HIGH_ORDER)

    accepted_value = 0.0
    accepted_error = 0.0
    n_intervals = 0
    while lo.size:
        n_intervals += lo.size
        if n_intervals > max_intervals:
            raise QuadratureError("interval budget exhausted", achieved=accepted_error / max(abs(accepted_value), 1e-300),
                                  panels=n_intervals)
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        nodes = np.concatenate([(mid[:, None] + half[:, None] * x1).ravel(),
                                (mid[:, None] + half[:, None] * x2).ravel()])
        vals = np.asarray(f(nodes), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand returned non-finite values", panels=n_intervals)
        v1 = vals[: lo.size * _LOW_ORDER].reshape(lo.size, _LOW_ORDER) @ w1 * half
        v2 = vals[lo.size * _LOW_ORDER:].reshape(lo.size, _HIGH_ORDER) @ w2 * half
        err = np.abs(v2 - v1) + 50 * _EPS * np.abs(vals[lo.size * _LOW_ORDER:]).reshape(
            lo.size, _HIGH_ORDER) @ w2 * half

        total = accepted_value + v2.sum()
        share = (hi - lo) / length
        ok = ((err <= rtol * np.abs(v2)) | (err <= rtol * abs(total) * share)
              | (err <= atol * share) | (half <= 8 * _EPS * np.abs(mid)))
        accepted_value += v2[ok].sum()
        accepted_error += err[ok].sum()
        lo, mid, hi = lo[~ok], mid[~ok], hi[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return QuadratureResult(float(accepted_value), float(accepted_error), n_intervals)


def wynn_epsilon(partial_sums: Sequence[float]) -> tuple[float, float]:
    """Wynn's epsilon extrapolation of a sequence of partial sums.

    Returns ``(limit, error)`` where the error is the difference between the
    two highest-order even-column estimates.
    """
    s = [float(v) for v in partial_sums]
    if len(s) < 3:
        return s[-1], math.inf if len(s) < 2 else abs(s[-1] - s[-2])
    prev = [0.0] * (len(s) + 1)
    cur = list(s)
    estimates = [s[-2], s[-1]]
    for k in range(1, len(s)):
        nxt = []
        for j in range(len(cur) - 1):
            diff = cur[j + 1] - cur[j]
            if abs(diff) <= 4 * _EPS * max(abs(cur[j + 1]), abs(cur[j])):
                # converged to round-off; higher columns would only amplify noise
                nxt = []
                break
            nxt.append(prev[j + 1] + 1.0 / diff)
        if not nxt:
            if k % 2 == 1:
                estimates.append(cur[-1])
            break
        prev, cur = cur, nxt
        if k % 2 == 0:
            estimates.append(cur[-1])
    return estimates[-1], abs(estimates[-1] - estimates[-2])


_KERNELS = {
    "cos": np.cos,
    "sin": np.sin,
    "1-cos": lambda x: 2.0 * np.sin(0.5 * x) ** 2,
}


def _geometric_tail(f, start, *, scale, points, tol, atol, max_panels=400):
    """Integrate ``f`` over [start, inf) with doubling panels.

    Doubling turns algebraic decay into geometric decay of the panel
    contributions; the remainder is extrapolated from the last ratio.
    """
    if start <= 0.0:
        edges = [0.0, scale * 2.0 ** -8]
    else:
        edges = [start, 2.0 * start]
    pts = sorted(p for p in points if p > 0)
    far = max(pts + [scale])
    total = QuadratureResult(0.0, 0.0, 0)
    history = []
    while True:
        a, b = edges[-2], edges[-1]
        inner = [p for p in pts if a < p < b]
        panel = integrate_interval(f, a, b, rtol=0.1 * tol, atol=0.1 * max(atol, tol * abs(total.value)),
                                   points=inner)
        total = total + panel
        history.append(panel.value)
        if len(history) >= 3 and b >= 2 * far:
            r1 = history[-1] / history[-2] if history[-2] != 0 else 0.0
            r2 = history[-2] / history[-3] if history[-3] != 0 else 0.0
            ratio = max(abs(r1), abs(r2))
            floor = max(tol * abs(total.value), atol)
            if ratio < 0.9:
                remainder = history[-1] * ratio / (1.0 - ratio)
                if abs(remainder) <= 0.1 * floor:
                    return QuadratureResult(total.value + remainder,
                                            total.error_estimate + abs(remainder), total.panels)
            elif abs(history[-1]) == 0.0:
                return total
        if len(history) >= max_panels or not math.isfinite(b):
            achieved = abs(history[-1]) / max(abs(total.value), 1e-300)
            raise QuadratureError("semi-infinite tail did not converge (integrand decays too slowly)",
                                  achieved=achieved, panels=total.panels)
        edges.append(2.0 * b)


def _oscillatory_tail(f, kernel, freq, start, *, points, tol, atol, min_panels=8, max_panels=4000):
    """Integrate ``f(x) kernel(freq x)`` over [start, inf), ``start`` a kernel zero."""
    half = math.pi / freq
    pts = sorted(p for p in points if p > start)
    g = lambda x: f(x) * kernel(freq * x)
    partial = []
    running = 0.0
    err_sum = 0.0
    n_panels = 0
    prev_estimate = None
    for k in range(max_panels):
        a = start + k * half
        b = a + half
        inner = [p for p in pts if a < p < b]
        panel = integrate_interval(g, a, b, rtol=0.1 * tol, atol=0.01 * max(atol, tol * abs(running)),
                                   points=inner)
        n_panels += panel.panels
        running += panel.value
        err_sum += panel.error_estimate
        partial.append(running)
        floor = max(tol * abs(running), atol)
        if k + 1 < min_panels:
            continue
        # amplitude has died away: the plain sum has converged
        if abs(partial[-1] - partial[-2]) <= 0.01 * floor and abs(partial[-2] - partial[-3]) <= 0.01 * floor:
            return QuadratureResult(running, err_sum + abs(partial[-1] - partial[-2]), n_panels)
        estimate, eps_err = wynn_epsilon(partial[-40:])
        if prev_estimate is not None:
            spread = max(eps_err, abs(estimate - prev_estimate))
            if spread <= 0.1 * max(tol * abs(estimate), atol):
                return QuadratureResult(estimate, err_sum + spread, n_panels)
        prev_estimate = estimate
    raise QuadratureError("oscillatory tail did not converge", achieved=abs(partial[-1] - partial[-2]) / max(abs(running), 1e-300),
                          panels=n_panels)


def integrate_semi_infinite(f: Callable[[np.ndarray], np.ndarray], *,
                            weight: str | None = None, freq: float = 0.0,
                            tol: float = 1e-10, scale: float = 1.0,
                            points: Sequence[float] = (), atol: float = 0.0) -> QuadratureResult:
    """Integrate ``f(x) * w(freq * x)`` over ``[0, inf)``.

    Parameters
    ----------
    f : callable
        Vectorised amplitude, finite on ``(0, inf)``.
    weight : {None, "cos", "sin", "1-cos"}
        Oscillatory kernel. ``"1-cos"`` is evaluated as ``2 sin^2(x/2)`` near
        the origin and split into a plain tail minus a cosine tail beyond the
        first kernel period.
    freq : float
        Kernel frequency (for spectral integrals, the time argument).
    tol : float
        Relative tolerance on the result.
    scale : float
        Characteristic width of ``f``; sets the doubling-panel ladder.
    points : sequence of float
        Locations of features of ``f`` (resonances, cut-offs) used as breakpoints.
    atol : float
        Absolute floor for convergence tests; guards results that vanish.
    """
    if weight not in (None, "cos", "sin", "1-cos"):
        raise InvalidInputError(f"unknown weight {weight!r}")
    if not (scale > 0 and math.isfinite(scale)):
        raise InvalidInputError("scale must be positive and finite")
    if not math.isfinite(freq) or freq < 0:
        raise InvalidInputError("freq must be finite and non-negative")
    if weight is not None and freq == 0.0:
        if weight == "cos":
            weight = None
        else:
            return QuadratureResult(0.0, 0.0, 0)
    if weight is None:
        return _geometric_tail(f, 0.0, scale=scale, points=points, tol=tol, atol=atol)

    half = math.pi / freq
    x0 = half if weight == "sin" else 1.5 * half
    if not math.isfinite(x0):
        raise InvalidInputError(f"freq = {freq!r} is too small to resolve")
    # a doubling ladder from the amplitude scale to x0 keeps every panel within
    # one octave, so slowly decaying amplitudes cannot fool the error estimate
    top = math.floor(math.log2(x0 / scale))
    ladder = [scale * 2.0 ** j for j in range(-8, top + 1)]
    ladder = [x for x in ladder if x0 * 2.0 ** -1100 < x < x0]
    head_points = sorted(set([p for p in points if 0 < p < x0] + ladder + [half]))
    kernel = _KERNELS[weight]
    head = integrate_interval(lambda x: f(x) * kernel(freq * x), 0.0, x0,
                              rtol=0.1 * tol, atol=0.1 * atol, points=head_points)
    ref = max(atol, tol * abs(head.value))
    if weight == "1-cos":
        plain = _geometric_tail(f, x0, scale=scale, points=points, tol=tol, atol=ref)
        ref = max(ref, tol * abs(head.value + plain.value))
        osc = _oscillatory_tail(f, np.cos, freq, x0, points=points, tol=tol, atol=ref)
        return head + plain - osc
    return head + _oscillatory_tail(f, kernel, freq, x0, points=points, tol=tol, atol=ref)


# -- grids and transforms -------------------------------------------------

def centered_axis(n: int, spacing: float) -> np.ndarray:
    """Grid ``x_j = (j - n/2) * spacing`` used by :func:`dft_nd`."""
    if n < 2 or n % 2:
        raise InvalidInputError("axis point counts must be even and >= 2")
    return (np.arange(n) - n // 2) * spacing


def conjugate_spacing(n: int, spacing: float, hbar: float = 1.0) -> float:
    return 2.0 * np.pi * hbar / (n * spacing)


def dft_nd(values: np.ndarray, spacings: Sequence[float], *, hbar: float = 1.0,
           inverse: bool = False) -> tuple[np.ndarray, tuple[float, ...]]:
    """Continuous Fourier transform sampled on centred grids.

    Forward: ``F(k) = int f(x) exp(-i k.x / hbar) dx``.
    Inverse: ``f(x) = (2 pi hbar)^-d int F(k) exp(+i k.x / hbar) dk``.

    Both input and output live on grids built by :func:`centered_axis`; the
    returned spacings are those of the output grid.
    """
    values = np.asarray(values)
    if values.ndim != len(spacings):
        raise InvalidInputError(f"{values.ndim}-d array but {len(spacings)} spacings")
    for n in values.shape:
        if n % 2:
            raise InvalidInputError("dft_nd requires even point counts")
    axes = tuple(range(values.ndim))
    shifted = np.fft.ifftshift(values, axes=axes)
    if inverse:
        out = np.fft.ifftn(shifted, axes=axes)
        factor = np.prod([n * dk / (2.0 * np.pi * hbar) for n, dk in zip(values.shape, spacings)])
    else:
        out = np.fft.fftn(shifted, axes=axes)
        factor = np.prod(spacings)
    out = np.fft.fftshift(out, axes=axes) * factor
    new = tuple(conjugate_spacing(n, dx, hbar) for n, dx in zip(values.shape, spacings))
    return out, new


def grid_integral(values: np.ndarray, axes: Sequence[np.ndarray]) -> float:
    """Trapezoidal integral of ``values`` over a tensor grid."""
    out = np.asarray(values)
    for ax in reversed(axes):
        out = trapezoid(out, ax, axis=-1)
    return float(out)


def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float, *,
                        rtol: float = 1e-10, ftol: float = 0.0,
                        max_iter: int = 400) -> float:
    """Bisection on a sign-changing bracket.

    Stops once the bracket is narrower than ``rtol * |x|`` *and*
    ``|f(x)| <= ftol``, or when the bracket can shrink no further in floating
    point.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (np.sign(flo) * np.sign(fhi) < 0):
        raise BracketError(f"f({lo})={flo:.3g} and f({hi})={fhi:.3g} do not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        narrow = (hi - lo) <= rtol * abs(mid)
        if (narrow and abs(fmid) <= ftol) or (hi - lo) <= 4 * _EPS * max(abs(lo), abs(hi), 1e-300):
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return 0.5 * (lo + hi)
