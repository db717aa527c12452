import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from qbm_coherence.bath import (BathModel, BathSpec, correlation_function, debroglie_wavelength,
                                green_function, kinetic_coefficients, kinetics_series,
                                mean_square_displacement, position_variance, spectral_weight,
                                susceptibility, velocity_variance)
from qbm_coherence.errors import DivergenceError, InvalidInputError, UnsupportedModelError

SRT = BathModel.SINGLE_RELAXATION_FREE
OHMIC = BathModel.OHMIC_FREE
OSC = BathModel.OHMIC_OSCILLATOR

positive = st.floats(0.2, 5.0)


def srt_baths():
    return st.builds(lambda z, tau, kT, m: BathSpec(SRT, zeta=z, tau=tau, kT=kT, m=m),
                     positive, st.floats(0.02, 2.0), st.floats(0.0, 3.0), positive)


# -- validation -------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(zeta=0.0), dict(zeta=-1.0), dict(m=0.0), dict(hbar=-1.0), dict(kT=-0.1),
    dict(zeta=math.nan), dict(kT=math.inf), dict(model=SRT, tau=0.0), dict(model=OSC),
    dict(omega0=1.0), dict(cutoff=0.0), dict(cutoff=math.inf), dict(model="bogus"),
])
def test_invalid_bath_rejected(kwargs):
    with pytest.raises((InvalidInputError, ValueError)):
        BathSpec(**kwargs)


def test_model_accepts_string_values():
    assert BathSpec("srt", tau=0.5).model is SRT
    assert BathModel("oscillator").is_free is False


def test_negative_time_rejected():
    spec = BathSpec()
    for bad in (-1.0, math.nan, math.inf, 5e-324):
        with pytest.raises(InvalidInputError):
            green_function(spec, bad)
        with pytest.raises(InvalidInputError):
            mean_square_displacement(spec, bad)


# -- response ---------------------------------------------------------------

@given(srt_baths(), st.floats(0.01, 100.0))
def test_susceptibility_is_passive_and_real_in_time(spec, w):
    a = susceptibility(spec, w)
    assert a.imag > 0
    assert susceptibility(spec, -w) == pytest.approx(a.conjugate())


@given(srt_baths(), st.floats(0.01, 50.0))
def test_closed_form_weight_matches_complex_division(spec, w):
    cold = BathSpec(SRT, zeta=spec.zeta, tau=spec.tau, m=spec.m)
    assert spectral_weight(cold, w) == pytest.approx(susceptibility(cold, w).imag, rel=1e-12)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(0.0, 20.0))
def test_ohmic_green_closed_form(zeta, m, t):
    G, Gdot = green_function(BathSpec(OHMIC, zeta=zeta, m=m), t)
    g = zeta / m
    assert G == pytest.approx(-math.expm1(-g * t) / zeta, rel=1e-11, abs=1e-300)
    assert Gdot == pytest.approx(math.exp(-g * t) / m, rel=1e-11, abs=1e-300)


@given(srt_baths())
def test_green_initial_and_final_values(spec):
    G0, Gdot0 = green_function(spec, 0.0)
    assert abs(G0) < 1e-12 / spec.zeta
    assert Gdot0 == pytest.approx(1 / spec.m, rel=1e-10)
    t_long = 60 * max(spec.m / spec.zeta, spec.tau)
    assert green_function(spec, t_long)[0] == pytest.approx(1 / spec.zeta, rel=1e-8)


@given(srt_baths(), st.floats(0.05, 10.0))
def test_green_derivative_consistent(spec, t):
    h = 1e-5 * max(t, 1.0)
    fd = (green_function(spec, t + h)[0] - green_function(spec, t - h)[0]) / (2 * h)
    assert green_function(spec, t)[1] == pytest.approx(fd, rel=1e-6, abs=1e-8 / spec.m)


@pytest.mark.parametrize("tau,t", [(0.1, 0.7), (1 / 6, 2.0), (0.25, 1.3), (2.0, 5.0)])
def test_srt_green_matches_sine_transform(tau, t):
    """G(t) = (2/pi) int_0^inf Im alpha(w) sin(w t) dw, evaluated with QUADPACK."""
    spec = BathSpec(SRT, tau=tau)
    val, _ = quad(lambda w: susceptibility(spec, w).imag if w > 0 else 1.0, 0, np.inf,
                  weight="sin", wvar=t, limlst=200)
    assert green_function(spec, t)[0] == pytest.approx(2 * val / math.pi, rel=1e-7)


def test_srt_degenerate_poles_continuous():
    tau = 0.25  # m tau z^2 + m z + zeta has a double root
    spec = BathSpec(SRT, tau=tau)
    nearby = BathSpec(SRT, tau=tau * (1 + 1e-6))
    for t in (0.3, 1.0, 4.0):
        assert green_function(spec, t)[0] == pytest.approx(green_function(nearby, t)[0], rel=1e-5)


@pytest.mark.parametrize("omega0", [0.2, 0.5, 3.0])
def test_oscillator_green_regimes(omega0):
    spec = BathSpec(OSC, omega0=omega0)
    w = spec.zeta / spec.m
    for t in (0.5, 2.0, 7.0):
        G, Gdot = green_function(spec, t)
        h = 1e-6
        fd = (green_function(spec, t + h)[0] - green_function(spec, t - h)[0]) / (2 * h)
        assert Gdot == pytest.approx(fd, rel=1e-6, abs=1e-10)
        # equation of motion m G'' + zeta G' + m w0^2 G = 0 for t > 0
        Gddot = (green_function(spec, t + h)[1] - green_function(spec, t - h)[1]) / (2 * h)
        assert spec.m * Gddot + spec.zeta * Gdot + spec.m * omega0 ** 2 * G == pytest.approx(0, abs=1e-6)
    assert w > 0


# -- fluctuations -----------------------------------------------------------

def test_srt_velocity_variance_matches_mpmath():
    spec = BathSpec(SRT, tau=1 / 6)
    with mpmath.workdps(30):
        def f(w):
            re = -w * w + w * w * spec.tau / (1 + (w * spec.tau) ** 2)
            im = w / (1 + (w * spec.tau) ** 2)
            return w * w * im / (re * re + im * im)
        ref = float(mpmath.quad(f, [0, 1, 6, 36, mpmath.inf]) / mpmath.pi)
    assert velocity_variance(spec) == pytest.approx(ref, rel=1e-9)
    assert debroglie_wavelength(spec) == pytest.approx(1 / math.sqrt(ref), rel=1e-9)


@pytest.mark.parametrize("cutoff", [5.0, 30.0, 400.0])
def test_ohmic_velocity_variance_with_cutoff_closed_form(cutoff):
    spec = BathSpec(OHMIC, cutoff=cutoff)
    exact = cutoff ** 2 * math.log(cutoff) / (math.pi * (cutoff ** 2 - 1))
    assert velocity_variance(spec) == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("kT", [0.0, 0.5, 10.0])
@pytest.mark.parametrize("model,extra", [(OHMIC, {}), (OSC, {"omega0": 1.0})])
def test_strict_ohmic_velocity_variance_diverges(model, extra, kT):
    spec = BathSpec(model, kT=kT, **extra)
    with pytest.raises(DivergenceError):
        velocity_variance(spec)
    kin = kinetic_coefficients(spec, 1.0, strict=False)
    assert math.isnan(kin.v2)
    with pytest.raises(DivergenceError):
        kinetic_coefficients(spec, 1.0)


@given(srt_baths(), st.floats(0.05, 30.0))
def test_msd_derivative_consistent(spec, t):
    h = 1e-4 * t
    s_plus = mean_square_displacement(spec, t + h)[0]
    s_minus = mean_square_displacement(spec, t - h)[0]
    sdot = mean_square_displacement(spec, t)[1]
    assert sdot == pytest.approx((s_plus - s_minus) / (2 * h), rel=1e-5, abs=1e-9)


@given(srt_baths(), st.floats(1e-4, 1e-2))
def test_msd_ballistic_start(spec, scale):
    t = scale * min(spec.tau, spec.m / spec.zeta)
    s, _ = mean_square_displacement(spec, t)
    assert s == pytest.approx(velocity_variance(spec) * t * t, rel=2e-2, abs=0)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_srt_msd_matches_mpmath_oscillatory_quadrature(t):
    spec = BathSpec(SRT, tau=1 / 6)
    with mpmath.workdps(25):
        def f(w):
            re = -w * w + w * w * spec.tau / (1 + (w * spec.tau) ** 2)
            im = w / (1 + (w * spec.tau) ** 2)
            return im / (re * re + im * im) * (1 - mpmath.cos(w * t))
        ref = float(2 / mpmath.pi * mpmath.quadosc(f, [0, mpmath.inf], omega=t))
    s, _ = mean_square_displacement(spec, t)
    assert s == pytest.approx(ref, rel=1e-8)


def test_msd_error_estimate_reported():
    s, sdot = mean_square_displacement(BathSpec(SRT, tau=0.3, kT=0.7), 3.0, full_output=True)
    assert s.error_estimate < 1e-8 * s.value and s.panels > 0
    assert sdot.error_estimate < 1e-8 * abs(sdot.value)


@pytest.mark.parametrize("t", [0.5, 3.0, 20.0])
def test_high_temperature_ohmic_reaches_classical_limit(t):
    kT = 200.0
    spec = BathSpec(OHMIC, kT=kT)
    classical = 2 * kT * (t - (1 - math.exp(-t)))
    s, _ = mean_square_displacement(spec, t)
    # leading quantum correction is relative O(hbar gamma / kT)
    assert s == pytest.approx(classical, rel=0.02)


def test_srt_approaches_ohmic_as_memory_vanishes():
    ohmic = BathSpec(OHMIC, kT=0.5)
    srt = BathSpec(SRT, tau=1e-6, kT=0.5)
    for t in (0.5, 3.0, 30.0):
        assert green_function(srt, t)[0] == pytest.approx(green_function(ohmic, t)[0], rel=1e-5)
        assert mean_square_displacement(srt, t)[0] == pytest.approx(mean_square_displacement(ohmic, t)[0],
                                                                   rel=1e-4)


def test_oscillator_position_variance_and_correlation():
    spec = BathSpec(OSC, omega0=2.0, kT=5.0)
    x2 = position_variance(spec)
    # high temperature expansion kT / (m w0^2) + hbar^2 / (12 m kT) + O(hbar^4)
    assert x2 == pytest.approx(5.0 / 4.0 + 1.0 / 60.0, rel=1e-3)
    c0, _ = correlation_function(spec, 0.0)
    assert c0 == pytest.approx(x2)
    c_long, _ = correlation_function(spec, 40.0)
    assert abs(c_long) < 1e-6 * x2
    kin = kinetic_coefficients(spec, 1.0, strict=False)
    assert not kin.free and kin.c == pytest.approx(x2 - kin.s / 2)


def test_free_models_have_no_position_variance():
    with pytest.raises(UnsupportedModelError):
        position_variance(BathSpec())
    with pytest.raises(UnsupportedModelError):
        correlation_function(BathSpec(), 1.0)


def test_kinetics_series_parallel_preserves_order():
    spec = BathSpec(SRT, tau=0.3, kT=0.2)
    times = [5.0, 0.0, 1.0, 0.25, 12.0, 3.0]
    serial = kinetics_series(spec, times)
    parallel = kinetics_series(spec, times, workers=2)
    assert [k.t for k in parallel] == times
    assert serial == parallel


def test_exact_initial_values():
    for spec in (BathSpec(SRT, tau=0.3), BathSpec(OSC, omega0=1.0), BathSpec(OHMIC, m=2.0)):
        assert green_function(spec, 0.0) == (0.0, 1.0 / spec.m)
        assert mean_square_displacement(spec, 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("x", [3e-9, 1e-8, 3e-8])
def test_ballistic_shortcut_continuous_at_switch(x):
    spec = BathSpec(SRT, tau=0.3, kT=0.8)
    t = x / spec.rates()[-1]
    s, sdot = mean_square_displacement(spec, t)
    assert s == pytest.approx(velocity_variance(spec) * t * t, rel=1e-13, abs=0)
    assert sdot == pytest.approx(2 * velocity_variance(spec) * t, rel=1e-13, abs=0)


def test_extremely_short_times():
    spec = BathSpec(SRT, tau=0.3)
    s, _ = mean_square_displacement(spec, 1e-150)
    assert s == pytest.approx(velocity_variance(spec) * 1e-300, rel=1e-12, abs=0)
    # strict Ohmic: s ~ t^2 log(1/t) keeps working down to t * rate = 1e-100
    s_ohm, _ = mean_square_displacement(BathSpec(OHMIC), 1e-90)
    assert s_ohm == pytest.approx(1e-180 * math.log(1e90) / math.pi, rel=0.01, abs=0)
    with pytest.raises(InvalidInputError):
        mean_square_displacement(BathSpec(OHMIC), 1e-120)
