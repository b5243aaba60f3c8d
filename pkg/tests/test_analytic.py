import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from helpers import FWHM_B, FWHM_R, TAU_B, TAU_R
from remote_tpi.analytic import (
    AnalyticPair,
    g2_averaged,
    g2_distinguishable,
    g2_instantaneous,
    instantaneous_visibility,
    tpi_visibility,
    visibility_curve,
    voigt_spectrum,
    wavefunction_density,
)
from remote_tpi.model import ConverterSpec, EmitterSpec, ExperimentSpec

REF = AnalyticPair.from_fwhm(TAU_R, TAU_B, FWHM_R, FWHM_B)


def quadrature_visibility(pair):
    """V = 1 - 2 * integral of g2_averaged, integrated in units of nanoseconds."""
    f = lambda x: g2_averaged(x * 1e-9, pair) * 1e-9
    scale = max(pair.tau_1, pair.tau_2) * 1e9
    pieces = [0, scale, 5 * scale, 20 * scale, 80 * scale]
    total = sum(quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)[0] for a, b in zip(pieces, pieces[1:]))
    return 1.0 - 4.0 * total  # even integrand: twice the half line


def test_pair_derived_quantities():
    assert REF.T <= min(REF.tau_1, REF.tau_2)
    assert REF.Sigma >= max(REF.sigma_1, REF.sigma_2)
    assert 1 / REF.T == pytest.approx(1 / TAU_R + 1 / TAU_B)


def test_wavefunction_density():
    assert wavefunction_density(-1e-12, 580e-12) == 0.0
    assert wavefunction_density(0.0, 580e-12) == pytest.approx(1 / 580e-12)
    area = quad(lambda x: wavefunction_density(x * 1e-9, 580e-12) * 1e-9, 0, 50)[0]
    assert area == pytest.approx(1.0, abs=1e-10)
    e = EmitterSpec("x", 1e-9)
    assert wavefunction_density(1e-9, e) == pytest.approx(math.exp(-1) / 1e-9)


def test_g2_instantaneous_examples():
    assert g2_instantaneous(0.0, TAU_R, TAU_B, 3e9) == 0.0
    tau = np.linspace(-5e-9, 5e-9, 1001)
    assert np.max(np.abs(g2_instantaneous(tau, 600e-12, 600e-12, 0.0))) < 1e-6
    assert np.allclose(g2_instantaneous(tau, TAU_R, TAU_B, 6e9), g2_instantaneous(-tau, TAU_R, TAU_B, 6e9))


def test_beat_maxima_spacing_at_6ghz():
    tau = np.arange(0, 1.2e-9, 0.05e-12)
    g = g2_instantaneous(tau, TAU_R, TAU_B, 6e9)
    peaks = tau[1:-1][(g[1:-1] > g[:-2]) & (g[1:-1] > g[2:])]
    spacing = np.diff(peaks)
    assert spacing == pytest.approx(np.full(spacing.size, 1 / 6e9), abs=2e-12)


def test_g2_averaged_reduces_to_instantaneous():
    tau = np.linspace(-4e-9, 4e-9, 801)
    pair = AnalyticPair(TAU_R, TAU_B, 0.0, 0.0, 2e9)
    assert np.allclose(g2_averaged(tau, pair), g2_instantaneous(tau, TAU_R, TAU_B, 2e9), rtol=0, atol=1e-9)
    assert g2_averaged(0.0, REF) == 0.0


def test_g2_averaged_non_negative_dense_grid():
    tau = np.linspace(-10e-9, 10e-9, 200_001)
    for dnu in (0.0, 0.7e9, 6e9, -4e9):
        assert np.min(g2_averaged(tau, REF.with_detuning(dnu))) >= -1e-300


def test_distinguishable_integrates_to_half():
    f = lambda x: g2_distinguishable(x * 1e-9, TAU_R, TAU_B) * 1e-9
    assert 2 * quad(f, 0, 60)[0] == pytest.approx(0.5, abs=1e-10)


def test_reference_visibility():
    assert tpi_visibility(REF) == pytest.approx(0.27, abs=0.01)


@pytest.mark.parametrize("dnu", [0.0, 0.7e9, -2e9, 4e9, 6e9])
def test_visibility_matches_quadrature(dnu):
    pair = REF.with_detuning(dnu)
    assert tpi_visibility(pair) == pytest.approx(quadrature_visibility(pair), abs=1e-6)


def test_identical_fourier_limited():
    assert tpi_visibility(AnalyticPair(600e-12, 600e-12)) == 1.0


def test_small_sigma_limit():
    pair = AnalyticPair(TAU_R, TAU_B, 1e-6 / TAU_R, 0.0)
    limit = 4 * TAU_R * TAU_B / (TAU_R + TAU_B) ** 2
    assert tpi_visibility(pair) == pytest.approx(limit, abs=1e-4)


def test_zero_sigma_uses_lorentzian():
    d = np.array([-2e9, 0.0, 1e9])
    assert np.allclose(visibility_curve(AnalyticPair(TAU_R, TAU_B), d), instantaneous_visibility(TAU_R, TAU_B, d))


def test_equivalent_erfc_form():
    # Re w = (w + conj w)/2 with w = exp(-z^2) erfc(-iz), evaluated by scipy
    from scipy.special import wofz

    for dnu in (0.0, 2e9):
        pair = REF.with_detuning(dnu)
        z = (2 * np.pi * dnu + 1j / (2 * pair.T)) / (2 * np.pi * math.sqrt(2) * pair.Sigma)
        w = wofz(z)
        v = ((w + np.conj(w)) / 2).real / (math.sqrt(2 * math.pi) * pair.Sigma * (pair.tau_1 + pair.tau_2))
        assert tpi_visibility(pair) == pytest.approx(v, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(50e-12, 5e-9),
    st.floats(50e-12, 5e-9),
    st.floats(1e7, 5e9),
    st.floats(0, 5e9),
    st.floats(0, 10e9),
)
def test_visibility_even_bounded_and_peaked(t1, t2, s1, s2, dnu):
    pair = AnalyticPair(t1, t2, s1, s2, dnu)
    v = tpi_visibility(pair)
    assert 0.0 <= v <= 1.0
    assert tpi_visibility(pair.with_detuning(-dnu)) == pytest.approx(v, rel=1e-12, abs=1e-15)
    assert tpi_visibility(pair.with_detuning(0.0)) >= v - 1e-15


@settings(max_examples=40, deadline=None)
@given(st.floats(50e-12, 5e-9), st.floats(50e-12, 5e-9), st.floats(1e7, 5e9), st.floats(1.01, 3.0))
def test_visibility_decreases_with_sigma(t1, t2, s, factor):
    assert tpi_visibility(AnalyticPair(t1, t2, s, 0.0)) > tpi_visibility(AnalyticPair(t1, t2, s * factor, 0.0))


@settings(max_examples=25, deadline=None)
@given(st.floats(100e-12, 2e-9), st.floats(100e-12, 2e-9), st.floats(5e7, 3e9), st.floats(-8e9, 8e9))
def test_visibility_quadrature_property(t1, t2, s, dnu):
    pair = AnalyticPair(t1, t2, s, s / 2, dnu)
    assert tpi_visibility(pair) == pytest.approx(quadrature_visibility(pair), abs=1e-6)


def test_from_experiment_adds_pump_jitter():
    exp = ExperimentSpec(
        EmitterSpec("1", TAU_R, 1e9, FWHM_R),
        EmitterSpec("2", TAU_B, 0.0, FWHM_B),
        ConverterSpec(pump_jitter_sigma=3e6),
        ConverterSpec(pump_jitter_sigma=4e6),
    )
    pair = AnalyticPair.from_experiment(exp)
    assert pair.delta_nu == 1e9
    assert pair.sigma_1 == pytest.approx(math.hypot(exp.emitter_1.sigma, 3e6))
    assert pair.sigma_2 == pytest.approx(math.hypot(exp.emitter_2.sigma, 4e6))


def _fwhm(nu, y):
    above = nu[y >= y.max() / 2]
    return above[-1] - above[0]


def test_voigt_lorentzian_limit():
    e = EmitterSpec("x", 590e-12)
    nu = np.linspace(-2e9, 2e9, 400_001)
    y = voigt_spectrum(nu, e)
    assert _fwhm(nu, y) == pytest.approx(0.27e9, abs=0.005e9)
    assert _fwhm(nu, y) == pytest.approx(1 / (2 * np.pi * 590e-12), abs=2 * (nu[1] - nu[0]))


def test_voigt_gaussian_limit():
    e = EmitterSpec("x", math.inf, 1e9, 2e9)
    nu = np.linspace(-5e9, 7e9, 1001)
    sigma = e.sigma
    gauss = np.exp(-0.5 * ((nu - 1e9) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    assert np.allclose(voigt_spectrum(nu, e), gauss, rtol=1e-12, atol=0)


@pytest.mark.parametrize("tau, fwhm", [(580e-12, 2e9), (600e-12, 1.3e9), (590e-12, 0.0), (100e-12, 0.5e9)])
def test_voigt_unit_area(tau, fwhm):
    e = EmitterSpec("x", tau, 0.0, fwhm)
    f = lambda x: voigt_spectrum(x * 1e9, e) * 1e9
    area = quad(f, -np.inf, 0, epsabs=1e-13, limit=500)[0] + quad(f, 0, np.inf, epsabs=1e-13, limit=500)[0]
    assert area == pytest.approx(1.0, abs=1e-8)
