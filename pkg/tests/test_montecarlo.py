import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from helpers import TAU_B, TAU_R, binomial_sigma, paper_like_experiment
from remote_tpi.analysis import correlate, extract_visibility
from remote_tpi.analytic import AnalyticPair, g2_instantaneous, tpi_visibility
from remote_tpi.model import ConfigError, DetectorSpec, EmitterSpec, ExperimentSpec
from remote_tpi.montecarlo import (
    DiffusionProcess,
    consecutive_visibility,
    sample_coincidence,
    sample_frequency,
    simulate_experiment,
)

IID = DiffusionProcess()
OU = DiffusionProcess("ornstein_uhlenbeck", 1e-6)


def test_sample_frequency_zero_width():
    e = EmitterSpec("x", 1e-9, 2e9, 0.0)
    nu, state = sample_frequency(e, IID, np.zeros(10), np.random.default_rng(0))
    assert np.all(nu == 2e9) and state is None


def test_sample_frequency_iid_mean():
    e = EmitterSpec("x", 1e-9, 2e9, 1.3e9)
    n = 10**6
    nu, _ = sample_frequency(e, IID, np.zeros(n), np.random.default_rng(1))
    assert abs(nu.mean() - 2e9) < 5 * e.sigma / math.sqrt(n)
    assert nu.std() == pytest.approx(e.sigma, rel=5e-3)


def test_ou_stationary_and_correlated():
    e = EmitterSpec("x", 1e-9, 0.0, 2e9)
    dt = 0.1e-6
    times = np.arange(400_000) * dt
    nu, state = sample_frequency(e, OU, times, np.random.default_rng(2))
    assert nu.std() == pytest.approx(e.sigma, rel=0.03)
    lag1 = np.corrcoef(nu[:-1], nu[1:])[0, 1]
    assert lag1 == pytest.approx(math.exp(-dt / OU.correlation_time), abs=0.01)
    assert state.time == times[-1] and state.offset == nu[-1]


def test_ou_continuation_matches_irregular_path():
    e = EmitterSpec("x", 1e-9, 0.0, 2e9)
    times = np.array([0.0, 1e-8, 3e-8, 3.5e-8])
    nu, _ = sample_frequency(e, OU, times, np.random.default_rng(3))
    assert nu.shape == (4,)
    with pytest.raises(ConfigError):
        DiffusionProcess("brownian")


def test_identical_fourier_limited_never_split():
    e = EmitterSpec("x", 600e-12)
    exp = ExperimentSpec(e, e)
    out = sample_coincidence((np.zeros(10**5), np.zeros(10**5)), exp, np.random.default_rng(0))
    assert not out.split.any()


def test_orthogonal_split_fraction_is_half():
    exp = paper_like_experiment(polarization_mode="orthogonal")
    n = 10**6
    out = sample_coincidence((np.zeros(n), np.full(n, 3e9)), exp, np.random.default_rng(5))
    assert abs(out.split.mean() - 0.5) < 5 * binomial_sigma(0.5, n)


def test_parallel_split_fraction_matches_visibility():
    exp = paper_like_experiment()
    pair = AnalyticPair.from_experiment(exp)
    rng = np.random.default_rng(6)
    n = 10**6
    nu1 = exp.emitter_1.center_frequency + pair.sigma_1 * rng.standard_normal(n)
    nu2 = exp.emitter_2.center_frequency + pair.sigma_2 * rng.standard_normal(n)
    out = sample_coincidence((nu1, nu2), exp, rng)
    p = (1 - tpi_visibility(pair)) / 2
    assert abs(out.split.mean() - p) < 5 * binomial_sigma(p, n)


def test_split_lag_distribution_matches_g2():
    exp = paper_like_experiment()
    dnu = 3e9
    n = 2 * 10**6
    out = sample_coincidence((np.full(n, dnu), np.zeros(n)), exp, np.random.default_rng(7))
    t0, lag = out.coincidences()
    assert np.all(t0 >= 0)
    edges = np.linspace(-3e-9, 3e-9, 121)
    observed, _ = np.histogram(lag, edges)
    fine = np.linspace(edges[0], edges[-1], 120 * 200 + 1)
    dens = g2_instantaneous(0.5 * (fine[1:] + fine[:-1]), TAU_R, TAU_B, dnu) * (fine[1] - fine[0])
    expected = n * dens.reshape(120, 200).sum(axis=1)
    chi2 = np.sum((observed - expected) ** 2 / expected)
    assert stats.chi2.sf(chi2, 120) > 1e-4


def test_simulation_deterministic_and_worker_independent():
    exp = paper_like_experiment(0.7e9)
    a = simulate_experiment(exp, 50_000, 11, block_size=8192)
    b = simulate_experiment(exp, 50_000, 11, block_size=8192, workers=3)
    c = simulate_experiment(exp, 50_000, 12, block_size=8192)
    assert a == b
    assert a != c
    assert a.is_sorted()
    assert a.acquisition_time == pytest.approx(50_000 * exp.rep_period)


def test_ou_simulation_deterministic():
    exp = paper_like_experiment()
    a = simulate_experiment(exp, 30_000, 1, process=OU, block_size=4096)
    b = simulate_experiment(exp, 30_000, 1, process=OU, block_size=4096, workers=2)
    assert a == b


def test_noise_only_rate():
    det = DetectorSpec(0.0, 0.0, dark_rate=2e5)
    exp = replace(paper_like_experiment(), detector_a=det, detector_b=det, background_rate=3e5)
    n_pulses = 10**6
    s = simulate_experiment(exp, n_pulses, 3)
    expected = 5e5 * n_pulses * exp.rep_period
    for ch in (0, 1):
        assert abs(len(s.channel(ch)) - expected) < 5 * math.sqrt(expected)


def test_side_peaks_at_repetition_period():
    exp = paper_like_experiment(polarization_mode="orthogonal", jitter_fwhm=0.0)
    s = simulate_experiment(exp, 400_000, 4)
    h = correlate(s, 10e-12, 60e-9)
    lags = h.lags
    for m in (1, 2, 3, -2):
        sel = np.abs(lags - m * exp.rep_period) < exp.rep_period / 2
        centroid = np.sum(lags[sel] * h.counts[sel]) / np.sum(h.counts[sel])
        assert centroid == pytest.approx(m * 13.123e-9, abs=0.05e-9)


def test_poissonian_level_independent_of_polarization():
    levels = []
    for mode in ("parallel", "orthogonal"):
        s = simulate_experiment(paper_like_experiment(polarization_mode=mode), 2 * 10**6, 8)
        r = extract_visibility(correlate(s, 4e-12, 1.08e-6), 1 / 76.2e6)
        levels.append((r.poisson_level_area, r.poisson_level_area / math.sqrt(r.n_reference_peaks)))
    (a, _), (b, _) = levels
    assert abs(a - b) < 5 * math.sqrt(a / 4 + b / 4)


def test_consecutive_visibility_ordering():
    e = EmitterSpec("B", TAU_B, 0.0, 1.3e9)
    v4 = consecutive_visibility(e, OU, 4e-9, seed=1)
    v10 = consecutive_visibility(e, OU, 10e-6, seed=1)
    assert v4 > v10
    v_iid = consecutive_visibility(e, IID, 4e-9, seed=1)
    ref = tpi_visibility(AnalyticPair(TAU_B, TAU_B, e.sigma, e.sigma))
    assert v_iid == pytest.approx(ref, abs=0.01)
    assert v10 == pytest.approx(ref, abs=0.01)


def test_invalid_pulse_count():
    with pytest.raises(ConfigError):
        simulate_experiment(paper_like_experiment(), 0, 1)
