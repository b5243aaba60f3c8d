"""Monte Carlo time tags for a pulsed remote two-photon interference experiment.

Per excitation pulse each arm delivers a photon to the splitter with
probability emission x conversion x fibre transmission.  When both arrive,
the pair is routed by :func:`sample_coincidence`; a lone photon picks a
port at random.  Every photon is then detected independently with its
detector's efficiency (no dead time), smeared by Gaussian timing jitter,
and flat Poissonian dark/background counts are added.

Two-photon routing uses the pair density directly.  Proposal times
(t_A, t_B) are drawn from the equal mixture of "photon 2 at A, photon 1 at
B" and the reverse, i.e. q = (S1 + S2) / (2 tau_1 tau_2) with
S1 = exp(-t_B/tau_1 - t_A/tau_2) and S2 = exp(-t_A/tau_1 - t_B/tau_2).  The
cross-port density for parallel polarisation is

    P(t_A, t_B) = (S1 + S2 - 2 sqrt(S1 S2) cos(2 pi dnu (t_B - t_A))) / (4 tau_1 tau_2)

so P/q = (1 - cos(2 pi dnu (t_B - t_A)) / cosh(d)) / 2 <= 1 with
d = (t_B - t_A)(1/tau_1 - 1/tau_2)/2.  Accepting a proposal with that
probability leaves the photons in different ports with exactly the
probability integral of P, at times distributed as P; a rejected proposal
is a bunched pair.  For orthogonal polarisation P/q = 1/2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .analytic import instantaneous_visibility
from .model import ConfigError, EmitterSpec, ExperimentSpec, converted_center
from .timetags import CHANNEL_A, CHANNEL_B, TimeTagStream

DEFAULT_BLOCK_SIZE = 1 << 20

DIFFUSION_MODES = ("iid", "ornstein_uhlenbeck")


@dataclass(frozen=True)
class DiffusionProcess:
    """Spectral diffusion statistics.

    ``iid`` draws a fresh center frequency for every photon.
    ``ornstein_uhlenbeck`` is a stationary Gaussian process with
    autocorrelation exp(-dt / correlation_time); the 1 us default is a
    qualitative choice, not a measured value.
    """

    mode: str = "iid"
    correlation_time: float = 1e-6

    def __post_init__(self):
        if self.mode not in DIFFUSION_MODES:
            raise ConfigError("mode", f"must be one of {DIFFUSION_MODES}")
        if not self.correlation_time > 0:
            raise ConfigError("correlation_time", "must be > 0")


@dataclass(frozen=True)
class DiffusionState:
    """Last sample of an OU trajectory: its time and its offset from the line center."""

    time: float
    offset: float


def sample_frequency(
    emitter: EmitterSpec,
    process: DiffusionProcess,
    times,
    rng: np.random.Generator,
    state: DiffusionState | None = None,
    *,
    center: float | None = None,
) -> tuple[np.ndarray, DiffusionState | None]:
    """Instantaneous emission frequencies at the (non-decreasing) ``times``.

    Returns the frequencies and the state to continue the trajectory from;
    the state is ``None`` in iid mode.
    """
    times = np.asarray(times, dtype=float)
    nu_c = emitter.center_frequency if center is None else center
    sigma = emitter.sigma
    n = times.size
    if process.mode == "iid":
        return nu_c + sigma * rng.standard_normal(n), None
    if n == 0:
        return np.empty(0), state
    xi = rng.standard_normal(n)
    offsets = np.empty(n)
    if state is None:
        offsets[0] = sigma * xi[0]
    else:
        rho = math.exp(-(times[0] - state.time) / process.correlation_time)
        offsets[0] = rho * state.offset + sigma * math.sqrt(1.0 - rho * rho) * xi[0]
    if n > 1:
        dt = np.diff(times)
        if np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            rho = math.exp(-dt[0] / process.correlation_time)
            gain = sigma * math.sqrt(1.0 - rho * rho)
            offsets[1:], _ = lfilter([gain], [1.0, -rho], xi[1:], zi=[rho * offsets[0]])
        else:
            rho = np.exp(-dt / process.correlation_time)
            gain = sigma * np.sqrt(1.0 - rho * rho)
            for k in range(1, n):
                offsets[k] = rho[k - 1] * offsets[k - 1] + gain[k - 1] * xi[k]
    return nu_c + offsets, DiffusionState(float(times[-1]), float(offsets[-1]))


@dataclass(frozen=True, eq=False)
class SplitterOutcome:
    """Result of sending photon pairs onto the splitter.

    ``split[k]`` is True when pair k left through different ports; then the
    photon detected at A arrives ``t_a[k]`` after the pulse and the one at B
    ``t_b[k]``, so the coincidence lag is ``t_b - t_a``.  For bunched pairs
    ``t_a``/``t_b`` are still the two photons' arrival times.
    """

    split: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray

    @property
    def lag(self) -> np.ndarray:
        return self.t_b - self.t_a

    def coincidences(self) -> tuple[np.ndarray, np.ndarray]:
        """(t0, tau) of the split pairs: arrival time at A and lag to B."""
        return self.t_a[self.split], self.lag[self.split]


def _route_pairs(delta_nu, tau_1, tau_2, polarization, rng) -> SplitterOutcome:
    n = np.size(delta_nu)
    swap = rng.random(n) < 0.5
    e1 = rng.standard_exponential(n) * tau_1
    e2 = rng.standard_exponential(n) * tau_2
    # swap False: photon 2 at A, photon 1 at B
    t_a = np.where(swap, e1, e2)
    t_b = np.where(swap, e2, e1)
    u = rng.random(n)
    if polarization == "orthogonal":
        accept = np.full(n, 0.5)
    else:
        lag = t_b - t_a
        d = 0.5 * lag * (1.0 / tau_1 - 1.0 / tau_2)
        accept = 0.5 * (1.0 - np.cos(2.0 * np.pi * delta_nu * lag) / np.cosh(d))
    return SplitterOutcome(u < accept, t_a, t_b)


def sample_coincidence(pair_frequencies, exp: ExperimentSpec, rng: np.random.Generator) -> SplitterOutcome:
    """Route photon pairs with instantaneous frequencies ``(nu_1, nu_2)`` through the splitter."""
    nu_1, nu_2 = (np.atleast_1d(np.asarray(v, dtype=float)) for v in pair_frequencies)
    delta_nu = nu_1 - nu_2
    return _route_pairs(
        delta_nu, exp.emitter_1.lifetime_tau, exp.emitter_2.lifetime_tau, exp.polarization_mode, rng
    )


def _block_seeds(seed: int, block: int):
    base = np.random.SeedSequence(seed, spawn_key=(block,))
    diff_1, diff_2, events = base.spawn(3)
    return diff_1, diff_2, events


def _simulate_block(exp, process, seed, block, k0, n, states):
    diff_1, diff_2, events = _block_seeds(seed, block)
    rep = exp.rep_period
    times = (k0 + np.arange(n)) * rep
    rng = np.random.default_rng(events)

    arrive_1 = rng.random(n) < exp.arm_transmission(1)
    arrive_2 = rng.random(n) < exp.arm_transmission(2)
    both = np.flatnonzero(arrive_1 & arrive_2)

    c1 = converted_center(exp.emitter_1, exp.converter_1)
    c2 = converted_center(exp.emitter_2, exp.converter_2)
    if process.mode == "iid":
        nu_1, _ = sample_frequency(exp.emitter_1, process, times[both], np.random.default_rng(diff_1), center=c1)
        nu_2, _ = sample_frequency(exp.emitter_2, process, times[both], np.random.default_rng(diff_2), center=c2)
    else:
        nu_1, _ = sample_frequency(exp.emitter_1, process, times, np.random.default_rng(diff_1), states[0], center=c1)
        nu_2, _ = sample_frequency(exp.emitter_2, process, times, np.random.default_rng(diff_2), states[1], center=c2)
        nu_1, nu_2 = nu_1[both], nu_2[both]
    nu_1 = nu_1 + exp.converter_1.pump_jitter_sigma * rng.standard_normal(both.size)
    nu_2 = nu_2 + exp.converter_2.pump_jitter_sigma * rng.standard_normal(both.size)

    out = _route_pairs(nu_1 - nu_2, exp.emitter_1.lifetime_tau, exp.emitter_2.lifetime_tau, exp.polarization_mode, rng)
    bunch_port = np.where(rng.random(both.size) < 0.5, CHANNEL_A, CHANNEL_B).astype(np.uint8)
    port_first = np.where(out.split, CHANNEL_A, bunch_port)
    port_second = np.where(out.split, CHANNEL_B, bunch_port)

    singles = []
    for arm, mask in ((1, arrive_1 & ~arrive_2), (2, arrive_2 & ~arrive_1)):
        idx = np.flatnonzero(mask)
        tau = exp.emitter_1.lifetime_tau if arm == 1 else exp.emitter_2.lifetime_tau
        port = np.where(rng.random(idx.size) < 0.5, CHANNEL_A, CHANNEL_B).astype(np.uint8)
        singles.append((idx, port, rng.standard_exponential(idx.size) * tau))

    pulse = np.concatenate([both, both] + [s[0] for s in singles])
    channel = np.concatenate([port_first, port_second] + [s[1] for s in singles]).astype(np.uint8)
    delay = np.concatenate([out.t_a, out.t_b] + [s[2] for s in singles])

    efficiency = np.array([exp.detector_a.efficiency, exp.detector_b.efficiency])
    jitter = np.array([exp.detector_a.jitter_sigma, exp.detector_b.jitter_sigma])
    detected = rng.random(pulse.size) < efficiency[channel]
    pulse, channel, delay = pulse[detected], channel[detected], delay[detected]
    fiber_delay = max(exp.channel_1.group_delay, exp.channel_2.group_delay)
    t = times[pulse] + fiber_delay + delay + jitter[channel] * rng.standard_normal(pulse.size)

    t_start = k0 * rep
    span = n * rep
    noise_t, noise_ch = [], []
    for code, det in ((CHANNEL_A, exp.detector_a), (CHANNEL_B, exp.detector_b)):
        m = rng.poisson((det.dark_rate + exp.background_rate) * span)
        noise_t.append(t_start + span * rng.random(m))
        noise_ch.append(np.full(m, code, dtype=np.uint8))

    stamps = np.rint(np.concatenate([t] + noise_t) * 1e12).astype(np.int64)
    return np.concatenate([channel] + noise_ch), stamps


def _ou_block_states(exp, process, seed, n_pulses, block_size):
    """Starting OU state of every block; a cheap sequential pass so blocks can run independently."""
    rep = exp.rep_period
    states = []
    current = [None, None]
    for block, k0 in enumerate(range(0, n_pulses, block_size)):
        states.append(tuple(current))
        n = min(block_size, n_pulses - k0)
        times = (k0 + np.arange(n)) * rep
        diff_1, diff_2, _ = _block_seeds(seed, block)
        for i, (emitter, ss) in enumerate(((exp.emitter_1, diff_1), (exp.emitter_2, diff_2))):
            _, current[i] = sample_frequency(emitter, process, times, np.random.default_rng(ss), current[i], center=0.0)
    return states


def simulate_experiment(
    exp: ExperimentSpec,
    n_pulses: int,
    seed: int,
    *,
    process: DiffusionProcess | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> TimeTagStream:
    """Generate the merged, time-sorted detector stream for ``n_pulses`` excitation pulses.

    Pulses are processed in blocks, each with its own random streams derived
    from ``(seed, block index)``, so the output is bit-identical for any
    ``workers`` count.
    """
    if int(n_pulses) != n_pulses or n_pulses < 1:
        raise ConfigError("n_pulses", "must be a positive integer")
    n_pulses = int(n_pulses)
    process = process or DiffusionProcess()
    starts = list(range(0, n_pulses, block_size))
    if process.mode == "iid":
        states = [None] * len(starts)
    else:
        states = _ou_block_states(exp, process, seed, n_pulses, block_size)

    def run(block):
        k0 = starts[block]
        return _simulate_block(exp, process, seed, block, k0, min(block_size, n_pulses - k0), states[block])

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(starts))))
    else:
        parts = [run(b) for b in range(len(starts))]

    channels = np.concatenate([p[0] for p in parts])
    stamps = np.concatenate([p[1] for p in parts])
    duration = n_pulses * exp.rep_period
    keep = (stamps >= 0) & (stamps < round(duration * 1e12))
    order = np.lexsort((channels[keep], stamps[keep]))
    return TimeTagStream(channels[keep][order], stamps[keep][order], duration)


def consecutive_visibility(
    emitter: EmitterSpec,
    process: DiffusionProcess,
    delay: float,
    n_pairs: int = 200_000,
    seed: int = 0,
) -> float:
    """Expected visibility of two photons from the same emitter emitted ``delay`` apart.

    The frequency difference of the pair is sampled from the diffusion
    process; each pair contributes its fixed-detuning visibility.
    """
    rng = np.random.default_rng(seed)
    sigma = emitter.sigma
    # the first photon sees the stationary law; the second is conditioned on it
    first = sigma * rng.standard_normal(n_pairs)
    rho = 0.0 if process.mode == "iid" else math.exp(-delay / process.correlation_time)
    second = rho * first + sigma * math.sqrt(1.0 - rho * rho) * rng.standard_normal(n_pairs)
    tau = emitter.lifetime_tau
    return float(np.mean(instantaneous_visibility(tau, tau, first - second)))
