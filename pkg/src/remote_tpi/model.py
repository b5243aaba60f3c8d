"""Domain types and frequency bookkeeping.

All quantities are SI (seconds, hertz, metres).  Optical frequencies are
stored as offsets from a common reference so that double precision is not
spent on the ~193 THz carrier; only differences ever enter the physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from scipy.constants import c as SPEED_OF_LIGHT

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

#: standard single-mode fibre at 1550 nm, D ~ 17 ps/(nm km)
DEFAULT_BETA2 = -21.7e-27  # s^2/m

#: relative pump detuning jitter 3 sigma = 20 MHz, split over two converters
DEFAULT_PUMP_JITTER_SIGMA = 20e6 / 3.0 / math.sqrt(2.0)

DEFAULT_REPETITION_RATE = 76.2e6

#: group index of silica fibre around 1550 nm
GROUP_INDEX = 1.4682

POLARIZATION_MODES = ("parallel", "orthogonal")


class ConfigError(ValueError):
    """Invalid configuration value.  ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(key, message)


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


@dataclass(frozen=True)
class EmitterSpec:
    """A two-level emitter with Gaussian spectral diffusion."""

    name: str
    lifetime_tau: float
    center_frequency: float = 0.0
    inhom_fwhm: float = 0.0
    emission_probability: float = 1.0

    def __post_init__(self):
        # math.inf is allowed: the Fourier-limited linewidth then vanishes
        _check(
            isinstance(self.lifetime_tau, (int, float)) and self.lifetime_tau > 0,
            "lifetime_tau",
            "must be > 0",
        )
        _check(_finite(self.center_frequency), "center_frequency", "must be finite")
        _check(_finite(self.inhom_fwhm) and self.inhom_fwhm >= 0, "inhom_fwhm", "must be >= 0")
        _check(
            _finite(self.emission_probability) and 0.0 <= self.emission_probability <= 1.0,
            "emission_probability",
            "must lie in [0, 1]",
        )

    @property
    def sigma(self) -> float:
        """Standard deviation of the center-frequency distribution."""
        return self.inhom_fwhm / FWHM_PER_SIGMA

    @property
    def homogeneous_linewidth(self) -> float:
        """Fourier-limited FWHM 1/(2 pi tau)."""
        return 1.0 / (2.0 * math.pi * self.lifetime_tau)


@dataclass(frozen=True)
class ConverterSpec:
    """Difference-frequency converter: output = input - pump."""

    pump_frequency: float = 0.0
    pump_jitter_sigma: float = DEFAULT_PUMP_JITTER_SIGMA
    efficiency: float = 1.0

    def __post_init__(self):
        _check(_finite(self.pump_frequency), "pump_frequency", "must be finite")
        _check(
            _finite(self.pump_jitter_sigma) and self.pump_jitter_sigma >= 0,
            "pump_jitter_sigma",
            "must be >= 0",
        )
        _check(_finite(self.efficiency) and 0.0 <= self.efficiency <= 1.0, "efficiency", "must lie in [0, 1]")


@dataclass(frozen=True)
class ChannelSpec:
    fiber_length: float = 0.0
    gvd_beta2: float = DEFAULT_BETA2
    loss_db_per_km: float = 0.0

    def __post_init__(self):
        _check(_finite(self.fiber_length) and self.fiber_length >= 0, "fiber_length", "must be >= 0")
        _check(_finite(self.gvd_beta2), "gvd_beta2", "must be finite")
        _check(_finite(self.loss_db_per_km) and self.loss_db_per_km >= 0, "loss_db_per_km", "must be >= 0")

    @property
    def transmission(self) -> float:
        return 10.0 ** (-self.loss_db_per_km * self.fiber_length / 1e3 / 10.0)

    @property
    def group_delay(self) -> float:
        return self.fiber_length * GROUP_INDEX / SPEED_OF_LIGHT


@dataclass(frozen=True)
class DetectorSpec:
    jitter_fwhm: float = 0.0
    efficiency: float = 1.0
    dark_rate: float = 0.0

    def __post_init__(self):
        _check(_finite(self.jitter_fwhm) and self.jitter_fwhm >= 0, "jitter_fwhm", "must be >= 0")
        _check(_finite(self.efficiency) and 0.0 <= self.efficiency <= 1.0, "efficiency", "must lie in [0, 1]")
        _check(_finite(self.dark_rate) and self.dark_rate >= 0, "dark_rate", "must be >= 0")

    @property
    def jitter_sigma(self) -> float:
        return self.jitter_fwhm / FWHM_PER_SIGMA


@dataclass(frozen=True)
class ExperimentSpec:
    """Two emitters, two converters, two fibre arms, a 50:50 splitter and two detectors."""

    emitter_1: EmitterSpec
    emitter_2: EmitterSpec
    converter_1: ConverterSpec = field(default_factory=ConverterSpec)
    converter_2: ConverterSpec = field(default_factory=ConverterSpec)
    channel_1: ChannelSpec = field(default_factory=ChannelSpec)
    channel_2: ChannelSpec = field(default_factory=ChannelSpec)
    detector_a: DetectorSpec = field(default_factory=DetectorSpec)
    detector_b: DetectorSpec = field(default_factory=DetectorSpec)
    repetition_rate: float = DEFAULT_REPETITION_RATE
    polarization_mode: str = "parallel"
    background_rate: float = 0.0
    acquisition_time: float = 1.0

    def __post_init__(self):
        _check(
            _finite(self.repetition_rate) and self.repetition_rate > 0,
            "repetition_rate",
            "must be > 0",
        )
        _check(
            self.polarization_mode in POLARIZATION_MODES,
            "polarization_mode",
            f"must be one of {POLARIZATION_MODES}",
        )
        _check(_finite(self.background_rate) and self.background_rate >= 0, "background_rate", "must be >= 0")
        _check(_finite(self.acquisition_time) and self.acquisition_time > 0, "acquisition_time", "must be > 0")

    @property
    def rep_period(self) -> float:
        return 1.0 / self.repetition_rate

    def swapped(self) -> ExperimentSpec:
        """Exchange the two emitter/converter/channel arms."""
        return replace(
            self,
            emitter_1=self.emitter_2,
            emitter_2=self.emitter_1,
            converter_1=self.converter_2,
            converter_2=self.converter_1,
            channel_1=self.channel_2,
            channel_2=self.channel_1,
        )

    def arm_transmission(self, arm: int) -> float:
        """Probability that a pulse of ``arm`` (1 or 2) delivers a photon to the splitter."""
        emitter, converter, channel = {
            1: (self.emitter_1, self.converter_1, self.channel_1),
            2: (self.emitter_2, self.converter_2, self.channel_2),
        }[arm]
        return emitter.emission_probability * converter.efficiency * channel.transmission


def converted_frequency(nir_frequency: float, converter: ConverterSpec) -> float:
    """Output frequency of a difference-frequency converter for absolute input frequencies."""
    out = nir_frequency - converter.pump_frequency
    if not out > 0:
        raise ConfigError(
            "pump_frequency",
            f"converted frequency {out:.6g} Hz is not positive (input {nir_frequency:.6g} Hz)",
        )
    return out


def converted_center(emitter: EmitterSpec, converter: ConverterSpec) -> float:
    """Converted center frequency in the offset frame (no positivity requirement)."""
    return emitter.center_frequency - converter.pump_frequency


def effective_detuning(exp: ExperimentSpec) -> float:
    """Mean telecom detuning nu_c1 - nu_c2 after conversion; pump jitter has zero mean."""
    return converted_center(exp.emitter_1, exp.converter_1) - converted_center(exp.emitter_2, exp.converter_2)


def frequency_from_wavelength(wavelength: float) -> float:
    return SPEED_OF_LIGHT / wavelength


def wavelength_from_frequency(frequency: float) -> float:
    return SPEED_OF_LIGHT / frequency


def pump_wavelength(input_wavelength: float, output_wavelength: float) -> float:
    """Pump wavelength satisfying 1/lambda_p = 1/lambda_in - 1/lambda_out."""
    inv = 1.0 / input_wavelength - 1.0 / output_wavelength
    if not inv > 0:
        raise ConfigError("output_wavelength", "must be longer than the input wavelength")
    return 1.0 / inv
