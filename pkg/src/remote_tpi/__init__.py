"""Remote two-photon interference of spectrally diffusing emitters."""

from .analytic import AnalyticPair, g2_averaged, g2_instantaneous, tpi_visibility, visibility_curve, voigt_spectrum
from .faddeeva import faddeeva
from .model import (
    ChannelSpec,
    ConfigError,
    ConverterSpec,
    DetectorSpec,
    EmitterSpec,
    ExperimentSpec,
    converted_frequency,
    effective_detuning,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticPair",
    "ChannelSpec",
    "ConfigError",
    "ConverterSpec",
    "DetectorSpec",
    "EmitterSpec",
    "ExperimentSpec",
    "converted_frequency",
    "effective_detuning",
    "faddeeva",
    "g2_averaged",
    "g2_instantaneous",
    "tpi_visibility",
    "visibility_curve",
    "voigt_spectrum",
]
