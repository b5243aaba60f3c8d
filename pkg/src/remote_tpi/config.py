"""Configuration files (YAML or JSON) to domain objects.

Keys carry their units (``lifetime_ps``, ``center_offset_ghz``, ...).  Values
are converted to SI here and nowhere else.  Every validation failure raises
:class:`ConfigError` whose ``key`` is the full path of the offending field,
e.g. ``emitters[1].lifetime_ps``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import yaml

from .model import (
    DEFAULT_BETA2,
    DEFAULT_PUMP_JITTER_SIGMA,
    DEFAULT_REPETITION_RATE,
    ChannelSpec,
    ConfigError,
    ConverterSpec,
    DetectorSpec,
    EmitterSpec,
    ExperimentSpec,
)
from .montecarlo import DiffusionProcess

# (config key, domain field, scale to SI, default or REQUIRED)
REQUIRED = object()

EMITTER_FIELDS = [
    ("name", "name", None, REQUIRED),
    ("lifetime_ps", "lifetime_tau", 1e-12, REQUIRED),
    ("center_offset_ghz", "center_frequency", 1e9, 0.0),
    ("inhom_fwhm_ghz", "inhom_fwhm", 1e9, 0.0),
    ("emission_probability", "emission_probability", 1.0, 1.0),
]
CONVERTER_FIELDS = [
    ("pump_detuning_ghz", "pump_frequency", 1e9, 0.0),
    ("jitter_sigma_mhz", "pump_jitter_sigma", 1e6, DEFAULT_PUMP_JITTER_SIGMA / 1e6),
    ("efficiency", "efficiency", 1.0, 1.0),
]
CHANNEL_FIELDS = [
    ("length_km", "fiber_length", 1e3, 0.0),
    ("beta2_ps2_per_km", "gvd_beta2", 1e-27, DEFAULT_BETA2 / 1e-27),
    ("loss_db_per_km", "loss_db_per_km", 1.0, 0.0),
]
DETECTOR_FIELDS = [
    ("jitter_fwhm_ps", "jitter_fwhm", 1e-12, 0.0),
    ("efficiency", "efficiency", 1.0, 1.0),
    ("dark_rate_hz", "dark_rate", 1.0, 0.0),
]
EXPERIMENT_FIELDS = [
    ("rep_rate_mhz", "repetition_rate", 1e6, DEFAULT_REPETITION_RATE / 1e6),
    ("polarization", "polarization_mode", None, "parallel"),
    ("background_rate_hz", "background_rate", 1.0, 0.0),
    ("acquisition_s", "acquisition_time", 1.0, 1.0),
]
DIFFUSION_FIELDS = [
    ("mode", "mode", None, "iid"),
    ("correlation_time_us", "correlation_time", 1e-6, 1.0),
]


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _build(cls, section, fields, path):
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(path, "expected a mapping")
    known = {f[0] for f in fields}
    for key in section:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")
    kwargs = {}
    resolved = {}
    for key, attr, scale, default in fields:
        full = f"{path}.{key}"
        if key in section:
            raw = section[key]
        elif default is REQUIRED:
            raise ConfigError(full, "missing required key")
        else:
            raw = default
        if scale is None:
            if not isinstance(raw, str):
                raise ConfigError(full, f"expected a string, got {raw!r}")
            kwargs[attr] = raw
        else:
            raw = _number(raw, full)
            kwargs[attr] = math.inf if math.isinf(raw) else raw * scale
        resolved[key] = raw
    try:
        obj = cls(**kwargs)
    except ConfigError as exc:
        key = next((f[0] for f in fields if f[1] == exc.key), exc.key)
        raise ConfigError(f"{path}.{key}", exc.message) from None
    return obj, resolved


def _pair(data, name, cls, fields, required):
    items = data.get(name)
    if items is None:
        if required:
            raise ConfigError(name, "missing required list of two entries")
        items = [{}, {}]
    if not isinstance(items, list) or len(items) != 2:
        raise ConfigError(name, "expected a list of exactly two entries")
    return [_build(cls, item, fields, f"{name}[{i}]") for i, item in enumerate(items)]


class Config:
    """A validated configuration: the experiment, the diffusion model and the resolved key tree."""

    def __init__(self, experiment: ExperimentSpec, diffusion: DiffusionProcess, resolved: dict):
        self.experiment = experiment
        self.diffusion = diffusion
        self.resolved = resolved


def parse_config(data) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    known = {"emitters", "converters", "channels", "detectors", "experiment"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown key")
    emitters = _pair(data, "emitters", EmitterSpec, EMITTER_FIELDS, True)
    converters = _pair(data, "converters", ConverterSpec, CONVERTER_FIELDS, False)
    channels = _pair(data, "channels", ChannelSpec, CHANNEL_FIELDS, False)
    detectors = _pair(data, "detectors", DetectorSpec, DETECTOR_FIELDS, False)

    exp_section = data.get("experiment") or {}
    if not isinstance(exp_section, dict):
        raise ConfigError("experiment", "expected a mapping")
    exp_section = dict(exp_section)
    diffusion_section = exp_section.pop("diffusion", None)
    diffusion, diffusion_resolved = _build(DiffusionProcess, diffusion_section, DIFFUSION_FIELDS, "experiment.diffusion")

    base = {
        "emitter_1": emitters[0][0],
        "emitter_2": emitters[1][0],
        "converter_1": converters[0][0],
        "converter_2": converters[1][0],
        "channel_1": channels[0][0],
        "channel_2": channels[1][0],
        "detector_a": detectors[0][0],
        "detector_b": detectors[1][0],
    }

    def make_experiment(**kw):
        return ExperimentSpec(**base, **kw)

    experiment, exp_resolved = _build(make_experiment, exp_section, EXPERIMENT_FIELDS, "experiment")
    exp_resolved["diffusion"] = diffusion_resolved
    resolved = {
        "emitters": [e[1] for e in emitters],
        "converters": [c[1] for c in converters],
        "channels": [c[1] for c in channels],
        "detectors": [d[1] for d in detectors],
        "experiment": exp_resolved,
    }
    return Config(experiment, diffusion, resolved)


def load_config(path) -> Config:
    """Read a YAML or JSON file (JSON is valid YAML, so one parser serves both)."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"cannot parse {path}: {exc}") from None
    return parse_config(data)


def dump_config(config: Config) -> str:
    return json.dumps(config.resolved, indent=2, sort_keys=True)
