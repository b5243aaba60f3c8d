"""Closed-form two-photon correlations and visibility for remote emitters.

Each photon is a mono-exponential wave packet
zeta(t) = H(t) exp(-t/(2 tau) - 2 pi i nu t) / sqrt(tau).  Interfering two of
them on a 50:50 splitter gives the cross-port density g2(tau); averaging its
beat term over Gaussian spectral diffusion of both emitters (combined width
Sigma) damps it with exp(-2 pi^2 Sigma^2 tau^2).  Integrating over tau gives

    V = Re w(z) / (sqrt(2 pi) Sigma (tau_1 + tau_2)),
    z = (2 pi delta_nu + i/(2T)) / (2 pi sqrt(2) Sigma),

with 1/T = 1/tau_1 + 1/tau_2.  Writing Re w(z) = (w + conj w)/2 and
w(z) = exp(-z^2) erfc(-iz) gives the equivalent exp * erfc + c.c. form.

Densities are per detected pulse pair: integrating ``g2_averaged`` over all
lags gives the cross-port probability P, and V = 1 - 2P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .faddeeva import faddeeva
from .model import FWHM_PER_SIGMA, EmitterSpec, ExperimentSpec, effective_detuning

__all__ = [
    "AnalyticPair",
    "wavefunction_density",
    "g2_instantaneous",
    "g2_distinguishable",
    "g2_averaged",
    "instantaneous_visibility",
    "tpi_visibility",
    "visibility_curve",
    "voigt_spectrum",
]


@dataclass(frozen=True)
class AnalyticPair:
    """Lifetimes, diffusion widths and mean detuning of two interfering emitters."""

    tau_1: float
    tau_2: float
    sigma_1: float = 0.0
    sigma_2: float = 0.0
    delta_nu: float = 0.0

    def __post_init__(self):
        if not (self.tau_1 > 0 and self.tau_2 > 0):
            raise ValueError("lifetimes must be positive")
        if self.sigma_1 < 0 or self.sigma_2 < 0:
            raise ValueError("diffusion widths must be non-negative")

    @classmethod
    def from_fwhm(cls, tau_1, tau_2, fwhm_1, fwhm_2, delta_nu=0.0):
        return cls(tau_1, tau_2, fwhm_1 / FWHM_PER_SIGMA, fwhm_2 / FWHM_PER_SIGMA, delta_nu)

    @classmethod
    def from_experiment(cls, exp: ExperimentSpec) -> AnalyticPair:
        """Pump jitter adds to each emitter's diffusion width in quadrature."""
        s1 = math.hypot(exp.emitter_1.sigma, exp.converter_1.pump_jitter_sigma)
        s2 = math.hypot(exp.emitter_2.sigma, exp.converter_2.pump_jitter_sigma)
        return cls(exp.emitter_1.lifetime_tau, exp.emitter_2.lifetime_tau, s1, s2, effective_detuning(exp))

    @property
    def T(self) -> float:
        return self.tau_1 * self.tau_2 / (self.tau_1 + self.tau_2)

    @property
    def Sigma(self) -> float:
        return math.hypot(self.sigma_1, self.sigma_2)

    def with_detuning(self, delta_nu: float) -> AnalyticPair:
        return AnalyticPair(self.tau_1, self.tau_2, self.sigma_1, self.sigma_2, delta_nu)


def wavefunction_density(t, emitter: EmitterSpec | float):
    """|zeta(t)|^2 = H(t) exp(-t/tau) / tau, unit area."""
    tau = emitter.lifetime_tau if isinstance(emitter, EmitterSpec) else float(emitter)
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0, np.exp(-np.clip(t, 0, None) / tau) / tau, 0.0)
    return out if out.ndim else float(out)


def g2_distinguishable(tau, tau_1: float, tau_2: float):
    """Cross-port density for orthogonally polarised photons; integrates to 1/2."""
    a = np.abs(np.asarray(tau, dtype=float))
    out = (np.exp(-a / tau_1) + np.exp(-a / tau_2)) / (4.0 * (tau_1 + tau_2))
    return out if out.ndim else float(out)


def g2_instantaneous(tau, tau_1: float, tau_2: float, delta_nu_inst: float):
    """Cross-port density for a fixed instantaneous detuning."""
    a = np.abs(np.asarray(tau, dtype=float))
    T = tau_1 * tau_2 / (tau_1 + tau_2)
    beat = 2.0 * np.exp(-a / (2.0 * T)) * np.cos(2.0 * np.pi * delta_nu_inst * a)
    out = (np.exp(-a / tau_1) + np.exp(-a / tau_2) - beat) / (4.0 * (tau_1 + tau_2))
    return out if out.ndim else float(out)


def g2_averaged(tau, pair: AnalyticPair):
    """Cross-port density averaged over Gaussian spectral diffusion."""
    a = np.abs(np.asarray(tau, dtype=float))
    t1, t2 = pair.tau_1, pair.tau_2
    damping = np.exp(-a / (2.0 * pair.T) - 2.0 * np.pi**2 * pair.Sigma**2 * a * a)
    beat = 2.0 * damping * np.cos(2.0 * np.pi * pair.delta_nu * a)
    out = (np.exp(-a / t1) + np.exp(-a / t2) - beat) / (4.0 * (t1 + t2))
    return out if out.ndim else float(out)


def instantaneous_visibility(tau_1: float, tau_2: float, delta_nu):
    """Visibility for a fixed detuning: a Lorentzian in delta_nu of height 4 T/(tau_1 + tau_2)."""
    T = tau_1 * tau_2 / (tau_1 + tau_2)
    d = np.asarray(delta_nu, dtype=float)
    out = 4.0 * T / ((tau_1 + tau_2) * (1.0 + (4.0 * np.pi * T * d) ** 2))
    return out if out.ndim else float(out)


def tpi_visibility(pair: AnalyticPair) -> float:
    """Two-photon interference visibility of the diffusion-averaged pair."""
    return float(visibility_curve(pair, pair.delta_nu))


def visibility_curve(pair: AnalyticPair, detunings):
    """``tpi_visibility`` over an array of mean detunings (other parameters from ``pair``)."""
    d = np.asarray(detunings, dtype=float)
    t1, t2 = pair.tau_1, pair.tau_2
    sigma = pair.Sigma
    if sigma == 0.0:
        return instantaneous_visibility(t1, t2, d)
    z = (2.0 * np.pi * d + 1j / (2.0 * pair.T)) / (2.0 * np.pi * math.sqrt(2.0) * sigma)
    out = np.real(faddeeva(z)) / (math.sqrt(2.0 * math.pi) * sigma * (t1 + t2))
    return out if np.ndim(out) else float(out)


def voigt_spectrum(nu, emitter: EmitterSpec, center: float | None = None):
    """Unit-area Voigt line: Lorentzian FWHM 1/(2 pi tau) convolved with the diffusion Gaussian.

    ``center`` defaults to the emitter's center frequency.  A lifetime of
    ``math.inf`` gives the pure Gaussian.
    """
    nu0 = emitter.center_frequency if center is None else center
    x = np.asarray(nu, dtype=float) - nu0
    gamma = 0.0 if math.isinf(emitter.lifetime_tau) else 1.0 / (4.0 * np.pi * emitter.lifetime_tau)
    sigma = emitter.sigma
    if sigma == 0.0:
        out = gamma / np.pi / (x * x + gamma * gamma)
    elif gamma == 0.0:
        # on the real axis Re w is exp(-x^2) buried under a much larger Im w
        out = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
    else:
        z = (x + 1j * gamma) / (sigma * math.sqrt(2.0))
        out = np.real(faddeeva(z)) / (sigma * math.sqrt(2.0 * math.pi))
    return out if np.ndim(out) else float(out)
