"""Shared parameters for the test modules."""

import math

from remote_tpi.model import DetectorSpec, EmitterSpec, ExperimentSpec

TAU_R = 580e-12
TAU_B = 600e-12
FWHM_R = 2.0e9
FWHM_B = 1.3e9


def paper_like_experiment(delta_nu=0.0, *, emission=0.3, detector_efficiency=0.5, jitter_fwhm=40e-12, **kw):
    """Two emitters with the reference lifetimes and diffusion widths, detuned by ``delta_nu``."""
    e1 = EmitterSpec("R", TAU_R, delta_nu / 2, FWHM_R, emission)
    e2 = EmitterSpec("B", TAU_B, -delta_nu / 2, FWHM_B, emission)
    det = DetectorSpec(jitter_fwhm, detector_efficiency)
    return ExperimentSpec(e1, e2, detector_a=det, detector_b=det, **kw)


def binomial_sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


#: lines written by the acceptance tests, echoed in the pytest terminal summary
ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed
