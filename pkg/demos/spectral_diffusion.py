"""Spectral diffusion: what it does to interference and how to measure it.

Run ``python demos/spectral_diffusion.py [--plot]``.

A dot whose line wanders by a couple of GHz still emits Fourier-limited
photons, one at a time.  Two photons emitted close together see almost the
same frequency and interfere well; photons emitted far apart do not.  The
width of the wandering can be read off a time-integrated spectrum.
"""

import numpy as np

from _common import REFERENCE_R, figure, save
from remote_tpi import voigt_spectrum
from remote_tpi.analysis import infer_inhomogeneous
from remote_tpi.montecarlo import DiffusionProcess, consecutive_visibility

# Fast (iid) diffusion forgets the previous frequency at every pulse.
# Slow diffusion (Ornstein-Uhlenbeck, 1 us memory) keeps close photons alike.
iid = DiffusionProcess("iid")
ou = DiffusionProcess("ornstein_uhlenbeck", correlation_time=1e-6)
delays = np.array([13e-9, 100e-9, 1e-6, 10e-6])
print("same-dot visibility of two photons separated by:")
for delay in delays:
    print(
        f"  {delay * 1e9:8.0f} ns   iid {consecutive_visibility(REFERENCE_R, iid, delay):.3f}"
        f"   ou {consecutive_visibility(REFERENCE_R, ou, delay):.3f}"
    )

# A grating spectrum integrates over minutes, so only the distribution is seen.
rng = np.random.default_rng(3)
nu = np.linspace(-8e9, 8e9, 801)
line = voigt_spectrum(nu, REFERENCE_R)
measured = line * (1 + 0.02 * rng.standard_normal(nu.size))
fit = infer_inhomogeneous(nu, measured, REFERENCE_R.lifetime_tau)
print(
    f"inhomogeneous FWHM from the spectrum: {fit.fwhm / 1e9:.3f} +- {fit.error / 1e9:.3f} GHz "
    f"(true {REFERENCE_R.inhom_fwhm / 1e9:.1f} GHz, homogeneous {1 / (2 * np.pi * REFERENCE_R.lifetime_tau) / 1e9:.3f} GHz)"
)

plot = figure("spectral_diffusion.png")
if plot:
    fig, ax = plot
    ax.plot(nu / 1e9, measured / measured.max(), ".", ms=2, label="noisy spectrum")
    ax.plot(nu / 1e9, line / line.max(), label="Voigt line")
    ax.set_xlabel("offset (GHz)")
    ax.set_ylabel("intensity (norm.)")
    ax.legend()
    save(fig)
