"""Data reduction: coincidence histograms, background, visibility and model fits.

Lags are ``t_B - t_A``.  Histograms cover the half-open range
``[-lag_range, +lag_range)`` with integer-picosecond bins.  Processed
histograms carry float counts and a per-bin variance that starts out as the
Poisson variance of the raw counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares
from scipy.integrate import trapezoid
from scipy.signal import fftconvolve
from scipy.special import erf

from .analytic import voigt_spectrum
from .model import FWHM_PER_SIGMA, EmitterSpec
from .timetags import CHANNEL_A, CHANNEL_B, TimeTagStream

#: far peaks used for the Poissonian level must be at least this far from zero lag
POISSON_MIN_LAG = 1e-6

_PAIR_CHUNK = 1 << 22


class FitError(RuntimeError):
    """A fit did not converge.  ``diagnostics`` holds the optimizer report."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _to_ps(seconds: float, what: str) -> int:
    ps = round(seconds * 1e12)
    if ps <= 0 or abs(ps - seconds * 1e12) > 1e-6 * max(1.0, ps):
        raise ValueError(f"{what} must be a positive whole number of picoseconds, got {seconds!r} s")
    return int(ps)


@dataclass(eq=False)
class CorrelationHistogram:
    bin_width: float
    lag_range: tuple[float, float]
    counts: np.ndarray
    acquisition_time: float
    variance: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.variance is None:
            self.variance = np.asarray(self.counts, dtype=float).copy()
        n_expected = round((self.lag_range[1] - self.lag_range[0]) / self.bin_width)
        if self.counts.ndim != 1 or self.counts.size != n_expected:
            raise ValueError(f"expected {n_expected} bins for the lag range, got {self.counts.shape}")

    @property
    def bin_width_ps(self) -> int:
        return round(self.bin_width * 1e12)

    @property
    def edges(self) -> np.ndarray:
        return self.lag_range[0] + self.bin_width * np.arange(self.counts.size + 1)

    @property
    def lags(self) -> np.ndarray:
        """Bin centers in seconds."""
        return self.lag_range[0] + self.bin_width * (np.arange(self.counts.size) + 0.5)

    @property
    def total(self) -> float:
        return float(np.sum(self.counts))

    def rebin(self, factor: int) -> CorrelationHistogram:
        """Merge ``factor`` adjacent bins; the bin count must divide evenly."""
        if self.counts.size % factor:
            raise ValueError(f"{self.counts.size} bins do not split into groups of {factor}")
        return replace(
            self,
            bin_width=self.bin_width * factor,
            counts=self.counts.reshape(-1, factor).sum(axis=1),
            variance=self.variance.reshape(-1, factor).sum(axis=1),
            metadata=dict(self.metadata),
        )

    def window_weights(self, center: float, width: float) -> np.ndarray:
        """Fraction of each bin inside ``[center - width/2, center + width/2)``."""
        edges = self.edges
        lo = np.clip(edges[:-1], center - width / 2, center + width / 2)
        hi = np.clip(edges[1:], center - width / 2, center + width / 2)
        return (hi - lo) / self.bin_width

    def area(self, center: float, width: float) -> tuple[float, float]:
        """Counts and variance inside a window, with fractional edge bins."""
        w = self.window_weights(center, width)
        return float(np.dot(w, self.counts)), float(np.dot(w * w, self.variance))


@dataclass(frozen=True)
class VisibilityResult:
    visibility: float
    std_error: float
    center_area: float
    poisson_level_area: float
    window: float
    mode: str = "poissonian"
    n_reference_peaks: int = 0


def correlate(stream: TimeTagStream, bin_width: float, lag_range: float) -> CorrelationHistogram:
    """Histogram of ``t_B - t_A`` over every A/B pair with lag in ``[-lag_range, lag_range)``.

    For each A tag the matching B tags form a contiguous slice of the sorted
    B timestamps, located by binary search, so the cost is O(N log N + pairs).
    """
    if not stream.is_sorted():
        raise ValueError("time-tag stream must be sorted by timestamp")
    bw = _to_ps(bin_width, "bin_width")
    rng_ps = _to_ps(lag_range, "lag_range")
    if rng_ps % bw:
        raise ValueError("lag_range must be a whole number of bins")
    n_bins = 2 * rng_ps // bw
    a = stream.channel(CHANNEL_A)
    b = stream.channel(CHANNEL_B)
    counts = np.zeros(n_bins, dtype=np.int64)
    lo = np.searchsorted(b, a - rng_ps, side="left")
    hi = np.searchsorted(b, a + rng_ps, side="left")
    n_match = hi - lo
    ends = np.cumsum(n_match)
    start = 0
    while start < a.size:
        base = ends[start - 1] if start else 0
        stop = int(np.searchsorted(ends, base + _PAIR_CHUNK, side="right"))
        stop = max(stop, start + 1)
        m = n_match[start:stop]
        total = int(m.sum())
        if total:
            ia = np.repeat(np.arange(start, stop), m)
            first = np.repeat(np.cumsum(m) - m, m)
            ib = lo[ia] + (np.arange(total) - first)
            bins = (b[ib] - a[ia] + rng_ps) // bw
            counts += np.bincount(bins, minlength=n_bins)
        start = stop
    meta = {"counts_a": int(a.size), "counts_b": int(b.size)}
    return CorrelationHistogram(bw * 1e-12, (-rng_ps * 1e-12, rng_ps * 1e-12), counts, stream.duration, metadata=meta)


def gaussian_kernel(bin_width: float, jitter_fwhm: float) -> np.ndarray:
    """Unit-sum Gaussian sampled by bin-integrated weights out to 6 sigma."""
    sigma = jitter_fwhm / FWHM_PER_SIGMA
    half = max(1, int(math.ceil(6.0 * sigma / bin_width)))
    edges = (np.arange(-half, half + 2) - 0.5) * bin_width
    cdf = 0.5 * (1.0 + erf(edges / (sigma * math.sqrt(2.0))))
    k = np.diff(cdf)
    return k / k.sum()


def _convolve_folded(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Full convolution with the spill past either end mirrored back inside."""
    half = (kernel.size - 1) // 2
    full = fftconvolve(values, kernel, mode="full")
    n = values.size
    out = full[half : half + n].copy()
    left = full[:half][::-1]
    right = full[half + n :][::-1]
    out[: left.size] += left
    out[n - right.size :] += right
    return out


def convolve_response(hist: CorrelationHistogram, jitter_fwhm: float) -> CorrelationHistogram:
    """Smooth with a Gaussian timing response of the given FWHM; total area is preserved."""
    if jitter_fwhm < 0:
        raise ValueError("jitter_fwhm must be >= 0")
    if jitter_fwhm == 0:
        return replace(hist, counts=np.asarray(hist.counts, dtype=float), variance=hist.variance.copy())
    kernel = gaussian_kernel(hist.bin_width, jitter_fwhm)
    if kernel.size > hist.counts.size:
        raise ValueError("response kernel is wider than the histogram")
    counts = _convolve_folded(np.asarray(hist.counts, dtype=float), kernel)
    variance = _convolve_folded(hist.variance, kernel * kernel)
    return replace(hist, counts=counts, variance=variance, metadata=dict(hist.metadata))


def accidental_floor(hist: CorrelationHistogram, dark_rates, background_rates) -> float:
    """Expected counts per bin from noise clicks on either detector.

    With measured singles rates r_A, r_B and noise rates n_A, n_B the
    noise-involving accidental rate is n_A r_B + r_A n_B - n_A n_B.
    """
    n_a = dark_rates[0] + background_rates[0]
    n_b = dark_rates[1] + background_rates[1]
    t = hist.acquisition_time
    r_a = hist.metadata.get("counts_a", 0) / t
    r_b = hist.metadata.get("counts_b", 0) / t
    return (n_a * r_b + r_a * n_b - n_a * n_b) * t * hist.bin_width


def background_correct(hist: CorrelationHistogram, dark_rates=(0.0, 0.0), background_rates=(0.0, 0.0)) -> CorrelationHistogram:
    """Subtract the flat accidental floor caused by dark and background clicks.

    Bins may become slightly negative; they are kept as they are.
    """
    if min(*dark_rates, *background_rates) < 0:
        raise ValueError("rates must be >= 0")
    floor = accidental_floor(hist, dark_rates, background_rates)
    counts = np.asarray(hist.counts, dtype=float) - floor
    # the floor is scaled by measured singles counts, each with Poisson error
    n_a = max(hist.metadata.get("counts_a", 0), 1)
    n_b = max(hist.metadata.get("counts_b", 0), 1)
    variance = hist.variance + floor * floor * (1.0 / n_a + 1.0 / n_b)
    meta = dict(hist.metadata, background_floor=floor)
    return replace(hist, counts=counts, variance=variance, metadata=meta)


def _peak_areas(hist, rep_period, window, orders):
    areas = np.empty(len(orders))
    variances = np.empty(len(orders))
    for i, m in enumerate(orders):
        areas[i], variances[i] = hist.area(m * rep_period, window)
    return areas, variances


def extract_visibility(
    hist: CorrelationHistogram,
    rep_period: float,
    integration_window: float | None = None,
    mode_reference: str = "poissonian",
    *,
    reference: CorrelationHistogram | None = None,
) -> VisibilityResult:
    """Two-photon interference visibility from the central-peak area.

    ``poissonian``: V = 1 - 2 C / P, with C the central-peak area and P the
    mean area of all complete peaks at least 1 us from zero lag; the scatter
    of those far peaks sets the error on P.

    ``orthogonal_hist``: V = 1 - C / C_ref, with ``reference`` the
    histogram recorded with distinguishable photons; each central area is
    normalised by N_A N_B / T of its own acquisition.

    ``integration_window`` is the full width of the integration window and
    defaults to half the repetition period.
    """
    if integration_window is None:
        integration_window = rep_period / 2
    if not 0 < integration_window <= rep_period / 2 * (1 + 1e-12):
        raise ValueError("integration window must be positive and at most half the repetition period")
    center, var_center = hist.area(0.0, integration_window)

    if mode_reference == "poissonian":
        lo, hi = hist.lag_range
        m_max = int(math.floor((hi - integration_window / 2) / rep_period))
        m_min = int(math.ceil((lo + integration_window / 2) / rep_period))
        orders = [m for m in range(m_min, m_max + 1) if abs(m) * rep_period >= POISSON_MIN_LAG]
        if not orders:
            raise ValueError("lag range holds no complete peak beyond 1 us; the Poissonian level is undefined")
        areas, variances = _peak_areas(hist, rep_period, integration_window, orders)
        level = float(areas.mean())
        if len(orders) > 1:
            var_level = float(areas.var(ddof=1)) / len(orders)
        else:
            var_level = float(variances[0])
        if level <= 0:
            raise ValueError("Poissonian level is not positive")
        ratio = center / level
        visibility = 1.0 - 2.0 * ratio
        var_v = 4.0 * (var_center / level**2 + ratio**2 * var_level / level**2)
        return VisibilityResult(
            visibility, math.sqrt(max(var_v, 0.0)), center, level, integration_window, mode_reference, len(orders)
        )

    if mode_reference == "orthogonal_hist":
        if reference is None:
            raise ValueError("orthogonal_hist mode needs a reference histogram")
        ref, var_ref = reference.area(0.0, integration_window)

        def norm(h):
            n = h.metadata.get("counts_a", 0) * h.metadata.get("counts_b", 0)
            return n / h.acquisition_time if n else 1.0

        c = center / norm(hist)
        r = ref / norm(reference)
        if r <= 0:
            raise ValueError("reference central area is not positive")
        ratio = c / r
        var_v = ratio**2 * (var_center / center**2 if center else 0.0) + ratio**2 * var_ref / ref**2
        if center == 0:
            var_v += (1.0 / ref) ** 2 * norm(reference) ** 2 / norm(hist) ** 2
        return VisibilityResult(1.0 - ratio, math.sqrt(var_v), center, ref, integration_window, mode_reference, 1)

    raise ValueError(f"unknown mode_reference {mode_reference!r}")


def beat_frequency(
    hist: CorrelationHistogram,
    rep_period: float,
    *,
    window: float = 2e-9,
    n_side: int = 4,
    min_frequency: float = 0.5e9,
    pad: int = 16,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Dominant oscillation frequency of the central peak.

    Half the mean profile of the ``±1..n_side`` side peaks is subtracted from
    the central peak, leaving the beat term; the strongest component of its
    zero-padded spectrum above ``min_frequency`` is located with parabolic
    interpolation.  Returns (frequency, spectrum frequencies, |spectrum|).
    """
    n_half = int(round(window / 2 / hist.bin_width))
    lags = hist.lags

    def segment(t0):
        i0 = int(np.searchsorted(lags, t0))
        if i0 - n_half < 0 or i0 + n_half > lags.size:
            raise ValueError("lag range does not cover the requested peaks")
        return np.asarray(hist.counts[i0 - n_half : i0 + n_half], dtype=float)

    central = segment(0.0)
    sides = [segment(m * rep_period) for m in range(-n_side, n_side + 1) if m]
    residual = central - 0.5 * np.mean(sides, axis=0)
    n_fft = pad * residual.size
    spectrum = np.abs(np.fft.rfft(residual, n_fft))
    freqs = np.fft.rfftfreq(n_fft, hist.bin_width)
    valid = np.flatnonzero(freqs >= min_frequency)
    k = valid[np.argmax(spectrum[valid])]
    f = freqs[k]
    if 0 < k < spectrum.size - 1:
        y0, y1, y2 = spectrum[k - 1 : k + 2]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            f += 0.5 * (y0 - y2) / denom * (freqs[1] - freqs[0])
    return float(f), freqs, spectrum


# ---------------------------------------------------------------- model fits

FIT_PARAMETERS = ("delta_nu", "amplitude", "contrast")


@dataclass(eq=False)
class FitResult:
    params: dict
    errors: dict
    covariance: np.ndarray
    chi2_dof: float
    free: tuple
    jac: np.ndarray
    x: np.ndarray
    residual_fn: object = field(repr=False)
    n_bins: int = 0


class G2Model:
    """Jitter-convolved cross-port density integrated over histogram bins.

    ``counts(delta_nu, amplitude, contrast)`` returns expected counts per bin
    for ``amplitude`` detected pairs.
    """

    def __init__(self, edges, tau_1, tau_2, sigma, jitter_fwhm, supersample=8):
        self.edges = np.asarray(edges, dtype=float)
        self.tau_1, self.tau_2, self.sigma = tau_1, tau_2, sigma
        bw = self.edges[1] - self.edges[0]
        self.dt = bw / supersample
        self.supersample = supersample
        jitter_sigma = jitter_fwhm / FWHM_PER_SIGMA
        pad = int(math.ceil(6 * jitter_sigma / self.dt)) if jitter_sigma > 0 else 0
        self.pad = pad
        n = (self.edges.size - 1) * supersample + 2 * pad
        self.t = self.edges[0] - pad * self.dt + (np.arange(n) + 0.5) * self.dt
        if jitter_sigma > 0:
            x = (np.arange(-pad, pad + 1)) * self.dt
            k = np.exp(-0.5 * (x / jitter_sigma) ** 2)
            self.kernel = k / k.sum()
        else:
            self.kernel = None
        a = np.abs(self.t)
        T = tau_1 * tau_2 / (tau_1 + tau_2)
        norm = 4.0 * (tau_1 + tau_2)
        self.envelope = (np.exp(-a / tau_1) + np.exp(-a / tau_2)) / norm
        self.damped = 2.0 * np.exp(-a / (2 * T) - 2 * np.pi**2 * sigma**2 * a * a) / norm
        self.cos_arg = 2 * np.pi * a

    def density(self, delta_nu, contrast=1.0):
        dens = self.envelope - contrast * self.damped * np.cos(self.cos_arg * delta_nu)
        if self.kernel is not None:
            dens = fftconvolve(dens, self.kernel, mode="same")[self.pad : dens.size - self.pad]
        return dens

    def counts(self, delta_nu, amplitude, contrast=1.0):
        dens = self.density(delta_nu, contrast)
        return amplitude * dens.reshape(-1, self.supersample).sum(axis=1) * self.dt


def fit_g2_center(
    hist: CorrelationHistogram,
    fixed: tuple[float, float, float],
    free=("delta_nu", "amplitude"),
    *,
    jitter_fwhm: float = 0.0,
    window: float = 3e-9,
    initial: dict | None = None,
    max_detuning: float = 10e9,
    supersample: int = 8,
    max_nfev: int | None = None,
) -> FitResult:
    """Poisson-weighted least-squares fit of the central peak.

    ``fixed`` is (tau_1, tau_2, Sigma) with Sigma the combined Gaussian width
    of the detuning distribution.  The model depends on the detuning only
    through cos(2 pi delta_nu tau), so the sign of delta_nu cannot be
    measured: it is taken from ``initial['delta_nu']`` (default positive) and
    the magnitude is found by a coarse scan before refinement.  Parameters
    not listed in ``free`` stay at their initial value (contrast defaults to 1).
    """
    free = tuple(free)
    for name in free:
        if name not in FIT_PARAMETERS:
            raise ValueError(f"unknown fit parameter {name!r}")
    tau_1, tau_2, sigma = fixed
    init = {"delta_nu": 0.0, "amplitude": None, "contrast": 1.0}
    init.update(initial or {})
    sign = -1.0 if init["delta_nu"] < 0 else 1.0

    sel = np.flatnonzero(np.abs(hist.lags) <= window / 2)
    if sel.size < 20:
        raise ValueError("fit window holds fewer than 20 bins")
    edges = hist.edges[sel[0] : sel[-1] + 2]
    data = np.asarray(hist.counts, dtype=float)[sel]
    weight = 1.0 / np.sqrt(np.maximum(np.asarray(hist.variance, dtype=float)[sel], 1.0))
    model = G2Model(edges, tau_1, tau_2, sigma, jitter_fwhm, supersample)

    def best_amplitude(shape):
        sw = shape * weight
        return float(np.dot(sw, data * weight) / np.dot(sw, sw))

    if "delta_nu" in free:
        grid = np.linspace(0.0, max_detuning, 201)
        costs = []
        for d in grid:
            shape = model.counts(sign * d, 1.0, init["contrast"])
            amp = best_amplitude(shape) if init["amplitude"] is None else init["amplitude"]
            costs.append(np.sum(((amp * shape - data) * weight) ** 2))
        init["delta_nu"] = sign * grid[int(np.argmin(costs))]
    if init["amplitude"] is None:
        init["amplitude"] = best_amplitude(model.counts(init["delta_nu"], 1.0, init["contrast"]))

    scale = {"delta_nu": 1e9, "amplitude": max(abs(init["amplitude"]), 1.0), "contrast": 1.0}
    bounds_lo = {"delta_nu": 0.0 if sign > 0 else -np.inf, "amplitude": 0.0, "contrast": -np.inf}
    bounds_hi = {"delta_nu": np.inf if sign > 0 else 0.0, "amplitude": np.inf, "contrast": np.inf}

    def unpack(x):
        p = dict(init)
        for name, value in zip(free, x):
            p[name] = value * scale[name]
        return p

    def residual_fn(x):
        p = unpack(x)
        return (model.counts(p["delta_nu"], p["amplitude"], p["contrast"]) - data) * weight

    x0 = np.array([init[name] / scale[name] for name in free])
    lo = np.array([bounds_lo[n] / scale[n] for n in free])
    hi = np.array([bounds_hi[n] / scale[n] for n in free])
    x0 = np.clip(x0, lo, hi)
    sol = least_squares(residual_fn, x0, bounds=(lo, hi), jac="2-point", x_scale="jac", xtol=1e-12, ftol=1e-12, max_nfev=max_nfev)
    diagnostics = {"status": sol.status, "message": sol.message, "nfev": sol.nfev, "x": sol.x.tolist()}
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FitError(f"central-peak fit did not converge: {sol.message}", diagnostics)
    dof = max(sel.size - len(free), 1)
    chi2_dof = float(2.0 * sol.cost / dof)
    jtj = sol.jac.T @ sol.jac
    try:
        cov_x = np.linalg.inv(jtj)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Jacobian at the optimum", diagnostics) from exc
    s = np.array([scale[n] for n in free])
    cov = cov_x * np.outer(s, s)
    params = unpack(sol.x)
    errors = {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(free)}
    return FitResult(params, errors, cov, chi2_dof, free, sol.jac, sol.x, residual_fn, sel.size)


# ------------------------------------------------------------ Voigt inference


@dataclass(frozen=True)
class InhomogeneousFit:
    fwhm: float
    error: float
    degenerate: bool
    center: float
    amplitude: float
    residual_variance: float


def _half_max_width(nu, y):
    above = np.flatnonzero(y >= 0.5 * np.max(y))
    return float(nu[above[-1]] - nu[above[0]]) if above.size else 0.0


def infer_inhomogeneous(nu, intensity, lifetime: float) -> InhomogeneousFit:
    """Gaussian FWHM of a spectral line, with the Lorentzian width fixed by ``lifetime``.

    Fits amplitude * Voigt(nu - center) + nothing else.  The fit is flagged
    ``degenerate`` when the Gaussian FWHM is below the sampling step.
    """
    nu = np.asarray(nu, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if nu.ndim != 1 or nu.shape != y.shape or nu.size < 8:
        raise ValueError("spectrum must be two 1-D arrays of equal length (>= 8 points)")
    step = float(np.median(np.diff(nu)))
    if step <= 0:
        raise ValueError("frequency axis must increase")
    width = _half_max_width(nu, y)
    if step > width / 5:
        raise ValueError(f"spectral step {step:.3g} Hz is coarser than a fifth of the line width {width:.3g} Hz")

    center0 = float(nu[np.argmax(y)])
    lorentz_fwhm = 1.0 / (2 * np.pi * lifetime)
    g0 = math.sqrt(max(width**2 - lorentz_fwhm**2, (0.5 * width) ** 2))
    # work with the spectrum scaled to unit peak so that optimizer tolerances are meaningful
    y_scale = float(np.max(np.abs(y))) or 1.0
    yn = y / y_scale
    area0 = float(trapezoid(yn, nu))
    scale = np.array([abs(area0) or 1.0, lorentz_fwhm, lorentz_fwhm])

    def residual(p):
        area, center, fwhm = p * scale
        emitter = EmitterSpec("fit", lifetime, 0.0, abs(fwhm))
        return area * voigt_spectrum(nu - center, emitter, center=0.0) - yn

    x0 = np.array([area0, center0, g0]) / scale
    sol = least_squares(residual, x0, bounds=([-np.inf, -np.inf, 0.0], np.inf), jac="2-point", xtol=1e-12, ftol=1e-12)
    if not sol.success:
        raise FitError(f"Voigt fit did not converge: {sol.message}", {"status": sol.status, "nfev": sol.nfev})
    dof = max(nu.size - 3, 1)
    s2 = 2.0 * sol.cost / dof
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * s2
        err = float(math.sqrt(max(cov[2, 2], 0.0)) * scale[2])
    except np.linalg.LinAlgError:
        err = float("inf")
    area, center, fwhm = sol.x * scale
    area *= y_scale
    s2 *= y_scale**2
    return InhomogeneousFit(float(fwhm), err, bool(fwhm < step), float(center), float(area), float(s2))
