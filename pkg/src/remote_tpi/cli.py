"""Command-line interface: ``remote-tpi <subcommand> --config FILE [options]``.

Exit status: 0 success, 2 configuration error, 3 I/O or file-format
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    FitError,
    background_correct,
    correlate,
    extract_visibility,
    fit_g2_center,
)
from .analytic import AnalyticPair, visibility_curve, voigt_spectrum
from .config import load_config
from .dispersion import GridError, dispersion_scan
from .export import write_curve_csv, write_json, write_manifest
from .model import ConfigError
from .montecarlo import simulate_experiment
from .timetags import TimeTagFormatError, read_stream, write_stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class _Run:
    """Collects outputs of one command and writes their manifests."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.start = time.perf_counter()
        self.outputs: list[Path] = []
        self.out_dir = Path(args.out)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.outputs.append(p)
        return p

    def finish(self):
        arguments = {k: v for k, v in vars(self.args).items() if k != "func"}
        arguments = {k: (str(v) if isinstance(v, Path) else v) for k, v in arguments.items()}
        duration = time.perf_counter() - self.start
        for output in self.outputs:
            write_manifest(
                output,
                command=self.args.command,
                config=self.config.resolved if self.config else None,
                seed=self.args.seed,
                outputs=[output],
                version=__version__,
                duration=duration,
                arguments=arguments,
            )


def _header(run: _Run, **extra) -> dict:
    head = {"command": run.args.command, "version": __version__, "seed": run.args.seed}
    if run.config is not None:
        head["config"] = run.args.config
    head.update(extra)
    return head


def _require_config(args):
    if not args.config:
        raise ConfigError("--config", "this command needs a configuration file")
    return load_config(args.config)


def cmd_visibility_curve(args) -> None:
    config = _require_config(args)
    run = _Run(args, config)
    pair = AnalyticPair.from_experiment(config.experiment)
    detunings = np.linspace(args.min_ghz, args.max_ghz, args.points) * 1e9
    vis = visibility_curve(pair, detunings)
    write_curve_csv(
        run.path("visibility_curve.csv"),
        {"detuning_ghz": detunings / 1e9, "visibility": vis},
        _header(run, tau_1_ps=pair.tau_1 * 1e12, tau_2_ps=pair.tau_2 * 1e12, sigma_total_ghz=pair.Sigma / 1e9),
    )
    run.finish()
    print(f"peak visibility {np.max(vis):.4f} over {args.points} detunings")


def cmd_simulate(args) -> None:
    config = _require_config(args)
    run = _Run(args, config)
    exp = config.experiment
    n_pulses = args.pulses if args.pulses else int(round(exp.acquisition_time * exp.repetition_rate))
    stream = simulate_experiment(exp, n_pulses, args.seed, process=config.diffusion, workers=args.threads)
    name = "timetags.csv" if args.format == "csv" else "timetags.ttag"
    write_stream(stream, run.path(name), args.format)
    run.finish()
    duration = stream.duration
    rate_a = len(stream.channel(0)) / duration
    rate_b = len(stream.channel(1)) / duration
    print(f"{n_pulses} pulses, {len(stream)} events, rate A {rate_a:.4g}/s, rate B {rate_b:.4g}/s")


def _analysis_range(rep_period: float, bin_ps: int) -> float:
    """Smallest whole-bin lag range holding a few complete peaks beyond 1 us."""
    need = 1e-6 + 4 * rep_period
    n = math.ceil(need * 1e12 / bin_ps)
    return n * bin_ps * 1e-12


def _histogram(stream, exp, bin_ps, lag_range):
    hist = correlate(stream, bin_ps * 1e-12, lag_range)
    if stream.acquisition_time is None:
        hist.acquisition_time = stream.duration
    dark = (exp.detector_a.dark_rate, exp.detector_b.dark_rate)
    background = (exp.background_rate, exp.background_rate)
    return background_correct(hist, dark, background)


def cmd_analyze(args) -> None:
    config = _require_config(args)
    run = _Run(args, config)
    exp = config.experiment
    stream = read_stream(args.tag_file)
    lag_range = args.range_ns * 1e-9 if args.range_ns else _analysis_range(exp.rep_period, args.bin_ps)
    hist = _histogram(stream, exp, args.bin_ps, lag_range)
    window = args.window_ps * 1e-12 if args.window_ps else None
    reference = None
    if args.normalization == "orthogonal_hist":
        if not args.reference:
            raise ConfigError("--reference", "orthogonal_hist normalisation needs a reference time-tag file")
        reference = _histogram(read_stream(args.reference), exp, args.bin_ps, lag_range)
    result = extract_visibility(hist, exp.rep_period, window, args.normalization, reference=reference)

    record = {
        "visibility": result.visibility,
        "std_error": result.std_error,
        "center_area": result.center_area,
        "poisson_level_area": result.poisson_level_area,
        "window_ps": result.window * 1e12,
        "normalization": args.normalization,
        "delta_nu_ghz": None,
        "delta_nu_error_ghz": None,
        "chi2_dof": None,
    }
    if args.fit:
        pair = AnalyticPair.from_experiment(exp)
        jitter = math.hypot(exp.detector_a.jitter_fwhm, exp.detector_b.jitter_fwhm)
        guess = args.fit_guess_ghz * 1e9 if args.fit_guess_ghz is not None else pair.delta_nu
        fit = fit_g2_center(
            hist.rebin(args.fit_rebin) if args.fit_rebin > 1 else hist,
            (pair.tau_1, pair.tau_2, pair.Sigma),
            jitter_fwhm=jitter,
            initial={"delta_nu": guess},
        )
        record["delta_nu_ghz"] = fit.params["delta_nu"] / 1e9
        record["delta_nu_error_ghz"] = fit.errors["delta_nu"] / 1e9
        record["chi2_dof"] = fit.chi2_dof

    span = args.histogram_span_ns * 1e-9
    keep = np.abs(hist.lags) <= span
    lags_ps = np.rint(hist.edges[:-1][keep] * 1e12).astype(np.int64)
    write_curve_csv(
        run.path("histogram.csv"),
        {"lag_ps": lags_ps, "counts": hist.counts[keep]},
        _header(run, input=args.tag_file, bin_ps=args.bin_ps, lag="lower bin edge of t_B - t_A", background_floor=hist.metadata.get("background_floor")),
    )
    write_json(run.path("result.json"), record)
    run.finish()
    print(f"V = {result.visibility:.4f} +/- {result.std_error:.4f}")


def cmd_dispersion_scan(args) -> None:
    config = _require_config(args)
    run = _Run(args, config)
    exp = config.experiment
    emitter = exp.emitter_1 if args.emitter == 0 else exp.emitter_2
    fixed = exp.channel_1 if args.emitter == 0 else exp.channel_2
    fixed = replace(fixed, fiber_length=0.0)
    lengths = np.asarray(args.lengths_km, dtype=float) if args.lengths_km else np.linspace(0, args.max_km, args.points)
    for symmetric, name in ((False, "dispersion_asymmetric.csv"), (True, "dispersion_symmetric.csv")):
        curve = dispersion_scan(emitter, fixed, lengths * 1e3, symmetric=symmetric)
        write_curve_csv(
            run.path(name),
            {"length_km": [c[0] / 1e3 for c in curve], "visibility": [c[1] for c in curve]},
            _header(
                run,
                emitter=emitter.name,
                lifetime_ps=emitter.lifetime_tau * 1e12,
                beta2_ps2_per_km=fixed.gvd_beta2 / 1e-27,
                configuration="symmetric X:X" if symmetric else "asymmetric 0:X",
            ),
        )
    run.finish()
    print(f"dispersion scan over {len(lengths)} lengths for {emitter.name}")


def cmd_spectrum(args) -> None:
    config = _require_config(args)
    run = _Run(args, config)
    exp = config.experiment
    emitter = exp.emitter_1 if args.emitter == 0 else exp.emitter_2
    nu = emitter.center_frequency + np.linspace(-args.span_ghz / 2, args.span_ghz / 2, args.points) * 1e9
    density = voigt_spectrum(nu, emitter)
    write_curve_csv(
        run.path(f"spectrum_{emitter.name}.csv"),
        {"frequency_ghz": nu / 1e9, "density_per_ghz": density * 1e9},
        _header(run, emitter=emitter.name, lifetime_ps=emitter.lifetime_tau * 1e12, inhom_fwhm_ghz=emitter.inhom_fwhm / 1e9),
    )
    run.finish()
    print(f"spectrum of {emitter.name} on {args.points} points")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _global_flags(parser, suppress):
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--config", default=default(None), help="YAML or JSON configuration file")
    parser.add_argument("--seed", type=_u64, default=default(0), help="random seed (unsigned 64-bit)")
    parser.add_argument("--out", default=default("."), help="output directory")
    parser.add_argument("--threads", type=int, default=default(1), help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="remote-tpi", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    # flags repeated after the subcommand must not reset values given before it
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("visibility-curve", parents=[common], help="analytic visibility versus detuning")
    p.add_argument("--min-ghz", type=float, default=-6.0)
    p.add_argument("--max-ghz", type=float, default=6.0)
    p.add_argument("--points", type=int, default=241)
    p.set_defaults(func=cmd_visibility_curve)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo time-tag stream")
    p.add_argument("--pulses", type=int, default=None, help="number of pulses (default: acquisition x rep rate)")
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common], help="visibility from a time-tag file")
    p.add_argument("tag_file")
    p.add_argument("--bin-ps", type=int, default=1)
    p.add_argument("--range-ns", type=float, default=None, help="histogram half range (default: just over 1 us)")
    p.add_argument("--window-ps", type=float, default=None, help="central-peak integration window, full width")
    p.add_argument("--normalization", choices=("poissonian", "orthogonal_hist"), default="poissonian")
    p.add_argument("--reference", help="distinguishable-photon time tags for orthogonal_hist")
    p.add_argument("--fit", action="store_true", help="fit the detuning to the central peak")
    p.add_argument("--fit-guess-ghz", type=float, default=None, help="starting detuning; its sign is kept")
    p.add_argument("--fit-rebin", type=int, default=4)
    p.add_argument("--histogram-span-ns", type=float, default=50.0, help="half span written to histogram.csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dispersion-scan", parents=[common], help="visibility versus fibre length")
    p.add_argument("--emitter", type=int, choices=(0, 1), default=0)
    p.add_argument("--lengths-km", type=float, nargs="+", default=None)
    p.add_argument("--max-km", type=float, default=100.0)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_dispersion_scan)

    p = sub.add_parser("spectrum", parents=[common], help="Voigt emission spectrum")
    p.add_argument("--emitter", type=int, choices=(0, 1), default=0)
    p.add_argument("--span-ghz", type=float, default=20.0)
    p.add_argument("--points", type=int, default=2001)
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TimeTagFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FitError, GridError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
