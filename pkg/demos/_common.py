"""Bits shared by the demo scripts: the reference pair and optional plotting."""

import sys

from remote_tpi import DetectorSpec, EmitterSpec, ExperimentSpec, ConverterSpec

REFERENCE_R = EmitterSpec("QDR", 580e-12, 0.0, 2.0e9, 0.3)
REFERENCE_B = EmitterSpec("QDB", 600e-12, 0.0, 1.3e9, 0.3)


def reference_experiment(delta_nu=0.0, system_jitter=40e-12, **kw):
    # the detuning is dialled in with the second converter's pump, as in the lab
    det = DetectorSpec(system_jitter / 2**0.5, 0.5, 55.0)
    return ExperimentSpec(
        REFERENCE_R,
        REFERENCE_B,
        converter_2=ConverterSpec(pump_frequency=delta_nu),
        detector_a=det,
        detector_b=det,
        background_rate=500.0,
        **kw,
    )


def figure(path):
    """Return a (fig, ax) pair when ``--plot`` was passed and matplotlib is present."""
    if "--plot" not in sys.argv:
        return None
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping", path)
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    fig.savepath = path
    return fig, ax


def save(fig):
    fig.tight_layout()
    fig.savefig(fig.savepath, dpi=120)
    print("wrote", fig.savepath)
