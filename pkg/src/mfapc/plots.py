"""SVG views of a :class:`SimTrace`.  Plots only read the trace, so they can be regenerated from ``trace.csv``."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simkit.trace import SimTrace  # noqa: E402

# fixed metadata and hash salt keep the SVG bytes reproducible
_SVG_META = {"Date": None, "Creator": None}
matplotlib.rcParams["svg.hashsalt"] = "mfapc"


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_tracking(trace: SimTrace, path) -> Path:
    fig, axes = plt.subplots(trace.My, 1, figsize=(7, 2.6 * trace.My), squeeze=False, sharex=True)
    for i, ax in enumerate(axes[:, 0]):
        ax.plot(trace.k, trace.yref[:, i], "--", label=f"y*_{i + 1}")
        ax.plot(trace.k, trace.y[:, i], label=f"y_{i + 1}")
        ax.set_ylabel(f"output {i + 1}")
        ax.legend(loc="upper right")
    axes[-1, 0].set_xlabel("k")
    if trace.diverged:
        axes[0, 0].set_title(f"diverged at k={trace.diverged_at}")
    return _save(fig, Path(path))


def plot_inputs(trace: SimTrace, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3))
    for j in range(trace.Mu):
        ax.plot(trace.k, trace.u[:, j], label=f"u_{j + 1}")
    ax.set_xlabel("k")
    ax.set_ylabel("control input")
    ax.legend(loc="upper right")
    return _save(fig, Path(path))


def plot_pjm(trace: SimTrace, path) -> Path:
    blocks = trace.pjm_blocks()
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for b in range(trace.L):
        for i in range(trace.My):
            for j in range(trace.Mu):
                ax.plot(trace.k, blocks[:, b, i, j], label=f"phi_{b + 1}[{i + 1},{j + 1}]")
    ax.set_xlabel("k")
    ax.set_ylabel("PJM entry")
    ax.legend(loc="upper right", fontsize="small", ncol=2)
    return _save(fig, Path(path))


def plot_lambda(trace: SimTrace, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3))
    for j in range(trace.lam.shape[1]):
        ax.plot(trace.k, trace.lam[:, j], label=f"lambda_{j + 1}")
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.set_xlabel("k")
    ax.set_ylabel("weight")
    ax.legend(loc="upper right")
    return _save(fig, Path(path))


def write_plots(trace: SimTrace, out_dir, include_lambda: bool = False) -> list[Path]:
    """tracking.svg, inputs.svg, pjm.svg and optionally lambda.svg in ``out_dir``."""
    out = Path(out_dir)
    paths = [
        plot_tracking(trace, out / "tracking.svg"),
        plot_inputs(trace, out / "inputs.svg"),
        plot_pjm(trace, out / "pjm.svg"),
    ]
    if include_lambda:
        paths.append(plot_lambda(trace, out / "lambda.svg"))
    return paths
