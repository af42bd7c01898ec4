"""Static figures for reports (Agg backend, files only)."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
fig_size = [fig_width, fig_width * golden_mean]

params = {
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "font.family": "serif",
    "font.size": 9,
    "mathtext.fontset": "stix",
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": fig_size,
    "figure.dpi": 150,
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "savefig.bbox": "tight",
    # fixed metadata keeps SVG output reproducible
    "svg.hashsalt": "kzcocycle",
}


def _save(fig, stem: Path, formats) -> list[Path]:
    out = []
    for fmt in formats:
        path = stem.parent / f"{stem.name}.{fmt}"
        meta = {"Date": None} if fmt == "svg" else {}
        fig.savefig(path, format=fmt, metadata=meta)
        out.append(path)
    plt.close(fig)
    return out


def read_trace(path) -> dict[tuple[str, int], tuple[list[int], list[float]]]:
    series: dict = defaultdict(lambda: ([], []))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            s = series[row["block_label"], int(row["lambda_index"])]
            s[0].append(int(row["step"]))
            s[1].append(float(row["running_estimate"]))
    return dict(series)


def plot_convergence(trace_path, stem, formats=("png", "svg"), block: str = "full", title: str = "") -> list[Path]:
    """Running estimates of the non-negative exponents against step count."""
    series = read_trace(trace_path)
    idx = sorted(i for (b, i) in series if b == block)
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        keep = idx[: (len(idx) + 1) // 2]
        for i in keep:
            steps, vals = series[block, i]
            ax.plot(steps, vals, label=rf"$\lambda_{{{i}}}$")
        ax.set_xscale("log")
        ax.set_xlabel("steps")
        ax.set_ylabel("running estimate")
        ax.set_title(title)
        if len(keep) <= 10:
            ax.legend(loc="best", ncol=2)
        return _save(fig, Path(stem), formats)


def plot_spectrum(exponents, stderr, predicted, stem, formats=("png", "svg"), title: str = "") -> list[Path]:
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        x = np.arange(1, len(exponents) + 1)
        ax.errorbar(x, exponents, yerr=3 * np.asarray(stderr), fmt="o", label="simulated (3 stderr)")
        if predicted is not None:
            ax.plot(x[: len(predicted)], predicted, "x", color="k", label="predicted")
        ax.axhline(0.0, color="0.7", lw=0.6)
        ax.set_xlabel("index")
        ax.set_ylabel(r"$\lambda_i$")
        ax.set_title(title)
        ax.legend(loc="best")
        return _save(fig, Path(stem), formats)


def plot_singular_values(sv, stem, formats=("png", "svg"), rank_tol: float | None = None, title: str = "") -> list[Path]:
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        sv = np.maximum(np.asarray(sv, dtype=float), 1e-18)
        ax.semilogy(np.arange(1, len(sv) + 1), sv, "o-")
        if rank_tol is not None:
            ax.axhline(rank_tol, color="r", ls="--", lw=0.8, label="rank threshold")
            ax.legend(loc="best")
        ax.set_xlabel("index")
        ax.set_ylabel("singular value of B")
        ax.set_title(title)
        return _save(fig, Path(stem), formats)


def plot_kontsevich(traces, reference, stem, formats=("png", "svg"), title: str = "") -> list[Path]:
    traces = np.asarray(traces, dtype=float)
    with plt.rc_context(params):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(fig_width * 1.6, fig_width * golden_mean))
        ax1.hist(traces, bins=min(30, max(5, len(traces) // 5)), color="0.6")
        ax1.set_xlabel(r"$\sum \Lambda_i$ per sample")
        ax1.set_ylabel("count")
        n = np.arange(1, len(traces) + 1)
        ax2.plot(n, np.cumsum(traces) / n, label="running mean")
        if reference is not None:
            ax2.axhline(reference, color="k", ls="--", lw=0.8, label="Lyapunov sum")
        ax2.set_xlabel("samples")
        ax2.legend(loc="best")
        fig.suptitle(title)
        return _save(fig, Path(stem), formats)
