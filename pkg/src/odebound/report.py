"""PNG figures that accompany the CSV output. CSVs remain the primary record."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "savefig.dpi": 120,
}

_LINESTYLES = {"tight": "--", "loose": ":", "exact_J0": ":", "exact_J1": "-.", "exact_Jeps": "--"}


def _floor(values: np.ndarray) -> np.ndarray:
    """Positive copy for log axes; zeros become the smallest positive value present."""
    values = np.asarray(values, dtype=float)
    pos = values[np.isfinite(values) & (values > 0)]
    floor = pos.min() if pos.size else 1e-300
    return np.where(values > 0, values, floor)


def new(nrows: int = 1, ncols: int = 1, width: float = 3.2, height: float = 2.4):
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(width * ncols, height * nrows), squeeze=False)
    return fig, axes


def save(fig, path) -> Path:
    path = Path(path)
    with plt.rc_context(STYLE):
        fig.tight_layout()
        # no version string in the PNG metadata
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_bound(path, curve, partial_sum: np.ndarray | None = None, abs_error: np.ndarray | None = None) -> Path:
    """One bound curve on a log axis, with the series partial sum and error if known."""
    fig, axes = new()
    ax = axes[0, 0]
    t = curve.grid.t
    v = curve.valid
    ax.semilogy(t[v], _floor(curve.values[v]), "--", color="C0", label=f"{curve.kind} bound (J={curve.J})")
    if partial_sum is not None:
        ax.semilogy(t, _floor(np.abs(partial_sum)), color="C1", alpha=0.8, label="|partial sum|")
    if abs_error is not None:
        ax.semilogy(t, _floor(abs_error), color="k", label="|error|")
    if not curve.fully_valid:
        ax.axvspan(t[~v].min(), t[~v].max(), color="0.9", label="no bound")
    ax.set_xlabel("t")
    ax.set_ylabel("magnitude")
    ax.legend(frameon=False)
    return save(fig, path)


def plot_experiment(path, records, title: str = "") -> Path:
    """Error and bound curves, one panel per ladder rung."""
    by_rung = defaultdict(list)
    for rec in records:
        by_rung[rec.rung].append(rec)
    rungs = sorted(by_rung)
    fig, axes = new(1, len(rungs))
    for ax, rung in zip(axes[0], rungs):
        recs = by_rung[rung]
        t = recs[0].curve.grid.t
        ax.semilogy(t, _floor(recs[0].abs_error), color="k", label="|error|")
        for i, rec in enumerate(recs):
            c = rec.curve
            ls = _LINESTYLES.get(rec.label, "--")
            ax.semilogy(t[c.valid], _floor(c.values[c.valid]), ls, color=f"C{i}", label=f"{rec.label} (J={c.J})")
        ax.set_title(f"scale {recs[0].scale:.0e}, loss {recs[0].loss:.1e}", fontsize=8)
        ax.set_xlabel("t")
        ax.legend(frameon=False)
    axes[0, 0].set_ylabel("magnitude")
    if title:
        fig.suptitle(title, fontsize=9)
    return save(fig, path)
