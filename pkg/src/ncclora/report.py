"""Figure rendering for experiment runs.

One PNG per requested output kind, written next to the CSV data.  The
plots are working plots, not publication artwork: semilog outage curves
with simulation markers, linear cooperation/current curves, and a bar
chart of the solved ring boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_COLORS = {
    "lora": "tab:blue",
    "rt-lora": "tab:orange",
    "ncc-lora": "tab:green",
}

_YLABEL = {
    "outage": "outage probability",
    "cooperation": "cooperation probability",
    "current": "average current (uA)",
}


@dataclass(frozen=True)
class CurveData:
    """One rendered curve: analytic line plus optional simulated markers."""

    label: str
    output: str
    sweep_values: np.ndarray
    analytic: np.ndarray
    simulated: np.ndarray | None = None
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None


def _color_for(label: str) -> str:
    # labels are "<scheme>" or "<scheme> @<power>dBm"
    return _COLORS.get(label.split(" ")[0], "tab:gray")


def render_curve_figure(output: str, curves: list[CurveData],
                        sweep_variable: str, path: Path) -> None:
    """Plot every curve of one output kind onto a single axes."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    scale = 1e6 if output == "current" else 1.0
    for curve in curves:
        color = _color_for(curve.label)
        ax.plot(curve.sweep_values, scale * curve.analytic, "-", color=color,
                label=curve.label, linewidth=1.4)
        if curve.simulated is not None and np.isfinite(curve.simulated).any():
            err = None
            if curve.ci_low is not None and curve.ci_high is not None:
                err = scale * np.vstack((curve.simulated - curve.ci_low,
                                         curve.ci_high - curve.simulated))
                err = np.clip(err, 0.0, None)
            ax.errorbar(curve.sweep_values, scale * curve.simulated, yerr=err,
                        fmt="o", color=color, markersize=3.5, capsize=2,
                        linestyle="none", label=f"{curve.label} (sim)")
    if output == "outage":
        ax.set_yscale("log")
    ax.set_xlabel(f"{sweep_variable} (m)" if sweep_variable == "distance"
                  else sweep_variable)
    ax.set_ylabel(_YLABEL.get(output, output))
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_layout_figure(layouts: dict[str, tuple[float, ...]],
                         path: Path) -> None:
    """Horizontal bars: one row per scheme, segments are SF rings."""
    fig, ax = plt.subplots(figsize=(6.0, 0.9 + 0.65 * len(layouts)))
    labels = list(layouts)
    for row, name in enumerate(labels):
        lower = 0.0
        for sf, upper in zip(range(7, 13), layouts[name]):
            ax.barh(row, upper - lower, left=lower, height=0.5,
                    color=plt.cm.viridis((sf - 7) / 5.0),
                    edgecolor="white", linewidth=0.5)
            if upper - lower > 0.0:
                ax.text(0.5 * (lower + upper), row, f"{sf}", ha="center",
                        va="center", fontsize=7, color="white")
            lower = upper
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels)
    ax.set_xlabel("distance to gateway (m)")
    ax.set_title("SF ring boundaries")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_table_figure(rows: list[dict], path: Path) -> None:
    """Dual-axis plot of time on air and bit rate against SF."""
    sfs = [r["sf"] for r in rows]
    toa = [r["time_on_air_ms"] for r in rows]
    rate = [r["bit_rate_kbps"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(sfs, toa, "o-", color="tab:blue", label="time on air")
    ax.set_xlabel("spreading factor")
    ax.set_ylabel("time on air (ms)", color="tab:blue")
    ax.set_yscale("log", base=2)
    twin = ax.twinx()
    twin.plot(sfs, rate, "s--", color="tab:red", label="bit rate")
    twin.set_ylabel("bit rate (kbps)", color="tab:red")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
