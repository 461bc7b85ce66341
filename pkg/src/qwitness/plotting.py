"""Figure rendering for rate tables and witness curves.

Figures are written to files next to the CSV output (SVG via the Agg
backend); nothing interactive.  The svg hashsalt is pinned so reruns give
stable markup.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "qwitness"

import matplotlib.pyplot as plt  # noqa: E402

from .rates import RateTable  # noqa: E402
from .witness import WitnessCurve  # noqa: E402

_STYLES = ["-", "--", ":", "-."]


def plot_rate_table(labelled_tables: list[tuple[str, RateTable]], path) -> None:
    """Damping rates vs time: heating/cooling left panel, squeezing right."""
    fig, (ax_l, ax_r) = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
    for k, (label, tab) in enumerate(labelled_tables):
        cyc = 2.0 * math.pi / tab.omega
        style = _STYLES[k % len(_STYLES)]
        t = tab.time_grid / cyc
        ax_l.plot(t, tab.heating, style, label=f"heating {label}".strip())
        ax_l.plot(t, tab.cooling, style, alpha=0.5,
                  label=f"cooling {label}".strip())
        ax_r.plot(t, tab.squeezing, style, label=label or None)
    ax_l.set_xlabel(r"$t\,[2\pi/\omega]$")
    ax_r.set_xlabel(r"$t\,[2\pi/\omega]$")
    ax_l.set_ylabel(r"rate $[\omega]$")
    ax_r.set_ylabel(r"squeezing rate $[\omega]$")
    ax_r.axhline(0.0, color="gray", lw=0.6)
    ax_l.legend(fontsize=7)
    if any(label for label, _ in labelled_tables):
        ax_r.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_witness_curves(labelled_curves: list[tuple[str, WitnessCurve]], path,
                        *, delta: bool = False) -> None:
    """Witness (or |deviation|) against the first measurement time."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for k, (label, curve) in enumerate(labelled_curves):
        vals = abs(curve.values) if delta else curve.values
        ax.plot(curve.tau_grid, vals, _STYLES[k % len(_STYLES)],
                label=label or None)
    ax.set_xlabel(r"$\tau\,[2\pi/\omega]$")
    ax.set_ylabel(r"$|\Delta W|$" if delta else r"$W$")
    if any(label for label, _ in labelled_curves):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
