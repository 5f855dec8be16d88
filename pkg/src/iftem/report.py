"""Figure rendering for sweep results (headless, PNG output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_mse_figure", "render_overhead_figure"]

_TWO_PI = 6.283185307179586


def _mean_groups(rows):
    groups: dict = {}
    for row in rows:
        if row.kind != "mean":
            continue
        key = (row.scheme, row.bias_mode, row.omega)
        groups.setdefault(key, []).append(row)
    for members in groups.values():
        members.sort(key=lambda r: r.bits)
    return dict(sorted(groups.items()))


def _label(scheme: str, mode: str, omega: float) -> str:
    return f"{scheme} ({mode}, {omega / _TWO_PI:.0f} Hz)"


def render_mse_figure(rows, path) -> Path:
    """Mean MSE against residual bits, one curve per scheme/mode/band."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (scheme, mode, omega), members in _mean_groups(rows).items():
        ax.plot([r.bits for r in members], [r.mse_db for r in members],
                marker="o", label=_label(scheme, mode, omega))
    ax.set_xlabel("bits per residual code")
    ax.set_ylabel("MSE [dB]")
    ax.grid(True, alpha=0.4)
    if ax.get_legend_handles_labels()[1]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_overhead_figure(rows, path) -> Path:
    """Mean window overhead against residual bits for the windowed schemes."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (scheme, mode, omega), members in _mean_groups(rows).items():
        if scheme == "iftem":
            continue
        ax.plot([r.bits for r in members],
                [r.overhead_percent for r in members],
                marker="s", label=_label(scheme, mode, omega))
    ax.set_xlabel("bits per residual code")
    ax.set_ylabel("window overhead [% of residual bits]")
    ax.grid(True, alpha=0.4)
    if ax.get_legend_handles_labels()[1]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
