"""Matplotlib figure rendering for the report paths.

Figures are written next to the delimited output.  PNG bytes must be stable
across reruns (the manifests promise bitwise reproducibility), so the
Software metadata tag is stripped and everything else is pinned.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def fig_curves(
    x,
    curves: dict[str, object],
    path: Path,
    xlabel: str,
    ylabel: str,
    logy: bool = False,
    title: str | None = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, y in curves.items():
        ax.plot(x, y, label=label, linewidth=1.4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def fig_convergence(ns, errors: dict[str, object], slope: float, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, e in errors.items():
        ax.loglog(ns, e, "o-", label=label, linewidth=1.4)
    ax.set_xlabel("basis size N")
    ax.set_ylabel("L1 error")
    ax.set_title(f"fitted slope {slope:.2f}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def fig_marginal(centers, spectral, particle, path: Path, axis_name: str = "z") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(centers, spectral, label="spectral", linewidth=1.4)
    ax.step(centers, particle, where="mid", label="particles", linewidth=1.2)
    ax.set_xlabel(axis_name)
    ax.set_ylabel("marginal density")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _finish(fig, path)
