"""Static SVG figure rendering for run reports.

All figures go through matplotlib's Agg backend and are written as SVG with
the creation date stripped and a fixed hash salt, so re-running an identical
config reproduces the files byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "oam-memory"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"metadata": {"Date": None}, "bbox_inches": "tight"}


def _finish(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def save_protocol_figure(trajectory, schedule, path, title: str = "") -> Path:
    """Mode occupations over the write/store/read cycle, segments shaded."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    t_us = trajectory.times * 1e6
    for name, series in sorted(trajectory.observables.items()):
        if name.startswith("n_"):
            ax.plot(t_us, series, label=name[2:], lw=1.2)
    spans = [
        (0.0, schedule.t_off, "0.12", "write"),
        (schedule.t_off, schedule.t_on, "0.92", "store"),
        (schedule.t_on, schedule.t_read, "0.12", "read"),
    ]
    for t0, t1, shade, label in spans:
        ax.axvspan(t0 * 1e6, t1 * 1e6, color=shade, alpha=0.15, lw=0)
        ax.text(
            (t0 + t1) / 2 * 1e6, 1.02, label, transform=ax.get_xaxis_transform(),
            ha="center", va="bottom", fontsize=8, color="0.35",
        )
    ax.set_xlabel("time (us)")
    ax.set_ylabel("mean occupation")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="center right")
    ax.grid(True, alpha=0.25)
    return _finish(fig, path)


def save_storage_sweep_figure(
    groups: dict[str, tuple[np.ndarray, np.ndarray]],
    bound: float | None,
    ylabel: str,
    path,
    title: str = "",
) -> Path:
    """Metric vs storage time (log x) for one curve per group label."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (x, y) in sorted(groups.items()):
        order = np.argsort(x)
        ax.semilogx(np.asarray(x)[order], np.asarray(y)[order], marker="o",
                    ms=3, lw=1.2, label=label)
    if bound is not None:
        ax.axhline(bound, color="tab:red", ls="--", lw=1.0, label=f"classical {bound:.4g}")
    ax.set_xlabel("storage time (s)")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    return _finish(fig, path)


def save_axis_sweep_figure(
    groups: dict[str, tuple[np.ndarray, np.ndarray]],
    xlabel: str,
    ylabel: str,
    path,
    title: str = "",
) -> Path:
    """Metric vs an arbitrary linear sweep axis."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (x, y) in sorted(groups.items()):
        order = np.argsort(x)
        ax.plot(np.asarray(x)[order], np.asarray(y)[order], marker="o", ms=3,
                lw=1.2, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.25)
    return _finish(fig, path)


def save_density_matrix_figure(matrix: np.ndarray, labels, path, title: str = "") -> Path:
    """3D-free bar rendering of Re(rho) over a labeled basis."""
    real = np.real(matrix)
    n = real.shape[0]
    fig, ax = plt.subplots(figsize=(0.55 * n + 2.2, 0.55 * n + 1.6))
    image = ax.imshow(real, cmap="RdBu_r", vmin=-0.5, vmax=0.5)
    ax.set_xticks(range(n), labels, rotation=90, fontsize=7)
    ax.set_yticks(range(n), labels, fontsize=7)
    for i in range(n):
        for j in range(n):
            if abs(real[i, j]) > 5e-3:
                ax.text(j, i, f"{real[i, j]:.2f}", ha="center", va="center", fontsize=6)
    fig.colorbar(image, ax=ax, shrink=0.8, label="Re(rho)")
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def save_wigner_figure(x, p, W, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    scale = float(np.max(np.abs(W)))
    mesh = ax.pcolormesh(x, p, W.T, cmap="RdBu_r", vmin=-scale, vmax=scale, shading="auto")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.set_aspect("equal")
    fig.colorbar(mesh, ax=ax, label="W(x, p)")
    if title:
        ax.set_title(title)
    return _finish(fig, path)
