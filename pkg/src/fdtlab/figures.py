"""Quick-look renders of the emitted datasets.

Every CSV the command line writes can also be drawn to a PNG next to it.
These are working plots, not publication figures; the CSV stays the primary
artifact and carries the full precision.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "pdf_figure",
    "sweep_figure",
    "grid_figure",
    "line_figure",
    "perturb_figure",
]

_STYLE = {
    "strobo": dict(color="0.35", marker="s", ls="none", ms=3, label="stroboscopic"),
    "nhh": dict(color="tab:red", ls="-", label="absorbing"),
    "corrected": dict(color="tab:red", ls="--", label="absorbing x4"),
    "zeno": dict(color="tab:blue", ls=":", label="frequent-detection limit"),
}


def pdf_figure(path, tau: float, curves: dict) -> None:
    """curves: framework -> (t, density).  Log y; point masses not drawn."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, (t, f) in curves.items():
        t = np.asarray(t)
        f = np.asarray(f)
        keep = f > 0
        ax.semilogy(t[keep], f[keep], **_STYLE.get(name, {"label": name}))
    ax.set_xlabel("t")
    ax.set_ylabel("F(t)")
    ax.set_title(f"first-detection density, tau = {tau:g}")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sweep_figure(path, rows: list) -> None:
    """rows: dicts with tau, framework, statistic, value keys."""
    stats = ("p_det", "mean")
    fig, axes = plt.subplots(1, len(stats), figsize=(9.0, 3.6))
    for ax, stat in zip(axes, stats):
        for fw in sorted({r["framework"] for r in rows}):
            pts = [(r["tau"], r["value"]) for r in rows
                   if r["framework"] == fw and r["statistic"] == stat
                   and np.isfinite(r["value"])]
            if not pts:
                continue
            xs, ys = zip(*sorted(pts))
            ax.loglog(xs, ys, marker="o", ms=3, label=fw)
        ax.set_xlabel("tau")
        ax.set_ylabel(stat)
        ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def grid_figure(path, xs, ys, v_strobo, v_nhh) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.8), sharey=True)
    for ax, v, name in ((axes[0], v_strobo, "stroboscopic"), (axes[1], v_nhh, "absorbing")):
        masked = np.ma.masked_invalid(v)
        im = ax.contourf(xs, ys, masked, levels=24)
        ax.set_xlabel("x")
        ax.set_title(name)
        fig.colorbar(im, ax=ax)
    axes[0].set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def line_figure(path, rows: list) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for ax, stat in zip(axes, ("p_det", "mean")):
        for label in sorted({r["quantity"] for r in rows}):
            pts = [(r["tau"], r["value"]) for r in rows
                   if r["quantity"] == label and r["statistic"] == stat
                   and np.isfinite(r["value"])]
            if not pts:
                continue
            xs, ys = zip(*sorted(pts))
            ax.plot(xs, ys, marker="o", ms=3, label=label)
        ax.set_xlabel("tau")
        ax.set_ylabel(stat)
        ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def perturb_figure(path, rows: list) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for mode in sorted({r["mode"] for r in rows}):
        pts = [(r["epsilon"], r["value"]) for r in rows if r["mode"] == mode
               and np.isfinite(r["value"])]
        if not pts:
            continue
        xs, ys = zip(*sorted(pts))
        ax.loglog(xs, ys, marker="o", ms=3, label=mode)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("mean detection time")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
