"""PNG figures written next to the CSV reports."""
from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def sweep_figures(result, outdir) -> list:
    paths = []
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for r in result.records:
        axes[0].plot(r.amp_times, r.wall_amp, label=f"nu = {r.nu:g}")
        ok = np.isfinite(r.width)
        axes[1].plot(r.times[ok], r.width[ok], label=f"nu = {r.nu:g}")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("sup_x |omega(x, 0, t)|")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("half-decay width")
    axes[1].set_yscale("log")
    for ax in axes:
        ax.legend()
    fig.tight_layout()
    p = os.path.join(outdir, "sweep_wall.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    nus = result.nus
    if len(nus) > 1:
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(nus, [r.max_amp for r in result.records], "o-", label="max wall amplitude")
        w = [r.width_at_half for r in result.records]
        if all(map(math.isfinite, w)):
            ax.loglog(nus, w, "s-", label="width at half amplitude")
        ax.set_xlabel("nu")
        ax.legend()
        fig.tight_layout()
        p = os.path.join(outdir, "sweep_scaling.png")
        fig.savefig(p, dpi=120)
        plt.close(fig)
        paths.append(p)
    return paths


def audit_figure(report, path) -> str:
    names = sorted(report.max_ratio)
    vals = [report.max_ratio[k] for k in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, vals)
    ax.set_yscale("log")
    ax.set_ylabel("max lhs / rhs")
    ax.set_title(f"{report.name} audit")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
