"""Figure rendering for the report path.

Figures are written next to the machine-readable output, one PNG per
view. Everything runs on the Agg backend so the CLI works headless.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .transport import Scenario, SweepResult  # noqa: E402

DPI = 110


def figure_path(out_path, tag: str) -> Path:
    """PNG filename derived from the report path: report_<tag>.png."""
    out = Path(out_path)
    return out.with_name(out.stem + "_" + tag + ".png")


def _boundary_curves(scenario: Scenario, t: float, per_chart: int = 400):
    bnd = scenario.domain.boundary
    curves = []
    for box in bnd.charts:
        active = box.active_axes
        if active.size == 0:
            curves.append(np.array([bnd.point(t, box.lower)]))
            continue
        ax = int(active[0])
        zs = np.linspace(box.lower[ax], box.upper[ax], per_chart)
        z = box.lower.astype(float).copy()
        pts = []
        for val in zs:
            z[ax] = val
            pts.append(bnd.point(t, z))
        curves.append(np.array(pts))
    return curves


def scenario_snapshot(scenario: Scenario, path, times=None) -> None:
    """Boundary at a few times, drawn by ambient dimension."""
    dom = scenario.domain
    if times is None:
        times = scenario.times(3)
    d = dom.ambient_dim
    if d == 1:
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        ts = np.linspace(scenario.window[0], scenario.window[1], 80)
        ts = ts[1:-1]
        for box in dom.boundary.charts:
            vals = [dom.boundary.point(t, box.lower)[0] for t in ts]
            ax.plot(ts, vals, lw=1.4)
        ax.set_xlabel("t")
        ax.set_ylabel("endpoint")
    elif d == 2:
        fig, ax = plt.subplots(figsize=(5.0, 5.0))
        for i, t in enumerate(times):
            for curve in _boundary_curves(scenario, t):
                label = f"t={t:g}" if curve is not None else None
                ax.plot(curve[:, 0], curve[:, 1], lw=1.2,
                        color=plt.cm.viridis(i / max(1, len(times) - 1)),
                        label=label)
        ax.set_aspect("equal")
        handles, labels = ax.get_legend_handles_labels()
        seen = dict(zip(labels, handles))
        ax.legend(seen.values(), seen.keys(), fontsize=8)
    else:
        fig = plt.figure(figsize=(5.5, 5.0))
        ax = fig.add_subplot(projection="3d")
        t = times[len(times) // 2]
        bnd = dom.boundary
        for box in bnd.charts:
            active = box.active_axes
            if active.size >= 2:
                a0, a1 = int(active[0]), int(active[1])
                g0 = np.linspace(box.lower[a0], box.upper[a0], 24)
                g1 = np.linspace(box.lower[a1], box.upper[a1], 24)
                z = box.lower.astype(float).copy()
                P = np.zeros((len(g0), len(g1), 3))
                for i, u in enumerate(g0):
                    for j, v in enumerate(g1):
                        z[a0], z[a1] = u, v
                        P[i, j] = bnd.point(t, z)
                ax.plot_wireframe(P[:, :, 0], P[:, :, 1], P[:, :, 2],
                                  rstride=2, cstride=2, lw=0.4)
            else:
                for curve in _boundary_curves(scenario, t, per_chart=200):
                    ax.plot(curve[:, 0], curve[:, 1], curve[:, 2], lw=1.4)
        ax.set_title(f"t={t:g}", fontsize=9)
    fig.suptitle(scenario.name, fontsize=10)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)


def residual_overview(records: list[dict], path) -> None:
    """log10 relative residual per verified (scenario, field, t)."""
    rows = [r for r in records if r.get("rel_residual") is not None]
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(7.0, max(2.5, 0.22 * len(rows))))
    ys = np.arange(len(rows))
    vals = np.array([max(r["rel_residual"], 1e-18) for r in rows])
    tols = np.array([r["tolerance"] for r in rows])
    colors = ["tab:blue" if r.get("passed") else "tab:red" for r in rows]
    ax.barh(ys, np.log10(vals), color=colors, height=0.7)
    ax.plot(np.log10(tols), ys, "k|", markersize=7, label="tolerance")
    ax.set_yticks(ys)
    ax.set_yticklabels(
        [f"{r['scenario']}/{r['field']} t={r['t']:g}" for r in rows], fontsize=6,
    )
    ax.invert_yaxis()
    ax.set_xlabel("log10 relative residual")
    ax.legend(fontsize=7)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)


def sweep_figure(result: SweepResult, path) -> None:
    """Error against the swept parameter on log axes, slope annotated."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    grid = np.asarray(result.grid, dtype=float)
    errs = np.asarray(result.errors, dtype=float)
    keep = errs > 0
    if result.parameter == "quad_order":
        ax.semilogy(grid[keep], errs[keep], "o-")
        ax.set_xlabel("quadrature order")
    else:
        ax.loglog(grid[keep], errs[keep], "o-")
        ax.set_xlabel(result.parameter)
    ax.set_ylabel("error")
    slope = "n/a" if result.slope is None else f"{result.slope:.3f}"
    ax.set_title(
        f"{result.scenario}/{result.field}: {result.parameter} sweep, slope {slope}",
        fontsize=9,
    )
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
