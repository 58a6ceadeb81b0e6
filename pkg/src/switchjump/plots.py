"""Figure rendering for CSV reports.

Each renderer reads a report produced by the experiments layer (columns
referenced by name) and writes a PNG next to it.  Rendering is optional
output plumbing; no analysis happens here.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .errors import ConfigurationError
from .reports import read_report

__all__ = ["render_figure", "FIGURE_KINDS"]


def _empty_figure(ax, message: str):
    ax.text(0.5, 0.5, message, ha="center", va="center", transform=ax.transAxes)
    ax.set_xticks([])
    ax.set_yticks([])


def _floats(rows, key):
    return [float(r[key]) for r in rows]


def _render_trajectories(rows, ax):
    if not rows:
        return _empty_figure(ax, "no data rows")
    x_cols = [k for k in rows[0] if k.startswith("x_")]
    path_ids = sorted({r["path_index"] for r in rows}, key=int)[:5]
    for pid in path_ids:
        sub = [r for r in rows if r["path_index"] == pid]
        ts = _floats(sub, "t")
        for col in x_cols:
            ax.plot(ts, _floats(sub, col), lw=0.8,
                    label=f"path {pid} {col}" if len(path_ids) <= 2 else None)
    ax.set_xlabel("t")
    ax.set_ylabel("X(t)")
    if len(path_ids) <= 2:
        ax.legend(fontsize=7)
    ax.set_title("sample trajectories")


def _render_periodicity(rows, ax):
    """Overlaid histograms of |x| per sampling-time label from a laws snapshot."""
    if not rows:
        return _empty_figure(ax, "no data rows")
    labels = sorted({r["label"] for r in rows})
    for label in labels:
        vals = [float(r["abs_x"]) for r in rows if r["label"] == label]
        ax.hist(vals, bins=40, histtype="step", density=True, label=label)
    ax.set_xlabel("|X|")
    ax.set_ylabel("density")
    ax.legend(fontsize=7)
    ax.set_title("law snapshots at period marks")


def _render_cesaro(rows, ax):
    if not rows:
        return _empty_figure(ax, "no data rows")
    starts = sorted({r["start"] for r in rows})
    for start in starts:
        sub = [r for r in rows if r["start"] == start]
        ns = _floats(sub, "n_periods")
        ax.plot(ns, _floats(sub, "running_mean"), label=f"start {start}")
    ax.set_xlabel("periods n")
    ax.set_ylabel("running average")
    ax.legend(fontsize=7)
    ax.set_title("Cesaro averages per start")


def _render_lyapunov(rows, ax):
    if not rows:
        return _empty_figure(ax, "no data rows")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.plot(_floats(rows, "radius"), _floats(rows, "shell_sup"), marker="o")
    ax.set_xlabel("radius")
    ax.set_ylabel("shell supremum of the drift functional")
    ax.set_title("Lyapunov shell profile")


def _render_series(rows, ax):
    if not rows:
        return _empty_figure(ax, "no data rows")
    ns = _floats(rows, "n_terms")
    ax.semilogy(ns, [max(v, 1e-18) for v in _floats(rows, "deviation")],
                marker="o", label="|series - oracle|")
    ax.semilogy(ns, [max(v, 1e-18) for v in _floats(rows, "bound")],
                marker="s", label="remainder bound")
    ax.set_xlabel("series order n")
    ax.legend(fontsize=7)
    ax.set_title("series truncation vs certified bound")


def _render_checks(rows, ax):
    if not rows:
        return _empty_figure(ax, "no data rows")
    names = [r["check"] for r in rows]
    vals = [float(r["estimate"]) if r["estimate"] else 0.0 for r in rows]
    colors = ["tab:green" if r["passed"] == "true" else "tab:red" for r in rows]
    ax.bar(range(len(names)), vals, color=colors)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("estimate")
    ax.set_title("assumption checks (green = pass)")


def _render_dynkin(rows, ax):
    if not rows:
        return _empty_figure(ax, "no data rows")
    res = _floats(rows, "residual")
    half = _floats(rows, "ci_halfwidth")
    ax.errorbar(range(len(res)), res, yerr=half, fmt="o", capsize=4)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylabel("martingale residual")
    ax.set_title("Dynkin residual with 95% CI")


FIGURE_KINDS = {
    "trajectories": _render_trajectories,
    "periodicity": _render_periodicity,
    "cesaro": _render_cesaro,
    "lyapunov": _render_lyapunov,
    "series": _render_series,
    "checks": _render_checks,
    "dynkin": _render_dynkin,
}


def render_figure(report_csv: str, kind: str, out_path: str) -> str:
    """Render the named figure kind from a report CSV to out_path (PNG)."""
    if kind not in FIGURE_KINDS:
        raise ConfigurationError(
            f"unknown figure kind {kind!r}; available: {', '.join(sorted(FIGURE_KINDS))}")
    _, rows = read_report(report_csv)
    fig, ax = plt.subplots(figsize=(6, 4), dpi=120)
    try:
        FIGURE_KINDS[kind](rows, ax)
        fig.tight_layout()
        fig.savefig(out_path)
    finally:
        plt.close(fig)
    return out_path
