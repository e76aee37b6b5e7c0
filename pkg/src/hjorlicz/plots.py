"""Figure rendering for report files: each CLI report gets a PNG next to the
delimited output summarizing its main curve."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite_pairs(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    return xs[keep], ys[keep]


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_report(report, path):
    """Dispatch on the report's command; unknown commands get a table-free
    scatter of the first two numeric columns."""
    fn = _PLOTTERS.get(report.command, _plot_generic)
    return fn(report, path)


def _numeric_column(report, name):
    return [r[name] for r in report.rows]


def _plot_generic(report, path):
    numeric = [
        c
        for c in report.columns
        if all(isinstance(r[c], (int, float)) and r[c] is not None for r in report.rows)
    ]
    fig, ax = plt.subplots(figsize=(6, 4))
    if len(numeric) >= 2:
        x, y = _finite_pairs(_numeric_column(report, numeric[0]), _numeric_column(report, numeric[1]))
        ax.plot(x, y, "o-")
        ax.set_xlabel(numeric[0])
        ax.set_ylabel(numeric[1])
    ax.set_title(report.command)
    return _save(fig, path)


def _plot_check_hj(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    s = np.asarray(_numeric_column(report, "s"), dtype=float)
    ratio = np.asarray(_numeric_column(report, "ratio"), dtype=float)
    # per-s max ratio is the decision statistic
    order = np.argsort(s)
    s_sorted = s[order]
    r_sorted = ratio[order]
    uniq = np.unique(s_sorted)
    per_s = [r_sorted[s_sorted == sv].max() for sv in uniq]
    ax.loglog(uniq, per_s, "o-")
    ax.set_xlabel("s")
    ax.set_ylabel("max condition ratio over u")
    ax.set_title(f"{report.command}: {report.meta.get('verdict', '')}")
    return _save(fig, path)


def _plot_ratio(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.asarray(_numeric_column(report, "N"), dtype=float)
    ratio = np.asarray([r if r is not None else math.nan for r in _numeric_column(report, "ratio")])
    u = np.asarray(_numeric_column(report, "u"), dtype=float)
    for uv in np.unique(u):
        m = u == uv
        ax.semilogx(n[m], ratio[m], "o-", label=f"u={uv:g}")
    ax.set_xlabel("N")
    ax.set_ylabel("inequality ratio")
    ax.legend(fontsize=7, ncol=2)
    ax.set_title(report.command)
    return _save(fig, path)


def _plot_counterexample(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    k = _numeric_column(report, "k")
    margin = _numeric_column(report, "log_margin")
    ax.plot(k, margin, "o-")
    ax.axhline(0.0, color="grey", lw=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("log margin of the violation target")
    ax.set_title(report.command)
    return _save(fig, path)


def _plot_series(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    k = np.asarray(_numeric_column(report, "k"), dtype=float)
    lower = np.asarray(_numeric_column(report, "sum_norm_lower"), dtype=float)
    ax.plot(k, lower, "o-", label="partial-sum norm lower bound")
    ax.plot(k, k, "--", color="grey", label="k")
    ax.set_xlabel("k")
    ax.legend(fontsize=8)
    ax.set_title(report.command)
    return _save(fig, path)


def _plot_tails(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    t = np.asarray(_numeric_column(report, "t"), dtype=float)
    surv = np.asarray(_numeric_column(report, "survival"), dtype=float)
    ax.semilogy(t, np.maximum(surv, 1e-12), "o-", label="empirical")
    for col in ("bennett", "bernstein"):
        if col in report.columns:
            vals = np.asarray(_numeric_column(report, col), dtype=float)
            ax.semilogy(t, np.minimum(np.maximum(vals, 1e-12), 4.0), "--", label=col)
    ax.set_xlabel("t")
    ax.set_ylabel("P(|S - ES| >= t)")
    ax.legend(fontsize=8)
    ax.set_title(report.command)
    return _save(fig, path)


_PLOTTERS = {
    "check-hj": _plot_check_hj,
    "ratio-sweep": _plot_ratio,
    "counterexample": _plot_counterexample,
    "series": _plot_series,
    "tails": _plot_tails,
    "calibrate": _plot_tails,
}
