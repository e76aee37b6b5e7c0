"""Grid-based decision of the growth condition psi(su) <= K(s ln(1+s) + s psi(u)).

The condition is asymptotic, so any finite check is a heuristic; the
divergence rule below is fixed so reports are reproducible:

* product grids: diverging iff the max ratio over the top decade of the
  s-grid exceeds both twice and ten times the max over the bottom decade;
* paired (s, u) schedules: diverging iff the ratio sequence is strictly
  increasing, ends at least 1.5x above its start and ends above 1.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .orlicz import DomainError, invert

BOUNDED = "bounded-on-grid"
DIVERGING = "diverging"


def default_s_grid():
    return np.geomspace(2.0, 1e6, 25)


def hj_ratio_value(fn, s, u):
    """psi(su) / (s ln(1+s) + s psi(u))."""
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    return fn.psi(s * u) / (s * np.log1p(s) + s * fn.psi(u))


@dataclass
class HJConditionReport:
    grid: list  # (s, u, ratio) triples
    grid_K: float
    trend: float  # log-slope of per-decade max ratio vs decade index
    verdict: str
    sub_checks: dict = field(default_factory=dict)

    @property
    def diverging(self):
        return self.verdict == DIVERGING


def _decade_stats(s_vals, ratios):
    s_min, s_max = float(np.min(s_vals)), float(np.max(s_vals))
    bottom = ratios[s_vals <= 10.0 * s_min]
    top = ratios[s_vals >= s_max / 10.0]
    return float(np.max(bottom)), float(np.max(top))


def check_hj(fn, s_grid=None, u_grid=None, sub_grid_points=8):
    """Evaluate the condition ratio on a product grid and classify it."""
    s_grid = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    u_grid = default_s_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    if np.any(s_grid < 2.0) or np.any(u_grid < 2.0):
        raise DomainError("s and u grids must start at 2 or above")

    ss, uu = np.meshgrid(s_grid, u_grid, indexing="ij")
    ratios = hj_ratio_value(fn, ss, uu)
    grid = list(zip(ss.ravel(), uu.ravel(), ratios.ravel()))
    grid_K = float(np.max(ratios))

    per_s_max = ratios.max(axis=1)
    bottom_max, top_max = _decade_stats(ss.max(axis=1) * 0 + s_grid, per_s_max)
    verdict = DIVERGING if (top_max > 2.0 * bottom_max and top_max > 10.0 * bottom_max) else BOUNDED

    # trend: slope of ln(max ratio) against ln(s)
    trend = float(np.polyfit(np.log(s_grid), np.log(per_s_max), 1)[0])

    report = HJConditionReport(grid=grid, grid_K=grid_K, trend=trend, verdict=verdict)
    report.sub_checks = {
        "hj_prime": _hj_prime_check(fn, s_grid, u_grid, grid_K),
        "lemma_inverse": _inverse_bound_check(fn, s_grid, u_grid, sub_grid_points),
        "delta2": _delta2_check(fn, u_grid),
        "poly_envelope": _poly_envelope_fit(fn, u_grid),
    }
    return report


def check_hj_schedule(fn, pairs):
    """Classify the ratio along explicit (s, u) pairs, e.g. a counterexample schedule."""
    pairs = [(float(s), float(u)) for s, u in pairs]
    if len(pairs) < 2:
        raise DomainError("schedule needs at least two (s, u) pairs")
    ratios = np.array([hj_ratio_value(fn, s, u) for s, u in pairs])
    increasing = bool(np.all(np.diff(ratios) > 0))
    diverging = increasing and ratios[-1] >= 1.5 * ratios[0] and ratios[-1] >= 1.5
    return HJConditionReport(
        grid=[(s, u, r) for (s, u), r in zip(pairs, ratios)],
        grid_K=float(np.max(ratios)),
        trend=float(ratios[-1] / ratios[0]),
        verdict=DIVERGING if diverging else BOUNDED,
        sub_checks={"schedule_increasing": increasing},
    )


def _hj_prime_check(fn, s_grid, u_grid, grid_K):
    """ln Psi(su) <= K's(ln s + ln Psi(u)) ratios and the K' <= 4K+4 implication."""
    ss, uu = np.meshgrid(s_grid, u_grid, indexing="ij")
    denom = ss * (np.log(ss) + fn.log_value(uu))
    num = fn.log_value(ss * uu)
    valid = denom > 0
    ratio = np.where(valid, num / np.where(valid, denom, 1.0), np.nan)
    hj_ratio = hj_ratio_value(fn, ss, uu)
    k_prime_cap = 4.0 * grid_K + 4.0
    mask = valid & (hj_ratio <= grid_K + 1e-12)
    implication_ok = bool(np.all(ratio[mask] <= k_prime_cap + 1e-9)) if np.any(mask) else True
    return {
        "max_ratio": float(np.nanmax(ratio)) if np.any(valid) else math.nan,
        "k_prime_cap": k_prime_cap,
        "implication_ok": implication_ok,
    }


def _inverse_bound_check(fn, s_grid, u_grid, n_pts):
    """Grid constant for x psi^{-1}(y) <= K_hat ln(1+x) psi^{-1}(xy)."""
    xs = np.geomspace(s_grid[0], s_grid[-1], n_pts)
    ys = fn.psi(np.geomspace(u_grid[0], u_grid[-1], n_pts))
    cap = fn.psi(1e280)  # psi^{-1} beyond this is not representable
    worst = 0.0
    for x in xs:
        for y in ys:
            if x * y >= cap:
                continue
            lhs = x * invert(fn, y, scale="psi")
            rhs = math.log1p(x) * invert(fn, x * y, scale="psi")
            if rhs > 0:
                worst = max(worst, lhs / rhs)
    return {"k_hat": worst}


def _delta2_check(fn, u_grid):
    """Delta_2 growth Psi(2u) <= C Psi(u), reported as max ln ratio."""
    log_ratio = fn.log_value(2.0 * u_grid) - fn.log_value(u_grid)
    return {"max_log_ratio": float(np.max(log_ratio))}


def _poly_envelope_fit(fn, u_grid):
    """Least-squares power fit ln Psi(x) ~ ln K + p ln x on the upper grid half."""
    top = u_grid[u_grid >= np.median(u_grid)]
    lx = np.log(top)
    ly = fn.log_value(top)
    p, logK = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (p * lx + logK))))
    return {"p": float(p), "K": float(math.exp(min(logK, 700.0))), "max_residual": resid}
