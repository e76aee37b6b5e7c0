"""Luxemburg norms of finite-support variables: exact bisection and Monte Carlo.

||X||_Psi = inf { a > 0 : E Psi(||X|| / a) <= 1 }.  For a finite-support X the
expectation is a finite log-domain sum, so the norm solves a one-dimensional
monotone equation exactly; the Monte Carlo path exists to exercise the
estimator against the exact answer and to cover sums whose exact law is too
large to enumerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import InvalidParameterError, _vector_norm, sample
from .numutil import BracketError, logsumexp

MC_SECTIONS = 16


@dataclass(frozen=True)
class NormEstimate:
    value: float
    method: str  # "exact" or "mc"
    ci_low: float = math.nan
    ci_high: float = math.nan
    n_samples: int = 0

    def to_record(self):
        return {
            "value": self.value,
            "method": self.method,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_samples": self.n_samples,
        }


def _log_expectation(fn, log_norms, log_probs, log_a):
    """ln E Psi(||X|| / a) from ln||X|| atoms; -inf norms contribute nothing."""
    finite = log_norms > -math.inf
    if not np.any(finite):
        return -math.inf
    terms = log_probs[finite] + fn.log_value(np.exp(log_norms[finite] - log_a))
    return logsumexp(terms)


def norm_exact(fn, dist, rtol=1e-10):
    """Exact Luxemburg norm by bisection on a -> E Psi(||X||/a).

    The expectation is continuous and strictly decreasing in a wherever it is
    finite, so the norm is the unique root of E Psi(||X||/a) = 1.
    """
    norms = dist.norms()
    with np.errstate(divide="ignore"):
        log_norms = np.log(norms)
    if np.all(log_norms == -math.inf):
        return NormEstimate(0.0, "exact")

    def f(neg_log_a):
        return _log_expectation(fn, log_norms, dist.log_probs, -neg_log_a)

    # solve in t = -ln a, along which f is increasing and crosses 0
    t = _bisect_signed(f, float(np.max(log_norms)))
    return NormEstimate(math.exp(-t), "exact")


def _bisect_signed(f, lmax, t_hint=None, rtol=1e-12, max_iter=300):
    """Bisection for f(t) = 0 with f increasing, t = -ln a ranging over R."""
    t = 0.0 if t_hint is None or not math.isfinite(t_hint) else t_hint
    step = 1.0
    lo = hi = t
    flo = fhi = f(t)
    while fhi < 0.0:
        hi += step
        step *= 2.0
        fhi = f(hi)
        if hi > 1e6:
            raise BracketError("no upper bracket for the norm equation")
    step = 1.0
    while flo > 0.0:
        lo -= step
        step *= 2.0
        flo = f(lo)
        if lo < -1e6:
            raise BracketError("no lower bracket for the norm equation")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def l1_exact(dist):
    """E ||X|| as an exact finite sum."""
    return float(np.exp(dist.log_probs) @ dist.norms())


def _mc_norm_of_rows(fn, row_norms):
    """Plug-in Luxemburg norm of the empirical law of one batch of draws."""
    if np.all(row_norms == 0.0):
        return 0.0
    with np.errstate(divide="ignore"):
        log_norms = np.log(row_norms)
    log_p = np.full(row_norms.size, -math.log(row_norms.size))

    def f(t):
        return _log_expectation(fn, log_norms, log_p, -t)

    return math.exp(-_bisect_signed(f, float(np.max(log_norms))))


def norm_mc(fn, family, statistic, n_samples, seed, n_threads=1):
    """Monte Carlo Luxemburg norm of a statistic of the family's sample rows.

    statistic: "sum" (norm of the coordinatewise row sum) or "max" (max of the
    member norms in a row).  Uses common random numbers across calls sharing a
    seed; the interval is a 95% t-interval over 16 row-sections, so results are
    independent of how rows are split across workers.
    """
    if n_samples < MC_SECTIONS * 2:
        raise InvalidParameterError(f"need at least {2 * MC_SECTIONS} samples")
    rows = sample(family, n_samples, seed)
    tag = family.norm_tag
    if statistic == "sum":
        summed = rows.sum(axis=1)
        row_norms = _vector_norm(summed, tag) if summed.ndim > 1 else np.abs(summed)
    elif statistic == "max":
        if rows.ndim == 2:
            row_norms = np.max(np.abs(rows), axis=1)
        else:
            per_member = _vector_norm(rows.reshape(-1, rows.shape[-1]), tag).reshape(rows.shape[:2])
            row_norms = per_member.max(axis=1)
    else:
        raise InvalidParameterError(f"unknown statistic {statistic!r}")

    point = _mc_norm_of_rows(fn, row_norms)
    bounds = np.linspace(0, n_samples, MC_SECTIONS + 1).astype(int)
    section_vals = np.array(
        [_mc_norm_of_rows(fn, row_norms[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
    )
    se = float(np.std(section_vals, ddof=1) / math.sqrt(MC_SECTIONS))
    tq = float(stats.t.ppf(0.975, MC_SECTIONS - 1))
    m = float(np.mean(section_vals))
    return NormEstimate(point, "mc", m - tq * se, m + tq * se, n_samples)
