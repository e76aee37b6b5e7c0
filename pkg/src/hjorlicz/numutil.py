"""Log-domain arithmetic and monotone root finding helpers."""

from __future__ import annotations

import math

import numpy as np

# linear-domain representability threshold for exp/expm1, natural-log units
LINEAR_LOG_CAP = 700.0


def log1mexp(x):
    """ln(1 - exp(x)) for x < 0, stable near both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            x > -math.log(2.0),
            np.log(-np.expm1(np.minimum(x, -1e-300))),
            np.log1p(-np.exp(np.minimum(x, -math.log(2.0)))),
        )
    return out if out.ndim else float(out)


def softplus(x):
    """ln(1 + exp(x)), i.e. psi from ln(Psi)."""
    return np.logaddexp(0.0, x)


def log_expm1(x):
    """ln(exp(x) - 1) for x > 0, i.e. ln(Psi) from psi."""
    x = np.asarray(x, dtype=float)
    small = x < 37.0
    out = np.where(small, np.log(np.expm1(np.where(small, x, 1.0))), x + log1mexp(-np.maximum(x, 1e-300)))
    return out if out.ndim else float(out)


def logsumexp(a, axis=None):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return -math.inf
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(s.reshape(()))
    return np.squeeze(s, axis=axis)


class BracketError(RuntimeError):
    """Raised when a doubling search cannot bracket the requested level."""


def solve_increasing(f, target, x0=1.0, rtol=1e-10, max_iter=200, max_doublings=2200):
    """Root of f(x) = target for f increasing on (0, inf).

    Brackets by doubling/halving from x0, then bisects to relative width rtol.
    """
    lo = hi = float(x0)
    flo = fhi = f(lo)
    n = 0
    while fhi < target:
        hi *= 2.0
        fhi = f(hi)
        n += 1
        if n > max_doublings or not math.isfinite(hi):
            raise BracketError(f"no upper bracket below x={hi:g}")
    n = 0
    while flo > target:
        lo /= 2.0
        flo = f(lo)
        n += 1
        if n > max_doublings:
            raise BracketError(f"no lower bracket above x={lo:g}")
    if lo == hi:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * max(abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def first_true_point(pred, start, max_doublings=2200, bisect_iter=200, rtol=1e-12):
    """Smallest x > start where the monotone predicate pred holds.

    pred must be False at start and eventually True along doubling steps.
    """
    lo = float(start)
    if pred(lo):
        return lo
    step = max(1.0, abs(lo))
    hi = lo + step
    n = 0
    while not pred(hi):
        lo = hi
        step *= 2.0
        hi = lo + step
        n += 1
        if n > max_doublings or not math.isfinite(hi):
            raise BracketError("predicate never became true along doubling search")
    for _ in range(bisect_iter):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * max(1.0, abs(hi)):
            break
    return hi


# --- counter-based uniforms (splitmix64 finalizer), partition invariant ---

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)


def _mix(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9) & _MASK
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB) & _MASK
    return z ^ (z >> _U64(31))


def counter_uniforms(seed, row_lo, row_hi, n_cols):
    """Uniforms in [0,1) for rows [row_lo, row_hi), shape (rows, n_cols).

    Entry (r, j) depends only on (seed, r, j): output is invariant under
    row-range partitioning across workers.
    """
    rows = np.arange(row_lo, row_hi, dtype=np.uint64)[:, None]
    cols = np.arange(n_cols, dtype=np.uint64)[None, :]
    s = _U64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    golden = _U64(0x9E3779B97F4A7C15)
    with np.errstate(over="ignore"):  # uint64 wraparound is the point
        z = _mix(s * golden + rows * _U64(0xD1342543DE82EF95) + cols + _U64(1) & _MASK)
        z = _mix(z + (s ^ _U64(0xA0761D6478BD642F)) & _MASK)
    return (z >> _U64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
