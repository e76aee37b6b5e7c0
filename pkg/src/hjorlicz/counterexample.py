"""Inductive construction of a piecewise-affine Orlicz function dominated by a
superpolynomial Phi yet violating the growth condition checked in hjcheck.

Breakpoints u_2 < u_3 < ... are found by a doubling-then-bisection search on
the smallest admissible point; all comparisons run in log domain because the
involved values grow tower-fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numutil import BracketError, first_true_point
from .orlicz import DomainError, PiecewiseAffineLog, validate

MAX_DEPTH = 12


@dataclass
class CounterexampleResult:
    psi: PiecewiseAffineLog
    phi: object
    breakpoints: tuple  # u_1 = 0, u_2, ..., u_depth
    depth: int  # number of u_k produced
    requested_depth: int
    margins: dict = field(default_factory=dict)  # k -> log-margin of the violation target
    v_margin: float = math.nan

    @property
    def complete(self):
        return self.depth == self.requested_depth

    def schedule(self):
        """(k, u_k) pairs usable as an (s, u) schedule for check_hj_schedule."""
        return [(k, self.breakpoints[k - 1]) for k in range(2, self.depth + 1)]


def is_superpolynomial(phi, lo=10.0, hi=1e6, n=20):
    """Heuristic test that x Phi'(x)/Phi(x) keeps growing on the searched range."""
    xs = np.geomspace(lo, hi, n)
    g = np.exp(np.minimum(np.log(xs) + phi.log_deriv(xs) - phi.log_value(xs), 700.0))
    return bool(g[-1] > 2.0 * g[0] and g[-1] > g[0] + 5.0)


def _first_breakpoint(phi):
    log32 = math.log(2.0) + 4.0 * math.log(2.0)  # ln(2 * 2^{2^2})

    def ok(u):
        if u <= 1.0:
            return False
        return (
            phi.log_value(u) > 0.0
            and phi.log_deriv(u) > -math.log(u)
            and np.logaddexp(phi.log_deriv(u) + math.log(u), 0.0) > log32
        )

    u_star = first_true_point(ok, 1.0)
    u2 = u_star + 0.1 * max(1.0, u_star)
    while not ok(u2):  # guard against non-monotone edges of the predicate
        u2 *= 1.05
    return u2


def _next_breakpoint(phi, n, u_n, v_n):
    """Smallest admissible u_{n+1} > n u_n, then a small safety margin."""
    lphi_n = phi.log_deriv(u_n)
    m = n + 1
    lead = math.log(m) + m * m * math.log(m)

    def log_psi_next(x):
        return np.logaddexp(v_n, lphi_n + math.log(x - u_n)) if x > u_n else v_n

    def ok(x):
        if x <= n * u_n:
            return False
        rhs = np.logaddexp(lead + m * m * log_psi_next(x), lphi_n)
        return phi.log_deriv(x) > rhs

    x_star = first_true_point(ok, n * u_n)
    x = x_star * 1.01
    tries = 0
    while not ok(x):
        x *= 1.05
        tries += 1
        if tries > 200:
            raise BracketError("could not stabilize breakpoint search")
    return x


def build_counterexample(phi, n_max):
    """Run the induction to depth n_max; returns a partial result if the
    representable log-range is exhausted first."""
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    if n_max > MAX_DEPTH:
        raise DomainError(f"n_max above {MAX_DEPTH} is not supported")
    if not is_superpolynomial(phi):
        raise DomainError("phi must grow superpolynomially on the searched range")

    u = [0.0, _first_breakpoint(phi)]
    log_values = [-math.inf, 0.0]  # Psi(u_2) = 1 by the initial chord x / u_2
    log_slopes = [-math.log(u[1])]

    while len(u) < n_max:
        n = len(u)
        u_n, v_n = u[-1], log_values[-1]
        try:
            u_next = _next_breakpoint(phi, n, u_n, v_n)
        except (BracketError, OverflowError):
            break
        if not math.isfinite(u_next) or u_next > 1e300:
            break
        lphi_n = phi.log_deriv(u_n)
        u.append(u_next)
        log_slopes.append(lphi_n)
        log_values.append(np.logaddexp(v_n, lphi_n + math.log(u_next - u_n)))

    log_slopes.append(phi.log_deriv(u[-1]))  # extension beyond the last breakpoint
    psi = PiecewiseAffineLog(tuple(u), tuple(log_values), tuple(log_slopes))

    result = CounterexampleResult(
        psi=psi,
        phi=phi,
        breakpoints=tuple(u),
        depth=len(u),
        requested_depth=n_max,
    )
    result.margins = verify_counterexample(result)
    result.v_margin = result.margins[result.depth]
    _audit(result)
    return result


def verify_counterexample(result):
    """Log-margins of Psi(k u_k) > k k^{k^2} Psi(u_k)^{k^2} for k = 2..depth.

    The margin at k = depth runs on the extension segment and coincides with
    the final right-derivative condition of the construction.
    """
    psi = result.psi
    margins = {}
    for k in range(2, result.depth + 1):
        u_k = result.breakpoints[k - 1]
        lhs = psi.log_value(k * u_k)
        rhs = math.log(k) + k * k * math.log(k) + k * k * psi.log_value(u_k)
        margins[k] = float(lhs - rhs)
    return margins


def _audit(result):
    psi, phi = result.psi, result.phi
    u = result.breakpoints
    rep = validate(psi)
    if not rep.passed:
        raise AssertionError(f"constructed function failed validation: {rep.first_violation}")
    for k in range(2, result.depth):
        if not u[k] > k * u[k - 1]:
            raise AssertionError(f"breakpoint ordering broken at k={k}")
    # domination audit on breakpoints, midpoints and the schedule points
    pts = [x for x in u[1:]]
    pts += [0.5 * (a + b) for a, b in zip(u[1:], u[2:])]
    pts += [k * u[k - 1] for k in range(2, result.depth + 1)]
    for x in pts:
        if x >= u[1] and psi.log_value(x) > phi.log_value(x) + 1e-9:
            raise AssertionError(f"domination Psi <= Phi fails at x={x:g}")
