"""Tail bounds for suprema of finite empirical processes, calibration of their
constants, and desk-scale checks of the supporting tail lemmas.

The two headline bounds for S = sup_f Sum f(X_i) are, with U the Orlicz norm of
the envelope maximum and Sigma2 = E sup_f Sum f^2(X_i):

    bennett:   2 exp(-(c t / U) ln(1 + t U / Sigma2)) + 2 / (Psi(c t / U) + 1)
    bernstein: 2 exp(-c t^2 / (Sigma2 + t U))         + 2 / (Psi(c t / U) + 1)

Constants are existential in the theory; calibrate_c turns them into
reproducible grid searches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .distributions import (
    Family,
    FiniteDist,
    InvalidParameterError,
    ResourceError,
    max_distribution,
    sum_distribution_general,
)
from .norms import MC_SECTIONS, l1_exact, norm_exact
from .numutil import counter_uniforms, logsumexp
from .orlicz import DomainError, SquareComposition, validate

EXACT_ENUM_BUDGET = 2_000_000  # product of support sizes for full enumeration
DEFAULT_C_GRID = tuple(2.0 ** np.arange(-10, 5))


@dataclass(frozen=True)
class BoundValue:
    value: float  # capped at 1 for plotting
    raw: float


def _orlicz_term(fn, arg):
    return 2.0 * math.exp(-fn.psi(arg))  # 2/(Psi+1) since Psi + 1 = e^psi


def bennett_rhs(t, U, Sigma2, c, fn, include_orlicz_term=True):
    """Bennett-shaped tail bound; flag off gives the bounded-process form."""
    if U <= 0 or Sigma2 <= 0:
        raise DomainError("U and Sigma2 must be positive")
    if t < 0:
        raise DomainError("t must be nonnegative")
    exp_term = 2.0 * math.exp(-(c * t / U) * math.log1p(t * U / Sigma2))
    raw = exp_term + (_orlicz_term(fn, c * t / U) if include_orlicz_term else 0.0)
    return BoundValue(min(raw, 1.0), raw)


def bernstein_rhs(t, U, Sigma2, c, fn, variant="standard"):
    """Bernstein-shaped tail bound; 'equivalent' drops tU from the denominator."""
    if U <= 0 or Sigma2 <= 0:
        raise DomainError("U and Sigma2 must be positive")
    if t < 0:
        raise DomainError("t must be nonnegative")
    denom = Sigma2 if variant == "equivalent" else Sigma2 + t * U
    raw = 2.0 * math.exp(-c * t * t / denom) + _orlicz_term(fn, c * t / U)
    return BoundValue(min(raw, 1.0), raw)


def convex_rhs(t, mean_max, U_phi, c, phi):
    """Tail bound for convex Lipschitz statistics of unbounded coordinates,
    phrased through Phi(x) = Psi(x^2)."""
    if mean_max <= 0 or U_phi <= 0:
        raise DomainError("mean_max and U_phi must be positive")
    if not validate(phi).passed:
        raise DomainError("phi fails the Orlicz axioms")
    raw = 2.0 * math.exp(-c * t * t / (mean_max * mean_max)) + _orlicz_term(phi, c * t / U_phi)
    return BoundValue(min(raw, 1.0), raw)


# ---------------------------------------------------------------------------
# Empirical process suprema over a finite class


@dataclass(frozen=True)
class EmpiricalProcessSpec:
    """N iid draws from a finite base space, with a finite class of functions
    given as value tables of shape (|A|, |S|)."""

    base_probs: np.ndarray  # (|S|,)
    class_values: np.ndarray  # (m, |S|)
    n_members: int
    symmetric: bool = False  # evaluate sup over A and -A

    def __post_init__(self):
        p = np.asarray(self.base_probs, dtype=float)
        a = np.atleast_2d(np.asarray(self.class_values, dtype=float))
        if p.ndim != 1 or abs(p.sum() - 1.0) > 1e-12 or np.any(p < 0):
            raise InvalidParameterError("base_probs must be a probability vector")
        if a.shape[1] != p.size or not np.all(np.isfinite(a)):
            raise InvalidParameterError("class table must be finite with |S| columns")
        if self.n_members < 1:
            raise InvalidParameterError("need at least one member")
        object.__setattr__(self, "base_probs", p)
        object.__setattr__(self, "class_values", a)

    @property
    def table(self):
        """Class table including negations when the symmetric option is on."""
        a = self.class_values
        return np.vstack([a, -a]) if self.symmetric else a

    def envelope(self):
        return np.max(np.abs(self.class_values), axis=0)

    def is_centered(self, tol=1e-9):
        return bool(np.all(np.abs(self.class_values @ self.base_probs) < tol))

    def enumerable(self):
        return self.base_probs.size**self.n_members <= EXACT_ENUM_BUDGET

    def sample_indices(self, n, seed, extra_cols=0):
        cdf = np.cumsum(self.base_probs)
        cdf[-1] = 1.0
        u = counter_uniforms(seed, 0, n, self.n_members + extra_cols)
        idx = np.searchsorted(cdf, u[:, : self.n_members], side="right")
        idx = np.minimum(idx, self.base_probs.size - 1)
        return (idx, u[:, self.n_members :]) if extra_cols else idx


@dataclass
class ProcessStats:
    U: float
    Sigma2: float
    ES: float
    method: str
    sigma2_interval: tuple = (math.nan, math.nan)
    es_interval: tuple = (math.nan, math.nan)


@dataclass
class TailCurve:
    t_grid: np.ndarray
    survival: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_samples: int
    bounds: dict = field(default_factory=dict)  # bound id -> (c, values per t)


def _supremum_rows(spec, idx):
    """S for each sample row of base-space indices."""
    table = spec.table
    contrib = table[:, idx]  # (m, n, N)
    return contrib.sum(axis=2).max(axis=0)


def _enumerate_joint(spec):
    """All base-index tuples with their probabilities (exact path)."""
    s = spec.base_probs.size
    n = spec.n_members
    if s**n > EXACT_ENUM_BUDGET:
        raise ResourceError(
            f"joint support {s}^{n} exceeds enumeration budget {EXACT_ENUM_BUDGET}"
        )
    grids = np.meshgrid(*([np.arange(s)] * n), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    logp = np.log(np.maximum(spec.base_probs, 1e-300))[idx].sum(axis=1)
    return idx, np.exp(logp)


def process_u_stat(spec, fn):
    """Exact Orlicz norm of max_i F(X_i) with F the class envelope."""
    env = spec.envelope()
    uniq, inv = np.unique(env, return_inverse=True)
    probs = np.zeros(uniq.size)
    np.add.at(probs, inv, spec.base_probs)
    keep = probs > 0
    member = FiniteDist(uniq[keep], np.log(probs[keep]))
    fam = Family.iid(member, spec.n_members)
    return norm_exact(fn, max_distribution(fam)).value


def empirical_process_tail(spec, fn, n, seed, t_grid=None, exact=None):
    """ProcessStats plus the empirical survival curve of |S - ES|."""
    exact = spec.enumerable() if exact is None else exact
    u_stat = process_u_stat(spec, fn)
    if exact:
        idx, w = _enumerate_joint(spec)
        table = spec.table
        sums = table[:, idx].sum(axis=2)  # (m, cases)
        s_vals = sums.max(axis=0)
        sq = (spec.table[:, idx] ** 2).sum(axis=2).max(axis=0)
        es = float(w @ s_vals)
        sigma2 = float(w @ sq)
        dev = np.abs(s_vals - es)
        if t_grid is None:
            t_grid = np.quantile(dev, np.linspace(0.5, 0.999, 12))
        surv = np.array([float(w[dev >= t].sum()) for t in t_grid])
        stats_out = ProcessStats(U=u_stat, Sigma2=sigma2, ES=es, method="exact")
        curve = TailCurve(np.asarray(t_grid, dtype=float), surv, surv, surv, idx.shape[0])
        return stats_out, curve

    idx = spec.sample_indices(n, seed)
    s_vals = _supremum_rows(spec, idx)
    sq = (spec.table[:, idx] ** 2).sum(axis=2).max(axis=0)
    es = float(s_vals.mean())
    sigma2 = float(sq.mean())
    dev = np.abs(s_vals - es)
    if t_grid is None:
        t_grid = np.quantile(dev, np.linspace(0.5, 0.999, 12))
    t_grid = np.asarray(t_grid, dtype=float)

    bounds_idx = np.linspace(0, n, MC_SECTIONS + 1).astype(int)
    sect = np.array(
        [
            [(dev[a:b] >= t).mean() for t in t_grid]
            for a, b in zip(bounds_idx[:-1], bounds_idx[1:])
        ]
    )
    surv = np.array([(dev >= t).mean() for t in t_grid])
    se = sect.std(axis=0, ddof=1) / math.sqrt(MC_SECTIONS)
    tq = float(stats.t.ppf(0.975, MC_SECTIONS - 1))
    mean_sect = sect.mean(axis=0)

    def _interval(x):
        parts = [x[a:b].mean() for a, b in zip(bounds_idx[:-1], bounds_idx[1:])]
        s_e = float(np.std(parts, ddof=1) / math.sqrt(MC_SECTIONS))
        return (float(np.mean(parts)) - tq * s_e, float(np.mean(parts)) + tq * s_e)

    stats_out = ProcessStats(
        U=u_stat,
        Sigma2=sigma2,
        ES=es,
        method="mc",
        sigma2_interval=_interval(sq),
        es_interval=_interval(s_vals),
    )
    curve = TailCurve(t_grid, surv, mean_sect - tq * se, mean_sect + tq * se, n)
    return stats_out, curve


_BOUND_FNS = {
    "bennett": lambda t, st, c, fn: bennett_rhs(t, st.U, st.Sigma2, c, fn).raw,
    "bernstein": lambda t, st, c, fn: bernstein_rhs(t, st.U, st.Sigma2, c, fn).raw,
}


def calibrate_c(curve, bound, proc_stats, fn, c_grid=DEFAULT_C_GRID):
    """Largest c in the grid keeping the bound above the empirical upper
    interval at every t (larger c gives a sharper claim; feasibility is
    monotone decreasing in c, so the return value is the binding constant)."""
    c_grid = sorted(float(c) for c in c_grid)
    if not c_grid:
        raise InvalidParameterError("c grid must be nonempty")
    if bound not in _BOUND_FNS:
        raise InvalidParameterError(f"unknown bound {bound!r}")
    f = _BOUND_FNS[bound]
    best = None
    for c in c_grid:
        ok = all(
            f(t, proc_stats, c, fn) >= hi - 1e-12
            for t, hi in zip(curve.t_grid, curve.ci_high)
        )
        if ok:
            best = c
    return best  # None marks infeasible


# ---------------------------------------------------------------------------
# The crucial isoperimetric lemma


@dataclass(frozen=True)
class CrucialLemmaParams:
    q: int
    k: int
    u: float
    u_prime: float

    def __post_init__(self):
        if self.q < 2 or self.k < 1:
            raise InvalidParameterError("need q >= 2 and k >= 1")
        if self.u <= 0 or self.u_prime <= 0:
            raise InvalidParameterError("u and u' must be positive")


@dataclass
class CrucialLemmaResult:
    lhs: float
    rhs: float
    M: float
    top_k_tail: float
    method: str
    stderr: float
    margin_se: float  # (rhs - lhs) / stderr; inf for exact

    @property
    def passed(self):
        return self.lhs <= self.rhs + 3.0 * self.stderr + 1e-12


def _family_support_product(family):
    out = 1.0
    for d, c in zip(family.dists, family.counts):
        out *= d.values.shape[0] ** c
    return out


def _exact_top_k_tail(family, k, threshold):
    """P(sum of k largest |X_i| >= threshold) by joint enumeration."""
    supports = []
    for d, c in zip(family.dists, family.counts):
        supports.extend([(d.norms(), d.probs)] * c)
    shape = [len(v) for v, _ in supports]
    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    vals = np.stack([supports[j][0][idx[:, j]] for j in range(len(supports))], axis=1)
    w = np.prod(
        np.stack([supports[j][1][idx[:, j]] for j in range(len(supports))], axis=1),
        axis=1,
    )
    k = min(k, vals.shape[1])
    top = np.sort(vals, axis=1)[:, -k:].sum(axis=1)
    return float(w[top >= threshold - 1e-12].sum())


def crucial_lemma_check(family, params, fn=None, n=100_000, seed=None):
    """Check P(|Sum eps_i X_i| >= q^2 M + u + u') against
    exp(-u^2/(16 q^3 M^2)) + 4 q^{-(k+1)} + P(top-k sum >= u')."""
    q, k, u, u_prime = params.q, params.k, params.u, params.u_prime
    sym_fam = Family(tuple(d.symmetrized() for d in family.dists), family.counts)
    exact = _family_support_product(sym_fam) <= EXACT_ENUM_BUDGET

    if exact:
        sum_dist = sum_distribution_general(sym_fam)
        m_val = l1_exact(sum_dist)
        thr = q * q * m_val + u + u_prime
        lhs = float(sum_dist.probs[sum_dist.norms() >= thr - 1e-12].sum())
        top_tail = _exact_top_k_tail(family, k, u_prime)
        stderr = 0.0
        method = "exact"
    else:
        if seed is None:
            raise InvalidParameterError("monte-carlo path requires a seed")
        rows, extra = _sample_with_signs(family, n, seed)
        signed = np.sign(extra - 0.5)
        signed[signed == 0] = 1.0
        sums = np.abs((rows * signed).sum(axis=1))
        m_val = float(sums.mean())
        thr = q * q * m_val + u + u_prime
        hits = sums >= thr
        lhs = float(hits.mean())
        top = np.sort(np.abs(rows), axis=1)[:, -min(k, rows.shape[1]) :].sum(axis=1)
        top_hits = top >= u_prime
        top_tail = float(top_hits.mean())
        stderr = _sectioned_stderr(hits.astype(float)) + _sectioned_stderr(
            top_hits.astype(float)
        )
        method = "mc"

    if m_val == 0.0:
        rhs = 4.0 / q ** (k + 1) + top_tail
    else:
        rhs = math.exp(-u * u / (16.0 * q**3 * m_val * m_val)) + 4.0 / q ** (k + 1) + top_tail
    margin = math.inf if stderr == 0.0 else (rhs - lhs) / stderr
    return CrucialLemmaResult(
        lhs=lhs, rhs=rhs, M=m_val, top_k_tail=top_tail, method=method, stderr=stderr, margin_se=margin
    )


def _sample_with_signs(family, n, seed):
    """Rows of member draws plus matched uniforms for Rademacher signs."""
    u = counter_uniforms(seed, 0, n, 2 * family.n_members)
    out = np.empty((n, family.n_members))
    col = 0
    for d, c in zip(family.dists, family.counts):
        cdf = np.cumsum(d.probs)
        cdf[-1] = 1.0
        pick = np.searchsorted(cdf, u[:, col : col + c], side="right")
        out[:, col : col + c] = d.values[np.minimum(pick, d.values.shape[0] - 1)]
        col += c
    return out, u[:, family.n_members :]


def _sectioned_stderr(x):
    bounds = np.linspace(0, x.size, MC_SECTIONS + 1).astype(int)
    parts = [x[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])]
    return float(np.std(parts, ddof=1) / math.sqrt(MC_SECTIONS))


# ---------------------------------------------------------------------------
# Poisson lower-bound check


def _log_binom_sf(n, log_p, log_1mp, m):
    """ln P(Bin(n, p) >= m) in log domain."""
    if m <= 0:
        return 0.0
    if m > n:
        return -math.inf
    ks = np.arange(m, n + 1)
    terms = (
        gammaln(n + 1)
        - gammaln(ks + 1)
        - gammaln(n - ks + 1)
        + ks * log_p
        + (n - ks) * log_1mp
    )
    return logsumexp(terms)


def _log_poisson_sf(lam, m):
    """ln P(Z >= m) for Z Poisson(lam)."""
    if m <= 0:
        return 0.0
    ks = np.arange(m, max(m + 200, int(8 * lam) + 200))
    terms = -lam + ks * math.log(lam) - gammaln(ks + 1)
    return logsumexp(terms)


@dataclass
class PoissonCheckReport:
    rows: list  # (s, u, N, log binomial tail, log poisson tail, fitted C)
    fitted_C: float
    tail_dominance_ok: bool  # binomial >= poisson tail at the largest N
    discrepancy_by_N: list  # (N, max |exp gap|) non-increasing expected


def poisson_check(fn, u_grid, s_grid, n_grid):
    """Exact centered-Bernoulli sum tails against the Poisson lower bound
    exp(-C^2 (s ln(1+s) + s psi(u)))."""
    n_grid = [int(n) for n in n_grid]
    rows = []
    worst_c = 0.0
    n_big = max(n_grid)
    dominance = True
    discrepancy = []
    for n in n_grid:
        gap = 0.0
        for u in u_grid:
            log_npsi = math.log(n) + fn.log_value(u)
            if log_npsi <= 0:
                raise InvalidParameterError("need N Psi(u) > 1")
            log_p = -log_npsi
            p = math.exp(log_p)
            log_1mp = math.log1p(-p)
            lam = math.exp(-fn.log_value(u))
            for s in s_grid:
                m_bin = math.ceil(s + n * p - 1e-12)
                log_tail = _log_binom_sf(n, log_p, log_1mp, m_bin)
                log_pois = _log_poisson_sf(lam, math.ceil(2 * s))
                gap = max(gap, abs(math.exp(log_tail) - math.exp(_log_poisson_sf(lam, m_bin))))
                denom = s * math.log1p(s) + s * fn.psi(u)
                c_fit = math.sqrt(max(-log_tail, 0.0) / denom)
                if n == n_big:
                    rows.append((float(s), float(u), n, log_tail, log_pois, c_fit))
                    worst_c = max(worst_c, c_fit)
                    if log_tail < log_pois - 1e-12:
                        dominance = False
        discrepancy.append((n, gap))
    return PoissonCheckReport(
        rows=rows,
        fitted_C=worst_c,
        tail_dominance_ok=dominance,
        discrepancy_by_N=discrepancy,
    )


# ---------------------------------------------------------------------------
# Weak-variance decomposition


def weak_variance_terms(spec, n=100_000, seed=None):
    """The three terms dominating Sigma2 for a centered class, plus Sigma2."""
    if not spec.is_centered():
        raise DomainError("class must be mean-zero for the decomposition")
    table = spec.table
    term1 = float(np.max((spec.class_values**2) @ spec.base_probs) * spec.n_members)

    if spec.enumerable():
        idx, w = _enumerate_joint(spec)
        sq_max = (spec.class_values[:, idx] ** 2).max(axis=0).max(axis=1)
        e_max_sq = float(w @ sq_max)
        abs_sup = np.abs(table[:, idx].sum(axis=2)).max(axis=0)
        e_sup_abs = float(w @ abs_sup)
        sigma2 = float(w @ (table[:, idx] ** 2).sum(axis=2).max(axis=0))
    else:
        if seed is None:
            raise InvalidParameterError("monte-carlo path requires a seed")
        idx = spec.sample_indices(n, seed)
        sq_max = (spec.class_values[:, idx] ** 2).max(axis=0).max(axis=1)
        e_max_sq = float(sq_max.mean())
        abs_sup = np.abs(table[:, idx].sum(axis=2)).max(axis=0)
        e_sup_abs = float(abs_sup.mean())
        sigma2 = float((table[:, idx] ** 2).sum(axis=2).max(axis=0).mean())

    term2 = 32.0 * math.sqrt(e_max_sq) * e_sup_abs
    term3 = 8.0 * e_max_sq
    return {
        "sigma2": sigma2,
        "term1": term1,
        "term2": term2,
        "term3": term3,
        "holds": sigma2 <= term1 + term2 + term3 + 1e-9,
    }
