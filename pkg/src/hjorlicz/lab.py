"""Hoffmann-Jorgensen ratio measurements, the lemma verification suite and the
divergent-series experiment.

The central quantity is R = ||Sum X_i||_Psi / (||Sum X_i||_1 + ||max ||X_i|| ||_Psi);
the inequality under study says R stays bounded over all independent families
exactly when the Orlicz function passes the growth condition in hjcheck.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    Family,
    FiniteDist,
    InvalidParameterError,
    SeriesSpec,
    _vector_norm,
    make_three_point,
    max_distribution,
    sample,
    sum_distribution_general,
    sum_distribution_iid_lattice,
)
from .norms import l1_exact, norm_exact, norm_mc
from .numutil import BracketError
from .orlicz import affine_minorant, invert_log

LEMMA_SLACK = 1e-9


@dataclass
class RatioCell:
    psi_label: str
    family_desc: str
    n_members: int
    u: float
    sum_norm: float
    l1: float
    max_norm: float
    ratio: float | None  # None when 0/0-degenerate
    method: str
    log_a_low: float = math.nan  # certified single-atom lower bound on sum_norm

    def to_record(self):
        return {
            "psi": self.psi_label,
            "family": self.family_desc,
            "N": self.n_members,
            "u": self.u,
            "sum_norm": self.sum_norm,
            "l1": self.l1,
            "max_norm": self.max_norm,
            "ratio": self.ratio,
            "method": self.method,
            "log_a_low": self.log_a_low,
        }


@dataclass
class RatioReport:
    cells: list
    empirical_D: float
    metadata: dict = field(default_factory=dict)


def log_single_atom_bound(fn, u, n_members):
    """ln of a_low = N u / Psi^{-1}((2 N Psi(u))^N), a lower bound on the
    Luxemburg norm of the N-fold three-point sum (the all-atoms-up path)."""
    n = int(n_members)
    log_target = n * (math.log(2.0 * n) + fn.log_value(u))
    x = invert_log(fn, log_target)
    return math.log(n) + math.log(u) - math.log(x)


def hj_ratio(family, fn, mode="exact", n_samples=20_000, seed=None):
    """One inequality cell: the three norm components and their ratio."""
    sum_norm_est, max_norm_est, l1 = _components(family, fn, mode, n_samples, seed)
    sum_norm, max_norm = sum_norm_est.value, max_norm_est.value
    denom = l1 + max_norm
    ratio = None if sum_norm == 0.0 and denom == 0.0 else sum_norm / denom

    u = float(np.max(family.dists[0].norms()))
    cell = RatioCell(
        psi_label=fn.label(),
        family_desc=_family_desc(family),
        n_members=family.n_members,
        u=u,
        sum_norm=sum_norm,
        l1=l1,
        max_norm=max_norm,
        ratio=ratio,
        method=sum_norm_est.method,
    )
    if _is_three_point(family, fn):
        cell.log_a_low = log_single_atom_bound(fn, u, family.n_members)
    return cell


def _components(family, fn, mode, n_samples, seed):
    if mode == "exact":
        d = family.dists[0]
        if family.is_iid and d.is_scalar:
            sum_dist = sum_distribution_iid_lattice(d, family.n_members)
        else:
            sum_dist = sum_distribution_general(family)
        sum_norm = norm_exact(fn, sum_dist)
        max_norm = norm_exact(fn, max_distribution(family))
        l1 = l1_exact(sum_dist)
        return sum_norm, max_norm, l1
    if mode == "monte-carlo":
        if seed is None:
            raise InvalidParameterError("monte-carlo mode requires a seed")
        sum_norm = norm_mc(fn, family, "sum", n_samples, seed)
        max_norm = norm_mc(fn, family, "max", n_samples, seed)
        draws = sample(family, n_samples, seed).sum(axis=1)
        l1 = float(np.mean(_vector_norm(draws, family.norm_tag) if draws.ndim > 1 else np.abs(draws)))
        return sum_norm, max_norm, l1
    raise InvalidParameterError(f"unknown mode {mode!r}")


def _family_desc(family):
    kinds = "iid" if family.is_iid else "indep"
    return f"{kinds}:{family.n_members}x{family.dists[0].values.shape[0]}atoms"


def _is_three_point(family, fn):
    if not family.is_iid:
        return False
    d = family.dists[0]
    if d.values.shape != (3,) or not d.is_scalar:
        return False
    u = d.values[2]
    if abs(d.values[0] + u) > 1e-12 or abs(d.values[1]) > 1e-12:
        return False
    expect = -math.log(2.0 * family.n_members) - fn.log_value(u)
    return abs(d.log_probs[0] - expect) < 1e-9


def ratio_sweep(fn, u_grid, n_grid, mode="exact", n_samples=20_000, seed=None):
    """Inequality cells for three-point families over the (u, N) product grid."""
    u_grid = [float(u) for u in u_grid]
    n_grid = [int(n) for n in n_grid]
    if not u_grid or not n_grid:
        raise InvalidParameterError("grids must be nonempty")
    cells = []
    for u in u_grid:
        for n in n_grid:
            fam = Family.iid(make_three_point(fn, u, n), n)
            cells.append(hj_ratio(fam, fn, mode=mode, n_samples=n_samples, seed=seed))
    ratios = [c.ratio for c in cells if c.ratio is not None]
    return RatioReport(
        cells=cells,
        empirical_D=max(ratios) if ratios else math.nan,
        metadata={"psi": fn.label(), "u_grid": u_grid, "n_grid": n_grid, "mode": mode},
    )


def schedule_ratio_sweep(fn, schedule, n_exponent_max=40):
    """Certified lower-bound ratios along explicit (step, u) pairs.

    For each u the member count N is chosen among powers of two to maximize
    the certified lower bound a_low; the reported ratio uses a_low in place of
    the exact sum norm, so it never overstates the true ratio.
    """
    cells = []
    for step, u in schedule:
        best = None
        for e in range(1, n_exponent_max + 1):
            n = 2**e
            if math.log(n) + fn.log_value(u) <= 0:
                continue
            try:
                log_a = log_single_atom_bound(fn, u, n)
            except (BracketError, OverflowError):
                break
            if best is None or log_a > best[1]:
                best = (n, log_a)
        if best is None:
            raise InvalidParameterError(f"no feasible N for u={u:g}")
        n, log_a = best
        tp = make_three_point(fn, u, n)
        fam = Family.iid(tp, n)
        max_norm = norm_exact(fn, max_distribution(fam)).value
        l1 = n * 2.0 * math.exp(tp.log_probs[0]) * u  # N * E|Y| exactly
        a_low = math.exp(log_a)
        cells.append(
            RatioCell(
                psi_label=fn.label(),
                family_desc=f"three-point:step{step}",
                n_members=n,
                u=u,
                sum_norm=a_low,
                l1=l1,
                max_norm=max_norm,
                ratio=a_low / (l1 + max_norm),
                method="lower-bound",
                log_a_low=log_a,
            )
        )
    ratios = [c.ratio for c in cells]
    return RatioReport(
        cells=cells,
        empirical_D=max(ratios),
        metadata={"psi": fn.label(), "schedule": list(schedule), "mode": "lower-bound"},
    )


# ---------------------------------------------------------------------------
# Lemma verification suite


@dataclass
class LemmaSuiteReport:
    cases: int
    checks: int
    violations: list  # (lemma id, case index, lhs, rhs)

    @property
    def passed(self):
        return not self.violations


def _random_small_dist(rng, mean_zero=False):
    m = int(rng.integers(2, 5))
    vals = np.round(rng.uniform(-3.0, 3.0, size=m), 6)
    while np.unique(vals).size < m:
        vals = np.round(rng.uniform(-3.0, 3.0, size=m), 6)
    probs = rng.dirichlet(np.ones(m))
    probs = np.maximum(probs, 1e-6)
    probs /= probs.sum()
    if mean_zero:
        vals = vals - probs @ vals
        if np.unique(np.round(vals, 12)).size < m:
            return _random_small_dist(rng, mean_zero)
    return FiniteDist.from_probs(vals, probs)


def _check_lemma_51(fam, t):
    """Sum of member tails vs 2 P(max >= t), under P(max >= t) <= 1/2."""
    mx = max_distribution(fam)
    p_max = float(np.sum(mx.probs[mx.values >= t - 1e-12]))
    if p_max > 0.5:
        return None
    lhs = sum(
        c * float(np.sum(d.probs[d.norms() >= t - 1e-12]))
        for d, c in zip(fam.dists, fam.counts)
    )
    return lhs, 2.0 * p_max


def _check_lemma_52(fn, dist, t):
    """P(Y >= t) <= 2 exp(-psi(t / ||Y||_Psi)) for nonnegative Y = ||X||."""
    nn = dist.norms()
    order = np.argsort(nn)
    lhs = float(np.sum(dist.probs[order][nn[order] >= t - 1e-12]))
    norm = norm_exact(fn, dist).value
    if norm == 0.0:
        return None
    rhs = 2.0 * math.exp(-fn.psi(t / norm))
    return lhs, rhs


def _check_lemma_55(fn, fam):
    """1/2 ||Sum eps X||_Psi <= ||Sum X||_Psi <= 2 ||Sum eps X||_Psi (mean zero)."""
    plain = norm_exact(fn, sum_distribution_general(fam)).value
    sym_fam = Family(tuple(d.symmetrized() for d in fam.dists), fam.counts)
    sym = norm_exact(fn, sum_distribution_general(sym_fam)).value
    return plain, sym  # caller applies both factor-2 directions


def _check_lemma_56(fn, dist, c_psi):
    return l1_exact(dist), c_psi * norm_exact(fn, dist).value


def _check_lemma_57(fn, dist):
    m = abs(dist.mean()) if dist.is_scalar else float(np.linalg.norm(dist.mean()))
    if m == 0.0:
        return 0.0, 0.0
    lhs = norm_exact(fn, FiniteDist.point_mass(m)).value
    return lhs, max(fn.value(1.0), 1.0) * m


def lemma_suite(fns, seed, cases):
    """Exact check of the five auxiliary norm/tail lemmas on random families."""
    if cases < 1:
        raise InvalidParameterError("cases must be positive")
    rng = np.random.default_rng(seed)
    violations = []
    checks = 0
    for i in range(cases):
        fn = fns[int(rng.integers(len(fns)))]
        a, b = affine_minorant(fn)
        c_psi = (1.0 + b) / a
        n = int(rng.integers(1, 6))
        fam = Family(tuple(_random_small_dist(rng, mean_zero=True) for _ in range(n)), (1,) * n)
        t = float(rng.uniform(0.1, 4.0))

        pair = _check_lemma_51(fam, t)
        if pair is not None:
            checks += 1
            if pair[0] > pair[1] + LEMMA_SLACK:
                violations.append(("lemma-max-tails", i, *pair))

        d0 = fam.dists[0]
        pair = _check_lemma_52(fn, d0, t)
        if pair is not None:
            checks += 1
            if pair[0] > pair[1] + LEMMA_SLACK:
                violations.append(("lemma-orlicz-chebyshev", i, *pair))

        plain, sym = _check_lemma_55(fn, fam)
        checks += 1
        if plain > 2.0 * sym + LEMMA_SLACK or sym > 2.0 * plain + LEMMA_SLACK:
            violations.append(("lemma-symmetrization", i, plain, sym))

        pair = _check_lemma_56(fn, d0, c_psi)
        checks += 1
        if pair[0] > pair[1] + LEMMA_SLACK:
            violations.append(("lemma-l1-embedding", i, *pair))

        # the mean-norm lemma needs a non-centered variable; draw a fresh one
        shifted = _random_small_dist(rng, mean_zero=False)
        pair = _check_lemma_57(fn, shifted)
        checks += 1
        if pair[0] > pair[1] + LEMMA_SLACK:
            violations.append(("lemma-mean-norm", i, *pair))
    return LemmaSuiteReport(cases=cases, checks=checks, violations=violations)


# ---------------------------------------------------------------------------
# Divergent-series experiment


@dataclass
class SeriesReport:
    rows: list  # (k, u_k, N_k, lower bound on ||S_{m_{k+1}}||, block max norm)
    sup_norm_upper: float
    verdict_diverging: bool
    truncated_at: int | None = None
    metadata: dict = field(default_factory=dict)


def make_series_spec(fn, candidate_us, k_max, n_exponent_max=40):
    """Pick (u_k, N_k) per block so the certified block-sum bound reaches k^3.

    candidate_us is typically the breakpoint schedule of a constructed
    inequality-violating function; blocks reuse the smallest u that works.
    """
    blocks = []
    for k in range(1, k_max + 1):
        target = math.log(k**3) if k > 1 else 0.0
        found = None
        for u in candidate_us:
            if fn.log_value(u) <= 0:
                continue
            for e in range(1, n_exponent_max + 1):
                n = 2**e
                try:
                    log_a = log_single_atom_bound(fn, u, n)
                except (BracketError, OverflowError):
                    break
                if log_a >= target:
                    found = (u, n)
                    break
            if found:
                break
        if not found:
            break
        blocks.append(found)
    if not blocks:
        raise InvalidParameterError("no feasible block; schedule too short")
    return SeriesSpec(tuple(blocks))


def series_experiment(fn, spec):
    """Certified lower bounds on the partial-sum norms of the block series
    against the exact upper bound on || sup_n |X_n| ||_Psi."""
    rows = []
    sup_upper = 0.0
    truncated = None
    for k, (u, n) in enumerate(spec.blocks, start=1):
        if math.log(n) + fn.log_value(u) <= 0:
            raise InvalidParameterError(f"block {k}: need N Psi(u) > 1")
        try:
            log_a = log_single_atom_bound(fn, u, n)
            fam = Family.iid(make_three_point(fn, u, n), n)
            block_max = norm_exact(fn, max_distribution(fam)).value
        except (BracketError, OverflowError):
            truncated = k
            break
        # conditional Jensen drops all blocks but k; block atoms are Y/k^2
        lower = math.exp(log_a) / (k * k)
        sup_upper += block_max / (k * k)
        rows.append((k, u, n, lower, block_max))
    diverging = all(r[3] >= r[0] for r in rows) and len(rows) >= 2
    return SeriesReport(
        rows=rows,
        sup_norm_upper=sup_upper,
        verdict_diverging=diverging,
        truncated_at=truncated,
        metadata={"psi": fn.label(), "blocks": list(spec.blocks)},
    )
