"""Tail bounds, empirical-process statistics, calibration, the isoperimetric
lemma check and the Poisson lower-bound comparison."""

import math

import numpy as np
import pytest
from scipy import stats

from hjorlicz.concentration import (
    DEFAULT_C_GRID,
    CrucialLemmaParams,
    EmpiricalProcessSpec,
    TailCurve,
    _log_binom_sf,
    _log_poisson_sf,
    bennett_rhs,
    bernstein_rhs,
    calibrate_c,
    convex_rhs,
    crucial_lemma_check,
    empirical_process_tail,
    poisson_check,
    process_u_stat,
    weak_variance_terms,
)
from hjorlicz.distributions import Family, FiniteDist, InvalidParameterError
from hjorlicz.orlicz import DomainError, ExpPower, PowerLaw, SquareComposition

PSI1 = ExpPower(1.0)


# ---------------------------------------------------------------------------
# closed-form bound values


def test_bennett_oracles():
    assert bennett_rhs(0.0, 1.0, 1.0, 1.0, PSI1).raw == pytest.approx(4.0, rel=1e-14)
    # t = U = Sigma2 = c = 1: 2 e^{-ln 2} + 2 e^{-1} = 1 + 2/e
    got = bennett_rhs(1.0, 1.0, 1.0, 1.0, PSI1)
    assert got.raw == pytest.approx(1.0 + 2.0 / math.e, rel=1e-14)
    assert got.value == 1.0  # capped for plotting
    no_tail = bennett_rhs(1.0, 1.0, 1.0, 1.0, PSI1, include_orlicz_term=False)
    assert no_tail.raw == pytest.approx(1.0, rel=1e-14)


def test_bernstein_oracles():
    # t=2, rest 1: 2 e^{-4/3} + 2 e^{-2}
    got = bernstein_rhs(2.0, 1.0, 1.0, 1.0, PSI1)
    assert got.raw == pytest.approx(2.0 * math.exp(-4.0 / 3.0) + 2.0 * math.exp(-2.0), rel=1e-14)
    eq = bernstein_rhs(2.0, 1.0, 1.0, 1.0, PSI1, variant="equivalent")
    assert eq.raw == pytest.approx(2.0 * math.exp(-4.0) + 2.0 * math.exp(-2.0), rel=1e-14)


def test_convex_oracle():
    phi = SquareComposition(PSI1)  # psi_phi(x) = x^2
    got = convex_rhs(1.0, 1.0, 1.0, 1.0, phi)
    assert got.raw == pytest.approx(4.0 / math.e, rel=1e-14)


def test_bound_parameter_validation():
    with pytest.raises(DomainError):
        bennett_rhs(1.0, 0.0, 1.0, 1.0, PSI1)
    with pytest.raises(DomainError):
        bernstein_rhs(-1.0, 1.0, 1.0, 1.0, PSI1)
    with pytest.raises(DomainError):
        convex_rhs(1.0, 1.0, 1.0, 1.0, PowerLaw(0.5))  # fails the axioms


def test_bounds_non_increasing_in_t():
    ts = np.linspace(0.0, 20.0, 40)
    vals = [bennett_rhs(t, 1.0, 2.0, 0.5, PSI1).raw for t in ts]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    vals = [bernstein_rhs(t, 1.0, 2.0, 0.5, PSI1).raw for t in ts]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_bennett_scaling_invariance():
    # first term invariant under (t, U, sqrt(Sigma2)) -> lambda * same
    lam = 3.7
    a = bennett_rhs(2.0, 1.5, 4.0, 0.5, PSI1, include_orlicz_term=False).raw
    b = bennett_rhs(lam * 2.0, lam * 1.5, lam * lam * 4.0, 0.5, PSI1, include_orlicz_term=False).raw
    assert a == pytest.approx(b, rel=1e-12)
    # Orlicz term invariant under (t, U) -> lambda * same
    a = bennett_rhs(2.0, 1.5, 4.0, 0.5, PSI1).raw - a
    c = bennett_rhs(lam * 2.0, lam * 1.5, 4.0, 0.5, PSI1, include_orlicz_term=True).raw
    c -= bennett_rhs(lam * 2.0, lam * 1.5, 4.0, 0.5, PSI1, include_orlicz_term=False).raw
    assert a == pytest.approx(c, rel=1e-12)


def test_bennett_dominates_bernstein():
    # ln(1+x) >= x/(1+x) makes the Bennett exponential term the smaller one
    for t in (0.5, 1.0, 3.0, 10.0):
        a = bennett_rhs(t, 1.0, 2.0, 1.0, PSI1).raw
        b = bernstein_rhs(t, 1.0, 2.0, 1.0, PSI1).raw
        assert a <= b + 1e-12


# ---------------------------------------------------------------------------
# empirical process specs


def rademacher_projection_spec(d, n_members):
    """Coordinate projections of a uniform signed basis vector in R^d."""
    base = np.full(2 * d, 1.0 / (2 * d))
    table = np.zeros((d, 2 * d))
    for j in range(d):
        table[j, 2 * j] = 1.0
        table[j, 2 * j + 1] = -1.0
    return EmpiricalProcessSpec(base, table, n_members, symmetric=True)


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        EmpiricalProcessSpec(np.array([0.6, 0.6]), np.array([[1.0, -1.0]]), 2)
    with pytest.raises(InvalidParameterError):
        EmpiricalProcessSpec(np.array([0.5, 0.5]), np.array([[1.0]]), 2)
    with pytest.raises(InvalidParameterError):
        EmpiricalProcessSpec(np.array([0.5, 0.5]), np.array([[1.0, -1.0]]), 0)


def test_spec_envelope_and_centering():
    spec = rademacher_projection_spec(2, 3)
    np.testing.assert_array_equal(spec.envelope(), np.ones(4))
    assert spec.is_centered()
    assert spec.table.shape == (4, 4)  # negations included


def test_process_u_stat_singleton_oracle():
    # envelope identically 1: max is a point mass at 1, norm = 1/ln 2
    spec = EmpiricalProcessSpec(np.array([0.5, 0.5]), np.array([[1.0, -1.0]]), 4)
    assert process_u_stat(spec, PSI1) == pytest.approx(1.0 / math.log(2.0), rel=1e-10)


def test_tail_exact_matches_mc():
    spec = rademacher_projection_spec(2, 6)
    # the deviation law is discrete; thresholds between atoms keep the exact
    # and MC paths (whose centering means differ by O(1/sqrt(n))) comparable
    from hjorlicz.concentration import _enumerate_joint

    idx, w = _enumerate_joint(spec)
    s_vals = spec.table[:, idx].sum(axis=2).max(axis=0)
    dev_atoms = np.unique(np.round(np.abs(s_vals - float(w @ s_vals)), 9))
    t_grid = 0.5 * (dev_atoms[:-1] + dev_atoms[1:])

    st_exact, curve_exact = empirical_process_tail(spec, PSI1, 0, seed=0, t_grid=t_grid, exact=True)
    st_mc, curve_mc = empirical_process_tail(spec, PSI1, 200_000, seed=21, t_grid=t_grid, exact=False)
    assert st_exact.method == "exact" and st_mc.method == "mc"
    assert st_mc.ES == pytest.approx(st_exact.ES, rel=0.02)
    assert st_mc.Sigma2 == pytest.approx(st_exact.Sigma2, rel=0.02)
    assert st_mc.U == st_exact.U  # envelope norm is exact on both paths
    for s_ex, lo, hi in zip(curve_exact.survival, curve_mc.ci_low, curve_mc.ci_high):
        assert lo - 0.01 <= s_ex <= hi + 0.01


def test_tail_exact_survival_oracle():
    # single Rademacher member, identity class: S = x, so |S - ES| = 1 always
    spec = EmpiricalProcessSpec(np.array([0.5, 0.5]), np.array([[1.0, -1.0]]), 1)
    _, curve = empirical_process_tail(spec, PSI1, 0, seed=0, t_grid=[0.5, 1.5], exact=True)
    np.testing.assert_allclose(curve.survival, [1.0, 0.0], atol=1e-12)


# ---------------------------------------------------------------------------
# calibration


def test_calibrate_returns_largest_feasible():
    spec = rademacher_projection_spec(2, 8)
    st_out, curve = empirical_process_tail(spec, PSI1, 0, seed=0, exact=True)
    c = calibrate_c(curve, "bennett", st_out, PSI1)
    assert c is not None
    # feasibility is monotone decreasing in c: everything below c works too
    for c_small in [g for g in DEFAULT_C_GRID if g < c]:
        assert all(
            bennett_rhs(t, st_out.U, st_out.Sigma2, c_small, PSI1).raw >= hi - 1e-12
            for t, hi in zip(curve.t_grid, curve.ci_high)
        )
    with pytest.raises(InvalidParameterError):
        calibrate_c(curve, "hoeffding", st_out, PSI1)
    with pytest.raises(InvalidParameterError):
        calibrate_c(curve, "bennett", st_out, PSI1, c_grid=[])


def test_calibrate_infeasible_returns_none():
    from hjorlicz.concentration import ProcessStats

    curve = TailCurve(
        t_grid=np.array([1000.0]),
        survival=np.array([1.0]),
        ci_low=np.array([1.0]),
        ci_high=np.array([1.0]),
        n_samples=0,
    )
    st_out = ProcessStats(U=1.0, Sigma2=1.0, ES=0.0, method="exact")
    assert calibrate_c(curve, "bennett", st_out, PSI1) is None


# ---------------------------------------------------------------------------
# crucial lemma


def test_crucial_lemma_exact_rademacher():
    fam = Family.iid(FiniteDist.point_mass(1.0), 8)
    res = crucial_lemma_check(fam, CrucialLemmaParams(2, 1, 1.0, 1.0))
    assert res.method == "exact"
    assert res.stderr == 0.0
    assert res.passed
    assert res.M == pytest.approx(
        float(np.mean(np.abs(np.random.default_rng(0).choice([-1, 1], (200_000, 8)).sum(axis=1)))),
        rel=0.02,
    )


def test_crucial_lemma_mc_path():
    fam = Family.iid(FiniteDist.point_mass(1.0), 32)
    res = crucial_lemma_check(fam, CrucialLemmaParams(2, 2, 2.0, 2.0), n=50_000, seed=13)
    assert res.method == "mc"
    assert res.passed
    with pytest.raises(InvalidParameterError):
        crucial_lemma_check(fam, CrucialLemmaParams(2, 2, 2.0, 2.0), n=1_000)  # no seed


def test_crucial_lemma_param_validation():
    with pytest.raises(InvalidParameterError):
        CrucialLemmaParams(1, 1, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        CrucialLemmaParams(2, 0, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        CrucialLemmaParams(2, 1, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Poisson comparison


def test_log_binom_sf_matches_scipy():
    n, p = 50, 0.13
    for m in (0, 3, 10, 49, 50, 51):
        got = _log_binom_sf(n, math.log(p), math.log1p(-p), m)
        want = stats.binom.sf(m - 1, n, p)
        if want == 0.0:
            assert got == -math.inf
        else:
            assert got == pytest.approx(math.log(want), rel=1e-10)


def test_log_poisson_sf_matches_scipy():
    lam = 2.5
    for m in (0, 1, 4, 12):
        got = _log_poisson_sf(lam, m)
        want = stats.poisson.sf(m - 1, lam)
        assert got == pytest.approx(math.log(want), rel=1e-10)


def test_poisson_check_small_grid():
    rep = poisson_check(PSI1, u_grid=[2.0], s_grid=[4.0, 8.0], n_grid=[100, 1000])
    assert rep.tail_dominance_ok
    assert 0.0 < rep.fitted_C < 20.0
    # discrepancy between binomial and Poisson tails shrinks with N
    gaps = [g for _, g in rep.discrepancy_by_N]
    assert gaps[1] <= gaps[0] + 1e-12
    assert all(n == 1000 for _, _, n, _, _, _ in rep.rows)  # rows only at largest N
    with pytest.raises(InvalidParameterError):
        poisson_check(PSI1, u_grid=[0.01], s_grid=[4.0], n_grid=[2])


# ---------------------------------------------------------------------------
# weak-variance decomposition


def test_weak_variance_exact_holds():
    spec = rademacher_projection_spec(3, 5)
    out = weak_variance_terms(spec)
    assert out["holds"]
    assert out["term1"] >= 0 and out["term2"] >= 0 and out["term3"] >= 0


def test_weak_variance_singleton_degenerates():
    spec = EmpiricalProcessSpec(np.array([0.5, 0.5]), np.array([[1.0, -1.0]]), 4)
    out = weak_variance_terms(spec)
    # no supremum: Sigma2 equals the weak term exactly
    assert out["sigma2"] == pytest.approx(out["term1"], rel=1e-12)


def test_weak_variance_rejects_non_centered():
    spec = EmpiricalProcessSpec(np.array([0.5, 0.5]), np.array([[1.0, 0.0]]), 2)
    with pytest.raises(DomainError):
        weak_variance_terms(spec)


def test_weak_variance_mc_close_to_exact():
    spec = rademacher_projection_spec(2, 4)
    exact = weak_variance_terms(spec)
    approx = weak_variance_terms(
        EmpiricalProcessSpec(spec.base_probs, spec.class_values, 20, symmetric=True),
        n=50_000,
        seed=7,
    )
    assert approx["holds"]
    assert exact["holds"]
