"""Luxemburg norm engine: closed-form oracles, scaling laws and the Monte
Carlo estimator against the exact path."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjorlicz.distributions import (
    Family,
    FiniteDist,
    InvalidParameterError,
    make_three_point,
)
from hjorlicz.norms import l1_exact, norm_exact, norm_mc
from hjorlicz.orlicz import ExpPower, PowerLaw, invert_log

PSI1 = ExpPower(1.0)
LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# exact oracles


def test_point_mass_exponential_norm():
    # E Psi(c/a) = 1  <=>  a = c / ln 2
    est = norm_exact(PSI1, FiniteDist.point_mass(1.0))
    assert est.value == pytest.approx(1.0 / LN2, rel=1e-11)
    assert est.method == "exact"


@given(st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=30)
def test_point_mass_scaling(c):
    est = norm_exact(PSI1, FiniteDist.point_mass(c))
    assert est.value == pytest.approx(c / LN2, rel=1e-9)


def test_rademacher_norm():
    r = FiniteDist.point_mass(1.0).symmetrized()
    assert norm_exact(PSI1, r).value == pytest.approx(1.0 / LN2, rel=1e-11)


def test_power_law_norm_is_lp_norm():
    d = FiniteDist.from_probs([-2.0, 0.5, 3.0], [0.3, 0.4, 0.3])
    for p in (1.0, 2.0, 4.0):
        lp = float((d.probs @ np.abs(d.values) ** p) ** (1.0 / p))
        assert norm_exact(PowerLaw(p), d).value == pytest.approx(lp, rel=1e-10)


def test_unit_norm_single_atom_law():
    # P(|X| = u) = 1/Psi(u) makes E Psi(|X|/1) exactly 1
    for u in (1.5, 3.0, 8.0):
        p = 1.0 / PSI1.value(u)
        d = FiniteDist.from_probs([0.0, u], [1.0 - p, p])
        assert norm_exact(PSI1, d).value == pytest.approx(1.0, rel=1e-11)


def test_three_point_closed_form():
    # E Psi(u/a) = 1 forces Psi(u/a) = N Psi(u), so a = u / Psi^{-1}(N Psi(u))
    u, n = 4.0, 8
    d = make_three_point(PSI1, u, n)
    a = u / invert_log(PSI1, math.log(n) + PSI1.log_value(u))
    assert norm_exact(PSI1, d).value == pytest.approx(a, rel=1e-9)


def test_zero_distribution_norm_zero():
    assert norm_exact(PSI1, FiniteDist.point_mass(0.0)).value == 0.0


def test_norm_homogeneity():
    d = FiniteDist.from_probs([-1.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    base = norm_exact(PSI1, d).value
    assert norm_exact(PSI1, d.scaled(7.5)).value == pytest.approx(7.5 * base, rel=1e-9)


def test_lp_norms_increase_in_p():
    d = FiniteDist.from_probs([0.0, 1.0], [0.5, 0.5])
    assert norm_exact(PowerLaw(1.0), d).value <= norm_exact(PowerLaw(2.0), d).value <= norm_exact(PowerLaw(4.0), d).value


def test_norm_handles_tower_scale_atoms():
    # atom at u with probability e^{-900}: norm solves Psi(u/a) = e^{900}
    u = 50.0
    lp_atom = -900.0
    d = FiniteDist(np.array([0.0, u]), np.array([math.log1p(-math.exp(lp_atom)), lp_atom]))
    expected = u / invert_log(PSI1, 900.0)
    assert norm_exact(PSI1, d).value == pytest.approx(expected, rel=1e-9)


def test_l1_exact():
    d = FiniteDist.from_probs([-2.0, 1.0], [0.25, 0.75])
    assert l1_exact(d) == pytest.approx(0.25 * 2.0 + 0.75 * 1.0, rel=1e-14)


def test_vector_norm_euclidean():
    d = FiniteDist.from_probs([[3.0, 4.0]], [1.0], norm_tag="euclidean")
    assert norm_exact(PSI1, d).value == pytest.approx(5.0 / LN2, rel=1e-10)


# ---------------------------------------------------------------------------
# Monte Carlo estimator


def test_mc_matches_exact_within_interval():
    d = FiniteDist.from_probs([-1.0, 0.0, 2.0], [0.3, 0.4, 0.3])
    fam = Family.iid(d, 4)
    from hjorlicz.distributions import sum_distribution_iid_lattice

    exact = norm_exact(PSI1, sum_distribution_iid_lattice(d, 4)).value
    est = norm_mc(PSI1, fam, "sum", 40_000, seed=11)
    assert est.method == "mc"
    assert est.ci_low <= exact <= est.ci_high
    assert est.value == pytest.approx(exact, rel=0.05)


def test_mc_max_statistic():
    from hjorlicz.distributions import max_distribution

    d = FiniteDist.from_probs([0.0, 1.0, 3.0], [0.5, 0.3, 0.2])
    fam = Family.iid(d, 5)
    exact = norm_exact(PSI1, max_distribution(fam)).value
    est = norm_mc(PSI1, fam, "max", 40_000, seed=5)
    assert est.ci_low <= exact <= est.ci_high


def test_mc_deterministic_given_seed():
    d = FiniteDist.from_probs([0.0, 1.0], [0.5, 0.5])
    fam = Family.iid(d, 3)
    a = norm_mc(PSI1, fam, "sum", 2_000, seed=42)
    b = norm_mc(PSI1, fam, "sum", 2_000, seed=42)
    assert a == b


def test_mc_rejects_tiny_sample():
    d = FiniteDist.from_probs([0.0, 1.0], [0.5, 0.5])
    with pytest.raises(InvalidParameterError):
        norm_mc(PSI1, Family.iid(d, 1), "sum", 8, seed=1)
    with pytest.raises(InvalidParameterError):
        norm_mc(PSI1, Family.iid(d, 1), "median", 1_000, seed=1)
