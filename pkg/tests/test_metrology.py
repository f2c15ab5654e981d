import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mzphoton.interferometer import SUPPORTED_CASES, FringeModel, analytic_fringe_model
from mzphoton.metrology import (
    MetrologyDomainError,
    NoSensitivityError,
    assess,
    fisher_precision_oracle,
    fringe_precision,
    limits,
    visibility_threshold,
)


def test_limits():
    assert limits(4) == (0.5, 0.25)
    with pytest.raises(MetrologyDomainError):
        limits(0)


@pytest.mark.parametrize(
    "n,eta,expected", [(2, 1.0, 1 / math.sqrt(2)), (4, 3 / 8, math.sqrt(2 / 3)), (4, 1 / 8, math.sqrt(2)), (2, 1 / 4, math.sqrt(2))]
)
def test_thresholds(n, eta, expected):
    assert visibility_threshold(n, eta) == pytest.approx(expected, abs=1e-12)


def test_assess_verdicts():
    assert assess(0.91, 4, 3 / 8).beats_sql
    assert not assess(0.87, 4, 1 / 8).beats_sql
    # threshold itself does not beat the limit
    assert not assess(1.0, 1, 1.0).beats_sql


@given(st.integers(1, 20), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_beats_sql_iff_precision_below_scaled_sql(n, eta, v):
    r = assess(v, n, eta)
    other = fringe_precision(v, n) < math.sqrt(eta / n)
    if abs(fringe_precision(v, n) - math.sqrt(eta / n)) > 1e-12:
        assert r.beats_sql == other
    assert r.margin == pytest.approx(v - r.v_threshold)


@given(st.integers(1, 50))
def test_threshold_one_at_eta_one_over_n(n):
    assert visibility_threshold(n, 1 / n) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(1, 30), st.floats(0.01, 0.99))
def test_threshold_monotone(n, eta):
    assert visibility_threshold(n + 1, eta) < visibility_threshold(n, eta)
    assert visibility_threshold(n, min(1.0, eta + 0.01)) < visibility_threshold(n, eta)


@pytest.mark.parametrize("v", [0.0, -0.1, 1.1])
def test_precision_domain(v):
    with pytest.raises(MetrologyDomainError):
        fringe_precision(v, 4)


@pytest.mark.parametrize("eta", [0.0, 1.5])
def test_threshold_domain(eta):
    with pytest.raises(MetrologyDomainError):
        visibility_threshold(4, eta)


@pytest.mark.parametrize("case", SUPPORTED_CASES)
def test_fisher_oracle_matches_heuristic_at_full_visibility(case):
    m = analytic_fringe_model(*case)
    _, dphi = fisher_precision_oracle(m)
    assert dphi == pytest.approx(1 / (m.n_fold * math.sqrt(m.eta_i)), rel=1e-2)


def test_fisher_oracle_trials_scaling():
    m = FringeModel(2, 1.0, 0.9)
    _, one = fisher_precision_oracle(m)
    _, hundred = fisher_precision_oracle(m, trials=100)
    assert hundred == pytest.approx(one / 10)


def test_fisher_oracle_zero_visibility():
    with pytest.raises(NoSensitivityError):
        fisher_precision_oracle(FringeModel(2, 1.0, 0.0))
