import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzphoton.analysis import (
    FitError,
    FringeDataset,
    IllConditionedFitError,
    InsufficientBaselineError,
    InvalidDatasetError,
    NoSignalError,
    calibrate_phase_jitter,
    count_error,
    fit_fixed_frequency_sinusoid,
    hom_dip_ratio,
)
from mzphoton.metrology import assess
from mzphoton.simulator import CountRecord, DetectorModel, ScanConfig, SourceModel, simulate_fringe_scan

GRID = np.linspace(0, 2 * math.pi, 32, endpoint=False)


def records(counts, phases=GRID):
    return [CountRecord.from_counts(p, int(c), 1000) for p, c in zip(phases, counts)]


def fringe(c0, v, n, origin=0.0, phases=GRID):
    return c0 * (1 - v * np.cos(n * (phases - origin)))


@given(st.floats(50, 1e5), st.floats(0.05, 1.0), st.integers(1, 4), st.floats(-1.5, 1.5))
@settings(max_examples=50, deadline=None)
def test_noiseless_recovery(c0, v, n, origin):
    # rounding to integer counts is the only perturbation
    y = np.round(fringe(c0, v, n, origin))
    fit = fit_fixed_frequency_sinusoid(FringeDataset(records(y), n))
    assert fit.visibility == pytest.approx(v, abs=3 / c0 + 1e-6)
    if v * c0 > 20:
        d = (fit.phase_origin - origin) * n
        assert abs(math.remainder(d, 2 * math.pi)) < 0.05


def test_phase_origin_is_fringe_minimum():
    y = fringe(1000, 0.9, 2, origin=0.3)
    fit = fit_fixed_frequency_sinusoid(FringeDataset(records(y), 2))
    assert math.remainder((fit.phase_origin - 0.3) * 2, 2 * math.pi) == pytest.approx(0, abs=1e-3)


@pytest.mark.parametrize("v", [1.0, 0.91, 0.87])
def test_poisson_coverage(v):
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        y = rng.poisson(fringe(200, v, 4))
        fit = fit_fixed_frequency_sinusoid(FringeDataset(records(y), 4))
        hits += abs(fit.visibility - v) <= 3 * fit.sigma_visibility
    assert hits >= 99


def test_chi_squared_reasonable():
    rng = np.random.default_rng(3)
    fit = fit_fixed_frequency_sinusoid(FringeDataset(records(rng.poisson(fringe(500, 0.8, 2))), 2))
    assert fit.dof == 29
    assert fit.chi_squared < 3 * fit.dof


class TestDatasetValidation:
    def test_too_few(self):
        with pytest.raises(InvalidDatasetError):
            FringeDataset(records([1, 2, 3, 4], GRID[:4]), 1)

    def test_short_span(self):
        with pytest.raises(InvalidDatasetError):
            FringeDataset(records([1] * 8, np.linspace(0, 1, 8)), 1)

    def test_bad_n_fold(self):
        with pytest.raises(InvalidDatasetError):
            FringeDataset(records([1] * 8), 0)

    def test_zero_counts(self):
        with pytest.raises(NoSignalError):
            fit_fixed_frequency_sinusoid(FringeDataset(records([0] * 32), 2))

    def test_degenerate_settings(self):
        phases = np.arange(8) * (2 * math.pi / 4) / 2  # multiples of pi/4, N = 4: sin(4 phi) = 0
        with pytest.raises(IllConditionedFitError):
            fit_fixed_frequency_sinusoid(FringeDataset(records([5, 1] * 4, phases), 4))

    def test_count_error(self):
        assert count_error(16) == 4
        with pytest.raises(ValueError):
            count_error(-1)


def hom_records(center, base, coherence=500.0):
    delays = [-5 * coherence, -4 * coherence, 0.0, 4 * coherence, 5 * coherence]
    counts = [base, base, center, base, base]
    return [CountRecord.from_counts(d, c, 1) for d, c in zip(delays, counts)]


class TestHom:
    @pytest.mark.parametrize(
        "center,verdict", [(6667, "pure_22"), (13333, "pure_1111"), (10000, "mixture"), (3000, "inconclusive")]
    )
    def test_verdicts(self, center, verdict):
        r = hom_dip_ratio(hom_records(center, 10000), coherence_time_fs=500.0)
        assert r.verdict == verdict
        assert r.baseline_points == 4

    def test_sigma(self):
        r = hom_dip_ratio(hom_records(6667, 10000), coherence_time_fs=500.0)
        assert r.sigma_ratio == pytest.approx(r.ratio * math.sqrt(1 / 6667 + 1 / 40000))

    def test_low_statistics_overlap_picks_nearest(self):
        r = hom_dip_ratio(hom_records(7, 10), coherence_time_fs=500.0)
        assert r.verdict == "pure_22"

    def test_no_baseline(self):
        recs = [CountRecord.from_counts(d, 10, 1) for d in (-10.0, 0.0, 10.0)]
        with pytest.raises(InsufficientBaselineError):
            hom_dip_ratio(recs, coherence_time_fs=500.0)

    def test_empty_dip(self):
        with pytest.raises(NoSignalError):
            hom_dip_ratio(hom_records(0, 10), coherence_time_fs=500.0)


class TestCalibration:
    def test_bisection_hits_target(self):
        scan = ScanConfig(tuple(GRID), 300.0, mode="fringe_four")
        jitter, fit = calibrate_phase_jitter(SourceModel(p33=0.0), DetectorModel(), scan, 4, 0.95, tol=1e-3)
        assert fit.visibility == pytest.approx(0.95, abs=1e-3)
        # Gaussian phase noise damps an N-fold fringe by exp(-N^2 sigma^2 / 2)
        assert jitter == pytest.approx(math.sqrt(-2 * math.log(0.95)) / 4, rel=0.05)

    def test_target_above_clean_visibility(self):
        scan = ScanConfig(tuple(GRID), 300.0, mode="fringe_four")
        with pytest.raises(FitError):
            calibrate_phase_jitter(SourceModel(), DetectorModel(), scan, 4, 0.99)


@given(st.integers(2, 50), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_scale_invariance(k, seed):
    y = np.random.default_rng(seed).poisson(fringe(1000, 0.7, 2))
    assert y.min() >= 100
    a = fit_fixed_frequency_sinusoid(FringeDataset(records(y), 2))
    b = fit_fixed_frequency_sinusoid(FringeDataset(records(k * y), 2))
    assert b.visibility == pytest.approx(a.visibility, abs=1e-6)


def test_frequency_discipline():
    y = np.random.default_rng(5).poisson(fringe(1000, 0.9, 4))
    fit = fit_fixed_frequency_sinusoid(FringeDataset(records(y), 1))
    assert fit.visibility <= 3 * fit.sigma_visibility


def test_consistency_error_shrinks_as_inverse_sqrt_counts():
    # rms error over seeds at three decades of counts: slope -1/2 in log-log
    scales = np.array([1e2, 1e3, 1e4, 1e5])
    rms = []
    for c0 in scales:
        errs = []
        for seed in range(60):
            y = np.random.default_rng(seed).poisson(fringe(c0, 0.8, 2))
            errs.append(fit_fixed_frequency_sinusoid(FringeDataset(records(y), 2)).visibility - 0.8)
        rms.append(math.sqrt(np.mean(np.square(errs))))
    slope = np.polyfit(np.log(scales), np.log(rms), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


class TestEndToEnd:
    IDEAL = DetectorModel(efficiency=1.0, number_resolving=True)

    def _fit(self, source, mode, n):
        recs = simulate_fringe_scan(source, self.IDEAL, ScanConfig(tuple(GRID), 300.0, mode=mode))
        return fit_fixed_frequency_sinusoid(FringeDataset(recs, n))

    def test_entangled_beats_sql(self):
        fit = self._fit(SourceModel(p33=0.0, distinguishability_x=0.0), "fringe_four", 4)
        assert assess(min(fit.visibility, 1.0), 4, 3 / 8).beats_sql

    def test_distinguishable_never_beats_sql(self):
        fit = self._fit(SourceModel(p33=0.0, distinguishability_x=1.0), "fringe_four", 4)
        assert fit.visibility > 0.95
        assert not assess(min(fit.visibility, 1.0), 4, 1 / 8).beats_sql
