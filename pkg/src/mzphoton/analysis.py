"""Visibility fits and HOM dip ratios from count records."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .simulator import CountRecord, DetectorModel, ScanConfig, SourceModel, simulate_fringe_scan


class FitError(ValueError):
    pass


class IllConditionedFitError(FitError):
    pass


class NoSignalError(FitError):
    pass


class InvalidDatasetError(FitError):
    pass


class InsufficientBaselineError(FitError):
    pass


@dataclass(frozen=True)
class FringeDataset:
    """Count records whose ``setting`` is the interferometer phase in radians."""

    records: tuple[CountRecord, ...]
    n_fold: int
    setting_kind: str = "phase"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.n_fold < 1:
            raise InvalidDatasetError("n_fold must be >= 1")
        if len(self.records) < 5:
            raise InvalidDatasetError("need at least 5 records")
        phases = np.sort(self.phases())
        step = np.median(np.diff(phases)) if len(phases) > 1 else 0.0
        if phases[-1] - phases[0] + step < 2 * math.pi / self.n_fold * (1 - 1e-9):
            raise InvalidDatasetError("settings do not span a full fringe period")

    def phases(self) -> np.ndarray:
        return np.array([r.setting for r in self.records], dtype=float)

    def counts(self) -> np.ndarray:
        return np.array([r.counts for r in self.records], dtype=float)


@dataclass(frozen=True)
class FitResult:
    offset: float
    c1: float
    c2: float
    visibility: float
    phase_origin: float
    sigma_visibility: float
    chi_squared: float
    dof: int
    n_fold: int


@dataclass(frozen=True)
class HomResult:
    ratio: float
    sigma_ratio: float
    verdict: str
    center_delay: float
    baseline_points: int
    baseline_counts: int


def count_error(counts: int) -> float:
    if counts < 0:
        raise ValueError("counts must be non-negative")
    return math.sqrt(counts)


def fit_fixed_frequency_sinusoid(data: FringeDataset, max_iter: int = 50) -> FitResult:
    """Weighted linear fit of counts = c0 + c1 cos(N phi) + c2 sin(N phi).

    The first pass weights each point by 1/max(counts, 1). Later passes
    reweight by 1/max(model, 1) until the parameters settle, which removes
    the low-count bias of count-based weights (the fixed point is the Poisson
    maximum-likelihood solution of the same linear model). The visibility
    sqrt(c1^2 + c2^2)/c0 gets a first-order propagated error from the final
    covariance; ``phase_origin`` is the fringe minimum, i.e.
    counts = c0 (1 - V cos(N (phi - phase_origin))).
    """
    y = data.counts()
    if not np.any(y > 0):
        raise NoSignalError("all counts are zero")
    x = data.n_fold * data.phases()
    X = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
    w = 1.0 / np.maximum(y, 1.0)
    if np.linalg.cond(X * np.sqrt(w)[:, None]) > 1e10:
        raise IllConditionedFitError("design matrix is singular for these settings")
    beta = None
    for _ in range(max_iter):
        sw = np.sqrt(w)
        new, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
        done = beta is not None and np.allclose(new, beta, rtol=1e-12, atol=1e-12 * abs(new[0]))
        beta = new
        w = 1.0 / np.maximum(X @ beta, 1.0)
        if done:
            break
    A = X * np.sqrt(w)[:, None]
    cov = np.linalg.inv(A.T @ A)
    c0, c1, c2 = beta
    if c0 <= 0:
        raise NoSignalError("fitted offset is not positive")
    amp = math.hypot(c1, c2)
    vis = amp / c0
    if amp > 0:
        grad = np.array([-vis / c0, c1 / (c0 * amp), c2 / (c0 * amp)])
        var = float(grad @ cov @ grad)
    else:
        var = 0.5 * (cov[1, 1] + cov[2, 2]) / c0**2
    resid = y - X @ beta
    return FitResult(
        offset=float(c0),
        c1=float(c1),
        c2=float(c2),
        visibility=float(vis),
        phase_origin=float(math.atan2(-c2, -c1) / data.n_fold),
        sigma_visibility=math.sqrt(max(var, 0.0)),
        chi_squared=float(np.sum(w * resid**2)),
        dof=len(y) - 3,
        n_fold=data.n_fold,
    )


def hom_dip_ratio(records: Sequence[CountRecord], coherence_time_fs: Optional[float] = None) -> HomResult:
    """Coincidence ratio C(delay nearest 0) / mean C(|delay| > 3 coherence times)."""
    if coherence_time_fs is None:
        coherence_time_fs = SourceModel().coherence_time_fs
    if not records:
        raise InsufficientBaselineError("no records")
    center = min(records, key=lambda r: abs(r.setting))
    baseline = [r for r in records if abs(r.setting) > 3 * coherence_time_fs]
    if not baseline:
        raise InsufficientBaselineError("no records beyond three coherence times")
    total = sum(r.counts for r in baseline)
    if center.counts == 0 or total == 0:
        raise NoSignalError("zero counts at the dip or in the baseline")
    ratio = center.counts / (total / len(baseline))
    sigma = ratio * math.sqrt(1 / center.counts + 1 / total)
    band = 3 * sigma
    if abs(ratio - 2 / 3) <= band and abs(ratio - 4 / 3) <= band:
        verdict = "pure_22" if abs(ratio - 2 / 3) < abs(ratio - 4 / 3) else "pure_1111"
    elif abs(ratio - 2 / 3) <= band:
        verdict = "pure_22"
    elif abs(ratio - 4 / 3) <= band:
        verdict = "pure_1111"
    elif 2 / 3 + band < ratio < 4 / 3 - band:
        verdict = "mixture"
    else:
        verdict = "inconclusive"
    return HomResult(ratio, sigma, verdict, center.setting, len(baseline), total)


def calibrate_phase_jitter(
    source: SourceModel,
    detector: DetectorModel,
    scan: ScanConfig,
    n_fold: int,
    target: float,
    upper: float = 1.0,
    tol: float = 1e-4,
    max_iter: int = 60,
) -> tuple[float, FitResult]:
    """Bisect ``phase_jitter`` until the fitted visibility of the simulated scan hits ``target``.

    The seed is held fixed, so every evaluation reuses the same random
    stream and the fitted visibility is a (nearly) monotone function of the
    jitter.
    """
    def fit_at(jitter: float) -> FitResult:
        records = simulate_fringe_scan(source, detector, replace(scan, phase_jitter=jitter))
        return fit_fixed_frequency_sinusoid(FringeDataset(records, n_fold))

    lo, hi = 0.0, upper
    fit_lo = fit_at(lo)
    if fit_lo.visibility < target:
        raise FitError(f"unperturbed visibility {fit_lo.visibility:.4f} already below target")
    if fit_at(hi).visibility > target:
        raise FitError("upper jitter bound does not bring visibility below target")
    best = (lo, fit_lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fit = fit_at(mid)
        best = (mid, fit)
        if abs(fit.visibility - target) < tol or hi - lo < 1e-9:
            break
        if fit.visibility > target:
            lo = mid
        else:
            hi = mid
    return best
