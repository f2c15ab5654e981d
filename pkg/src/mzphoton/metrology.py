"""Phase-sensitivity criteria: SQL, Heisenberg limit, threshold visibility."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interferometer import FringeModel


class MetrologyDomainError(ValueError):
    pass


class NoSensitivityError(ValueError):
    pass


@dataclass(frozen=True)
class SensitivityReport:
    n: int
    eta_i: float
    visibility: float
    v_threshold: float
    precision: float
    sql_limit: float
    heisenberg_limit: float
    beats_sql: bool
    margin: float


def _check_n(n: int) -> None:
    if n < 1:
        raise MetrologyDomainError(f"photon number must be >= 1, got {n}")


def limits(n: int) -> tuple[float, float]:
    """(standard quantum limit, Heisenberg limit) for ``n`` photons."""
    _check_n(n)
    return 1 / math.sqrt(n), 1 / n


def fringe_precision(v: float, n: int) -> float:
    """Phase precision 1/(V N) of an N-fold fringe with visibility V."""
    _check_n(n)
    if not 0.0 < v <= 1.0:
        raise MetrologyDomainError(f"visibility must lie in (0, 1], got {v}")
    return 1 / (v * n)


def visibility_threshold(n: int, eta_i: float) -> float:
    """Visibility above which the SQL is beaten; values above 1 mean never."""
    _check_n(n)
    if not 0.0 < eta_i <= 1.0:
        raise MetrologyDomainError(f"eta_i must lie in (0, 1], got {eta_i}")
    return 1 / math.sqrt(eta_i * n)


def assess(v: float, n: int, eta_i: float) -> SensitivityReport:
    v_th = visibility_threshold(n, eta_i)
    sql, heisenberg = limits(n)
    return SensitivityReport(
        n=n,
        eta_i=eta_i,
        visibility=v,
        v_threshold=v_th,
        precision=fringe_precision(v, n),
        sql_limit=sql,
        heisenberg_limit=heisenberg,
        beats_sql=v > v_th,
        margin=v - v_th,
    )


def fisher_precision_oracle(model: FringeModel, trials: int = 1, grid_points: int = 4096) -> tuple[float, float]:
    """Best single-parameter Bernoulli phase uncertainty over one fringe period.

    Each trial succeeds with probability p(phi) from ``model``; the
    uncertainty at phi is sqrt(p (1 - p) / trials) / |dp/dphi|. Grid points
    with |dp/dphi| < 1e-9 are skipped.

    Returns:
        (phi_star, dphi): minimizing phase and the minimum uncertainty.
    """
    if trials < 1:
        raise MetrologyDomainError("trials must be >= 1")
    if model.visibility == 0:
        raise NoSensitivityError("zero visibility carries no phase information")
    period = 2 * math.pi / model.n_fold
    phi = model.phase_origin + period * np.arange(grid_points) / grid_points
    p = model.probability(phi)
    dp = np.abs(model.derivative(phi))
    ok = dp >= 1e-9
    if not ok.any():
        raise NoSensitivityError("fringe derivative vanishes on the whole grid")
    dphi = np.sqrt(p[ok] * (1 - p[ok])) / dp[ok]
    k = int(np.argmin(dphi))
    return float(phi[ok][k]), float(dphi[k] / math.sqrt(trials))
