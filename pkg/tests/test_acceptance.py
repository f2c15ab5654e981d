"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Tolerances and runtime budgets are the stated ones; none is relaxed here.
"""

import io
import math
import os
import time

import numpy as np
import pytest

from mzphoton import fock
from mzphoton.analysis import FringeDataset, calibrate_phase_jitter, fit_fixed_frequency_sinusoid, hom_dip_ratio
from mzphoton.cli import main
from mzphoton.fock import FockState, ModeId, apply_beamsplitter, apply_unitary, occupations, outcome_probability, transition_amplitude_oracle
from mzphoton.interferometer import SUPPORTED_CASES, analytic_fringe_model, fringe_probability
from mzphoton.metrology import assess, fisher_precision_oracle, visibility_threshold
from mzphoton.simulator import CountRecord, DetectorModel, ScanConfig, SourceModel, simulate_hom_scan

GRID_1024 = 2 * math.pi * np.arange(1024) / 1024


def test_criterion_1_two_two_beamsplitter(report):
    fock._bs_transfer.cache_clear()
    t0 = time.perf_counter()
    out = apply_beamsplitter(FockState.basis({"a": 2, "b": 2}), ("a", "b"), 0.5)
    elapsed = time.perf_counter() - t0
    # order: |40>,|04> , |22>, |31>, |13>
    got = [abs(out.amplitude(o)) for o in ({"a": 4, "b": 0}, {"a": 0, "b": 4}, {"a": 2, "b": 2}, {"a": 3, "b": 1}, {"a": 1, "b": 3})]
    want = [math.sqrt(3 / 8), math.sqrt(3 / 8), 0.5, 0.0, 0.0]
    err = max(abs(g - w) for g, w in zip(got, want))
    ok = report(1, "|2,2> at T=1/2", err <= 1e-12 and elapsed < 1e-3, f"max err {err:.1e}", elapsed)
    assert ok


def test_criterion_2_fringe_formulas(report):
    formulas = {
        ("10", "1e"): lambda p: (1 - np.cos(p)) / 2,
        ("11", "1e1f"): lambda p: (1 - np.cos(2 * p)) / 2,
        ("22", "3e1f"): lambda p: 3 / 8 * (1 - np.cos(4 * p)) / 2,
        ("11d", "2e"): lambda p: 1 / 4 * (1 - np.cos(2 * p)) / 2,
        ("1111", "3e1f"): lambda p: 1 / 8 * (1 - np.cos(4 * p)) / 2,
    }
    t0 = time.perf_counter()
    errors = {}
    for case, formula in formulas.items():
        exact = np.array([fringe_probability(*case, phi) for phi in GRID_1024])
        errors[case] = float(np.max(np.abs(exact - formula(GRID_1024))))
    elapsed = time.perf_counter() - t0
    failing = [f"{i}/{p}" for (i, p), e in errors.items() if e > 1e-12]
    detail = ", ".join(f"{i}/{p} {e:.1e}" for (i, p), e in errors.items())
    ok = report(2, "exact fringes vs closed forms", not failing and elapsed < 1.0, detail, elapsed)
    assert ok, f"cases off formula: {failing}"


def test_criterion_3_thresholds(report):
    t0 = time.perf_counter()
    checks = [
        abs(visibility_threshold(2, 1.0) - 1 / math.sqrt(2)) <= 1e-12,
        abs(visibility_threshold(4, 3 / 8) - math.sqrt(2 / 3)) <= 1e-12,
        abs(visibility_threshold(4, 1 / 8) - math.sqrt(2)) <= 1e-12,
        assess(0.91, 4, 3 / 8).beats_sql is True,
        assess(0.87, 4, 1 / 8).beats_sql is False,
    ]
    elapsed = time.perf_counter() - t0
    ok = report(3, "SQL thresholds and verdicts", all(checks), f"{sum(checks)}/5 checks", elapsed)
    assert ok


def _hom(state):
    tags = sorted({m.temporal for m in state.modes})
    st = state.extended(ModeId(s, t) for t in tags for s in ("a", "b"))
    for t in tags:
        st = apply_beamsplitter(st, (ModeId("a", t), ModeId("b", t)), 0.5, out=(ModeId("c", t), ModeId("d", t)))
    return outcome_probability(st, {"c": 2, "d": 2}, aggregate_temporal=True)


def test_criterion_4_hom_probabilities(report):
    t0 = time.perf_counter()
    p22 = _hom(FockState.basis({"a": 2, "b": 2}))
    p1111 = _hom(FockState.basis({ModeId("a", 0): 1, ModeId("b", 0): 1, ModeId("a", 1): 1, ModeId("b", 1): 1}))
    p_ref = _hom(FockState.basis({ModeId("a", 0): 1, ModeId("b", 1): 1, ModeId("a", 2): 1, ModeId("b", 3): 1}))
    exact_ok = abs(p22 - 1 / 4) <= 1e-12 and abs(p1111 - 1 / 2) <= 1e-12 and abs(p_ref - 3 / 8) <= 1e-12

    delays = np.linspace(-3000.0, 3000.0, 25)
    sims = {}
    for x, target in ((0.0, 2 / 3), (1.0, 4 / 3)):
        recs = simulate_hom_scan(SourceModel(p33=0.0, distinguishability_x=x), DetectorModel(), delays, 300.0)
        res = hom_dip_ratio(recs)
        sims[x] = (res, target)
    elapsed = time.perf_counter() - t0
    sim_ok = all(abs(r.ratio - t) <= 3 * r.sigma_ratio and r.baseline_counts >= 10**4 for r, t in sims.values())
    detail = (
        f"P=({p22:.12f}, {p1111:.12f}, {p_ref:.12f}); "
        + ", ".join(f"ratio {r.ratio:.4f}+-{r.sigma_ratio:.4f} vs {t:.4f} [{r.baseline_counts} baseline]" for r, t in sims.values())
    )
    ok = report(4, "HOM probabilities and dip ratios", exact_ok and sim_ok and elapsed < 30, detail, elapsed)
    assert ok


def _random_unitary(n, rng):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_criterion_5_oracle_equivalence(report):
    # Four modes: both spatial inputs in two temporal bins.
    modes = (ModeId("a", 0), ModeId("b", 0), ModeId("a", 1), ModeId("b", 1))
    rng = np.random.default_rng(20240)
    t0 = time.perf_counter()
    worst, pairs = 0.0, 0
    for _ in range(100):
        U = fock._check_unitary(_random_unitary(4, rng))
        for n in range(5):
            occs = occupations(4, n)
            for occ_in in occs:
                out = apply_unitary(FockState(modes, {occ_in: 1.0}), U)
                for occ_out in occs:
                    amp = transition_amplitude_oracle(U, occ_in, occ_out, check=False)
                    worst = max(worst, abs(out.amplitudes.get(occ_out, 0j) - amp))
                    pairs += 1
    elapsed = time.perf_counter() - t0
    ok = report(5, "permanent oracle vs operator expansion", worst <= 1e-10 and elapsed < 10, f"{pairs} pairs, max err {worst:.1e}", elapsed)
    assert ok


def test_criterion_6_statistical_recovery(report):
    phases = 2 * math.pi * np.arange(32) / 32
    n_fold, c0 = 4, 200.0
    t0 = time.perf_counter()
    hits = {}
    for v in (1.0, 0.91, 0.87):
        mean = c0 * (1 - v * np.cos(n_fold * phases))
        good = 0
        for seed in range(100):
            counts = np.random.default_rng(seed).poisson(mean)
            recs = [CountRecord.from_counts(p, c, 1) for p, c in zip(phases, counts)]
            fit = fit_fixed_frequency_sinusoid(FringeDataset(recs, n_fold))
            good += abs(fit.visibility - v) <= 3 * fit.sigma_visibility
        hits[v] = good
    elapsed = time.perf_counter() - t0
    ok = report(6, "fit recovers V within 3 sigma", all(h >= 99 for h in hits.values()) and elapsed < 60, ", ".join(f"V={v}: {h}/100" for v, h in hits.items()), elapsed)
    assert ok


def test_criterion_7_fisher_oracle(report):
    t0 = time.perf_counter()
    rel = {}
    for case in SUPPORTED_CASES:
        m = analytic_fringe_model(*case)
        _, dphi = fisher_precision_oracle(m)
        rel[case] = abs(dphi * m.n_fold * math.sqrt(m.eta_i) - 1)
    elapsed = time.perf_counter() - t0
    ok = report(7, "Fisher minimum equals 1/(N sqrt(eta))", max(rel.values()) <= 0.01, f"max rel dev {max(rel.values()):.1e}", elapsed)
    assert ok


def test_criterion_8_noise_knob(report):
    scan = ScanConfig(tuple(2 * math.pi * np.arange(32) / 32), 300.0, mode="fringe_four")
    t0 = time.perf_counter()
    # A pure double-pair source has V ~ 1; Gaussian phase jitter is the knob.
    jitter, fit = calibrate_phase_jitter(SourceModel(p33=0.0), DetectorModel(), scan, 4, 0.91, tol=1e-3)
    verdict = assess(min(fit.visibility, 1.0), 4, 3 / 8)
    elapsed = time.perf_counter() - t0
    ok = report(
        8,
        "noise knob reaches V=0.91 and beats the SQL",
        abs(fit.visibility - 0.91) <= 0.01 and verdict.beats_sql,
        f"jitter {jitter:.4f} rad, V={fit.visibility:.4f}+-{fit.sigma_visibility:.4f}, beats_sql={verdict.beats_sql}",
        elapsed,
    )
    assert ok


def _tree(path):
    return {name: open(os.path.join(path, name), "rb").read() for name in sorted(os.listdir(path))}


def test_criterion_9_demo_determinism(report, tmp_path):
    t0 = time.perf_counter()
    runs = []
    for i, workers in enumerate((1, 1, 4)):
        out = tmp_path / f"run{i}"
        assert main(["demo", "--out-dir", str(out), "--workers", str(workers)], io.StringIO(), io.StringIO()) == 0
        runs.append(_tree(out))
    elapsed = time.perf_counter() - t0
    same = runs[0] == runs[1] == runs[2]
    ok = report(9, "demo byte-identical across runs and threads", same, f"{len(runs[0])} files x 3 runs", elapsed)
    assert ok
