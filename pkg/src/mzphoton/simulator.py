"""Seeded Monte Carlo of the pulsed four-photon experiments.

Per pulse the source emits nothing, |11>, |22> or |33> (at most one class).
Emissions are pushed through the exact interferometer, an outcome is sampled
and the detectors (SPCMs, a cascade of them in mode e) decide whether the
event matches the coincidence pattern of the scan mode.

Counting is done in aggregate: the number of events per emission class and
per exact outcome is drawn with multinomials, and the number of those that
survive detection with a binomial whose success probability is the exact
detector response (:func:`pattern_distribution`). This is distributionally
identical to calling :func:`detect` once per event, which the tests verify.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .fock import FockState, ModeId, apply_beamsplitter
from .interferometer import input_state, outcome_spectrum

C_UM_PER_FS = 0.299792458
DEFAULT_SEED = 78013

FRINGE_MODES = ("fringe_single", "fringe_two", "fringe_four", "fringe_dist_two", "fringe_dist_four")
SCAN_MODES = FRINGE_MODES + ("hom_delay",)

# fringe mode -> (input tag, pattern tag) of the interferometer module
MODE_CASES = {
    "fringe_single": ("10", "1e"),
    "fringe_two": ("11", "1e1f"),
    "fringe_four": ("22", "3e1f"),
    "fringe_dist_two": ("11d", "2e"),
    "fringe_dist_four": ("1111", "3e1f"),
}


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SourceModel:
    """Pulsed down-conversion source; defaults are the quoted apparatus values."""

    p11: float = 1.7e-2
    p22: float = 2.8e-4
    p33: float = 4.7e-6
    repetition_interval_ns: float = 13.0
    coherence_length_um: float = 150.0
    wavelength_nm: float = 780.0
    distinguishability_x: float = 0.0

    def __post_init__(self):
        for name in ("p11", "p22", "p33"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if self.p11 + self.p22 + self.p33 > 1.0:
            raise ConfigurationError("emission probabilities sum above 1")
        if not 0.0 <= self.distinguishability_x <= 1.0:
            raise ConfigurationError("distinguishability_x must lie in [0, 1]")
        for name in ("repetition_interval_ns", "coherence_length_um", "wavelength_nm"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")

    @property
    def coherence_time_fs(self) -> float:
        return self.coherence_length_um / C_UM_PER_FS


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.6
    cascade_fanout: int = 3
    number_resolving: bool = False
    dark_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigurationError("efficiency must lie in [0, 1]")
        if int(self.cascade_fanout) != self.cascade_fanout or self.cascade_fanout < 1:
            raise ConfigurationError("cascade_fanout must be an integer >= 1")
        if not 0.0 <= self.dark_rate <= 1.0:
            raise ConfigurationError("dark_rate must lie in [0, 1]")


@dataclass(frozen=True)
class PhasePlate:
    thickness_mm: float = 1.0
    refractive_index: float = 1.5
    wavelength_nm: float = 780.0

    def __post_init__(self):
        if self.thickness_mm <= 0 or self.wavelength_nm <= 0:
            raise ConfigurationError("plate thickness and wavelength must be positive")
        if self.refractive_index < 1:
            raise ConfigurationError("refractive_index must be >= 1")


@dataclass(frozen=True)
class ScanConfig:
    """One scan: phases (rad), plate angles (deg) or, for hom_delay, delays (fs).

    ``phase_jitter`` is the standard deviation (rad) of a Gaussian phase
    fluctuation per pulse; it is the knob used to model apparatus noise.
    """

    settings: tuple[float, ...]
    accumulation_time: float
    seed: int = DEFAULT_SEED
    mode: str = "fringe_four"
    setting_kind: str = "phase"
    plate: Optional[PhasePlate] = None
    phase_jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(float(s) for s in self.settings))
        if not self.settings:
            raise ConfigurationError("settings must be non-empty")
        if not self.accumulation_time > 0:
            raise ConfigurationError("accumulation_time must be positive")
        if self.mode not in SCAN_MODES:
            raise ConfigurationError(f"unknown scan mode {self.mode!r}")
        if self.setting_kind not in ("phase", "plate_angle"):
            raise ConfigurationError("setting_kind must be 'phase' or 'plate_angle'")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.phase_jitter < 0:
            raise ConfigurationError("phase_jitter must be non-negative")


@dataclass(frozen=True)
class CountRecord:
    setting: float
    counts: int
    error: float
    pulses: int
    angle_deg: Optional[float] = None

    @classmethod
    def from_counts(cls, setting: float, counts: int, pulses: int, angle_deg: Optional[float] = None) -> "CountRecord":
        return cls(float(setting), int(counts), math.sqrt(counts), int(pulses), angle_deg)


def overlap_factor(delta_t_fs: float, source: SourceModel) -> float:
    """Distinguishing factor of an arm delay: 0 at perfect overlap, -> 1 far out.

    Gaussian model in c * delta_t / coherence_length.
    """
    u = C_UM_PER_FS * delta_t_fs / source.coherence_length_um
    return -math.expm1(-(u * u))


def phase_from_plate_angle(theta_deg: float, plate: PhasePlate) -> float:
    """Extra phase from tilting a plate by ``theta_deg``, zero at normal incidence."""
    if not abs(theta_deg) < 90:
        raise ConfigurationError("plate angle must satisfy |theta| < 90 deg")
    th = math.radians(theta_deg)
    n = plate.refractive_index
    k_d = 2 * math.pi * plate.thickness_mm * 1e6 / plate.wavelength_nm
    # sqrt(n^2 - s^2) - cos(th) - (n - 1), rearranged to avoid cancellation
    s2 = math.sin(th) ** 2
    root = math.sqrt(n * n - s2)
    return k_d * (-s2 / (root + n) + 2 * math.sin(th / 2) ** 2)


def pulses_for(accumulation_time: float, repetition_interval_ns: float) -> int:
    return math.floor(Fraction(accumulation_time) * 10**9 / Fraction(repetition_interval_ns))


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for scan point ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), index])))


# -- detection ---------------------------------------------------------------


@dataclass(frozen=True)
class ObservedPattern:
    """Clicks per output: distinct SPCMs fired, or photon counts if resolving."""

    e: int
    f: int


def _stirling2(n: int, k: int) -> int:
    return _stirling_table(n)[k] if k <= n else 0


@lru_cache(maxsize=None)
def _stirling_table(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling_table(n - 1)
    row = [0] * (n + 1)
    for k in range(1, n + 1):
        row[k] = k * (prev[k] if k < len(prev) else 0) + prev[k - 1]
    return tuple(row)


@lru_cache(maxsize=None)
def click_distribution(n: int, efficiency: float, fanout: int, number_resolving: bool, dark_rate: float) -> dict[int, float]:
    """Exact distribution of the reading of one output port holding ``n`` photons."""
    out: dict[int, float] = {}
    for s in range(n + 1):
        ps = math.comb(n, s) * efficiency**s * (1 - efficiency) ** (n - s)
        if ps == 0:
            continue
        if number_resolving:
            base = {s: 1.0}
            spare = fanout
        else:
            base = {
                j: math.comb(fanout, j) * math.factorial(j) * _stirling2(s, j) / fanout**s
                for j in range(min(s, fanout) + 1)
            }
            spare = None
        for j, pj in base.items():
            if pj == 0:
                continue
            free = spare if spare is not None else fanout - j
            for k in range(free + 1):
                pk = math.comb(free, k) * dark_rate**k * (1 - dark_rate) ** (free - k)
                if pk:
                    out[j + k] = out.get(j + k, 0.0) + ps * pj * pk
    return out


def pattern_distribution(n_e: int, n_f: int, detector: DetectorModel, f_fanout: int = 1) -> dict[tuple[int, int], float]:
    pe = click_distribution(n_e, detector.efficiency, detector.cascade_fanout, detector.number_resolving, detector.dark_rate)
    pf = click_distribution(n_f, detector.efficiency, f_fanout, detector.number_resolving, detector.dark_rate)
    return {(e, f): a * b for e, a in pe.items() for f, b in pf.items()}


def _port_reading(n, fanout: int, detector: DetectorModel, rng: np.random.Generator):
    n = np.asarray(n, dtype=np.int64)
    survivors = rng.binomial(n, detector.efficiency)
    if detector.number_resolving:
        clicks = survivors
        if detector.dark_rate > 0:
            clicks = clicks + rng.binomial(fanout, detector.dark_rate, size=n.shape)
        return clicks
    hits = rng.multinomial(survivors, [1 / fanout] * fanout)
    fired = hits > 0
    if detector.dark_rate > 0:
        fired |= rng.random(fired.shape) < detector.dark_rate
    return fired.sum(axis=-1)


def detect(photons: tuple, detector: DetectorModel, rng: np.random.Generator, f_fanout: int = 1) -> ObservedPattern:
    """Sample the detector reading for (n_e, n_f) photons at the outputs.

    Each photon survives with probability ``efficiency``; survivors in e are
    spread uniformly over ``cascade_fanout`` SPCMs and the reading is the
    number of distinct SPCMs that fired. Accepts arrays for batch sampling.
    """
    n_e, n_f = photons
    if np.any(np.asarray(n_e) < 0) or np.any(np.asarray(n_f) < 0):
        raise ValueError("photon numbers must be non-negative")
    e = _port_reading(n_e, detector.cascade_fanout, detector, rng)
    f = _port_reading(n_f, f_fanout, detector, rng)
    if np.ndim(e) == 0:
        return ObservedPattern(int(e), int(f))
    return ObservedPattern(e, f)


# -- scan modes --------------------------------------------------------------

Bins = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class _Rule:
    gated: bool                     # per-temporal-bin readings (else summed)
    match: Callable[..., bool]      # takes one ObservedPattern per bin
    out_labels: tuple[str, str] = ("e", "f")
    f_fanout_cascade: bool = False  # both outputs carry a cascade (HOM)


def _rule(mode: str, resolving: bool) -> _Rule:
    if mode == "fringe_single":
        return _Rule(False, lambda p: p.e >= 1)
    if mode == "fringe_two":
        return _Rule(False, lambda p: p.e >= 1 and p.f >= 1)
    if mode == "fringe_four":
        return _Rule(False, lambda p: p.e == 3 and p.f == 1)
    if mode == "fringe_dist_two":
        if resolving:
            return _Rule(True, lambda p0, p1: p0.e == 1 and p1.e == 1)
        return _Rule(True, lambda p0, p1: p0.e >= 1 and p1.e >= 1)
    if mode == "fringe_dist_four":
        return _Rule(True, lambda p0, p1: (p0.e, p0.f) == (2, 0) and (p1.e, p1.f) == (1, 1))
    if mode == "hom_delay":
        if resolving:
            return _Rule(False, lambda p: p.e == 2 and p.f == 2, ("c", "d"), True)
        return _Rule(False, lambda p: p.e >= 2 and p.f >= 2, ("c", "d"), True)
    raise ConfigurationError(f"unknown scan mode {mode!r}")


def _pair_state(n: int, tag_a: int = 0, tag_b: int = 0) -> FockState:
    return FockState.basis({ModeId("a", tag_a): n, ModeId("b", tag_b): n})


def _emission_inputs(mode: str, n_pairs: int, source: SourceModel) -> list[tuple[float, FockState]]:
    """Input-state mixture fed to the interferometer for one emission class."""
    x = source.distinguishability_x
    if mode == "fringe_single":
        # Heralded single photons: only the |11> class is used, b is blocked.
        return [(1.0, input_state("10"))] if n_pairs == 1 else []
    if mode == "fringe_dist_two":
        return [(1.0, _pair_state(n_pairs, 0, 1))]
    if mode == "fringe_dist_four":
        return [(1.0, input_state("1111") if n_pairs == 2 else _pair_state(n_pairs))]
    if n_pairs == 2:
        return [(w, s) for w, s in ((1 - x, input_state("22")), (x, input_state("1111"))) if w > 0]
    return [(1.0, _pair_state(n_pairs))]


def _hom_inputs(n_pairs: int, source: SourceModel, separated: float) -> list[tuple[float, FockState]]:
    x = source.distinguishability_x
    together = 1 - separated
    out = []
    if n_pairs == 2:
        out += [(together * (1 - x), input_state("22")), (together * x, input_state("1111"))]
    else:
        out.append((together, _pair_state(n_pairs)))
    # A delayed arm shares no temporal mode with the other; photons in one
    # input port split binomially whether or not they are mutually
    # distinguishable, so the aggregated statistics need only two tags.
    out.append((separated, _pair_state(n_pairs, 1, 0)))
    return [(w, s) for w, s in out if w > 0]


_HOM_CACHE: dict = {}


def _hom_table(state: FockState) -> tuple[tuple[ModeId, ...], list, np.ndarray]:
    key = (state.modes, tuple(sorted(state.amplitudes.items())))
    hit = _HOM_CACHE.get(key)
    if hit is None:
        tags = sorted({m.temporal for m in state.modes})
        st = state.extended(ModeId(s, t) for t in tags for s in ("a", "b"))
        for t in tags:
            st = apply_beamsplitter(st, (ModeId("a", t), ModeId("b", t)), 0.5, out=(ModeId("c", t), ModeId("d", t)))
        outcomes = sorted(st.amplitudes)
        probs = np.array([abs(st.amplitudes[o]) ** 2 for o in outcomes])
        hit = _HOM_CACHE[key] = (st.modes, outcomes, probs)
    return hit


def _bins(modes: Sequence[ModeId], occ: Sequence[int], rule: _Rule) -> Bins:
    ce, cf = rule.out_labels
    if not rule.gated:
        ne = sum(n for m, n in zip(modes, occ) if m.spatial == ce)
        nf = sum(n for m, n in zip(modes, occ) if m.spatial == cf)
        return ((ne, nf),)
    per = {0: [0, 0], 1: [0, 0]}
    for m, n in zip(modes, occ):
        per.setdefault(m.temporal, [0, 0])[0 if m.spatial == ce else 1] += n
    return tuple((per[t][0], per[t][1]) for t in sorted(per))


def _match_probability(bins: Bins, detector: DetectorModel, rule: _Rule) -> float:
    f_fanout = detector.cascade_fanout if rule.f_fanout_cascade else 1
    dists = [pattern_distribution(ne, nf, detector, f_fanout) for ne, nf in bins]
    total = 0.0
    if len(dists) == 1:
        for (e, f), p in dists[0].items():
            if rule.match(ObservedPattern(e, f)):
                total += p
    else:
        for (e0, f0), p0 in dists[0].items():
            for (e1, f1), p1 in dists[1].items():
                if rule.match(ObservedPattern(e0, f0), ObservedPattern(e1, f1)):
                    total += p0 * p1
    return total


def _vacuum_bins(rule: _Rule) -> Bins:
    return ((0, 0), (0, 0)) if rule.gated else ((0, 0),)


class _Point:
    """Everything needed to evaluate one scan point (fringe or HOM)."""

    def __init__(self, mode: str, source: SourceModel, detector: DetectorModel, phi: float = 0.0, jitter: float = 0.0, delay_fs: float = 0.0):
        self.mode = mode
        self.source = source
        self.detector = detector
        self.phi = phi
        self.jitter = jitter
        self.rule = _rule(mode, detector.number_resolving)
        self.separated = overlap_factor(delay_fs, source) if mode == "hom_delay" else 0.0
        self._q: dict[Bins, float] = {}

    def classes(self) -> list[tuple[int, float]]:
        s = self.source
        return [(0, 1 - s.p11 - s.p22 - s.p33), (1, s.p11), (2, s.p22), (3, s.p33)]

    def inputs(self, n_pairs: int) -> list[tuple[float, Optional[FockState]]]:
        if n_pairs == 0:
            return [(1.0, None)] if self.detector.dark_rate > 0 else []
        if self.mode == "hom_delay":
            return _hom_inputs(n_pairs, self.source, self.separated)
        return _emission_inputs(self.mode, n_pairs, self.source)

    def outcome_table(self, state: FockState) -> tuple[list[Bins], np.ndarray]:
        if self.mode == "hom_delay":
            modes, outcomes, probs = _hom_table(state)
        else:
            spec = outcome_spectrum(state)
            modes, outcomes = spec.modes, spec.outcomes
            probs = spec.probabilities(self.phi, self.jitter)
        return [_bins(modes, o, self.rule) for o in outcomes], probs

    def q(self, bins: Bins) -> float:
        if bins not in self._q:
            self._q[bins] = _match_probability(bins, self.detector, self.rule)
        return self._q[bins]

    def expected_probability(self) -> float:
        """Direct summation of the per-pulse coincidence probability."""
        total = 0.0
        for n_pairs, p_cls in self.classes():
            for w, state in self.inputs(n_pairs):
                if state is None:
                    total += p_cls * w * self.q(_vacuum_bins(self.rule))
                    continue
                bins, probs = self.outcome_table(state)
                total += p_cls * w * sum(p * self.q(b) for b, p in zip(bins, probs))
        return total

    def sample(self, pulses: int, rng: np.random.Generator) -> int:
        cls = self.classes()
        p = np.array([c[1] for c in cls])
        n_cls = rng.multinomial(pulses, p / p.sum())
        counts = 0
        for (n_pairs, _), n in zip(cls, n_cls):
            comps = self.inputs(n_pairs)
            if n == 0 or not comps:
                continue
            w = np.array([c[0] for c in comps])
            for (_, state), k in zip(comps, rng.multinomial(n, w / w.sum())):
                if k == 0:
                    continue
                if state is None:
                    counts += int(rng.binomial(k, self.q(_vacuum_bins(self.rule))))
                    continue
                bins, probs = self.outcome_table(state)
                for b, k_o in zip(bins, rng.multinomial(k, probs / probs.sum())):
                    if k_o:
                        q = self.q(b)
                        if q > 0:
                            counts += int(rng.binomial(k_o, q))
        return counts


def _resolve_setting(scan: ScanConfig, value: float) -> tuple[float, Optional[float]]:
    if scan.setting_kind == "plate_angle":
        return phase_from_plate_angle(value, scan.plate or PhasePlate()), value
    return value, None


def expected_event_probability(source: SourceModel, detector: DetectorModel, mode: str, phi: float = 0.0, phase_jitter: float = 0.0, delay_fs: float = 0.0) -> float:
    """Exact per-pulse probability of a counted event (independent of sampling)."""
    if mode not in SCAN_MODES:
        raise ConfigurationError(f"unknown scan mode {mode!r}")
    return _Point(mode, source, detector, phi, phase_jitter, delay_fs).expected_probability()


def _run_points(fn, n: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def simulate_fringe_scan(source: SourceModel, detector: DetectorModel, scan: ScanConfig, workers: int = 1) -> list[CountRecord]:
    """Simulate counts at every scan setting. Deterministic given ``scan.seed``."""
    if scan.mode not in FRINGE_MODES:
        raise ConfigurationError(f"{scan.mode!r} is not a fringe mode")
    pulses = pulses_for(scan.accumulation_time, source.repetition_interval_ns)

    def one(i: int) -> CountRecord:
        phi, angle = _resolve_setting(scan, scan.settings[i])
        point = _Point(scan.mode, source, detector, phi, scan.phase_jitter)
        counts = point.sample(pulses, point_rng(scan.seed, i))
        return CountRecord.from_counts(phi, counts, pulses, angle)

    return _run_points(one, len(scan.settings), workers)


def simulate_hom_scan(source: SourceModel, detector: DetectorModel, delays: Sequence[float], accumulation: float, seed: int = DEFAULT_SEED, workers: int = 1) -> list[CountRecord]:
    """Four-photon delay scan at a single 50:50 beamsplitter (delays in fs).

    Counts events with two photons registered in each output; both outputs
    carry ``cascade_fanout`` SPCMs.
    """
    delays = [float(d) for d in delays]
    if not delays:
        raise ConfigurationError("delays must be non-empty")
    if not accumulation > 0:
        raise ConfigurationError("accumulation must be positive")
    pulses = pulses_for(accumulation, source.repetition_interval_ns)

    def one(i: int) -> CountRecord:
        point = _Point("hom_delay", source, detector, delay_fs=delays[i])
        return CountRecord.from_counts(delays[i], point.sample(pulses, point_rng(seed, i)), pulses)

    return _run_points(one, len(delays), workers)


def simulate(source: SourceModel, detector: DetectorModel, scan: ScanConfig, workers: int = 1) -> list[CountRecord]:
    if scan.mode == "hom_delay":
        return simulate_hom_scan(source, detector, scan.settings, scan.accumulation_time, scan.seed, workers)
    return simulate_fringe_scan(source, detector, scan, workers)
