"""Bosonic Fock-state algebra over labeled optical modes.

States are sparse maps from occupation tuples to complex amplitudes. Linear
optical elements act through creation-operator substitution; an independent
permanent formula (:func:`transition_amplitude_oracle`) cross-checks them.

Beamsplitter convention (symmetric, reflection picks up a factor i)::

    a+ -> sqrt(T) c+ + i sqrt(1-T) d+
    b+ -> i sqrt(1-T) c+ + sqrt(T) d+

With this choice |11> -> (|20> + |02>) i/sqrt(2) and |22> reproduces the
NOON-plus-|22> superposition with all relative signs positive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

SPATIAL_LABELS = ("a", "b", "c", "d", "e", "f")
PRUNE_THRESHOLD = 1e-15

Occupation = tuple[int, ...]


class FockError(ValueError):
    """Base class for Fock-algebra errors."""


class ModeNotFoundError(FockError, KeyError):
    pass


class InvalidElementError(FockError):
    pass


class ModeCollisionError(FockError):
    pass


class InvalidUnitaryError(FockError):
    pass


@dataclass(frozen=True, order=True)
class ModeId:
    """An optical mode: spatial label plus temporal tag (0 = t, 1 = t')."""

    temporal: int
    spatial: str

    def __init__(self, spatial: str, temporal: int = 0):
        if spatial not in SPATIAL_LABELS:
            raise FockError(f"unknown spatial label {spatial!r}")
        if temporal < 0:
            raise FockError("temporal tag must be non-negative")
        object.__setattr__(self, "spatial", spatial)
        object.__setattr__(self, "temporal", int(temporal))

    def __repr__(self) -> str:
        return f"ModeId({self.spatial!r}, {self.temporal})"

    def __str__(self) -> str:
        return self.spatial + "'" * self.temporal


ModeLike = Union[ModeId, str]


def as_mode(m: ModeLike) -> ModeId:
    if isinstance(m, ModeId):
        return m
    # "a" -> (a, 0); "a'" -> (a, 1)
    return ModeId(m[0], m.count("'"))


@dataclass(frozen=True, eq=False)
class FockState:
    """Pure multimode Fock state with modes kept in canonical (sorted) order."""

    modes: tuple[ModeId, ...]
    amplitudes: Mapping[Occupation, complex] = field(repr=False)

    def __post_init__(self):
        if len(set(self.modes)) != len(self.modes):
            raise ModeCollisionError("duplicate modes in state")
        order = sorted(range(len(self.modes)), key=lambda i: self.modes[i])
        amps: dict[Occupation, complex] = {}
        for occ, amp in self.amplitudes.items():
            if len(occ) != len(self.modes):
                raise FockError("occupation length does not match mode count")
            if any(n < 0 for n in occ):
                raise FockError("negative occupation")
            if abs(amp) < PRUNE_THRESHOLD:
                continue
            key = tuple(int(occ[i]) for i in order)
            amps[key] = amps.get(key, 0j) + complex(amp)
        object.__setattr__(self, "modes", tuple(self.modes[i] for i in order))
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, occupation: Mapping[ModeLike, int]) -> "FockState":
        """Single Fock ket, e.g. ``FockState.basis({"a": 2, "b": 2})``."""
        modes = tuple(as_mode(m) for m in occupation)
        return cls(modes, {tuple(occupation.values()): 1.0 + 0j})

    @classmethod
    def vacuum(cls, modes: Iterable[ModeLike]) -> "FockState":
        modes = tuple(as_mode(m) for m in modes)
        return cls(modes, {(0,) * len(modes): 1.0 + 0j})

    def index(self, m: ModeLike) -> int:
        m = as_mode(m)
        try:
            return self.modes.index(m)
        except ValueError:
            raise ModeNotFoundError(f"mode {m} not in state") from None

    def norm_squared(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amplitudes.values())

    def amplitude(self, occupation: Mapping[ModeLike, int]) -> complex:
        idx = {self.index(m): n for m, n in occupation.items()}
        key = tuple(idx.get(i, 0) for i in range(len(self.modes)))
        return self.amplitudes.get(key, 0j)

    def probabilities(self) -> dict[Occupation, float]:
        return {occ: abs(a) ** 2 for occ, a in self.amplitudes.items()}

    def photon_numbers_by_tag(self) -> dict[Occupation, dict[int, int]]:
        out = {}
        for occ in self.amplitudes:
            per_tag: dict[int, int] = {}
            for m, n in zip(self.modes, occ):
                per_tag[m.temporal] = per_tag.get(m.temporal, 0) + n
            out[occ] = per_tag
        return out

    def extended(self, extra: Iterable[ModeLike]) -> "FockState":
        """Add vacuum modes (already-present modes are skipped)."""
        extra = [m for m in map(as_mode, extra) if m not in self.modes]
        if not extra:
            return self
        return tensor_product(self, FockState.vacuum(extra))

    def relabel(self, mapping: Mapping[ModeLike, ModeLike]) -> "FockState":
        mapping = {as_mode(k): as_mode(v) for k, v in mapping.items()}
        for k in mapping:
            self.index(k)
        modes = tuple(mapping.get(m, m) for m in self.modes)
        return FockState(modes, self.amplitudes)

    def allclose(self, other: "FockState", atol: float = 1e-12) -> bool:
        if self.modes != other.modes:
            return False
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(
            abs(self.amplitudes.get(k, 0j) - other.amplitudes.get(k, 0j)) <= atol
            for k in keys
        )

    def to_json(self) -> dict:
        """Plain-data form: mode list plus amplitude table of [re, im] pairs."""
        return {
            "modes": [[m.spatial, m.temporal] for m in self.modes],
            "amplitudes": [
                [list(occ), [a.real, a.imag]]
                for occ, a in sorted(self.amplitudes.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FockState":
        modes = tuple(ModeId(s, t) for s, t in data["modes"])
        amps = {tuple(occ): complex(re, im) for occ, (re, im) in data["amplitudes"]}
        return cls(modes, amps)


# -- linear elements ---------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitter:
    pair: tuple[ModeId, ModeId]
    transmissivity: float = 0.5

    def __post_init__(self):
        a, b = (as_mode(m) for m in self.pair)
        object.__setattr__(self, "pair", (a, b))
        if a == b:
            raise InvalidElementError("beamsplitter needs two distinct modes")
        if a.temporal != b.temporal:
            raise InvalidElementError("beamsplitter modes must share a temporal tag")
        if not 0.0 <= self.transmissivity <= 1.0:
            raise InvalidElementError("transmissivity must lie in [0, 1]")


@dataclass(frozen=True)
class PhaseShifter:
    mode: ModeId
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "mode", as_mode(self.mode))


LinearElement = Union[BeamSplitter, PhaseShifter]


@lru_cache(maxsize=4096)
def _bs_transfer(n1: int, n2: int, T: float) -> tuple[tuple[int, complex], ...]:
    # Coefficients of |m, n1+n2-m> produced from |n1, n2>.
    t, r = math.sqrt(T), 1j * math.sqrt(1.0 - T)
    total = n1 + n2
    coeffs = [0j] * (total + 1)
    for k1 in range(n1 + 1):
        ca = math.comb(n1, k1) * t**k1 * r ** (n1 - k1)
        for k2 in range(n2 + 1):
            cb = math.comb(n2, k2) * r**k2 * t ** (n2 - k2)
            coeffs[k1 + k2] += ca * cb
    norm = math.factorial(n1) * math.factorial(n2)
    out = []
    for m, c in enumerate(coeffs):
        c *= math.sqrt(math.factorial(m) * math.factorial(total - m) / norm)
        if abs(c) >= PRUNE_THRESHOLD:
            out.append((m, c))
    return tuple(out)


def apply_beamsplitter(
    state: FockState,
    pair: tuple[ModeLike, ModeLike],
    T: float,
    out: tuple[ModeLike, ModeLike] | None = None,
) -> FockState:
    """Apply a two-mode beamsplitter with transmissivity ``T``.

    ``out`` optionally renames the two modes after the element (e.g. a, b ->
    c, d for the first splitter of a Mach-Zehnder).
    """
    bs = BeamSplitter(tuple(pair), T)
    i, j = state.index(bs.pair[0]), state.index(bs.pair[1])
    amps: dict[Occupation, complex] = {}
    for occ, amp in state.amplitudes.items():
        n1, n2 = occ[i], occ[j]
        total = n1 + n2
        for m, c in _bs_transfer(n1, n2, float(T)):
            new = list(occ)
            new[i], new[j] = m, total - m
            key = tuple(new)
            amps[key] = amps.get(key, 0j) + amp * c
    result = FockState(state.modes, amps)
    if out is not None:
        result = result.relabel(dict(zip(bs.pair, out)))
    return result


def apply_phase_shift(state: FockState, mode: ModeLike, phi: float) -> FockState:
    i = state.index(mode)
    phases: dict[int, complex] = {}
    amps = {}
    for occ, amp in state.amplitudes.items():
        n = occ[i]
        if n not in phases:
            phases[n] = complex(math.cos(n * phi), math.sin(n * phi))
        amps[occ] = amp * phases[n]
    return FockState(state.modes, amps)


def apply_element(state: FockState, element: LinearElement) -> FockState:
    if isinstance(element, BeamSplitter):
        return apply_beamsplitter(state, element.pair, element.transmissivity)
    return apply_phase_shift(state, element.mode, element.phi)


def tensor_product(s1: FockState, s2: FockState) -> FockState:
    if set(s1.modes) & set(s2.modes):
        raise ModeCollisionError("states share modes")
    amps = {
        o1 + o2: a1 * a2
        for o1, a1 in s1.amplitudes.items()
        for o2, a2 in s2.amplitudes.items()
    }
    return FockState(s1.modes + s2.modes, amps)


def outcome_probability(
    state: FockState,
    pattern: Mapping[ModeLike, int],
    aggregate_temporal: bool = False,
) -> float:
    """Probability of a (partial) photon-number pattern.

    Modes absent from ``pattern`` are unconstrained. With
    ``aggregate_temporal`` the keys are spatial labels and occupations are
    summed over temporal tags.
    """
    if aggregate_temporal:
        groups: dict[str, list[int]] = {}
        for label in pattern:
            idx = [i for i, m in enumerate(state.modes) if m.spatial == label]
            if not idx:
                raise ModeNotFoundError(f"spatial label {label!r} not in state")
            groups[label] = idx
        checks = [(groups[label], n) for label, n in pattern.items()]
    else:
        checks = [([state.index(m)], n) for m, n in pattern.items()]
    p = math.fsum(
        abs(amp) ** 2
        for occ, amp in state.amplitudes.items()
        if all(sum(occ[i] for i in idx) == n for idx, n in checks)
    )
    return min(max(p, 0.0), 1.0)


# -- matrix form and the permanent oracle ------------------------------------


def element_unitary(element: LinearElement, modes: Sequence[ModeLike]) -> np.ndarray:
    """Single-photon transfer matrix: column j is the image of mode j."""
    modes = [as_mode(m) for m in modes]
    U = np.eye(len(modes), dtype=complex)
    if isinstance(element, BeamSplitter):
        i, j = (modes.index(m) for m in element.pair)
        t = math.sqrt(element.transmissivity)
        r = 1j * math.sqrt(1.0 - element.transmissivity)
        U[i, i], U[j, i] = t, r
        U[i, j], U[j, j] = r, t
    else:
        i = modes.index(element.mode)
        U[i, i] = np.exp(1j * element.phi)
    return U


def circuit_unitary(elements: Sequence[LinearElement], modes: Sequence[ModeLike]) -> np.ndarray:
    U = np.eye(len(modes), dtype=complex)
    for el in elements:
        U = element_unitary(el, modes) @ U
    return U


def _check_unitary(U: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidUnitaryError("matrix must be square")
    if not np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=atol, rtol=0):
        raise InvalidUnitaryError("matrix is not unitary")
    return U


def apply_unitary(state: FockState, U: np.ndarray) -> FockState:
    """Apply a general linear-optical unitary by polynomial expansion.

    Each input creation operator is replaced by sum_i U[i, j] a_i^dagger and
    the resulting monomials are collected. Independent of the element-wise
    routines and of the permanent oracle.
    """
    U = _check_unitary(U)
    m = len(state.modes)
    if U.shape[0] != m:
        raise InvalidUnitaryError("matrix size does not match mode count")
    amps: dict[Occupation, complex] = {}
    for occ, amp in state.amplitudes.items():
        poly: dict[Occupation, complex] = {(0,) * m: 1.0 + 0j}
        for j, n in enumerate(occ):
            for _ in range(n):
                nxt: dict[Occupation, complex] = {}
                for mono, c in poly.items():
                    for i in range(m):
                        if U[i, j] == 0:
                            continue
                        key = mono[:i] + (mono[i] + 1,) + mono[i + 1 :]
                        nxt[key] = nxt.get(key, 0j) + c * U[i, j]
                poly = nxt
        in_norm = math.prod(math.factorial(n) for n in occ)
        for mono, c in poly.items():
            out_norm = math.prod(math.factorial(n) for n in mono)
            amps[mono] = amps.get(mono, 0j) + amp * c * math.sqrt(out_norm / in_norm)
    return FockState(state.modes, amps)


def permanent(M: np.ndarray) -> complex:
    """Permanent by direct expansion over permutations (fine for n <= 6)."""
    n = M.shape[0]
    if n == 0:
        return 1.0 + 0j
    rows = M.tolist()
    total = 0j
    for perm in itertools.permutations(range(n)):
        prod = 1.0 + 0j
        for i, j in enumerate(perm):
            prod *= rows[i][j]
        total += prod
    return total


def transition_amplitude_oracle(U: np.ndarray, occ_in: Sequence[int], occ_out: Sequence[int], check: bool = True) -> complex:
    """<out| U |in> from the permanent of the occupation-expanded submatrix.

    ``check=False`` skips the unitarity test when the caller has already
    validated ``U`` (useful when sweeping many occupation pairs).
    """
    U = _check_unitary(U) if check else np.asarray(U, dtype=complex)
    if len(occ_in) != U.shape[0] or len(occ_out) != U.shape[0]:
        raise InvalidUnitaryError("occupation length does not match matrix size")
    if sum(occ_in) != sum(occ_out):
        return 0j
    cols = [j for j, n in enumerate(occ_in) for _ in range(n)]
    rows = [i for i, n in enumerate(occ_out) for _ in range(n)]
    norm = math.prod(math.factorial(n) for n in occ_in) * math.prod(
        math.factorial(n) for n in occ_out
    )
    return permanent(U[rows][:, cols]) / math.sqrt(norm)


def occupations(n_modes: int, n_photons: int) -> list[Occupation]:
    """All occupation tuples of ``n_photons`` over ``n_modes`` modes."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n_modes), n_photons):
        occ = [0] * n_modes
        for i in combo:
            occ[i] += 1
        out.append(tuple(occ))
    return sorted(out)
