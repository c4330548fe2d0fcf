"""Dense linear algebra over the four-photon polarization space.

Conventions used everywhere in the package:

* A basis label is a 4-character string over ``{H, V}``; photon 1 is the
  leftmost character and the most significant bit of the index, ``H -> 0``
  and ``V -> 1``.  So ``|HVVH>`` is index 6 and ``|VHHV>`` is index 9.
* Measurement outcomes are indexed the same way, with bit 0 meaning the
  ``+1`` eigenvalue and bit 1 meaning ``-1``.
* ``sigma_x`` is the observable whose ``+1``/``-1`` eigenstates are
  ``H' = (H+V)/sqrt2`` and ``V' = (H-V)/sqrt2``; ``sigma_y`` has ``R =
  (H+iV)/sqrt2`` (+1) and ``L = (H-iV)/sqrt2`` (-1).  With ``H = (1, 0)``
  these are the textbook Pauli matrices.

Writing ``|H> = (0, 1)``, ``|V> = (1, 0)`` and calling them the ``sigma_x``
eigenvectors is a convention sometimes seen for this experiment; it cannot
hold together with ``H'/V'`` being the ``sigma_x`` eigenbasis.  The
measurement bases and their eigenvalue labels are what fix every parity
prediction, so those are kept and the stabilizer eigenvalues come out as
+1, +1, +1, -1.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

N_PHOTONS = 4
DIM = 2**N_PHOTONS

EXACT_TOL = 1e-12
SOLVER_TOL = 1e-10

SQRT2 = np.sqrt(2.0)
HVVH = "HVVH"
VHHV = "VHHV"


class InvalidStateError(ValueError):
    """Raised when an array is not a valid pure state or density matrix."""


def basis_index(label: str) -> int:
    """Index of an H/V basis label, photon 1 most significant.

    >>> basis_index("HVVH"), basis_index("VHHV")
    (6, 9)
    """
    label = label.upper()
    if len(label) != N_PHOTONS or set(label) - {"H", "V"}:
        raise ValueError(f"basis label must be 4 characters over H/V, got {label!r}")
    return int(label.replace("H", "0").replace("V", "1"), 2)


def basis_label(index: int) -> str:
    if not 0 <= index < DIM:
        raise ValueError(f"basis index out of range: {index}")
    return format(index, "04b").replace("0", "H").replace("1", "V")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector of length 16."""

    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (DIM,):
            raise InvalidStateError(f"expected {DIM} amplitudes, got {amps.shape[0]}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > EXACT_TOL:
            raise InvalidStateError(f"state not normalized: <psi|psi> = {norm!r}")
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def basis(cls, label: str) -> "PureState":
        amps = np.zeros(DIM, dtype=complex)
        amps[basis_index(label)] = 1.0
        return cls(amps)

    def amp(self, label: str) -> complex:
        return complex(self.amps[basis_index(label)])

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amps, other.amps))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """16x16 Hermitian, unit-trace, positive semidefinite matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.entries, dtype=complex)
        if rho.shape != (DIM, DIM):
            raise InvalidStateError(f"expected a {DIM}x{DIM} matrix, got {rho.shape}")
        herm_err = float(np.max(np.abs(rho - rho.conj().T)))
        if herm_err > EXACT_TOL:
            raise InvalidStateError(f"matrix not Hermitian (max deviation {herm_err:.3g})")
        tr = np.trace(rho)
        if abs(tr - 1.0) > EXACT_TOL:
            raise InvalidStateError(f"trace must be 1, got {tr.real:.15g}")
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < -SOLVER_TOL:
            raise InvalidStateError(f"matrix not positive semidefinite (min eigenvalue {min_eig:.3g})")
        object.__setattr__(self, "entries", _frozen(rho))

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        return state.density()

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(np.eye(DIM) / DIM)

    def element(self, bra: str, ket: str) -> complex:
        """Matrix element <bra|rho|ket> for H/V basis labels."""
        return complex(self.entries[basis_index(bra), basis_index(ket)])

    def population(self, label: str) -> float:
        return self.element(label, label).real

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.trace(self.entries @ operator).real)


def as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    raise TypeError(f"expected PureState or DensityMatrix, got {type(state).__name__}")


def random_density_matrix(rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state from a Ginibre ensemble; full rank unless ``rank`` is given."""
    k = DIM if rank is None else rank
    g = rng.standard_normal((DIM, k)) + 1j * rng.standard_normal((DIM, k))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real)


# -- single-photon polarization states -------------------------------------

KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_HP = (KET_H + KET_V) / SQRT2  # H'
KET_VP = (KET_H - KET_V) / SQRT2  # V'
KET_R = (KET_H + 1j * KET_V) / SQRT2
KET_L = (KET_H - 1j * KET_V) / SQRT2


def _observable(plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    return np.outer(plus, plus.conj()) - np.outer(minus, minus.conj())


SIGMA_X = _observable(KET_HP, KET_VP)
SIGMA_Y = _observable(KET_R, KET_L)
SIGMA_A = (SIGMA_X + SIGMA_Y) / SQRT2
SIGMA_B = (SIGMA_X - SIGMA_Y) / SQRT2


class Setting(enum.Enum):
    """Local measurement setting of one photon."""

    X = "X"
    Y = "Y"
    A = "A"
    B = "B"

    @classmethod
    def parse(cls, s: "str | Setting") -> "Setting":
        if isinstance(s, Setting):
            return s
        key = s.strip().lower().replace("σ", "").replace("sigma_", "").replace("sigma", "")
        try:
            return cls(key.upper())
        except ValueError:
            raise ValueError(f"unknown setting {s!r}; expected one of X, Y, A, B") from None

    @property
    def labels(self) -> tuple[str, str]:
        """ASCII labels of the (+1, -1) outcomes."""
        return _LABELS[self]

    @property
    def unicode_labels(self) -> tuple[str, str]:
        return tuple(lbl.replace("'", "′") for lbl in _LABELS[self])  # type: ignore[return-value]


_LABELS = {
    Setting.X: ("H'", "V'"),
    Setting.Y: ("R", "L"),
    Setting.A: ("a+", "a-"),
    Setting.B: ("b+", "b-"),
}


def setting_observable(s: Setting | str) -> np.ndarray:
    """2x2 observable with eigenvalues +1 and -1 for a setting."""
    s = Setting.parse(s)
    return {Setting.X: SIGMA_X, Setting.Y: SIGMA_Y, Setting.A: SIGMA_A, Setting.B: SIGMA_B}[s].copy()


@lru_cache(maxsize=None)
def _eigenbasis(s: Setting) -> np.ndarray:
    """Unitary whose columns are the +1 and -1 eigenvectors."""
    if s is Setting.X:
        return np.column_stack([KET_HP, KET_VP])
    if s is Setting.Y:
        return np.column_stack([KET_R, KET_L])
    phase = np.exp(1j * np.pi / 4) if s is Setting.A else np.exp(-1j * np.pi / 4)
    plus = np.array([1.0, phase]) / SQRT2
    minus = np.array([1.0, -phase]) / SQRT2
    return np.column_stack([plus, minus])


def eigenstate(s: Setting | str, eigenvalue: int) -> np.ndarray:
    s = Setting.parse(s)
    if eigenvalue not in (1, -1):
        raise ValueError("eigenvalue must be +1 or -1")
    return _eigenbasis(s)[:, 0 if eigenvalue == 1 else 1].copy()


@dataclass(frozen=True)
class SettingVector:
    """One setting per photon, photon 1 first."""

    settings: tuple[Setting, Setting, Setting, Setting]

    def __post_init__(self) -> None:
        settings = tuple(Setting.parse(s) for s in self.settings)
        if len(settings) != N_PHOTONS:
            raise ValueError(f"need exactly {N_PHOTONS} settings, got {len(settings)}")
        object.__setattr__(self, "settings", settings)

    @classmethod
    def parse(cls, text: "str | SettingVector | Sequence[Setting | str]") -> "SettingVector":
        """Accepts ``"XYYX"``, ``"xyyx"``, ``"σxσyσyσx"`` or a sequence of settings."""
        if isinstance(text, SettingVector):
            return text
        if isinstance(text, str):
            compact = text.replace("σ", "").replace("sigma_", "").replace("_", "").replace(" ", "")
            return cls(tuple(compact.upper()))  # type: ignore[arg-type]
        return cls(tuple(text))  # type: ignore[arg-type]

    @property
    def code(self) -> str:
        return "".join(s.value for s in self.settings)

    def __str__(self) -> str:
        return self.code

    def observable(self) -> np.ndarray:
        return kron_all(setting_observable(s) for s in self.settings)

    def eigenbasis(self) -> np.ndarray:
        return kron_all(_eigenbasis(s) for s in self.settings)

    def outcome_label(self, index: int, unicode: bool = False) -> str:
        parts = []
        for k, s in enumerate(self.settings):
            bit = (index >> (N_PHOTONS - 1 - k)) & 1
            parts.append((s.unicode_labels if unicode else s.labels)[bit])
        return "".join(parts)

    def outcome_labels(self, unicode: bool = False) -> list[str]:
        return [self.outcome_label(i, unicode) for i in range(DIM)]

    def outcome_index(self, label: str) -> int:
        label = label.replace("′", "'")
        try:
            return self.outcome_labels().index(label)
        except ValueError:
            raise ValueError(f"{label!r} is not an outcome of setting {self.code}") from None


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def outcome_signs() -> np.ndarray:
    """(16, 4) array of +-1 local outcomes, row index = outcome index."""
    return np.array(list(itertools.product((1, -1), repeat=N_PHOTONS)), dtype=int)


OUTCOME_SIGNS = outcome_signs()
OUTCOME_PARITY = OUTCOME_SIGNS.prod(axis=1)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Born-rule probabilities of the 16 joint outcomes of one setting vector."""

    sv: SettingVector
    probs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.shape != (DIM,):
            raise ValueError(f"need {DIM} probabilities, got {p.shape[0]}")
        if p.min() < -EXACT_TOL or abs(p.sum() - 1.0) > EXACT_TOL:
            raise ValueError("probabilities must be non-negative and sum to 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def prob(self, label: str) -> float:
        return float(self.probs[self.sv.outcome_index(label)])

    def parity_mass(self, parity: int) -> float:
        """Total probability of outcome strings whose product equals ``parity``."""
        return float(self.probs[OUTCOME_PARITY == parity].sum())

    def odd_mass(self) -> float:
        return self.parity_mass(-1)

    def correlation(self) -> float:
        return float(OUTCOME_PARITY @ self.probs)

    def support(self, tol: float = EXACT_TOL) -> frozenset[str]:
        labels = self.sv.outcome_labels()
        return frozenset(labels[i] for i in range(DIM) if self.probs[i] > tol)

    def as_dict(self, unicode: bool = False) -> dict[str, float]:
        return dict(zip(self.sv.outcome_labels(unicode), map(float, self.probs)))


# -- operations -------------------------------------------------------------


def ghz_state() -> PureState:
    """(|HVVH> + |VHHV>)/sqrt2."""
    amps = np.zeros(DIM, dtype=complex)
    amps[basis_index(HVVH)] = amps[basis_index(VHHV)] = 1 / SQRT2
    return PureState(amps)


def outcome_distribution(state: PureState | DensityMatrix, sv: SettingVector | str) -> OutcomeDistribution:
    rho = as_density(state)
    sv = SettingVector.parse(sv)
    u = sv.eigenbasis()
    # diagonal of U^dag rho U = Tr(rho * product of eigenprojectors)
    probs = np.einsum("ij,ik,kj->j", u.conj(), rho.entries, u).real
    return OutcomeDistribution(sv, probs)


def correlation(state: PureState | DensityMatrix, sv: SettingVector | str) -> float:
    """Expectation of the product of the four local +-1 outcomes."""
    return outcome_distribution(state, sv).correlation()


def correlation_operator(state: PureState | DensityMatrix, sv: SettingVector | str) -> float:
    """Same quantity as :func:`correlation`, via Tr(rho O1 x O2 x O3 x O4)."""
    return as_density(state).expectation(SettingVector.parse(sv).observable())


def ghz_coherence(rho: PureState | DensityMatrix) -> float:
    """Re <HVVH|rho|VHHV>."""
    return as_density(rho).element(HVVH, VHHV).real


def fidelity_ghz(rho: PureState | DensityMatrix) -> float:
    """Overlap <Psi|rho|Psi> with the GHZ target.

    Computed both as a full quadratic form and as half the two target
    populations plus the coherence; the two must agree.
    """
    rho = as_density(rho)
    psi = ghz_state().amps
    direct = float(np.vdot(psi, rho.entries @ psi).real)
    split = 0.5 * (rho.population(HVVH) + rho.population(VHHV)) + ghz_coherence(rho)
    if abs(direct - split) > EXACT_TOL:
        raise ArithmeticError(f"fidelity decompositions disagree: {direct!r} vs {split!r}")
    return direct
