"""Four-party MABK Bell operator, its local and quantum bounds, and the witness."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qcore import (
    SOLVER_TOL,
    SQRT2,
    DensityMatrix,
    PureState,
    Setting,
    SettingVector,
    as_density,
    correlation,
    fidelity_ghz,
    ghz_coherence,
)

LHV_BOUND = 2.0
GENUINE_A_BOUND = 4.0
GENUINE_FIDELITY_BOUND = 0.5
# Cited threshold visibilities, not derived here.
ZUKOWSKI_THRESHOLD = 0.329
RYFF_THRESHOLD = 0.5

# Three-photon polynomials multiplying (a + b) and (a - b).  The second is
# the first with X and Y exchanged, which is what makes the operator
# MABK-optimal on (|HVVH> + |VHHV>)/sqrt2.
PLUS_GROUP = ((+1, "XXX"), (-1, "XYY"), (+1, "YXY"), (+1, "YYX"))
MINUS_GROUP = ((+1, "YYY"), (-1, "YXX"), (+1, "XYX"), (+1, "XXY"))


@dataclass(frozen=True)
class MabkTerm:
    sv: SettingVector
    coeff: float

    @property
    def code(self) -> str:
        return self.sv.code


@lru_cache(maxsize=None)
def _terms() -> tuple[MabkTerm, ...]:
    terms = []
    for group, b_sign in ((PLUS_GROUP, +1), (MINUS_GROUP, -1)):
        for sign, head in group:
            terms.append(MabkTerm(SettingVector.parse(head + "A"), 0.5 * sign))
            terms.append(MabkTerm(SettingVector.parse(head + "B"), 0.5 * sign * b_sign))
    return tuple(terms)


def mabk_terms() -> list[MabkTerm]:
    """The 16 (setting, +-1/2) terms of the expanded Bell operator."""
    return list(_terms())


@lru_cache(maxsize=None)
def _operator() -> np.ndarray:
    op = sum(t.coeff * t.sv.observable() for t in _terms())
    op.setflags(write=False)
    return op


def mabk_operator() -> np.ndarray:
    """The Bell operator as a 16x16 matrix."""
    return _operator().copy()


def mabk_expectation(rho: PureState | DensityMatrix) -> float:
    """<A> as a coefficient-weighted sum of the 16 correlations.

    Cross-checked against Tr(rho A) with the assembled matrix.
    """
    rho = as_density(rho)
    by_terms = sum(t.coeff * correlation(rho, t.sv) for t in _terms())
    by_trace = rho.expectation(_operator())
    if abs(by_terms - by_trace) > SOLVER_TOL:
        raise ArithmeticError(f"term sum {by_terms!r} disagrees with trace {by_trace!r}")
    return float(by_terms)


# -- local hidden variables ---------------------------------------------------


@dataclass(frozen=True)
class DeterministicStrategy:
    """Fixed +-1 outcomes: X and Y for photons 1-3, A and B for photon 4."""

    x: tuple[int, int, int]
    y: tuple[int, int, int]
    a: int
    b: int

    def value(self, photon: int, setting: Setting) -> int:
        if photon == 3:
            return {Setting.A: self.a, Setting.B: self.b}[setting]
        return {Setting.X: self.x, Setting.Y: self.y}[setting][photon]

    def score(self) -> float:
        return sum(
            t.coeff * np.prod([self.value(k, s) for k, s in enumerate(t.sv.settings)])
            for t in _terms()
        )


def all_strategies() -> list[DeterministicStrategy]:
    out = []
    for bits in itertools.product((1, -1), repeat=8):
        out.append(DeterministicStrategy(bits[0:3], bits[3:6], bits[6], bits[7]))  # type: ignore[arg-type]
    return out


@dataclass(frozen=True)
class LhvSummary:
    maximum: float
    minimum: float
    argmax: DeterministicStrategy
    n_at_max: int
    n_strategies: int


def lhv_summary() -> LhvSummary:
    """Exhaustive scan of all 256 deterministic strategies."""
    strategies = all_strategies()
    scores = np.array([s.score() for s in strategies])
    best = int(np.argmax(scores))
    top = scores.max()
    return LhvSummary(
        float(top), float(scores.min()), strategies[best], int(np.sum(scores == top)), len(strategies)
    )


def lhv_max() -> tuple[float, DeterministicStrategy]:
    s = lhv_summary()
    return s.maximum, s.argmax


def quantum_max() -> float:
    """Largest eigenvalue magnitude of the Bell operator."""
    return float(np.max(np.abs(np.linalg.eigvalsh(_operator()))))


@dataclass(frozen=True)
class Thresholds:
    mabk: float
    zukowski: float = ZUKOWSKI_THRESHOLD
    ghz_ryff: float = RYFF_THRESHOLD

    def as_dict(self) -> dict[str, float]:
        return {"mabk": self.mabk, "zukowski": self.zukowski, "ghz_ryff": self.ghz_ryff}


def threshold_visibilities() -> Thresholds:
    """Minimum visibilities for a local-realism violation."""
    return Thresholds(mabk=LHV_BOUND / quantum_max())


# -- witness ------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessReport:
    a_value: float
    fidelity: float

    @property
    def lhv_violated(self) -> bool:
        return abs(self.a_value) > LHV_BOUND

    @property
    def genuine(self) -> bool:
        return abs(self.a_value) > GENUINE_A_BOUND and self.fidelity > GENUINE_FIDELITY_BOUND

    @property
    def a_margin(self) -> float:
        return abs(self.a_value) - GENUINE_A_BOUND

    @property
    def fidelity_margin(self) -> float:
        return self.fidelity - GENUINE_FIDELITY_BOUND

    def as_dict(self) -> dict[str, object]:
        return {
            "a_value": self.a_value,
            "fidelity": self.fidelity,
            "lhv_bound": LHV_BOUND,
            "a_bound": GENUINE_A_BOUND,
            "fidelity_bound": GENUINE_FIDELITY_BOUND,
            "lhv_margin": abs(self.a_value) - LHV_BOUND,
            "a_margin": self.a_margin,
            "fidelity_margin": self.fidelity_margin,
            "lhv_violated": self.lhv_violated,
            "genuine": self.genuine,
        }


def witness(rho: PureState | DensityMatrix) -> WitnessReport:
    """Genuine four-photon entanglement test: |<A>| > 4 and F > 1/2."""
    rho = as_density(rho)
    a = mabk_expectation(rho)
    via_coherence = 8 * SQRT2 * ghz_coherence(rho)
    if abs(abs(a) - abs(via_coherence)) > SOLVER_TOL:
        raise ArithmeticError(f"<A> = {a!r} but 8 sqrt2 Re<HVVH|rho|VHHV> = {via_coherence!r}")
    return WitnessReport(a, fidelity_ghz(rho))


def witness_from_values(a_value: float, fidelity: float) -> WitnessReport:
    return WitnessReport(float(a_value), float(fidelity))
