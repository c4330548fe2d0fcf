"""The all-versus-nothing GHZ argument for four photons.

The local-realist side works only with +-1 value tables and parity
predicates over outcome strings; it never builds a Hilbert-space operator.
The quantum side is the Born rule from :mod:`ghz4.qcore`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .qcore import (
    DIM,
    N_PHOTONS,
    DensityMatrix,
    PureState,
    Setting,
    SettingVector,
    as_density,
    ghz_state,
    outcome_distribution,
)

STABILIZER_SETTINGS = ("XXXX", "XYXY", "XXYY")
CONTRADICTION_SETTING = "XYYX"
GHZ_TEST_SETTINGS = STABILIZER_SETTINGS + (CONTRADICTION_SETTING,)

# Tolerable data-flipping error rate for the GHZ argument (cited, not derived).
RYFF_BOUND = 0.25


@dataclass(frozen=True)
class LhvAssignment:
    """Predetermined values X_i, Y_i in {+1, -1} for photons 1..4."""

    X: tuple[int, int, int, int]
    Y: tuple[int, int, int, int]

    def value(self, photon: int, setting: Setting | str) -> int:
        s = Setting.parse(setting)
        if s is Setting.X:
            return self.X[photon]
        if s is Setting.Y:
            return self.Y[photon]
        raise ValueError("elements of reality exist only for X and Y settings")

    def outcome(self, sv: SettingVector | str) -> tuple[int, ...]:
        sv = SettingVector.parse(sv)
        return tuple(self.value(k, s) for k, s in enumerate(sv.settings))

    def product(self, sv: SettingVector | str) -> int:
        return int(np.prod(self.outcome(sv)))


def all_assignments() -> Iterator[LhvAssignment]:
    """All 256 assignments in a fixed lexicographic order (+1 before -1)."""
    for bits in itertools.product((1, -1), repeat=2 * N_PHOTONS):
        yield LhvAssignment(tuple(bits[:4]), tuple(bits[4:]))  # type: ignore[arg-type]


def element_of_reality_identity() -> bool:
    """(X1X2X3X4)(X1Y2X3Y4)(X1X2Y3Y4) == X1Y2Y3X4 for every assignment."""
    return all(
        np.prod([a.product(sv) for sv in STABILIZER_SETTINGS]) == a.product(CONTRADICTION_SETTING)
        for a in all_assignments()
    )


def enumerate_consistent_lhv() -> list[LhvAssignment]:
    """Assignments reproducing the +1 product of every stabilizer setting."""
    consistent = [
        a for a in all_assignments() if all(a.product(sv) == 1 for sv in STABILIZER_SETTINGS)
    ]
    bad = [a for a in consistent if a.product(CONTRADICTION_SETTING) != 1]
    if bad:
        raise AssertionError(f"{len(bad)} consistent assignments give X1Y2Y3X4 = -1")
    return consistent


def _label(sv: SettingVector, signs: tuple[int, ...]) -> str:
    return "".join(s.labels[0 if v == 1 else 1] for s, v in zip(sv.settings, signs))


def lhv_predicted_outcomes(sv: SettingVector | str = CONTRADICTION_SETTING) -> frozenset[str]:
    """Outcome strings a consistent local-realist model can produce for XYYX."""
    sv = SettingVector.parse(sv)
    if sv.code != CONTRADICTION_SETTING:
        raise ValueError(f"the GHZ argument is specific to {CONTRADICTION_SETTING}, got {sv.code}")
    return frozenset(_label(sv, a.outcome(sv)) for a in enumerate_consistent_lhv())


def qm_predicted_outcomes(sv: SettingVector | str = CONTRADICTION_SETTING) -> frozenset[str]:
    """Born-rule support on the ideal GHZ state."""
    return outcome_distribution(ghz_state(), sv).support()


@dataclass(frozen=True)
class ContradictionReport:
    lhv_support: frozenset[str]
    qm_support: frozenset[str]
    observed_lhv_fraction: float
    observed_qm_fraction: float
    error_rate: float
    ryff_bound: float = RYFF_BOUND

    @property
    def ryff_margin(self) -> float:
        return self.ryff_bound - self.error_rate

    @property
    def passed(self) -> bool:
        return self.error_rate < self.ryff_bound

    def as_dict(self) -> dict[str, object]:
        return {
            "setting": CONTRADICTION_SETTING,
            "lhv_support": sorted(self.lhv_support),
            "qm_support": sorted(self.qm_support),
            "observed_lhv_fraction": self.observed_lhv_fraction,
            "observed_qm_fraction": self.observed_qm_fraction,
            "error_rate": self.error_rate,
            "ryff_bound": self.ryff_bound,
            "ryff_margin": self.ryff_margin,
            "passed": self.passed,
        }


def contradiction_report(
    rho: PureState | DensityMatrix, ryff_bound: float = RYFF_BOUND
) -> ContradictionReport:
    dist = outcome_distribution(as_density(rho), CONTRADICTION_SETTING)
    lhv = lhv_predicted_outcomes()
    qm = qm_predicted_outcomes()
    if lhv & qm or len(lhv | qm) != DIM:
        raise AssertionError("LHV and QM supports must partition the 16 outcomes")
    lhv_mass = sum(dist.prob(o) for o in lhv)
    qm_mass = sum(dist.prob(o) for o in qm)
    return ContradictionReport(lhv, qm, lhv_mass, qm_mass, lhv_mass, ryff_bound)


def _parity_required(sv: SettingVector) -> int:
    """Outcome product of the ideal GHZ state for one of the four test settings."""
    return -1 if sv.code == CONTRADICTION_SETTING else 1


def parity_visibility(rho: PureState | DensityMatrix, sv: SettingVector | str) -> float:
    """|P(correct parity) - P(wrong parity)| for one of the four test settings."""
    sv = SettingVector.parse(sv)
    dist = outcome_distribution(as_density(rho), sv)
    good = dist.parity_mass(_parity_required(sv))
    return abs(good - dist.parity_mass(-_parity_required(sv)))


def stabilizer_visibilities(rho: PureState | DensityMatrix) -> dict[str, float]:
    """Visibilities of XXXX, XYXY, XXYY and XYYX."""
    return {sv: parity_visibility(rho, sv) for sv in GHZ_TEST_SETTINGS}

