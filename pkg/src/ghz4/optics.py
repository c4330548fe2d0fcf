"""Source, PBS post-selection, noise channel and waveplate models.

Two SPDC pairs (photons 1-2 and 3-4) are prepared in (|HV> + |VH>)/sqrt2.
Photons 2 and 3 meet on a polarizing beam splitter; a fourfold coincidence
requires one photon per output port, i.e. photons 2 and 3 both H or both V.
Partial temporal distinguishability at the PBS is a single overlap ``g`` that
scales the coherence between the two surviving branches.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .qcore import (
    DIM,
    EXACT_TOL,
    HVVH,
    N_PHOTONS,
    SQRT2,
    VHHV,
    DensityMatrix,
    PureState,
    Setting,
    basis_index,
    eigenstate,
    ghz_state,
    outcome_distribution,
)

DESIRED = (HVVH, VHHV)

# Coincidence ratio of a desired H/V component to the strongest undesired one.
EXPERIMENT_SIGNAL_RATIO = 60.0
EXPERIMENT_FIDELITY = 0.840
EXPERIMENT_A_VALUE = 4.433
EXPERIMENT_DIP_VISIBILITY = 0.84


class PostSelectionError(ValueError):
    """The input state has no weight in the fourfold-coincidence subspace."""


@dataclass(frozen=True)
class NoiseParams:
    """Mixture weights of the phenomenological noise model.

    rho = p_coh |Psi><Psi| + p_diag (|HVVH><HVVH| + |VHHV><VHHV|)/2 + p_white I/16
    """

    p_coh: float
    p_diag: float = 0.0
    p_white: float = 0.0

    def __post_init__(self) -> None:
        weights = (self.p_coh, self.p_diag, self.p_white)
        if any(not math.isfinite(w) for w in weights):
            raise ValueError(f"noise weights must be finite, got {weights}")
        if any(w < -EXACT_TOL for w in weights):
            raise ValueError(f"noise weights must be non-negative, got {weights}")
        if abs(sum(weights) - 1.0) > EXACT_TOL:
            raise ValueError(f"noise weights must sum to 1, got {sum(weights)!r}")

    @classmethod
    def white(cls, visibility: float) -> "NoiseParams":
        """Werner-type mixture V |Psi><Psi| + (1 - V) I/16."""
        if not 0.0 <= visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
        return cls(visibility, 0.0, 1.0 - visibility)

    @classmethod
    def dephased(cls, visibility: float) -> "NoiseParams":
        if not 0.0 <= visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
        return cls(visibility, 1.0 - visibility, 0.0)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def fit_noise(fidelity: float, coherence: float) -> NoiseParams:
    """Closed-form weights reproducing a GHZ fidelity and coherence.

    The coherence fixes p_coh = 2C; the fidelity fixes the target population
    P = 2(F - C); in this model P = 1 - 7 p_white / 8.
    """
    p_coh = 2.0 * float(coherence)
    population = 2.0 * (float(fidelity) - p_coh / 2.0)
    p_white = (1.0 - population) * 8.0 / 7.0
    p_diag = 1.0 - p_coh - p_white
    if min(p_coh, p_diag, p_white) < -EXACT_TOL:
        raise ValueError(
            f"no non-negative noise mixture has fidelity {fidelity} and coherence {coherence}"
        )
    return NoiseParams(max(p_coh, 0.0), max(p_diag, 0.0), 1.0 - max(p_coh, 0.0) - max(p_diag, 0.0))


def fit_noise_from_a(fidelity: float = EXPERIMENT_FIDELITY, a_value: float = EXPERIMENT_A_VALUE) -> NoiseParams:
    """Weights matching a fidelity and an MABK value, via <A> = 8 sqrt2 C."""
    return fit_noise(fidelity, abs(a_value) / (8.0 * SQRT2))


def fit_noise_from_ratio(fidelity: float, ratio: float = EXPERIMENT_SIGNAL_RATIO) -> NoiseParams:
    """Weights from a fidelity plus the desired:undesired H/V count ratio.

    The ratio sets the white floor (desired/undesired = 8 P / p_white with
    P = 1 - 7 p_white/8, hence p_white = 8/(ratio + 7)); the fidelity then
    fixes the coherence.
    """
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    p_white = 8.0 / (ratio + 7.0)
    population = 1.0 - 7.0 * p_white / 8.0
    return fit_noise(fidelity, fidelity - population / 2.0)


def experimental_noise() -> NoiseParams:
    """Noise weights fitted to F = 0.840 and |<A>| = 4.433."""
    return fit_noise_from_a(EXPERIMENT_FIDELITY, EXPERIMENT_A_VALUE)


def apply_noise(params: NoiseParams) -> DensityMatrix:
    ghz = ghz_state().density().entries
    diag = np.zeros((DIM, DIM), dtype=complex)
    for label in DESIRED:
        i = basis_index(label)
        diag[i, i] = 0.5
    rho = params.p_coh * ghz + params.p_diag * diag + params.p_white * np.eye(DIM) / DIM
    return DensityMatrix(rho)


def signal_to_noise_ratio(rho: DensityMatrix) -> float:
    """Weakest desired H/V population over the strongest undesired one."""
    pops = np.real(np.diag(rho.entries))
    desired = [basis_index(label) for label in DESIRED]
    undesired = np.delete(pops, desired)
    worst = undesired.max()
    return math.inf if worst <= 0 else float(pops[desired].min() / worst)


# -- source and PBS ---------------------------------------------------------


def spdc_two_pairs() -> PureState:
    pair = np.zeros(4, dtype=complex)
    pair[0b01] = pair[0b10] = 1 / SQRT2  # |HV> + |VH>
    return PureState(np.kron(pair, pair))


def _bit(index: int, photon: int) -> int:
    """Polarization bit (H=0, V=1) of a 1-based photon in a basis index."""
    return (index >> (N_PHOTONS - photon)) & 1


def pbs_postselect(state: PureState, overlap: float) -> tuple[DensityMatrix, float]:
    """Fourfold-coincidence post-selection behind the PBS.

    Returns the normalized post-selected state and its success probability.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    amps = np.asarray(state.amps)
    keep = np.array([_bit(i, 2) == _bit(i, 3) for i in range(DIM)])
    projected = np.where(keep, amps, 0.0)
    success = float(np.vdot(projected, projected).real)
    if success <= EXACT_TOL:
        raise PostSelectionError("state has no amplitude with one photon per PBS output")
    rho = np.outer(projected, projected.conj()) / success
    # branch = polarization shared by photons 2 and 3
    branch = np.array([_bit(i, 2) for i in range(DIM)])
    cross = branch[:, None] != branch[None, :]
    rho = np.where(cross, overlap * rho, rho)
    return DensityMatrix(rho), success


def temporal_overlap(delay_um: float | np.ndarray, tau_um: float) -> float | np.ndarray:
    """Gaussian mode overlap exp(-d^2 / 2 tau^2)."""
    if tau_um <= 0:
        raise ValueError(f"coherence length must be positive, got {tau_um}")
    return np.exp(-np.square(delay_um) / (2.0 * tau_um**2))


@dataclass(frozen=True)
class DelayPoint:
    delay: float  # micrometers
    overlap: float
    rate_hhhh: float
    rate_hhhv: float

    @property
    def visibility(self) -> float:
        hi, lo = max(self.rate_hhhh, self.rate_hhhv), min(self.rate_hhhh, self.rate_hhhv)
        return (hi - lo) / (hi + lo)


SERIES = ("H'H'H'H'", "H'H'H'V'")


def delay_scan(
    positions: Iterable[float],
    tau_um: float = 50.0,
    ceiling: float = EXPERIMENT_DIP_VISIBILITY,
    rate: float = 1.0,
) -> list[DelayPoint]:
    """H'H'H'H' and H'H'H'V' rates against delay-mirror position.

    ``ceiling`` is the branch coherence reached at zero delay; the effective
    PBS overlap is ``ceiling * exp(-d^2/2 tau^2)``.
    """
    if not 0.0 <= ceiling <= 1.0:
        raise ValueError(f"ceiling must lie in [0, 1], got {ceiling}")
    source = spdc_two_pairs()
    points = []
    for d in positions:
        g = float(ceiling * temporal_overlap(float(d), tau_um))
        rho, _ = pbs_postselect(source, g)
        dist = outcome_distribution(rho, "XXXX")
        points.append(
            DelayPoint(float(d), g, rate * dist.prob(SERIES[0]), rate * dist.prob(SERIES[1]))
        )
    return points


def delay_scan_rows(points: Sequence[DelayPoint]) -> list[dict[str, object]]:
    """Long-format rows (series, delay_um, rate) for CSV output."""
    rows: list[dict[str, object]] = []
    for name, attr in zip(SERIES, ("rate_hhhh", "rate_hhhv")):
        rows.extend({"series": name, "delay_um": p.delay, "rate": getattr(p, attr)} for p in points)
    return rows


# -- Jones calculus ----------------------------------------------------------


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def waveplate(retardance: float, axis_deg: float) -> np.ndarray:
    """Jones matrix of a retarder whose optic (slow) axis sits at ``axis_deg``.

    Phase convention exp(i(kz - wt)): the slow-axis component picks up
    exp(+i * retardance) relative to the fast axis.
    """
    theta = math.radians(axis_deg)
    core = np.diag([np.exp(1j * retardance), 1.0])
    return rotation(theta) @ core @ rotation(-theta)


def quarter_wave_plate(axis_deg: float = 45.0) -> np.ndarray:
    return waveplate(math.pi / 2, axis_deg)


def linear_polarization(angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    return np.array([math.cos(a), math.sin(a)], dtype=complex)


def polarization_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """|<u|v>|^2 for normalized Jones vectors (global phase ignored)."""
    return float(abs(np.vdot(u, v)) ** 2)


# (setting, eigenvalue) -> linear polarization angle behind a QWP at 45 deg
QWP_TARGETS = {
    (Setting.A, +1): 67.5,
    (Setting.A, -1): -22.5,
    (Setting.B, +1): 22.5,
    (Setting.B, -1): -67.5,
}


@dataclass(frozen=True)
class QwpReport:
    passed: bool
    max_deviation: float
    mapping: dict[str, float]
    qwp4_identity_deviation: float


def _equal_up_to_phase(m: np.ndarray, target: np.ndarray) -> float:
    k = np.flatnonzero(np.abs(target.ravel()) > 0.5)[0]
    phase = m.ravel()[k] / target.ravel()[k]
    return float(np.max(np.abs(m - phase * target)))


def qwp_equivalence_check(tol: float = EXACT_TOL) -> QwpReport:
    """Check that a QWP at 45 deg turns sigma_a / sigma_b eigenstates into linear light.

    sigma_a eigenstates go to -22.5 and 67.5 deg, sigma_b eigenstates to
    -67.5 and 22.5 deg.
    """
    qwp = quarter_wave_plate(45.0)
    mapping = {}
    deviation = 0.0
    for (s, ev), angle in QWP_TARGETS.items():
        out = qwp @ eigenstate(s, ev)
        ov = polarization_overlap(linear_polarization(angle), out)
        mapping[f"{s.value}{'+' if ev > 0 else '-'}"] = angle
        deviation = max(deviation, abs(1.0 - ov))
    qwp4 = np.linalg.matrix_power(qwp, 4)
    id_dev = _equal_up_to_phase(qwp4, np.eye(2))
    return QwpReport(deviation <= tol and id_dev <= tol, deviation, mapping, id_dev)

