"""Poisson coincidence-count simulation and error propagation for <A>.

Each outcome of each setting is counted independently with Poisson mean
``rate_total * integration_s * p(outcome)``.  Correlations are estimated by
relative frequencies with the multinomial variance ``(1 - E^2)/N`` and the
16 settings are treated as independent when propagating to ``sigma(<A>)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mabk import LHV_BOUND, mabk_expectation, mabk_terms
from .qcore import (
    DIM,
    OUTCOME_PARITY,
    DensityMatrix,
    PureState,
    SettingVector,
    as_density,
    outcome_distribution,
)

RNG_ALGORITHM = "PCG64"
DEFAULT_RATE = 2.6  # fourfold coincidences per second, all outcomes of one setting
DEFAULT_INTEGRATION_S = 1000.0


def mabk_settings() -> tuple[SettingVector, ...]:
    return tuple(t.sv for t in mabk_terms())


@dataclass(frozen=True)
class RunConfig:
    rate_total: float = DEFAULT_RATE
    integration_s: float = DEFAULT_INTEGRATION_S
    seed: int = 0
    settings: tuple[SettingVector, ...] = field(default_factory=mabk_settings)

    def __post_init__(self) -> None:
        if not (self.rate_total > 0 and math.isfinite(self.rate_total)):
            raise ValueError(f"rate_total must be positive, got {self.rate_total}")
        if not (self.integration_s > 0 and math.isfinite(self.integration_s)):
            raise ValueError(f"integration_s must be positive, got {self.integration_s}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")
        object.__setattr__(self, "settings", tuple(SettingVector.parse(s) for s in self.settings))

    @property
    def expected_total(self) -> float:
        return self.rate_total * self.integration_s


@dataclass(frozen=True, eq=False)
class CountRecord:
    sv: SettingVector
    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if c.shape != (DIM,) or (c < 0).any():
            raise ValueError("a count record needs 16 non-negative integers")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def rows(self) -> list[dict[str, object]]:
        labels = self.sv.outcome_labels()
        return [{"setting": self.sv.code, "outcome": labels[i], "count": int(n)} for i, n in enumerate(self.counts)]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for replication ``stream`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def expected_counts(rho: PureState | DensityMatrix, cfg: RunConfig) -> np.ndarray:
    """(n_settings, 16) array of Poisson means."""
    rho = as_density(rho)
    probs = np.array([outcome_distribution(rho, sv).probs for sv in cfg.settings])
    return cfg.expected_total * probs


def _draw(means: np.ndarray, cfg: RunConfig, rng: np.random.Generator) -> list[CountRecord]:
    counts = rng.poisson(means)
    return [CountRecord(sv, c) for sv, c in zip(cfg.settings, counts)]


def simulate_counts(
    rho: PureState | DensityMatrix, cfg: RunConfig, stream: int = 0
) -> list[CountRecord]:
    return _draw(expected_counts(rho, cfg), cfg, make_rng(cfg.seed, stream))


def estimate_correlation(rec: CountRecord) -> tuple[float, float]:
    """Frequency estimate of the parity correlation and its variance."""
    n = rec.total
    if n == 0:
        raise ValueError(f"setting {rec.sv.code} has no counts; correlation undefined")
    e = float(OUTCOME_PARITY @ rec.counts) / n
    return e, (1.0 - e * e) / n


@dataclass(frozen=True)
class AEstimate:
    value: float
    sigma: float

    @property
    def sigmas_of_violation(self) -> float:
        return violation_in_sigmas(self.value, self.sigma)

    def as_dict(self) -> dict[str, float]:
        return {
            "value": self.value,
            "sigma": self.sigma,
            "sigmas_of_violation": self.sigmas_of_violation,
        }


def violation_in_sigmas(value: float, sigma: float) -> float:
    excess = abs(value) - LHV_BOUND
    if sigma > 0:
        return excess / sigma
    return math.copysign(math.inf, excess) if excess else 0.0


def estimate_A(records: Sequence[CountRecord]) -> AEstimate:
    by_setting = {r.sv.code: r for r in records}
    terms = mabk_terms()
    missing = [t.code for t in terms if t.code not in by_setting]
    if missing:
        raise ValueError(f"missing count records for settings: {', '.join(missing)}")
    value = 0.0
    variance = 0.0
    for t in terms:
        e, var = estimate_correlation(by_setting[t.code])
        value += t.coeff * e
        variance += t.coeff**2 * var
    return AEstimate(value, math.sqrt(variance))


@dataclass(frozen=True)
class ReplicationSummary:
    n_rep: int
    analytic_value: float
    mean_value: float
    empirical_sigma: float
    mean_sigma: float
    mean_sigmas_of_violation: float
    seed: int
    rng: str = RNG_ALGORITHM

    MIN_REPS_FOR_CHECK = 200
    SIGMA_AGREEMENT = 0.15

    @property
    def sigma_ratio(self) -> float:
        return self.empirical_sigma / self.mean_sigma

    @property
    def agreement_checked(self) -> bool:
        return self.n_rep >= self.MIN_REPS_FOR_CHECK

    @property
    def sigma_agreement(self) -> bool | None:
        """None when there are too few replications to judge."""
        if not self.agreement_checked:
            return None
        return abs(self.sigma_ratio - 1.0) < self.SIGMA_AGREEMENT

    @property
    def standard_error(self) -> float:
        return self.empirical_sigma / math.sqrt(self.n_rep)

    @property
    def bias_in_standard_errors(self) -> float:
        return abs(self.mean_value - self.analytic_value) / self.standard_error

    def as_dict(self) -> dict[str, object]:
        return {
            "n_rep": self.n_rep,
            "analytic_value": self.analytic_value,
            "mean_value": self.mean_value,
            "empirical_sigma": self.empirical_sigma,
            "mean_sigma": self.mean_sigma,
            "sigma_ratio": self.sigma_ratio,
            "sigma_agreement": self.sigma_agreement,
            "mean_sigmas_of_violation": self.mean_sigmas_of_violation,
            "bias_in_standard_errors": self.bias_in_standard_errors,
            "seed": self.seed,
            "rng": self.rng,
        }


def replicate(
    rho: PureState | DensityMatrix, cfg: RunConfig, n_rep: int, workers: int = 1
) -> tuple[ReplicationSummary, list[AEstimate]]:
    """Run ``n_rep`` independent experiments; replication i uses stream i."""
    if n_rep < 2:
        raise ValueError("need at least two replications")
    rho = as_density(rho)
    means = expected_counts(rho, cfg)

    def one(i: int) -> AEstimate:
        return estimate_A(_draw(means, cfg, make_rng(cfg.seed, i)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(one, range(n_rep)))
    else:
        estimates = [one(i) for i in range(n_rep)]

    values = np.array([e.value for e in estimates])
    summary = ReplicationSummary(
        n_rep=n_rep,
        analytic_value=mabk_expectation(rho),
        mean_value=float(values.mean()),
        empirical_sigma=float(values.std(ddof=1)),
        mean_sigma=float(np.mean([e.sigma for e in estimates])),
        mean_sigmas_of_violation=float(np.mean([e.sigmas_of_violation for e in estimates])),
        seed=cfg.seed,
    )
    return summary, estimates
