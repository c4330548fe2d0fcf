import math

import numpy as np
import pytest

from ghz4.mabk import mabk_expectation
from ghz4.optics import NoiseParams, apply_noise, experimental_noise
from ghz4.qcore import DIM, OUTCOME_PARITY, DensityMatrix, SettingVector, ghz_state
from ghz4.stats import (
    AEstimate,
    CountRecord,
    RunConfig,
    estimate_A,
    estimate_correlation,
    expected_counts,
    make_rng,
    replicate,
    simulate_counts,
)


@pytest.fixture(scope="module")
def fitted():
    return apply_noise(experimental_noise())


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.expected_total == pytest.approx(2600)
        assert len(cfg.settings) == 16

    @pytest.mark.parametrize("kw", [{"rate_total": 0}, {"integration_s": -1}, {"seed": -3}, {"seed": 1.5}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            RunConfig(**kw)


class TestSimulateCounts:
    def test_mean_total(self, fitted):
        means = expected_counts(fitted, RunConfig())
        assert np.allclose(means.sum(axis=1), 2600)

    def test_empirical_mean_total(self, fitted):
        cfg = RunConfig(seed=9)
        totals = [r.total for r in simulate_counts(fitted, cfg)]
        # 16 Poisson(2600) totals: mean within 4 standard errors
        assert abs(np.mean(totals) - 2600) < 4 * math.sqrt(2600 / 16)

    @pytest.mark.parametrize("code", ["XXXX", "XYXY", "XXYY"])
    def test_parity_conservation(self, code):
        cfg = RunConfig(seed=4, settings=(SettingVector.parse(code),))
        for stream in range(5):
            (rec,) = simulate_counts(ghz_state(), cfg, stream)
            assert rec.counts[OUTCOME_PARITY == -1].sum() == 0
            assert rec.total > 0

    def test_deterministic(self, fitted):
        cfg = RunConfig(seed=123)
        a = simulate_counts(fitted, cfg)
        b = simulate_counts(fitted, cfg)
        assert all(np.array_equal(x.counts, y.counts) for x, y in zip(a, b))
        assert estimate_A(a) == estimate_A(b)

    def test_streams_differ(self, fitted):
        cfg = RunConfig(seed=123)
        a = simulate_counts(fitted, cfg, 0)
        b = simulate_counts(fitted, cfg, 1)
        assert not all(np.array_equal(x.counts, y.counts) for x, y in zip(a, b))

    def test_rng_is_pcg64(self):
        assert isinstance(make_rng(1).bit_generator, np.random.PCG64)


class TestEstimateCorrelation:
    def test_perfect(self):
        counts = np.where(OUTCOME_PARITY == 1, 10, 0)
        e, var = estimate_correlation(CountRecord(SettingVector.parse("XXXX"), counts))
        assert e == 1 and var == 0

    def test_uniform(self):
        e, var = estimate_correlation(CountRecord(SettingVector.parse("XXXX"), np.full(DIM, 5)))
        assert e == 0
        assert var == pytest.approx(1 / 80)

    def test_empty(self):
        with pytest.raises(ValueError):
            estimate_correlation(CountRecord(SettingVector.parse("XXXX"), np.zeros(DIM)))

    def test_xxxa_ideal(self):
        # expectation 1/sqrt2; var = (1 - 1/2)/2600
        assert math.sqrt(0.5 / 2600) == pytest.approx(0.0139, abs=1e-4)
        cfg = RunConfig(seed=77, settings=(SettingVector.parse("XXXA"),))
        es = [estimate_correlation(simulate_counts(ghz_state(), cfg, i)[0])[0] for i in range(300)]
        assert np.mean(es) == pytest.approx(1 / math.sqrt(2), abs=4 * 0.0139 / math.sqrt(300))
        assert np.std(es, ddof=1) == pytest.approx(0.0139, rel=0.15)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            CountRecord(SettingVector.parse("XXXX"), -np.ones(DIM))


class TestEstimateA:
    def test_missing_setting(self, fitted):
        recs = simulate_counts(fitted, RunConfig(seed=1))
        with pytest.raises(ValueError, match="missing"):
            estimate_A(recs[:-1])

    def test_experiment_single_run(self, fitted):
        est = estimate_A(simulate_counts(fitted, RunConfig(seed=2)))
        assert est.value == pytest.approx(4.43, rel=0.03)
        assert est.sigma == pytest.approx(0.032, rel=0.30)
        assert est.sigmas_of_violation == pytest.approx(76, rel=0.25)

    def test_ideal_large_n(self):
        est = estimate_A(simulate_counts(ghz_state(), RunConfig(rate_total=1000, integration_s=1000, seed=3)))
        assert est.value == pytest.approx(4 * math.sqrt(2), abs=0.02)
        assert est.sigmas_of_violation > 1000

    def test_maximally_mixed(self):
        est = estimate_A(simulate_counts(DensityMatrix.maximally_mixed(), RunConfig(seed=8)))
        assert abs(est.value) < 0.2
        assert est.sigmas_of_violation <= 0

    def test_sigmas_formula(self):
        est = AEstimate(4.433, 0.032)
        assert est.sigmas_of_violation == pytest.approx((4.433 - 2) / 0.032)
        assert AEstimate(-4.433, 0.032).sigmas_of_violation == est.sigmas_of_violation


class TestReplicate:
    def test_two_reps_skips_check(self, fitted):
        summary, estimates = replicate(fitted, RunConfig(seed=0), 2)
        assert len(estimates) == 2
        assert summary.agreement_checked is False
        assert summary.sigma_agreement is None

    def test_one_rep_rejected(self, fitted):
        with pytest.raises(ValueError):
            replicate(fitted, RunConfig(), 1)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_sigma_agreement_and_unbiasedness(self, fitted, seed):
        summary, _ = replicate(fitted, RunConfig(seed=seed), 200)
        assert summary.sigma_agreement is True
        assert abs(summary.sigma_ratio - 1) < 0.15
        assert summary.bias_in_standard_errors < 3
        assert summary.analytic_value == pytest.approx(mabk_expectation(fitted))

    def test_parallel_matches_serial(self, fitted):
        cfg = RunConfig(seed=5)
        a, ea = replicate(fitted, cfg, 20)
        b, eb = replicate(fitted, cfg, 20, workers=4)
        assert ea == eb
        assert a == b

    def test_white_noise_state(self):
        rho = apply_noise(NoiseParams.white(0.784))
        summary, _ = replicate(rho, RunConfig(seed=11), 200)
        assert summary.mean_value == pytest.approx(0.784 * 4 * math.sqrt(2), abs=4 * summary.standard_error)
