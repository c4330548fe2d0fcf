import itertools
import math

import numpy as np
import pytest

from ghz4.mabk import (
    all_strategies,
    lhv_max,
    lhv_summary,
    mabk_expectation,
    mabk_operator,
    mabk_terms,
    quantum_max,
    threshold_visibilities,
    witness,
)
from ghz4.optics import NoiseParams, apply_noise, experimental_noise
from ghz4.qcore import (
    DensityMatrix,
    PureState,
    ghz_coherence,
    ghz_state,
    random_density_matrix,
)

S2 = math.sqrt(2)

# number of deterministic strategies reaching +2, frozen from the enumeration
N_STRATEGIES_AT_MAX = 128

PX = np.array([[0, 1], [1, 0]], complex)
PY = np.array([[0, -1j], [1j, 0]])


def operator_oracle() -> np.ndarray:
    """Bell operator written directly in factored form with textbook Paulis."""
    p = {"X": PX, "Y": PY}

    def poly(terms):
        out = 0
        for sign, word in terms:
            m = np.eye(1)
            for c in word:
                m = np.kron(m, p[c])
            out = out + sign * m
        return out

    a, b = (PX + PY) / S2, (PX - PY) / S2
    g1 = poly([(1, "XXX"), (-1, "XYY"), (1, "YXY"), (1, "YYX")])
    g2 = poly([(1, "YYY"), (-1, "YXX"), (1, "XYX"), (1, "XXY")])
    return 0.5 * np.kron(g1, a + b) + 0.5 * np.kron(g2, a - b)


def lhv_oracle() -> np.ndarray:
    """All 256 local scores, computed from the factored polynomial."""
    scores = []
    for x1, y1, x2, y2, x3, y3, va, vb in itertools.product((1, -1), repeat=8):
        g1 = x1 * x2 * x3 - x1 * y2 * y3 + y1 * x2 * y3 + y1 * y2 * x3
        g2 = y1 * y2 * y3 - y1 * x2 * x3 + x1 * y2 * x3 + x1 * x2 * y3
        scores.append(0.5 * g1 * (va + vb) + 0.5 * g2 * (va - vb))
    return np.array(scores)


class TestTerms:
    def test_count_and_weight(self):
        terms = mabk_terms()
        assert len(terms) == 16
        assert len({t.code for t in terms}) == 16
        assert sum(abs(t.coeff) for t in terms) == 8

    def test_expansion_examples(self):
        coeffs = {t.code: t.coeff for t in mabk_terms()}
        assert coeffs["XXXA"] == 0.5 and coeffs["XXXB"] == 0.5
        assert coeffs["YYYA"] == 0.5 and coeffs["YYYB"] == -0.5
        assert coeffs["XYYA"] == -0.5 and coeffs["YXXB"] == 0.5

    def test_matrix_matches_factored_form(self):
        assert np.allclose(mabk_operator(), operator_oracle(), atol=1e-12)


class TestOperator:
    def test_hermitian(self):
        a = mabk_operator()
        assert np.max(np.abs(a - a.conj().T)) < 1e-12

    def test_quantum_max(self):
        assert quantum_max() == pytest.approx(4 * S2, abs=1e-9)
        assert quantum_max() == pytest.approx(5.65685, abs=1e-5)

    def test_ghz_attains_max(self):
        assert abs(mabk_expectation(ghz_state())) == pytest.approx(quantum_max(), abs=1e-9)
        assert np.allclose(mabk_operator() @ ghz_state().amps, quantum_max() * ghz_state().amps, atol=1e-9)

    def test_only_couples_target_pair(self):
        a = mabk_operator()
        nz = {(i, j) for i, j in zip(*np.nonzero(np.abs(a) > 1e-12))}
        assert nz == {(6, 9), (9, 6)}

    def test_maximally_mixed(self):
        assert mabk_expectation(DensityMatrix.maximally_mixed()) == pytest.approx(0, abs=1e-12)

    def test_white_noise_at_experimental_visibility(self):
        v = 4.433 / (4 * S2)
        assert v == pytest.approx(0.78366, abs=1e-5)
        assert mabk_expectation(apply_noise(NoiseParams.white(v))) == pytest.approx(4.433, abs=1e-10)

    @pytest.mark.parametrize("v", [0, 0.25, 0.5, 0.75, 1])
    def test_linear_in_white_noise(self, v):
        assert mabk_expectation(apply_noise(NoiseParams.white(v))) == pytest.approx(v * 4 * S2, abs=1e-10)

    def test_random_states_term_sum_vs_trace_and_identity(self):
        rng = np.random.default_rng(2024)
        a = operator_oracle()
        for _ in range(100):
            rho = random_density_matrix(rng)
            val = mabk_expectation(rho)
            assert val == pytest.approx(np.trace(rho.entries @ a).real, abs=1e-10)
            assert val == pytest.approx(8 * S2 * ghz_coherence(rho), abs=1e-10)


class TestLocalBound:
    def test_strategy_space(self):
        assert len(all_strategies()) == 256

    def test_exhaustive_max(self):
        value, strategy = lhv_max()
        assert value == 2.0
        assert strategy.score() == 2.0

    def test_against_oracle(self):
        scores = lhv_oracle()
        s = lhv_summary()
        assert s.maximum == scores.max() == 2
        assert s.minimum == scores.min() == -2
        assert s.n_at_max == int(np.sum(scores == 2)) == N_STRATEGIES_AT_MAX

    def test_sign_flip_symmetry(self):
        # every term has exactly one photon-4 factor
        for st in all_strategies():
            flipped = type(st)(st.x, st.y, -st.a, -st.b)
            assert flipped.score() == -st.score()


class TestThresholds:
    def test_values(self):
        t = threshold_visibilities()
        assert t.mabk == pytest.approx(0.35355, abs=1e-5)
        assert round(t.mabk * 100, 1) == 35.4
        assert t.zukowski == 0.329
        assert t.ghz_ryff == 0.5


class TestWitness:
    def test_experimental_state(self):
        r = witness(apply_noise(experimental_noise()))
        assert r.a_value == pytest.approx(4.433, abs=1e-10)
        assert r.fidelity == pytest.approx(0.840, abs=1e-10)
        assert r.genuine and r.lhv_violated

    def test_zero_coherence(self):
        rho = DensityMatrix(
            (PureState.basis("HVVH").density().entries + PureState.basis("VHHV").density().entries) / 2
        )
        r = witness(rho)
        assert r.a_value == pytest.approx(0, abs=1e-12)
        assert r.fidelity == pytest.approx(0.5, abs=1e-12)
        assert not r.genuine

    def test_violation_without_genuine(self):
        r = witness(apply_noise(NoiseParams.white(0.6)))
        assert r.a_value == pytest.approx(0.6 * 4 * S2, abs=1e-10)
        assert r.a_value == pytest.approx(3.394, abs=1e-3)
        assert r.lhv_violated and not r.genuine

    def test_genuine_implies_violation(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            r = witness(random_density_matrix(rng, rank=2))
            assert not r.genuine or r.lhv_violated

    @pytest.mark.parametrize("split", [0.0, 0.3, 0.7, 1.0])
    def test_genuine_monotone_in_coherent_weight(self, split):
        flags = []
        for p_coh in np.linspace(0, 1, 41):
            rest = 1 - p_coh
            r = witness(apply_noise(NoiseParams(p_coh, rest * split, rest * (1 - split))))
            flags.append(r.genuine)
        first = flags.index(True)
        assert all(flags[first:])
