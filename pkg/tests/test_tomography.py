import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from sepdist.protocol import beta_product_terms
from sepdist.qstate import QuantumState, fidelity, min_eigenvalue
from sepdist.tomography import (
    CountsTable,
    MaximumLikelihoodTomography,
    MeasurementSetting,
    MLEConfig,
    expected_counts,
    linear_reconstruct,
    mle_reconstruct,
    outcome_probabilities,
    pauli_settings,
    simulate_counts,
    simulate_counts_by_terms,
)

from .conftest import random_mixed_state

KET000 = np.eye(8)[0]


class TestSettings:
    def test_count_and_order(self):
        s = pauli_settings()
        assert len(s) == 27
        assert str(s[0]) == "XXX" and str(s[-1]) == "ZZZ"
        assert [str(x) for x in s] == sorted(str(x) for x in s)

    def test_completeness_and_orthogonality(self):
        for s in pauli_settings():
            proj = s.projectors()
            np.testing.assert_allclose(proj.sum(axis=0), np.eye(8), atol=1e-12)
            vecs = s.outcome_vectors()
            np.testing.assert_allclose(vecs.conj() @ vecs.T, np.eye(8), atol=1e-12)

    def test_zzz_first_outcome(self):
        proj = MeasurementSetting("ZZZ").projectors()[0]
        np.testing.assert_array_equal(proj, np.outer(KET000, KET000))

    def test_plus_outcome_is_plus_eigenstate(self):
        v = MeasurementSetting("Y").outcome_vectors()[0]
        sy = np.array([[0, -1j], [1j, 0]])
        np.testing.assert_allclose(sy @ v, v, atol=1e-15)

    def test_invalid(self):
        with pytest.raises(ValueError):
            MeasurementSetting("XQ")


class TestSimulation:
    def test_basis_state_zzz(self):
        c = simulate_counts(QuantumState.from_vector(KET000), intensity=1000, rng_seed=0)
        zzz = c.counts[-1]
        assert zzz[0] > 0
        assert np.all(zzz[1:] == 0)

    def test_reproducible(self, beta):
        a = simulate_counts(beta, rng_seed=5).counts
        b = simulate_counts(beta, rng_seed=5).counts
        np.testing.assert_array_equal(a, b)

    def test_mean_and_variance(self, beta):
        n_seeds, intensity = 10_000, 1111.0
        rng = np.random.default_rng(2)
        settings = [MeasurementSetting("XZY")]
        samples = np.array([simulate_counts(beta, settings, intensity, rng).counts[0] for _ in range(n_seeds)])
        mean = intensity * outcome_probabilities(beta, settings)[0]
        se = np.sqrt(mean / n_seeds)
        assert np.all(np.abs(samples.mean(axis=0) - mean) < 3 * se + 1e-12)
        # variance of a Poisson variate equals its mean; relative SE of the sample variance ~ sqrt(2/n)
        var = samples.var(axis=0, ddof=1)
        assert np.all(np.abs(var / mean - 1) < 4 * np.sqrt(2 / n_seeds) + 4 / np.sqrt(mean * n_seeds))

    def test_non_positive_intensity(self, beta):
        with pytest.raises(ValueError):
            simulate_counts(beta, intensity=0)

    def test_single_term_matches_mixture_sampler(self, beta):
        # same seed, same single Poisson draw
        a = simulate_counts_by_terms([(1.0, beta)], intensity=500, rng_seed=3)
        b = simulate_counts(beta, intensity=500, rng_seed=3)
        np.testing.assert_array_equal(a.counts, b.counts)

    def test_terms_additivity(self, beta):
        terms = beta_product_terms()
        n = 400
        rng = np.random.default_rng(9)
        by_terms = np.mean([simulate_counts_by_terms(terms, intensity=1111, rng_seed=rng).total for _ in range(n)])
        mixed = np.mean([simulate_counts(beta, intensity=1111, rng_seed=rng).total for _ in range(n)])
        expected = 27 * 1111
        se = np.sqrt(expected / n)
        assert abs(by_terms - expected) < 4 * se
        assert abs(mixed - expected) < 4 * se

    def test_orthogonal_terms_split(self):
        c = simulate_counts_by_terms([(0.5, KET000), (0.5, np.eye(8)[7])], intensity=20000, rng_seed=1)
        zzz = c.counts[-1]
        assert zzz[0] + zzz[7] == zzz.sum()
        assert zzz[0] / zzz.sum() == pytest.approx(0.5, abs=0.03)

    def test_invalid_weights(self):
        with pytest.raises(ValueError, match="probability"):
            simulate_counts_by_terms([(0.6, KET000), (0.6, KET000)])

    def test_terms_reconstruct_beta(self, beta):
        c = simulate_counts_by_terms(beta_product_terms(), intensity=1e6, rng_seed=0)
        assert fidelity(mle_reconstruct(c).state, beta) > 0.999


class TestCountsTable:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            CountsTable(("Z",), [[1, -1]])

    def test_shape_rejected(self):
        with pytest.raises(ValueError):
            CountsTable(("Z",), [[1, 2, 3]])

    def test_csv_round_trip(self, beta):
        c = simulate_counts(beta, rng_seed=0)
        again = CountsTable.from_csv(c.to_csv(), c.intensity)
        np.testing.assert_array_equal(again.counts, c.counts)
        assert [str(s) for s in again.settings] == [str(s) for s in c.settings]

    def test_csv_layout(self, beta):
        lines = simulate_counts(beta, rng_seed=0).to_csv().splitlines()
        assert lines[0] == "setting,outcome,count"
        assert lines[1].startswith("XXX,000,")
        assert len(lines) == 1 + 27 * 8

    def test_json_round_trip_float_counts(self, beta):
        c = expected_counts(beta)
        again = CountsTable.from_json(c.to_json())
        np.testing.assert_array_equal(again.counts, c.counts)

    def test_complete(self, beta):
        assert simulate_counts(beta, rng_seed=0).is_complete()
        assert not CountsTable(("ZZZ",), [[1] * 8]).is_complete()


class TestLinear:
    def test_exact_beta(self, beta):
        rho = linear_reconstruct(expected_counts(beta))
        np.testing.assert_allclose(rho.matrix, beta.matrix, atol=1e-10)

    def test_exact_identity(self):
        rho = linear_reconstruct(expected_counts(QuantumState.maximally_mixed((2, 2, 2))))
        np.testing.assert_allclose(rho.matrix, np.eye(8) / 8, atol=1e-12)

    def test_random_exact(self, rng):
        s = random_mixed_state(rng)
        np.testing.assert_allclose(linear_reconstruct(expected_counts(s)).matrix, s.matrix, atol=1e-10)

    def test_low_counts_may_be_unphysical(self):
        # a pure state at 20 events per setting: linear inversion routinely leaves the PSD cone
        lows = [
            min_eigenvalue(linear_reconstruct(simulate_counts(QuantumState.from_vector(KET000), intensity=20, rng_seed=k)))
            for k in range(5)
        ]
        assert min(lows) < 0

    def test_incomplete(self):
        with pytest.raises(ValueError, match="complete"):
            linear_reconstruct(CountsTable(("ZZZ",), [[1] * 8]))


class TestMLE:
    def test_noiseless_fixed_point(self, beta):
        res = mle_reconstruct(expected_counts(beta))
        assert fidelity(res.state, beta) >= 1 - 1e-6

    def test_basis_state_low_counts(self):
        c = simulate_counts(QuantumState.from_vector(KET000), intensity=1000, rng_seed=0)
        rho = mle_reconstruct(c).state
        assert rho.matrix[0, 0].real >= 0.99

    def test_log_likelihood_monotone(self, beta):
        res = mle_reconstruct(simulate_counts(beta, rng_seed=4), record_history=True)
        h = np.array(res.history)
        assert len(h) > 2
        assert np.all(np.diff(h) >= 0)

    def test_large_intensity(self, beta):
        c = simulate_counts(beta, intensity=1e6, rng_seed=11)
        assert fidelity(mle_reconstruct(c).state, beta) >= 0.999

    def test_all_zero(self):
        with pytest.raises(ValueError, match="zero"):
            mle_reconstruct(CountsTable(tuple(pauli_settings()), np.zeros((27, 8))))

    def test_iteration_cap(self, beta):
        res = mle_reconstruct(simulate_counts(beta, rng_seed=1), MLEConfig(max_iterations=3))
        assert res.n_iter == 3 and not res.converged

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MLEConfig(max_iterations=0)
        with pytest.raises(ValueError):
            MLEConfig(convergence_tol=0)
        with pytest.raises(ValueError):
            MLEConfig(dilution=1.5)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(5, 5000))
    def test_output_always_physical(self, seed, intensity):
        rng = np.random.default_rng(seed)
        c = simulate_counts(random_mixed_state(rng, n_terms=1), intensity=intensity, rng_seed=rng)
        if c.total == 0:
            return
        res = mle_reconstruct(c, MLEConfig(max_iterations=300), record_history=True)
        lam = np.linalg.eigvalsh(res.state.matrix)
        assert lam.min() >= -1e-12
        assert np.trace(res.state.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(res.history) >= 0)


class TestEstimator:
    def test_fit_and_score(self, beta):
        c = simulate_counts(beta, rng_seed=0)
        est = MaximumLikelihoodTomography().fit(c)
        assert est.converged_
        assert fidelity(est.state_, beta) > 0.9
        # the fitted state explains its own counts at least as well as the truth
        truth = MaximumLikelihoodTomography()
        truth.state_ = beta
        assert est.score(c) >= truth.score(c)

    def test_params_and_clone(self):
        est = MaximumLikelihoodTomography(max_iterations=10)
        assert clone(est).get_params()["max_iterations"] == 10

    def test_type_check(self, beta):
        with pytest.raises(TypeError):
            MaximumLikelihoodTomography().fit(beta)
