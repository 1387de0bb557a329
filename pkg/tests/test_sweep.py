import json

import numpy as np
import pytest

from sepdist.protocol import beta_product_terms
from sepdist.qstate import QuantumState
from sepdist.sweep import CUT_NAMES, default_p_values, is_success, monte_carlo_sweep, theory_min_eigs


@pytest.fixture(scope="module")
def small(beta):
    return monte_carlo_sweep(beta, p_values=[0.0, 0.2, 1.0], samples_per_p=8, rng_seed=3)


def test_default_grid():
    p = default_p_values()
    assert len(p) == 50
    assert p[0] == 0 and p[-1] == pytest.approx(1 / 3)


def test_success_rule_has_no_tolerance_band():
    assert is_success([-1e-9, 1e-9, 1e-9])
    assert not is_success([0.0, 0.1, 0.1])
    assert not is_success([-0.1, 0.0, 0.1])
    assert not is_success([-0.1, 0.1, -1e-12])


def test_shapes(small):
    assert small.min_eigs.shape == (3, 8, 3)
    assert small.fidelities.shape == (3, 8)
    assert small.samples_per_p == 8
    assert np.all((0 <= small.success_proportion) & (small.success_proportion <= 1))


def test_white_noise_never_succeeds(small):
    # the maximally mixed target sits at +1/8 on every cut
    assert small.success_proportion[-1] == 0
    assert np.all(small.min_eigs[-1, :, 0] > 0)


def test_theory_lines(beta, small):
    np.testing.assert_allclose(small.theory_min_eigs[:, 0], [-1 / 16, 0.8 * -1 / 16 + 0.2 / 8, 1 / 8], atol=1e-12)
    np.testing.assert_allclose(theory_min_eigs(beta, 0.0)[1:], 0.0, atol=1e-12)


def test_deterministic_and_parallel_invariant(beta, small):
    again = monte_carlo_sweep(beta, p_values=[0.0, 0.2, 1.0], samples_per_p=8, rng_seed=3, n_jobs=2)
    assert again.to_csv() == small.to_csv()
    np.testing.assert_array_equal(again.min_eigs, small.min_eigs)


def test_seed_changes_results(beta, small):
    other = monte_carlo_sweep(beta, p_values=[0.0, 0.2, 1.0], samples_per_p=8, rng_seed=4)
    assert not np.array_equal(other.min_eigs, small.min_eigs)


def test_prefix_stability(beta, small):
    # per-sample streams: a shorter run reproduces the first samples exactly
    short = monte_carlo_sweep(beta, p_values=[0.0], samples_per_p=3, rng_seed=3)
    np.testing.assert_array_equal(short.min_eigs[0], small.min_eigs[0, :3])


def test_csv_layout(small):
    lines = small.to_csv().splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):])["seed"] == 3
    header = lines[1].split(",")
    assert header[:2] == ["p", "n_samples"]
    for name in CUT_NAMES:
        tag = name.replace("|", "_")
        assert {f"mean_{tag}", f"std_{tag}", f"q05_{tag}", f"q95_{tag}"} <= set(header)
    assert "success_proportion" in header
    assert len(lines) == 2 + 3


def test_json(small):
    data = json.loads(small.to_json())
    assert data["cuts"] == list(CUT_NAMES)
    assert len(data["rows"]) == 3
    assert data["config"]["samples_per_p"] == 8


def test_terms_mode(beta):
    res = monte_carlo_sweep(beta, [0.1], 4, mode="terms", base_terms=beta_product_terms(), rng_seed=1)
    assert res.min_eigs.shape == (1, 4, 3)
    eig = monte_carlo_sweep(beta, [0.1], 4, mode="terms", rng_seed=1)
    assert eig.config["mode"] == "terms"


@pytest.mark.parametrize(
    "kwargs",
    [{"p_values": [1.5]}, {"samples_per_p": 0}, {"mode": "other"}],
)
def test_invalid(beta, kwargs):
    with pytest.raises(ValueError):
        monte_carlo_sweep(beta, **{"p_values": [0.0], "samples_per_p": 1, **kwargs})


def test_requires_three_qubits():
    with pytest.raises(ValueError):
        monte_carlo_sweep(QuantumState.maximally_mixed((2, 2)), [0.0], 1)
