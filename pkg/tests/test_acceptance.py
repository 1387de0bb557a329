"""Acceptance gate: one test per criterion, each at its stated tolerance.

The summary section ``acceptance criteria`` prints one PASS/FAIL line per
criterion.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.stats import spearmanr

from sepdist.cli import EXIT_OK, main
from sepdist.correlations import eq1_report, eq2_report, one_way_deficit
from sepdist.protocol import (
    BellMixture,
    add_white_noise,
    bell_mixture,
    bell_mixture_pt_min,
    build_alpha_ab,
    build_alpha_c,
    build_beta,
    cphase,
    is_separable,
)
from sepdist.qstate import A_BC, B_AC, C_AB, min_eigenvalue, partial_transpose, tensor
from sepdist.separability import (
    EXACT_TOL,
    IDEAL_WEIGHTS,
    Certificate,
    certify_separable,
    empty_dictionary,
    extend_dictionary,
    seed_dictionary_ideal,
    verify_certificate,
)
from sepdist.sweep import default_p_values, monte_carlo_sweep

from .conftest import random_mixed_state
from .test_correlations import brute_force_deficit
from .test_protocol import corrected_printed_beta

NOISE_LEVELS = [0, 1 / 12, 1 / 6, 1 / 4, 1 / 3]
SWEEP_SEED = 2013
SWEEP_SAMPLES = 300
# frozen after the pilot run (seed 2013, 300 samples): every sample at p ~ 1/6 fell below
FIDELITY_BELOW_FRACTION = 0.9


def detail(request, text):
    request.node.criterion_detail = text


@pytest.mark.criterion("1")
def test_exact_beta(request):
    t0 = time.perf_counter()
    beta = cphase(tensor(build_alpha_ab(), build_alpha_c(-0.5)), 0, 2)
    elapsed = time.perf_counter() - t0
    err = np.max(np.abs(beta.matrix - corrected_printed_beta()))
    detail(request, f"max |beta - printed| = {err:.1e} with (8,8) = {beta.matrix[7, 7].real:+.6f}; {elapsed:.3f} s")
    assert err <= 1e-12
    assert beta.matrix[7, 7].real == pytest.approx(3 / 16, abs=1e-12)
    assert np.trace(beta.matrix).real == pytest.approx(1.0, abs=1e-12)
    assert elapsed < 1.0


@pytest.mark.criterion("2")
def test_entanglement_numbers(request, beta):
    t0 = time.perf_counter()
    lam = {str(c): min_eigenvalue(partial_transpose(beta, c)) for c in (A_BC, B_AC, C_AB)}
    elapsed = time.perf_counter() - t0
    detail(request, ", ".join(f"{k} {v:+.3e}" for k, v in lam.items()) + f"; {elapsed:.3f} s")
    assert lam["A|BC"] == pytest.approx(-0.0625, abs=1e-9)
    assert lam["B|AC"] >= -1e-9
    assert lam["C|AB"] >= -1e-9
    assert elapsed < 1.0


@pytest.mark.criterion("3")
def test_ideal_certificate(request, beta):
    d = seed_dictionary_ideal()
    printed = Certificate(d.entries, IDEAL_WEIGHTS.copy(), 0.0, C_AB, tol=1e-12)
    check = verify_certificate(printed, beta)
    found = certify_separable(beta, C_AB, d, EXACT_TOL)
    detail(
        request,
        f"printed weights residual {check.residual:.1e}; solver residual "
        f"{getattr(found, 'residual', float('nan')):.1e}",
    )
    assert check.residual <= 1e-12 and check
    assert found.certified and found.residual <= 1e-10
    assert verify_certificate(found, beta)


@pytest.mark.criterion("4")
def test_noisy_certificates(request, beta):
    d = extend_dictionary(seed_dictionary_ideal(), 3000, 0)
    residuals = []
    for p in NOISE_LEVELS:
        target = add_white_noise(beta, p)
        c = certify_separable(target, C_AB, d, 1e-6)
        assert c.certified, f"p = {p}: best residual {c.best_residual:.3e}"
        assert c.residual <= 1e-6
        assert verify_certificate(c, target)
        residuals.append(c.residual)
    detail(request, f"{len(NOISE_LEVELS)} noise levels, 3000 random + 12 seeded, max residual {max(residuals):.1e}")


@pytest.mark.criterion("5")
def test_soundness(request):
    rng = np.random.default_rng(555)
    dictionaries = {c: extend_dictionary(empty_dictionary(c), 3000, i) for i, c in enumerate((A_BC, B_AC, C_AB))}
    dictionaries[C_AB] = extend_dictionary(seed_dictionary_ideal(), 3000, 3)
    tested = passed = 0
    while tested < 200:
        cut = (A_BC, B_AC, C_AB)[tested % 3]
        target = random_mixed_state(rng, n_terms=int(rng.integers(1, 5)))
        if min_eigenvalue(partial_transpose(target, cut)) >= -1e-3:
            continue
        tested += 1
        passed += certify_separable(target, cut, dictionaries[cut], 1e-6).certified
    detail(request, f"{passed} passing certificates over {tested} entangled targets")
    assert passed == 0


@pytest.mark.criterion("6")
def test_information_inequalities(request, beta):
    rng = np.random.default_rng(66)
    slacks = [eq1_report(beta).slack] + [eq1_report(random_mixed_state(rng)).slack for _ in range(1000)]
    rep = eq2_report(beta)
    deficit = one_way_deficit(beta, 2).value
    oracle = brute_force_deficit(beta, 2, 10_000)
    detail(request, f"min information slack {min(slacks):+.3e}; deficit {deficit:.10f} (grid oracle {oracle:.10f})")
    assert min(slacks) >= -1e-9
    assert rep.n_a_bc < 0 and rep.d_comm > 1e-3 and rep.consistent
    # frozen anchor, matching the grid oracle to its resolution
    assert deficit == pytest.approx(0.0612781244591, abs=1e-9)
    assert deficit == pytest.approx(oracle, abs=1e-4)


@pytest.mark.criterion("7")
def test_bell_threshold(request):
    def mixture(q):
        r = (1 - q) / 3
        return BellMixture(q, r, r, 1 - q - 2 * r)

    for q in np.round(np.arange(0.30, 0.70 + 1e-9, 0.01), 10):
        m = mixture(q)
        lam = min_eigenvalue(partial_transpose(bell_mixture(m), "A|B"))
        assert is_separable(m) == (lam >= -1e-12), q
    crossing = brentq(lambda q: bell_mixture_pt_min(mixture(q)), 0.30, 0.70, xtol=1e-14)
    detail(request, f"41 mixtures agree; PT minimum crosses zero at {crossing:.12f}")
    assert crossing == pytest.approx(0.5, abs=1e-9)


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    result = monte_carlo_sweep(build_beta(), default_p_values(50), SWEEP_SAMPLES, rng_seed=SWEEP_SEED)
    return result, time.perf_counter() - t0


@pytest.mark.slow
@pytest.mark.criterion("8a")
def test_success_proportion_shape(request, sweep):
    result, elapsed = sweep
    prop = result.success_proportion
    rho = spearmanr(result.p_values, prop).statistic
    peak = int(np.argmax(prop))
    detail(
        request,
        f"Spearman {rho:.3f} (need > 0.9); proportion at p=1/3 {prop[-1]:.3f} (need > 0.9); "
        f"peak {prop[peak]:.3f} at p={result.p_values[peak]:.3f}; {elapsed:.0f} s",
    )
    assert elapsed <= 30 * 60
    assert rho > 0.9
    assert prop[-1] > 0.9


@pytest.mark.slow
@pytest.mark.criterion("8b")
def test_unentangled_cut_split(request, sweep):
    result, _ = sweep
    mean, se = result.mean()[0], result.standard_error()[0]
    gap = mean[2] - mean[1]
    z = gap / np.hypot(se[1], se[2])
    detail(request, f"p=0 means B|AC {mean[1]:+.5f}, C|AB {mean[2]:+.5f}; split {z:.1f} SE")
    assert z > 3


@pytest.mark.slow
@pytest.mark.criterion("8c")
def test_fidelity_skew(request, sweep):
    result, _ = sweep
    i = int(np.argmin(np.abs(result.p_values - 0.1667)))
    below = float(np.mean(result.fidelities[i] < result.reference_fidelity[i]))
    detail(
        request,
        f"p={result.p_values[i]:.4f}: {below:.1%} of fidelities below noiseless {result.reference_fidelity[i]:.6f}",
    )
    assert below >= FIDELITY_BELOW_FRACTION


@pytest.mark.criterion("9")
def test_sweep_determinism(request, tmp_path):
    args = ["sweep", "--pvalues", "6", "--samples", "12", "--seed", "99"]
    outputs = []
    for tag, jobs in (("a", 1), ("b", 1), ("c", 2)):
        assert main(args + ["--jobs", str(jobs), "--out", str(tmp_path / tag)]) == EXIT_OK
        outputs.append((tmp_path / tag / "sweep.csv").read_bytes())
    detail(request, f"3 runs (jobs 1, 1, 2), {len(outputs[0])} bytes each, identical={len(set(outputs)) == 1}")
    assert len(set(outputs)) == 1
