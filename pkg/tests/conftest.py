import numpy as np
import pytest

from sepdist.protocol import build_beta
from sepdist.qstate import QuantumState


def random_pure(rng, d):
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_mixed_state(rng, n_qubits=3, n_terms=None):
    """Random mixture of random pure states."""
    d = 2**n_qubits
    n_terms = n_terms or int(rng.integers(1, 2 * d))
    weights = rng.dirichlet(np.ones(n_terms))
    rho = sum(w * np.outer(v, v.conj()) for w, v in ((w, random_pure(rng, d)) for w in weights))
    return QuantumState((rho + rho.conj().T) / 2, (2,) * n_qubits)


@pytest.fixture(scope="session")
def beta():
    return build_beta()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA[label] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: (int("".join(c for c in s if c.isdigit())), s)):
        status, detail = _CRITERIA[label]
        terminalreporter.write_line(f"criterion {label:<3} {status}  {detail}")
