"""Finite-count Pauli tomography: Poisson count simulation and reconstruction.

Each of the ``3**n`` settings measures every qubit in the X, Y or Z basis and
records ``2**n`` outcome counts.  Outcome bit 0 is the +1 eigenstate.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive, check_random_state
from .qstate import QuantumState, RawMatrix

_S2 = np.sqrt(2.0)
# rows: +1 eigenvector, -1 eigenvector
EIGENBASES = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / _S2,
    "Y": np.array([[1, 1j], [1, -1j]], dtype=complex) / _S2,
    "Z": np.array([[1, 0], [0, 1]], dtype=complex),
}
PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# experiment total of ~30,000 events spread over 27 settings
DEFAULT_INTENSITY = 30000 / 27


@dataclass(frozen=True)
class MeasurementSetting:
    """Product Pauli basis, e.g. ``"XYZ"``; qubit order follows the register."""

    bases: str

    def __post_init__(self):
        if not self.bases or any(b not in EIGENBASES for b in self.bases):
            raise ValueError(f"bases must be a string over 'XYZ', got {self.bases!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.bases)

    def outcome_vectors(self) -> np.ndarray:
        """Row ``o`` is the product eigenvector for outcome bits of ``o`` (big-endian)."""
        return _outcome_vectors(self.bases)

    def projectors(self) -> np.ndarray:
        vecs = self.outcome_vectors()
        return np.einsum("oi,oj->oij", vecs, vecs.conj())

    def __str__(self):
        return self.bases


@lru_cache(maxsize=None)
def _outcome_vectors(bases: str) -> np.ndarray:
    rows = []
    for bits in itertools.product((0, 1), repeat=len(bases)):
        vec = np.ones(1, dtype=complex)
        for b, bit in zip(bases, bits):
            vec = np.kron(vec, EIGENBASES[b][bit])
        rows.append(vec)
    out = np.array(rows)
    out.setflags(write=False)
    return out


def pauli_settings(n_qubits: int = 3) -> list:
    """All ``3**n_qubits`` settings in lexicographic order (XXX ... ZZZ)."""
    return [MeasurementSetting("".join(p)) for p in itertools.product("XYZ", repeat=n_qubits)]


@lru_cache(maxsize=None)
def _design(bases_key: tuple):
    """Stacked outcome vectors for a settings tuple, shape (n_settings * 2**n, 2**n)."""
    vecs = np.concatenate([_outcome_vectors(b) for b in bases_key])
    vecs.setflags(write=False)
    return vecs


def _bases_key(settings) -> tuple:
    return tuple(str(s) for s in settings)


@dataclass(frozen=True, eq=False)
class CountsTable:
    """Outcome counts, one row of ``2**n`` counts per setting.

    Counts may be floats when they hold exact expectations rather than samples.
    """

    settings: tuple
    counts: np.ndarray
    intensity: float = DEFAULT_INTENSITY
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        settings = tuple(
            s if isinstance(s, MeasurementSetting) else MeasurementSetting(str(s)) for s in self.settings
        )
        counts = np.array(self.counts, copy=True)
        if counts.ndim != 2 or counts.shape[0] != len(settings):
            raise ValueError(f"counts must have one row per setting, got shape {counts.shape}")
        n = settings[0].n_qubits if settings else 0
        if counts.shape[1] != 2**n:
            raise ValueError(f"expected {2 ** n} outcomes per setting, got {counts.shape[1]}")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValueError("counts must be finite and non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "counts", counts)

    @property
    def n_qubits(self) -> int:
        return self.settings[0].n_qubits

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def is_complete(self) -> bool:
        return set(_bases_key(self.settings)) == set(_bases_key(pauli_settings(self.n_qubits)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["setting", "outcome", "count"])
        n = self.n_qubits
        for s, row in zip(self.settings, self.counts):
            for o, c in enumerate(row):
                writer.writerow([str(s), format(o, f"0{n}b"), _fmt_count(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, intensity=DEFAULT_INTENSITY):
        lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
        rows = [r for r in csv.DictReader(lines) if r.get("setting")]
        if not rows:
            raise ValueError("counts CSV has no rows")
        order, table = [], {}
        for r in rows:
            s = r["setting"].strip()
            if s not in table:
                order.append(s)
                table[s] = np.zeros(2 ** len(s))
            table[s][int(r["outcome"], 2)] = float(r["count"])
        counts = np.array([table[s] for s in order])
        if np.all(counts == np.round(counts)):
            counts = counts.astype(np.int64)
        return cls(tuple(order), counts, intensity)

    def to_dict(self) -> dict:
        return {
            "settings": [str(s) for s in self.settings],
            "counts": [[_json_count(c) for c in row] for row in self.counts],
            "intensity": self.intensity,
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_dict(cls, data: dict):
        counts = np.asarray(data["counts"])
        return cls(tuple(data["settings"]), counts, float(data.get("intensity", DEFAULT_INTENSITY)), data.get("meta", {}))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


def _fmt_count(c):
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def _json_count(c):
    return int(c) if float(c).is_integer() else float(c)


def outcome_probabilities(s, settings=None) -> np.ndarray:
    """``Tr(s Pi)`` for every setting and outcome, shape ``(n_settings, 2**n)``."""
    if settings is None:
        settings = pauli_settings(len(s.dims))
    vecs = _design(_bases_key(settings))
    matrix = getattr(s, "matrix", s)
    probs = np.real(np.einsum("ki,ij,kj->k", vecs.conj(), matrix, vecs))
    return np.clip(probs, 0.0, None).reshape(len(settings), -1)


def expected_counts(s, settings=None, intensity=DEFAULT_INTENSITY) -> CountsTable:
    """Noise-free mean counts ``N Tr(s Pi)``."""
    if settings is None:
        settings = pauli_settings(len(s.dims))
    return CountsTable(tuple(settings), intensity * outcome_probabilities(s, settings), intensity)


def simulate_counts(s, settings=None, intensity=DEFAULT_INTENSITY, rng_seed=None) -> CountsTable:
    """Independent Poisson counts with mean ``intensity * Tr(s Pi)`` per outcome."""
    check_positive(intensity, "intensity")
    if settings is None:
        settings = pauli_settings(len(s.dims))
    rng = check_random_state(rng_seed)
    mean = intensity * outcome_probabilities(s, settings)
    return CountsTable(tuple(settings), rng.poisson(mean), intensity)


def simulate_counts_by_terms(terms, settings=None, intensity=DEFAULT_INTENSITY, rng_seed=None) -> CountsTable:
    """Accumulate Poisson counts term by term, each term measured for a time
    proportional to its weight.

    ``terms`` is a sequence of ``(weight, state)`` with states given as
    :class:`QuantumState` or state vectors.
    """
    check_positive(intensity, "intensity")
    weights = np.array([w for w, _ in terms], dtype=float)
    if weights.size == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"term weights must be a probability vector, got {weights.tolist()}")
    states = [_as_density(st) for _, st in terms]
    if settings is None:
        settings = pauli_settings(int(round(np.log2(states[0].shape[0]))))
    rng = check_random_state(rng_seed)
    total = np.zeros((len(settings), states[0].shape[0]), dtype=np.int64)
    for w, rho in zip(weights, states):
        total += rng.poisson(w * intensity * outcome_probabilities(rho, settings))
    return CountsTable(tuple(settings), total, intensity)


def _as_density(st):
    if isinstance(st, RawMatrix):
        return st.matrix
    arr = np.asarray(st, dtype=complex)
    if arr.ndim == 1:
        arr = arr / np.linalg.norm(arr)
        return np.outer(arr, arr.conj())
    return arr


def _frequencies(c: CountsTable):
    totals = c.counts.sum(axis=1, keepdims=True).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        freq = np.where(totals > 0, c.counts / np.where(totals > 0, totals, 1), 0.0)
    return freq, totals.ravel() > 0


@lru_cache(maxsize=None)
def _pauli_strings(n):
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=n))


@lru_cache(maxsize=None)
def _pauli_operator(label):
    op = np.ones((1, 1), dtype=complex)
    for ch in label:
        op = np.kron(op, PAULIS[ch])
    return op


def linear_reconstruct(c: CountsTable) -> RawMatrix:
    """Least-squares linear inversion in the Pauli basis.

    The result is Hermitian with unit trace but may have negative eigenvalues.
    """
    if not c.is_complete():
        raise ValueError("linear inversion needs the complete set of Pauli settings")
    n = c.n_qubits
    d = 2**n
    freq, measured = _frequencies(c)
    if not measured.any():
        raise ValueError("no counts recorded")
    labels = _pauli_strings(n)[1:]
    vecs = _design(_bases_key(c.settings)).reshape(len(c.settings), d, d)[measured].reshape(-1, d)
    # Tr(Pi_k P)/d for every outcome k and non-identity Pauli P
    ops = np.array([_pauli_operator(lbl) for lbl in labels])
    design = np.real(np.einsum("ki,pij,kj->kp", vecs.conj(), ops, vecs)) / d
    rhs = freq[measured].ravel() - 1.0 / d
    coeffs = np.linalg.lstsq(design, rhs, rcond=None)[0]
    rho = np.eye(d, dtype=complex) / d + np.einsum("p,pij->ij", coeffs, ops) / d
    return RawMatrix((rho + rho.conj().T) / 2, (2,) * n, "linear")


@dataclass(frozen=True)
class MLEConfig:
    """Iterative R-rho-R settings.

    ``dilution`` is the step used when a plain R-rho-R update would lower the
    likelihood; it is halved until the likelihood rises again.
    """

    max_iterations: int = 5000
    convergence_tol: float = 1e-10
    dilution: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if not 0 < self.dilution <= 1:
            raise ValueError("dilution must lie in (0, 1]")


@dataclass
class MLEResult:
    state: QuantumState
    log_likelihood: float
    n_iter: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _log_likelihood(n, probs):
    mask = n > 0
    return float(np.sum(n[mask] * np.log(probs[mask])))


def mle_reconstruct(c: CountsTable, cfg: MLEConfig = MLEConfig(), rho0=None, record_history=False) -> MLEResult:
    """Maximum-likelihood state from counts by diluted R-rho-R iteration.

    Settings share one intensity, so the Poisson likelihood reduces to the
    multinomial ``sum_k n_k log Tr(rho Pi_k)``.  Every accepted step raises
    the log-likelihood.
    """
    n_counts = np.asarray(c.counts, dtype=float).ravel()
    total = n_counts.sum()
    if total <= 0:
        raise ValueError("cannot reconstruct from all-zero counts")
    d = 2**c.n_qubits
    vecs = _design(_bases_key(c.settings))
    n_settings = len(c.settings)
    freq = n_counts / total
    mask = freq > 0
    v, vh = vecs[mask], vecs[mask].conj()
    f = freq[mask]

    vt = np.ascontiguousarray(v.T)

    def probs(rho):
        return np.real(np.sum((vh @ rho) * v, axis=1)) / n_settings

    def r_operator(p):
        # sum_k (f_k / p_k) Pi_k / n_settings; equals I at the optimum
        return (vt * (f / p / n_settings)) @ vh

    rho = np.eye(d, dtype=complex) / d if rho0 is None else np.array(getattr(rho0, "matrix", rho0), dtype=complex)
    p = probs(rho)
    ll = float(np.sum(f * np.log(p)))
    history = [ll] if record_history else []
    converged = False
    it = 0
    eye = np.eye(d)
    for it in range(1, cfg.max_iterations + 1):
        R = r_operator(p)
        # plain R-rho-R first, then diluted steps (I + eps R) until the likelihood rises
        step, eps = R, cfg.dilution
        while True:
            new = step @ rho @ step.conj().T
            new = (new + new.conj().T) / 2
            new /= np.real(np.trace(new))
            p_new = probs(new)
            ll_new = float(np.sum(f * np.log(p_new))) if np.all(p_new > 0) else -np.inf
            if ll_new >= ll:
                break
            if eps < 1e-12:
                new, p_new, ll_new = rho, p, ll
                break
            step = (eye + eps * R) / (1 + eps)
            eps /= 2
        change = ll_new - ll
        rho, p = new, p_new
        ll_prev, ll = ll, ll_new
        if record_history:
            history.append(ll)
        if change <= cfg.convergence_tol * abs(ll_prev):
            converged = True
            break
    state = QuantumState(_hermitian_normalised(rho), (2,) * c.n_qubits, "mle")
    return MLEResult(state, ll * total, it, converged, history)


def _hermitian_normalised(rho):
    rho = (rho + rho.conj().T) / 2
    lam, vec = np.linalg.eigh(rho)
    lam = np.clip(lam, 0.0, None)
    rho = (vec * lam) @ vec.conj().T
    return rho / np.real(np.trace(rho))


class MaximumLikelihoodTomography(BaseEstimator):
    """Estimator front end for :func:`mle_reconstruct`.

    ``fit`` takes a :class:`CountsTable`; the reconstructed state is stored
    in ``state_``.
    """

    def __init__(self, max_iterations=5000, convergence_tol=1e-10, dilution=1.0):
        self.max_iterations = max_iterations
        self.convergence_tol = convergence_tol
        self.dilution = dilution

    def fit(self, X, y=None):
        if not isinstance(X, CountsTable):
            raise TypeError(f"expected a CountsTable, got {type(X).__name__}")
        cfg = MLEConfig(self.max_iterations, self.convergence_tol, self.dilution)
        res = mle_reconstruct(X, cfg)
        self.state_ = res.state
        self.log_likelihood_ = res.log_likelihood
        self.n_iter_ = res.n_iter
        self.converged_ = res.converged
        return self

    def score(self, X, y=None):
        """Per-event log-likelihood of counts ``X`` under the fitted state."""
        probs = outcome_probabilities(self.state_, X.settings).ravel() / len(X.settings)
        n = np.asarray(X.counts, dtype=float).ravel()
        return _log_likelihood(n, np.clip(probs, 1e-300, None)) / n.sum()
