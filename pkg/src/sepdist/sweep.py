"""White-noise sweep of finite-count tomography.

For each noise level ``p`` the target ``(1 - p) base + p I/d`` is measured with
Poisson statistics, reconstructed by maximum likelihood and scored on the
three single-qubit cuts.  Every sample draws from its own RNG stream keyed by
``(seed, p_index, sample_index)``, so results do not depend on ``n_jobs``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .correlations import cut_report
from .protocol import add_white_noise
from .qstate import THREE_QUBIT_CUTS, QuantumState, fidelity, min_eigenvalue, partial_transpose
from .tomography import (
    DEFAULT_INTENSITY,
    MLEConfig,
    expected_counts,
    mle_reconstruct,
    pauli_settings,
    simulate_counts,
    simulate_counts_by_terms,
)

CUT_NAMES = tuple(str(c) for c in THREE_QUBIT_CUTS)
QUANTILES = (0.05, 0.95)


def default_p_values(n: int = 50, p_max: float = 1 / 3) -> np.ndarray:
    return np.linspace(0.0, p_max, n)


def is_success(min_eigs) -> bool:
    """Entangled across A|BC and strictly positive on B|AC and C|AB (no tolerance band)."""
    a_bc, b_ac, c_ab = min_eigs
    return bool(a_bc < 0 and b_ac > 0 and c_ab > 0)


@dataclass
class SweepResult:
    p_values: np.ndarray
    min_eigs: np.ndarray  # (n_p, n_samples, 3) in CUT_NAMES order
    fidelities: np.ndarray  # (n_p, n_samples) vs the noise-free state at each p
    reference_fidelity: np.ndarray  # (n_p,) noiseless-count reconstruction vs same
    theory_min_eigs: np.ndarray  # (n_p, 3), infinite counts
    config: dict = field(default_factory=dict)

    @property
    def samples_per_p(self) -> int:
        return self.min_eigs.shape[1]

    @property
    def success(self) -> np.ndarray:
        m = self.min_eigs
        return (m[..., 0] < 0) & (m[..., 1] > 0) & (m[..., 2] > 0)

    @property
    def success_proportion(self) -> np.ndarray:
        return self.success.mean(axis=1)

    def mean(self) -> np.ndarray:
        return self.min_eigs.mean(axis=1)

    def std(self) -> np.ndarray:
        return self.min_eigs.std(axis=1, ddof=1) if self.samples_per_p > 1 else np.zeros(self.mean().shape)

    def standard_error(self) -> np.ndarray:
        return self.std() / np.sqrt(self.samples_per_p)

    def rows(self) -> list:
        mean, std = self.mean(), self.std()
        q = np.quantile(self.min_eigs, QUANTILES, axis=1)
        prop = self.success_proportion
        out = []
        for i, p in enumerate(self.p_values):
            row = {"p": float(p), "n_samples": self.samples_per_p}
            for k, name in enumerate(CUT_NAMES):
                tag = name.replace("|", "_")
                row[f"mean_{tag}"] = float(mean[i, k])
                row[f"std_{tag}"] = float(std[i, k])
                row[f"q05_{tag}"] = float(q[0, i, k])
                row[f"q95_{tag}"] = float(q[1, i, k])
                row[f"theory_{tag}"] = float(self.theory_min_eigs[i, k])
            row["success_proportion"] = float(prop[i])
            row["fidelity_mean"] = float(self.fidelities[i].mean())
            row["fidelity_std"] = float(self.fidelities[i].std(ddof=1)) if self.samples_per_p > 1 else 0.0
            row["fidelity_noiseless"] = float(self.reference_fidelity[i])
            out.append(row)
        return out

    def to_csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "cuts": list(CUT_NAMES),
            "rows": self.rows(),
            "min_eigenvalues": self.min_eigs.tolist(),
            "fidelities": self.fidelities.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def theory_min_eigs(base: QuantumState, p: float) -> np.ndarray:
    target = add_white_noise(base, p)
    return np.array([min_eigenvalue(partial_transpose(target, c)) for c in THREE_QUBIT_CUTS])


def _noisy_terms(base_terms, p, d):
    terms = [((1 - p) * w, vec) for w, vec in base_terms]
    eye = np.eye(d, dtype=complex)
    terms += [(p / d, eye[k]) for k in range(d)]
    return [(w, v) for w, v in terms if w > 0]


def _eigen_terms(base: QuantumState):
    lam, vec = np.linalg.eigh(base.matrix)
    return [(float(l), vec[:, k]) for k, l in enumerate(lam) if l > 1e-14]


def _run_p(base, p, p_index, samples, intensity, cfg, seed, mode, base_terms):
    target = add_white_noise(base, p)
    settings = pauli_settings(len(base.dims))
    eigs = np.empty((samples, len(THREE_QUBIT_CUTS)))
    fids = np.empty(samples)
    if mode == "terms":
        terms = _noisy_terms(base_terms, p, base.dim)
        total_w = sum(w for w, _ in terms)
        terms = [(w / total_w, v) for w, v in terms]
    for s in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, p_index, s]))
        if mode == "terms":
            counts = simulate_counts_by_terms(terms, settings, intensity, rng)
        else:
            counts = simulate_counts(target, settings, intensity, rng)
        rho = mle_reconstruct(counts, cfg).state
        eigs[s] = [cut_report(rho, c).min_pt_eigenvalue for c in THREE_QUBIT_CUTS]
        fids[s] = fidelity(rho, target)
    noiseless = mle_reconstruct(expected_counts(target, settings, intensity), cfg).state
    return eigs, fids, fidelity(noiseless, target)


def monte_carlo_sweep(
    base: QuantumState,
    p_values=None,
    samples_per_p: int = 500,
    intensity: float = DEFAULT_INTENSITY,
    cfg: MLEConfig = MLEConfig(),
    rng_seed: int = 0,
    mode: str = "mixture",
    base_terms=None,
    n_jobs: int = 1,
) -> SweepResult:
    """Simulate finite-count reconstructions across white-noise levels.

    ``mode="terms"`` accumulates counts term by term from a pure-state
    decomposition of ``base`` (``base_terms`` or its eigendecomposition),
    mirroring a preparation that sums pure states; the default measures the
    mixed target directly, which has the same count distribution.
    """
    if tuple(base.dims) != (2, 2, 2):
        raise ValueError("the sweep scores the three single-qubit cuts of a 3-qubit state")
    p_values = default_p_values() if p_values is None else np.asarray(p_values, dtype=float)
    if np.any(p_values < 0) or np.any(p_values > 1):
        raise ValueError("noise values must lie in [0, 1]")
    if samples_per_p < 1:
        raise ValueError("samples_per_p must be >= 1")
    if mode not in ("mixture", "terms"):
        raise ValueError(f"mode must be 'mixture' or 'terms', got {mode!r}")
    if mode == "terms" and base_terms is None:
        base_terms = _eigen_terms(base)
    seed = int(rng_seed)

    jobs = (
        delayed(_run_p)(base, float(p), i, samples_per_p, intensity, cfg, seed, mode, base_terms)
        for i, p in enumerate(p_values)
    )
    results = Parallel(n_jobs=n_jobs)(jobs)
    config = {
        "seed": seed,
        "p_values": [float(p) for p in p_values],
        "samples_per_p": int(samples_per_p),
        "intensity": float(intensity),
        "mode": mode,
        "mle": asdict(cfg),
        "base": base.label or "custom",
    }
    return SweepResult(
        p_values=p_values,
        min_eigs=np.stack([r[0] for r in results]),
        fidelities=np.stack([r[1] for r in results]),
        reference_fidelity=np.array([r[2] for r in results]),
        theory_min_eigs=np.stack([theory_min_eigs(base, float(p)) for p in p_values]),
        config=config,
    )
