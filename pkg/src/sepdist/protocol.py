"""States of the separable-carrier entanglement distribution protocol.

Polarisation encoding: H -> |0>, V -> |1>; D/A are the sigma_x eigenstates and
R/L the sigma_y eigenstates, R = (H + iV)/sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_probability
from .qstate import QuantumState, partial_transpose, min_eigenvalue, tensor

_S2 = np.sqrt(2.0)

H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
D = (H + V) / _S2
A = (H - V) / _S2
R = (H + 1j * V) / _S2
L = (H - 1j * V) / _S2

PHI_PLUS = (np.kron(H, H) + np.kron(V, V)) / _S2
PHI_MINUS = (np.kron(H, H) - np.kron(V, V)) / _S2
PSI_PLUS = (np.kron(H, V) + np.kron(V, H)) / _S2
PSI_MINUS = (np.kron(H, V) - np.kron(V, H)) / _S2
PHI_PLUS_I = (np.kron(H, H) + 1j * np.kron(V, V)) / _S2
PHI_MINUS_I = (np.kron(H, H) - 1j * np.kron(V, V)) / _S2

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)

DEFAULT_CX = -0.5

# (weight, |k_j k_j'>) terms of the initial AB mixture: z-z, x-x and anti-correlated y-y
ALPHA_AB_TERMS = (
    (1 / 4, np.kron(H, H)),
    (1 / 4, np.kron(V, V)),
    (1 / 8, np.kron(D, D)),
    (1 / 8, np.kron(A, A)),
    (1 / 8, np.kron(R, L)),
    (1 / 8, np.kron(L, R)),
)


@dataclass(frozen=True)
class BellMixture:
    p_phi_plus: float
    p_phi_minus: float
    p_psi_plus: float
    p_psi_minus: float

    def __post_init__(self):
        probs = self.as_array()
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError(f"Bell weights must lie in [0, 1], got {probs.tolist()}")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"Bell weights must sum to 1, got {probs.sum()!r}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p_phi_plus, self.p_phi_minus, self.p_psi_plus, self.p_psi_minus],
            dtype=float,
        )


@dataclass(frozen=True)
class CarrierParams:
    c_x: float = DEFAULT_CX

    def __post_init__(self):
        if not np.isfinite(self.c_x) or abs(self.c_x) > 1:
            raise ValueError(f"c_x must lie in [-1, 1] for a physical carrier, got {self.c_x}")


def _projector(vec):
    return np.outer(vec, vec.conj())


def build_alpha_ab() -> QuantumState:
    """Separable but discordant two-qubit initial state of Alice and Bob."""
    rho = sum(w * _projector(v) for w, v in ALPHA_AB_TERMS)
    return QuantumState(rho, (2, 2), "alpha_AB")


def alpha_c_terms(params=DEFAULT_CX):
    """Pure-state decomposition of the carrier in its sigma_x eigenbasis."""
    c_x = _carrier(params).c_x
    return ((0.5 * (1 + c_x), D), (0.5 * (1 - c_x), A))


def build_alpha_c(params=DEFAULT_CX) -> QuantumState:
    """Carrier state ``(I + c_x sigma_x) / 2``; accepts a float or :class:`CarrierParams`."""
    c_x = _carrier(params).c_x
    return QuantumState((np.eye(2) + c_x * SIGMA_X) / 2, (2,), "alpha_C")


def _carrier(params) -> CarrierParams:
    return params if isinstance(params, CarrierParams) else CarrierParams(float(params))


def bell_mixture(m: BellMixture) -> QuantumState:
    weights = m.as_array()
    basis = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)
    rho = sum(w * _projector(v) for w, v in zip(weights, basis))
    return QuantumState(rho, (2, 2), "bell_mixture")


def is_separable(m: BellMixture) -> bool:
    """Bell-diagonal states are separable iff no weight exceeds one half."""
    return bool(m.as_array().max() <= 0.5)


def bell_mixture_pt_min(m: BellMixture) -> float:
    return min_eigenvalue(partial_transpose(bell_mixture(m), "A|B"))


def cphase(s: QuantumState, control: int = 0, target: int = 2) -> QuantumState:
    """Conjugate ``s`` by a controlled-Z acting on qubits ``control`` and ``target``."""
    n = len(s.dims)
    for idx in (control, target):
        if not 0 <= idx < n:
            raise ValueError(f"subsystem index {idx} out of range for {n} subsystems")
        if s.dims[idx] != 2:
            raise ValueError(f"controlled-phase needs qubits; subsystem {idx} has dim {s.dims[idx]}")
    if control == target:
        raise ValueError("control and target must differ")
    # the gate is diagonal with phase -1 where both qubits read 1
    digits = np.indices(s.dims).reshape(n, -1)
    phase = np.where((digits[control] == 1) & (digits[target] == 1), -1.0, 1.0)
    return QuantumState(phase[:, None] * s.matrix * phase[None, :], s.dims, s.label)


def build_beta(c_x=DEFAULT_CX) -> QuantumState:
    """Three-qubit (A, B, C) state after Alice's controlled-phase on A and C."""
    alpha = tensor(build_alpha_ab(), build_alpha_c(c_x))
    beta = cphase(alpha, control=0, target=2)
    return QuantumState(beta.matrix, beta.dims, "beta")


def beta_product_terms(c_x=DEFAULT_CX):
    """Pure product terms (weight, ABC vector) whose mixture is beta.

    Mirrors preparing the initial mixture term by term and pushing each term
    through the gate.
    """
    gate = np.diag([1, 1, 1, 1, 1, -1, 1, -1]).astype(complex)
    return [
        (w_ab * w_c, gate @ np.kron(v_ab, v_c))
        for w_ab, v_ab in ALPHA_AB_TERMS
        for w_c, v_c in alpha_c_terms(c_x)
    ]


def add_white_noise(s: QuantumState, p: float) -> QuantumState:
    """Mix ``s`` with the maximally mixed state: ``(1 - p) s + p I / d``."""
    p = check_probability(p)
    mixed = (1 - p) * s.matrix + p * np.eye(s.dim) / s.dim
    return QuantumState(mixed, s.dims, s.label)
