"""Entanglement and correlation measures across bipartitions.

Negativity follows the signed convention used throughout the package: the
smallest eigenvalue of the partial transpose, negative when entangled.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .qstate import (
    A_BC,
    Bipartition,
    QuantumState,
    as_bipartition,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    von_neumann_entropy,
)

PPT_TOL = 1e-9
INFO_SLACK = 1e-9

AB_C = Bipartition(frozenset({0, 1}), frozenset({2}))
AC_B = Bipartition(frozenset({0, 2}), frozenset({1}))


@dataclass(frozen=True)
class CutReport:
    cut: Bipartition
    min_pt_eigenvalue: float
    is_ppt: bool

    def to_dict(self):
        return {"cut": str(self.cut), "min_pt_eigenvalue": self.min_pt_eigenvalue, "is_ppt": self.is_ppt}


@dataclass(frozen=True)
class InfoReport:
    i_final: float
    i_initial: float
    i_comm: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.i_comm - (self.i_final - self.i_initial)

    def to_dict(self):
        return {**asdict(self), "slack": self.slack}


@dataclass(frozen=True)
class DeficitResult:
    value: float
    optimal_axis: tuple

    def to_dict(self):
        return {"value": self.value, "optimal_axis": list(self.optimal_axis)}


@dataclass(frozen=True)
class Eq2Report:
    """Necessary-condition check of the discord bound on entanglement gain.

    Only meaningful for protocol states where Bob's side starts unentangled
    (AC|B separable); the relative entropy of entanglement itself is not
    evaluated.
    """

    d_comm: float
    n_a_bc: float
    consistent: bool

    def to_dict(self):
        return asdict(self)


def cut_report(s: QuantumState, cut, side: str = "left") -> CutReport:
    cut = as_bipartition(cut, len(s.dims))
    lam = min_eigenvalue(partial_transpose(s, cut, side))
    return CutReport(cut, lam, lam >= -PPT_TOL)


def mutual_information(s: QuantumState, cut) -> float:
    """``S(left) + S(right) - S(whole)`` in bits."""
    cut = as_bipartition(cut, len(s.dims))
    s_left = von_neumann_entropy(partial_trace(s, cut.left))
    s_right = von_neumann_entropy(partial_trace(s, cut.right))
    return s_left + s_right - von_neumann_entropy(s)


def _require_three_qubits(s):
    if tuple(s.dims) != (2, 2, 2):
        raise ValueError(f"expected a three-qubit (A, B, C) state, got dims {s.dims}")


def eq1_report(beta: QuantumState) -> InfoReport:
    """Information gain A:CB minus AC:B against the information AB:C carried by C."""
    _require_three_qubits(beta)
    i_final = mutual_information(beta, A_BC)
    i_initial = mutual_information(beta, AC_B)
    i_comm = mutual_information(beta, AB_C)
    return InfoReport(i_final, i_initial, i_comm, i_final - i_initial <= i_comm + INFO_SLACK)


def fibonacci_hemisphere(n: int) -> np.ndarray:
    """``n`` near-uniform unit vectors with z >= 0 (antipodal axes are equivalent)."""
    k = np.arange(n) + 0.5
    z = 1.0 - k / n
    phi = np.pi * (1 + 5**0.5) * k
    r = np.sqrt(1.0 - z**2)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _axis(theta, phi):
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


def _angles(axes):
    axes = np.atleast_2d(axes)
    axes = axes / np.linalg.norm(axes, axis=1, keepdims=True)
    return np.arccos(np.clip(axes[:, 2], -1, 1)), np.arctan2(axes[:, 1], axes[:, 0])


class _Dephaser:
    """Evaluates S(sum_k P_k rho P_k) for rank-1 projective measurements on one qubit."""

    def __init__(self, s: QuantumState, measured: int):
        n = len(s.dims)
        order = [measured] + [i for i in range(n) if i != measured]
        rest = s.dim // 2
        t = s.matrix.reshape(s.dims + s.dims).transpose(order + [n + i for i in order])
        # blocks[a, b] = <a|_m rho |b>_m acting on the other subsystems
        self.blocks = t.reshape(2, rest, 2, rest).transpose(0, 2, 1, 3)

    def entropies(self, theta, phi) -> np.ndarray:
        theta, phi = np.atleast_1d(theta), np.atleast_1d(phi)
        c, s, ph = np.cos(theta / 2), np.sin(theta / 2), np.exp(1j * phi)
        total = np.zeros(theta.shape)
        # Bloch-sphere eigenvectors of n.sigma for +1 and -1
        for v in (np.stack([c, ph * s], axis=1), np.stack([s, -ph * c], axis=1)):
            cond = np.einsum("na,abij,nb->nij", v.conj(), self.blocks, v)
            lam = np.clip(np.linalg.eigvalsh(cond), 0.0, None)
            with np.errstate(divide="ignore", invalid="ignore"):
                total += -np.sum(np.where(lam > 0, lam * np.log2(lam), 0.0), axis=1)
        return total


def one_way_deficit(
    s: QuantumState, measured: int = 2, grid_size: int = 2000, refine: bool = True
) -> DeficitResult:
    """Minimal entropy increase from a projective measurement of qubit ``measured``.

    Coarse Fibonacci grid over the Bloch hemisphere followed by Nelder-Mead
    refinement on the two spherical angles.  Deterministic.
    """
    if not 0 <= measured < len(s.dims):
        raise ValueError(f"measured index {measured} out of range")
    if s.dims[measured] != 2:
        raise ValueError(f"measured subsystem must be a qubit, has dim {s.dims[measured]}")
    deph = _Dephaser(s, measured)
    s_rho = von_neumann_entropy(s)

    theta, phi = _angles(fibonacci_hemisphere(grid_size))
    values = deph.entropies(theta, phi)
    best = int(np.argmin(values))
    angles, value = (theta[best], phi[best]), float(values[best])

    if refine:
        res = minimize(
            lambda ang: float(deph.entropies(ang[0], ang[1])[0]),
            x0=list(angles),
            method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000},
        )
        if res.fun < value:
            angles, value = tuple(res.x), float(res.fun)
    axis = _axis(*angles)
    if axis[2] < 0 or (axis[2] == 0 and axis[0] < 0):
        axis = -axis
    return DeficitResult(max(value - s_rho, 0.0), tuple(float(c) for c in axis))


def eq2_report(beta: QuantumState, tol: float = PPT_TOL, **deficit_kwargs) -> Eq2Report:
    """Report communicated discord (deficit on C) against A|BC negativity."""
    _require_three_qubits(beta)
    d_comm = one_way_deficit(beta, measured=2, **deficit_kwargs).value
    n_a_bc = cut_report(beta, A_BC).min_pt_eigenvalue
    consistent = not (n_a_bc < -tol and d_comm <= tol)
    return Eq2Report(d_comm, n_a_bc, consistent)
