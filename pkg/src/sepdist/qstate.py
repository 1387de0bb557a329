"""Dense density-matrix algebra for small multi-qubit registers.

Subsystems are ordered (A, B, C, ...) and the computational basis index of
``|a b c>`` is ``4*a + 2*b + c``.  All functions are pure; states are
immutable once constructed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._validation import (
    HERMITIAN_TOL,
    PSD_TOL,
    RAW_TRACE_TOL,
    TRACE_TOL,
    check_dims,
    check_hermitian,
    check_square_matrix,
)

SUBSYSTEM_LABELS = "ABCDEFGHIJ"


def _frozen(arr):
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RawMatrix:
    """Hermitian, unit-trace matrix with no positivity requirement.

    Holds partial transposes and linear-inversion estimates.
    """

    matrix: np.ndarray
    dims: tuple
    label: str | None = None

    _trace_tol = RAW_TRACE_TOL

    def __post_init__(self):
        matrix = check_square_matrix(self.matrix)
        dims = check_dims(self.dims, matrix.shape[0])
        check_hermitian(matrix, HERMITIAN_TOL)
        tr = np.trace(matrix)
        if abs(tr - 1.0) > self._trace_tol:
            raise ValueError(f"trace must be 1 (got {tr.real:.12g}{tr.imag:+.3g}j)")
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def allclose(self, other, atol=1e-12) -> bool:
        other = getattr(other, "matrix", other)
        return bool(np.max(np.abs(self.matrix - np.asarray(other))) <= atol)

    def to_dict(self) -> dict:
        out = {
            "dims": list(self.dims),
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }
        if self.label is not None:
            out["label"] = self.label
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict):
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
            dims = data["dims"]
        except KeyError as exc:
            raise ValueError(f"matrix record is missing key {exc}") from None
        if re.shape != im.shape:
            raise ValueError("'re' and 'im' arrays must have the same shape")
        return cls(re + 1j * im, tuple(dims), data.get("label"))

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        name = type(self).__name__
        tag = f", label={self.label!r}" if self.label else ""
        return f"{name}(dims={self.dims}{tag})"


@dataclass(frozen=True, eq=False, repr=False)
class QuantumState(RawMatrix):
    """Physical density matrix: Hermitian, trace one, positive semidefinite."""

    _trace_tol = TRACE_TOL

    def __post_init__(self):
        super().__post_init__()
        lam = np.linalg.eigvalsh(self.matrix)[0]
        if lam < PSD_TOL:
            raise ValueError(f"density matrix has eigenvalue {lam:.3e} < {PSD_TOL:.0e}")

    @classmethod
    def from_vector(cls, psi, dims=None, label=None):
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        if dims is None:
            dims = (2,) * int(round(np.log2(psi.size)))
        return cls(np.outer(psi, psi.conj()), tuple(dims), label)

    @classmethod
    def maximally_mixed(cls, dims, label=None):
        dims = tuple(dims)
        d = int(np.prod(dims))
        return cls(np.eye(d) / d, dims, label)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class Bipartition:
    """Two-way split of subsystem indices, e.g. ``{0} | {1, 2}`` for A|BC."""

    left: frozenset
    right: frozenset = field(default=None)

    def __post_init__(self):
        left = frozenset(int(i) for i in self.left)
        right = None if self.right is None else frozenset(int(i) for i in self.right)
        if not left:
            raise ValueError("bipartition sides must be non-empty")
        if right is not None:
            if not right:
                raise ValueError("bipartition sides must be non-empty")
            if left & right:
                raise ValueError(f"bipartition sides overlap: {sorted(left & right)}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def parse(cls, text: str, labels: str = SUBSYSTEM_LABELS):
        """Parse ``"A|BC"``-style notation (``":"`` also accepted as separator)."""
        sep = "|" if "|" in text else ":"
        parts = text.replace(" ", "").split(sep)
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"cannot parse bipartition {text!r}")
        try:
            left, right = ([labels.index(ch) for ch in part] for part in parts)
        except ValueError:
            raise ValueError(f"unknown subsystem label in {text!r}") from None
        return cls(frozenset(left), frozenset(right))

    def resolve(self, n_subsystems: int) -> "Bipartition":
        """Return a complete bipartition for ``n_subsystems``, validating coverage."""
        everything = frozenset(range(n_subsystems))
        right = everything - self.left if self.right is None else self.right
        cut = Bipartition(self.left, right)
        if cut.left | cut.right != everything or not cut.left <= everything:
            raise ValueError(
                f"bipartition {cut} does not match subsystems {sorted(everything)}"
            )
        return cut

    def side(self, which: str) -> frozenset:
        if which == "left":
            return self.left
        if which == "right":
            return self.right
        raise ValueError(f"side must be 'left' or 'right', got {which!r}")

    def swapped(self) -> "Bipartition":
        return Bipartition(self.right, self.left)

    def to_string(self, labels: str = SUBSYSTEM_LABELS) -> str:
        right = self.right or frozenset()
        return "".join(labels[i] for i in sorted(self.left)) + "|" + "".join(
            labels[i] for i in sorted(right)
        )

    def __str__(self):
        return self.to_string()


A_BC = Bipartition(frozenset({0}), frozenset({1, 2}))
B_AC = Bipartition(frozenset({1}), frozenset({0, 2}))
C_AB = Bipartition(frozenset({2}), frozenset({0, 1}))
THREE_QUBIT_CUTS = (A_BC, B_AC, C_AB)


def as_bipartition(cut, n_subsystems: int) -> Bipartition:
    if isinstance(cut, str):
        cut = Bipartition.parse(cut)
    elif not isinstance(cut, Bipartition):
        raise TypeError(f"expected a Bipartition or string, got {type(cut).__name__}")
    return cut.resolve(n_subsystems)


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    """Kronecker product ``a ⊗ b``; subsystem order is ``a``'s then ``b``'s."""
    label = f"{a.label}⊗{b.label}" if a.label and b.label else None
    return QuantumState(np.kron(a.matrix, b.matrix), a.dims + b.dims, label)


def partial_transpose(s, cut, side: str = "left") -> RawMatrix:
    """Transpose the subsystems on one side of ``cut``."""
    cut = as_bipartition(cut, len(s.dims))
    return RawMatrix(_pt(s.matrix, s.dims, cut.side(side)), s.dims)


def _pt(matrix, dims, systems: Iterable[int]):
    n = len(dims)
    t = np.asarray(matrix).reshape(dims + dims)
    perm = list(range(2 * n))
    for i in systems:
        perm[i], perm[n + i] = perm[n + i], perm[i]
    return t.transpose(perm).reshape(matrix.shape)


def _ptrace(matrix, dims, keep):
    n = len(dims)
    t = np.asarray(matrix).reshape(dims + dims)
    # trace out from the highest index down so remaining axis numbers stay valid
    for i in sorted(set(range(n)) - set(keep), reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def partial_trace(s: QuantumState, keep) -> QuantumState:
    """Reduced state on the subsystems in ``keep`` (kept in original order)."""
    keep = sorted({int(i) for i in keep})
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(s.dims):
        raise ValueError(f"keep={keep} out of range for {len(s.dims)} subsystems")
    dims = tuple(s.dims[i] for i in keep)
    return QuantumState(_ptrace(s.matrix, s.dims, keep), dims)


def min_eigenvalue(m) -> float:
    """Smallest eigenvalue of a Hermitian matrix (negativity in the signed convention)."""
    matrix = check_square_matrix(getattr(m, "matrix", m))
    check_hermitian(matrix)
    return float(np.linalg.eigvalsh(matrix)[0])


def entropy_of_spectrum(eigenvalues) -> float:
    lam = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(s) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    matrix = getattr(s, "matrix", s)
    return entropy_of_spectrum(np.linalg.eigvalsh(matrix))


def _psd_sqrt(matrix):
    lam, vec = np.linalg.eigh(matrix)
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    if tuple(a.dims) != tuple(b.dims):
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    root = _psd_sqrt(a.matrix)
    inner = root @ b.matrix @ root
    lam = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    f = float(np.sum(np.sqrt(np.clip(lam, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


def load_matrix(path, kind=QuantumState):
    with open(path) as fh:
        return kind.from_dict(json.load(fh))
