"""Separability certificates: explicit convex decompositions into product states.

A dictionary of pure product states across a cut is seeded (optionally with
the known 12-term decomposition of the protocol state) and complemented with
random product states; non-negative weights summing to one are then fitted
to the target by least squares.  Certificates are rechecked by an independent
verifier that never calls the solver.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_random_state
from .protocol import (
    PHI_MINUS,
    PHI_MINUS_I,
    PHI_PLUS,
    PHI_PLUS_I,
    PSI_MINUS,
    PSI_PLUS,
    A,
    D,
    H,
    L,
    R,
    V,
)
from .qstate import C_AB, Bipartition, QuantumState, as_bipartition
from .simplex_lsq import simplex_lstsq

PRUNE_THRESHOLD = 1e-12
NORM_TOL = 1e-12
SUM_TOL = 1e-9
DEFAULT_TOL = 1e-6
EXACT_TOL = 1e-10

IDEAL_WEIGHTS = np.array(
    [3 / 16, 3 / 16, 1 / 8, 1 / 8, 1 / 16, 1 / 16, 1 / 16, 1 / 16, 1 / 32, 1 / 32, 1 / 32, 1 / 32]
)


@dataclass(frozen=True, eq=False)
class ProductEntry:
    """Pure product state ``|left> ⊗ |right>`` across a cut."""

    left_vector: np.ndarray
    right_vector: np.ndarray

    def __post_init__(self):
        for name in ("left_vector", "right_vector"):
            vec = np.array(getattr(self, name), dtype=complex).ravel()
            if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
                raise ValueError(f"{name} is not normalised (norm {np.linalg.norm(vec)!r})")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    def to_dict(self):
        return {
            "left": {"re": self.left_vector.real.tolist(), "im": self.left_vector.imag.tolist()},
            "right": {"re": self.right_vector.real.tolist(), "im": self.right_vector.imag.tolist()},
        }

    @classmethod
    def from_dict(cls, data):
        vec = lambda d: np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)  # noqa: E731
        return cls(vec(data["left"]), vec(data["right"]))


def _factor_dims(cut: Bipartition, dims):
    left = int(np.prod([dims[i] for i in sorted(cut.left)]))
    right = int(np.prod([dims[i] for i in sorted(cut.right)]))
    return left, right


@dataclass(frozen=True)
class Dictionary:
    """Candidate product states for one cut of a register with ``dims``."""

    entries: tuple
    cut: Bipartition = C_AB
    dims: tuple = (2, 2, 2)
    seeds: tuple = ()

    def __post_init__(self):
        cut = as_bipartition(self.cut, len(self.dims))
        object.__setattr__(self, "cut", cut)
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "dims", tuple(self.dims))
        dl, dr = _factor_dims(cut, self.dims)
        for e in self.entries:
            if e.left_vector.size != dl or e.right_vector.size != dr:
                raise ValueError(f"entry factor sizes do not match cut {cut} with dims {self.dims}")

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def seed(self):
        return self.seeds[-1] if self.seeds else None

    def __len__(self):
        return len(self.entries)

    def vectors(self):
        """Full-register state vectors, shape ``(size, prod(dims))``."""
        if not self.entries:
            return np.zeros((0, int(np.prod(self.dims))), dtype=complex)
        left = np.stack([e.left_vector for e in self.entries])
        right = np.stack([e.right_vector for e in self.entries])
        order = sorted(self.cut.left) + sorted(self.cut.right)
        joint = np.einsum("ki,kj->kij", left, right).reshape(
            (len(self.entries),) + tuple(self.dims[i] for i in order)
        )
        back = np.argsort(order)
        return joint.transpose([0] + [1 + int(i) for i in back]).reshape(len(self.entries), -1)


def seed_dictionary_ideal() -> Dictionary:
    """The 12 product terms of the known C|AB decomposition of the protocol state."""
    hh, vv, hv, vh = (np.kron(x, y) for x, y in ((H, H), (V, V), (H, V), (V, H)))
    pairs = [
        (A, hh), (D, vv),
        (H, PHI_PLUS), (V, PHI_MINUS),
        (A, hv), (D, vh),
        (L, PHI_PLUS_I), (R, PHI_MINUS_I),
        (L, hv), (L, vh),
        (R, PSI_PLUS), (R, PSI_MINUS),
    ]  # fmt: skip
    return Dictionary(tuple(ProductEntry(c, ab) for c, ab in pairs), C_AB, (2, 2, 2))


def _haar_vectors(rng, n, d):
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def extend_dictionary(d: Dictionary, n: int, rng_seed=None) -> Dictionary:
    """Append ``n`` product states with unitarily invariant random factors."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n == 0:
        return d
    rng = check_random_state(rng_seed)
    dl, dr = _factor_dims(d.cut, d.dims)
    left = _haar_vectors(rng, n, dl)
    right = _haar_vectors(rng, n, dr)
    new = tuple(ProductEntry(lv, rv) for lv, rv in zip(left, right))
    seeds = d.seeds + ((rng_seed,) if not isinstance(rng_seed, np.random.Generator) else ("generator",))
    return Dictionary(d.entries + new, d.cut, d.dims, seeds)


def empty_dictionary(cut, dims=(2, 2, 2)) -> Dictionary:
    return Dictionary((), cut, tuple(dims))


def hermitian_coordinates(matrices) -> np.ndarray:
    """Real coordinates of Hermitian matrices whose Euclidean norm is the Frobenius norm."""
    matrices = np.asarray(matrices)
    single = matrices.ndim == 2
    if single:
        matrices = matrices[None]
    n = matrices.shape[-1]
    iu = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(matrices, axis1=1, axis2=2))
    upper = matrices[:, iu[0], iu[1]]
    coords = np.concatenate([diag, np.sqrt(2) * upper.real, np.sqrt(2) * upper.imag], axis=1)
    return coords[0] if single else coords


@dataclass(frozen=True, eq=False)
class Certificate:
    entries: tuple
    weights: np.ndarray
    residual: float
    cut: Bipartition
    dims: tuple = (2, 2, 2)
    tol: float = DEFAULT_TOL
    residual_l2: float = float("nan")
    seeds: tuple = ()

    certified = True

    def to_dict(self):
        return {
            "certified": True,
            "cut": str(self.cut),
            "dims": list(self.dims),
            "tol": self.tol,
            "residual": self.residual,
            "residual_l2": self.residual_l2,
            "dictionary_seeds": [s if isinstance(s, (int, str)) else repr(s) for s in self.seeds],
            "weights": [float(w) for w in self.weights],
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        dims = tuple(data["dims"])
        return cls(
            entries=tuple(ProductEntry.from_dict(e) for e in data["entries"]),
            weights=np.asarray(data["weights"], dtype=float),
            residual=float(data["residual"]),
            cut=as_bipartition(data["cut"], len(dims)),
            dims=dims,
            tol=float(data["tol"]),
            residual_l2=float(data.get("residual_l2", float("nan"))),
            seeds=tuple(data.get("dictionary_seeds", ())),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SeparabilityFailure:
    """No decomposition within tolerance was found (this is not a proof of entanglement)."""

    best_residual: float
    best_residual_l2: float
    cut: Bipartition
    tol: float
    dictionary_size: int

    certified = False

    def to_dict(self):
        return {
            "certified": False,
            "cut": str(self.cut),
            "tol": self.tol,
            "best_residual": self.best_residual,
            "best_residual_l2": self.best_residual_l2,
            "dictionary_size": self.dictionary_size,
        }


def certify_separable(target: QuantumState, cut, d: Dictionary, tol: float = DEFAULT_TOL):
    """Fit simplex weights over ``d`` to ``target``.

    Returns a :class:`Certificate` when the max-norm reconstruction error is at
    most ``tol``, otherwise a :class:`SeparabilityFailure` with the best residual.
    """
    cut = as_bipartition(cut, len(target.dims))
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if len(d) == 0:
        raise ValueError("cannot certify with an empty dictionary")
    if d.cut != cut or tuple(d.dims) != tuple(target.dims):
        raise ValueError(f"dictionary is for cut {d.cut} on {d.dims}, target needs {cut} on {target.dims}")

    vecs = d.vectors()
    atoms = hermitian_coordinates(np.einsum("ki,kj->kij", vecs, vecs.conj())).T
    weights, _ = simplex_lstsq(atoms, hermitian_coordinates(target.matrix))

    keep = np.flatnonzero(weights >= PRUNE_THRESHOLD)
    weights = weights[keep] / weights[keep].sum()
    recon = np.einsum("k,ki,kj->ij", weights, vecs[keep], vecs[keep].conj())
    diff = recon - target.matrix
    residual = float(np.max(np.abs(diff)))
    residual_l2 = float(np.linalg.norm(diff))
    if residual <= tol:
        return Certificate(
            entries=tuple(d.entries[k] for k in keep),
            weights=weights,
            residual=residual,
            cut=cut,
            dims=tuple(target.dims),
            tol=tol,
            residual_l2=residual_l2,
            seeds=d.seeds,
        )
    return SeparabilityFailure(residual, residual_l2, cut, tol, len(d))


@dataclass
class Verification:
    ok: bool
    residual: float
    reasons: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _embed_projector(left, right, cut, dims):
    # product of the two factor projectors, reordered into register order
    n = len(dims)
    lsys, rsys = sorted(cut.left), sorted(cut.right)
    pl = np.outer(left, left.conj()).reshape([dims[i] for i in lsys] * 2)
    pr = np.outer(right, right.conj()).reshape([dims[i] for i in rsys] * 2)
    full = np.multiply.outer(pl, pr)
    nl, nr = len(lsys), len(rsys)
    # axes of full: lrow, lcol, rrow, rcol
    row_axes = {s: k for k, s in enumerate(lsys)}
    row_axes.update({s: 2 * nl + k for k, s in enumerate(rsys)})
    col_axes = {s: nl + k for k, s in enumerate(lsys)}
    col_axes.update({s: 2 * nl + nr + k for k, s in enumerate(rsys)})
    perm = [row_axes[s] for s in range(n)] + [col_axes[s] for s in range(n)]
    d = int(np.prod(dims))
    return full.transpose(perm).reshape(d, d)


def verify_certificate(c: Certificate, target: QuantumState) -> Verification:
    """Recheck a certificate from scratch without touching the solver."""
    reasons = []
    dims = tuple(target.dims)
    weights = np.asarray(c.weights, dtype=float)
    if tuple(c.dims) != dims:
        return Verification(False, float("inf"), [f"certificate dims {c.dims} != target dims {dims}"])
    try:
        cut = as_bipartition(c.cut, len(dims))
    except (ValueError, TypeError) as exc:
        return Verification(False, float("inf"), [f"invalid cut: {exc}"])
    if len(weights) != len(c.entries):
        return Verification(False, float("inf"), ["weight and entry counts differ"])
    if np.any(weights < 0):
        reasons.append(f"negative weights at {np.flatnonzero(weights < 0).tolist()}")
    if abs(weights.sum() - 1.0) > SUM_TOL:
        reasons.append(f"weights sum to {weights.sum()!r}")

    dl = int(np.prod([dims[i] for i in sorted(cut.left)]))
    dr = int(np.prod([dims[i] for i in sorted(cut.right)]))
    recon = np.zeros((target.dim, target.dim), dtype=complex)
    for k, (w, e) in enumerate(zip(weights, c.entries)):
        lv, rv = np.asarray(e.left_vector), np.asarray(e.right_vector)
        if lv.size != dl or rv.size != dr:
            reasons.append(f"entry {k} does not factor as {dl} x {dr}")
            continue
        for name, v in (("left", lv), ("right", rv)):
            if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
                reasons.append(f"entry {k} {name} factor has norm {np.linalg.norm(v)!r}")
        recon += w * _embed_projector(lv, rv, cut, dims)
    residual = float(np.max(np.abs(recon - target.matrix)))
    if not residual <= c.tol:
        reasons.append(f"reconstruction residual {residual:.3e} exceeds tol {c.tol:.1e}")
    return Verification(not reasons, residual, reasons)


class SeparabilityCertifier(BaseEstimator):
    """Estimator wrapper: ``fit`` certifies one state across ``cut``.

    Parameters
    ----------
    cut : str or Bipartition
    n_random : int
        Random product states appended to the dictionary.
    tol : float
        Max-norm tolerance on the reconstruction.
    seed_ideal : bool
        Start from the known 12-term decomposition (three qubits, C|AB only).
    random_state : int or None
    """

    def __init__(self, cut="C|AB", n_random=3000, tol=DEFAULT_TOL, seed_ideal=True, random_state=0):
        self.cut = cut
        self.n_random = n_random
        self.tol = tol
        self.seed_ideal = seed_ideal
        self.random_state = random_state

    def _dictionary(self, dims):
        cut = as_bipartition(self.cut, len(dims))
        if self.seed_ideal:
            base = seed_dictionary_ideal()
            if base.cut != cut or base.dims != tuple(dims):
                raise ValueError("the ideal seed only exists for the C|AB cut of three qubits")
        else:
            base = empty_dictionary(cut, dims)
        return extend_dictionary(base, self.n_random, self.random_state)

    def fit(self, X, y=None):
        X = _as_state(X)
        self.dictionary_ = self._dictionary(X.dims)
        self.result_ = certify_separable(X, self.cut, self.dictionary_, self.tol)
        self.certified_ = self.result_.certified
        self.residual_ = self.result_.residual if self.certified_ else self.result_.best_residual
        return self

    def predict(self, X):
        """Certification outcome for each state in ``X`` using the fitted dictionary."""
        states = [_as_state(x) for x in (X if isinstance(X, (list, tuple)) else [X])]
        if not hasattr(self, "dictionary_"):
            self.dictionary_ = self._dictionary(states[0].dims)
        return np.array(
            [certify_separable(s, self.cut, self.dictionary_, self.tol).certified for s in states]
        )


def _as_state(X):
    if isinstance(X, QuantumState):
        return X
    arr = np.asarray(X, dtype=complex)
    n = int(round(np.log2(arr.shape[0])))
    return QuantumState(arr, (2,) * n)
