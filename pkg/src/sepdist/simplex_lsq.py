"""Least squares over the probability simplex via a Lawson-Hanson active set."""

from __future__ import annotations

import numpy as np


class SolverDidNotConverge(RuntimeError):
    pass


def nnls_active_set(M, y, tol=None, max_iter=None):
    """Solve ``min ||M x - y||_2`` subject to ``x >= 0`` (Lawson-Hanson).

    Returns ``(x, residual_norm)``.
    """
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = M.shape
    if tol is None:
        tol = 10 * np.finfo(float).eps * np.linalg.norm(M, 1) * max(m, n)
    if max_iter is None:
        max_iter = 3 * n + 100

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    w = M.T @ y
    n_iter = 0
    while True:
        candidates = ~passive & ~blocked
        if not candidates.any() or w[candidates].max() <= tol:
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        while True:
            n_iter += 1
            if n_iter > max_iter:
                raise SolverDidNotConverge(f"active set did not settle after {max_iter} steps")
            idx = np.flatnonzero(passive)
            z = np.linalg.lstsq(M[:, idx], y, rcond=None)[0]
            if np.all(z > 0):
                x[:] = 0.0
                x[idx] = z
                blocked[:] = False
                break
            neg = z <= 0
            xi = x[idx]
            alpha = np.min(xi[neg] / (xi[neg] - z[neg]))
            x[idx] = xi + alpha * (z - xi)
            drop = idx[x[idx] <= tol]
            passive[drop] = False
            x[drop] = 0.0
            if j in drop and alpha == 0.0:
                # numerically degenerate entry; skip it until the active set changes
                blocked[j] = True
                break
        w = M.T @ (y - M @ x)
    return x, float(np.linalg.norm(M @ x - y))


def simplex_lstsq(A, b, sum_weight=1.0, tol=None, max_iter=None):
    """Minimise ``||A w - b||_2`` over ``w >= 0`` with ``sum(w) = 1``.

    The normalisation enters as an extra row scaled by ``sum_weight``; the
    returned weights are renormalised exactly.  Returns ``(w, residual_norm)``
    with the residual measured on ``A`` alone after renormalisation.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    M = np.vstack([A, np.full((1, A.shape[1]), sum_weight)])
    y = np.append(b, sum_weight)
    w, _ = nnls_active_set(M, y, tol=tol, max_iter=max_iter)
    total = w.sum()
    if total <= 0:
        raise SolverDidNotConverge("solver returned all-zero weights")
    w = w / total
    return w, float(np.linalg.norm(A @ w - b))
