"""Small dense symmetric-matrix kernel.

Cholesky factorization, triangular solves, inversion, log-determinant and a
cyclic Jacobi eigensolver. Matrices are plain ``numpy`` float arrays; every
routine returns fresh arrays and never mutates its input.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NotPositiveDefinite

PD_TOLERANCE = 1e-12
EIG_RELATIVE_TOL = 1e-12
MAX_SWEEPS = 100


class EigenDecomposition(NamedTuple):
    """Eigenvalues in ascending order; column ``i`` of ``eigenvectors`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_symmetric(m, *, tol: float = 0.0) -> np.ndarray:
    """Return ``m`` as a square float array, checking symmetry.

    With ``tol == 0`` symmetry must hold exactly.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        raise ValueError("matrix is not symmetric")
    return a


def frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def identity(n: int) -> np.ndarray:
    return np.eye(n)


def cholesky(m, *, pd_tolerance: float = PD_TOLERANCE) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m``.

    Raises NotPositiveDefinite as soon as a pivot drops to ``pd_tolerance``
    or below.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        row = low[j, :j]
        pivot = a[j, j] - row @ row
        if not pivot > pd_tolerance:
            raise NotPositiveDefinite(f"Cholesky pivot {j} is {pivot:.3e}")
        d = np.sqrt(pivot)
        low[j, j] = d
        low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ row) / d
    return low


def solve_lower(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution ``low @ x = b``; ``b`` may hold several columns."""
    x = np.array(b, dtype=float)
    for i in range(low.shape[0]):
        x[i] = (x[i] - low[i, :i] @ x[:i]) / low[i, i]
    return x


def solve_upper(up: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution ``up @ x = b``."""
    x = np.array(b, dtype=float)
    for i in range(up.shape[0] - 1, -1, -1):
        x[i] = (x[i] - up[i, i + 1:] @ x[i + 1:]) / up[i, i]
    return x


def inverse(m) -> np.ndarray:
    """Inverse of a positive definite matrix through its Cholesky factor."""
    low = cholesky(m)
    y = solve_lower(low, np.eye(low.shape[0]))
    x = solve_upper(low.T, y)
    return 0.5 * (x + x.T)


def log_det(m) -> float:
    low = cholesky(m)
    return float(2.0 * np.sum(np.log(np.diag(low))))


def whiten(m, low: np.ndarray) -> np.ndarray:
    """Symmetric congruence ``low^-1 @ m @ low^-T``."""
    y = solve_lower(low, np.asarray(m, dtype=float))
    z = solve_lower(low, y.T)
    return 0.5 * (z + z.T)


def _round_robin_orders(m: int) -> list[np.ndarray]:
    """Index orderings, one per round, pairing positions (0,1), (2,3), ...

    Circle method over an even number ``m`` of indices: across the ``m - 1``
    rounds every pair of indices is adjacent exactly once.
    """
    players = list(range(m))
    orders = []
    for _ in range(m - 1):
        order = []
        for k in range(m // 2):
            order += [players[k], players[m - 1 - k]]
        orders.append(np.array(order, dtype=int))
        players = [players[0], players[-1]] + players[1:-1]
    return orders


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eig_sym(m, *, max_sweeps: int = MAX_SWEEPS,
            rel_tol: float = EIG_RELATIVE_TOL) -> EigenDecomposition:
    """Cyclic Jacobi eigensolver.

    Each sweep visits every off-diagonal pair exactly once in a fixed
    round-robin order. Pairs within a round are disjoint, so the working
    matrix is permuted to make them adjacent and a whole round is rotated at
    once. Iterates until the off-diagonal Frobenius norm falls below
    ``rel_tol * ||m||_F``.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    tol = rel_tol * float(np.linalg.norm(a))
    # pairs below this can never hold the off-diagonal norm above tol
    skip = tol / max(n, 1)
    size = n + n % 2
    if size != n:
        # isolated padding index, never rotated since its couplings are zero
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(size)
    orders = _round_robin_orders(size)
    half = size // 2
    current = np.arange(size)
    sweeps = 0
    while _off_norm(a) > tol:
        if sweeps == max_sweeps:
            raise ConvergenceFailure(
                f"Jacobi: off-diagonal norm {_off_norm(a):.3e} after {sweeps} sweeps"
            )
        for order in orders:
            position = np.empty(size, dtype=int)
            position[current] = np.arange(size)
            rel = position[order]
            a = a[rel][:, rel]
            v = v[:, rel]
            current = order

            idx = np.arange(half)
            app = a[2 * idx, 2 * idx]
            aqq = a[2 * idx + 1, 2 * idx + 1]
            apq = a[2 * idx, 2 * idx + 1]
            active = np.abs(apq) > skip
            if not active.any():
                continue
            safe = np.where(active, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            t[~active] = 0.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J, V <- V J with J block diagonal in 2x2 plane rotations
            cols = a.reshape(size, half, 2)
            cp, cq = cols[:, :, 0].copy(), cols[:, :, 1].copy()
            cols[:, :, 0] = c * cp - s * cq
            cols[:, :, 1] = s * cp + c * cq
            rows = a.reshape(half, 2, size)
            rp, rq = rows[:, 0, :].copy(), rows[:, 1, :].copy()
            rows[:, 0, :] = c[:, None] * rp - s[:, None] * rq
            rows[:, 1, :] = s[:, None] * rp + c[:, None] * rq
            a[2 * idx[active], 2 * idx[active] + 1] = 0.0
            a[2 * idx[active] + 1, 2 * idx[active]] = 0.0
            vcols = v.reshape(size, half, 2)
            vp, vq = vcols[:, :, 0].copy(), vcols[:, :, 1].copy()
            vcols[:, :, 0] = c * vp - s * vq
            vcols[:, :, 1] = s * vp + c * vq
        sweeps += 1
    # back to the natural index order, then drop any padding
    position = np.empty(size, dtype=int)
    position[current] = np.arange(size)
    diag = np.diag(a)[position][:n]
    vecs = v[:, position][:n, :n]
    order = np.argsort(diag, kind="stable")
    return EigenDecomposition(diag[order], vecs[:, order])


def eigvals_sym(m) -> np.ndarray:
    return eig_sym(m).eigenvalues
