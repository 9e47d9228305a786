"""Cyclic Jacobi eigensolver for small dense Hermitian matrices."""

from __future__ import annotations

import math

import numpy as np

from .errors import EigenSolverError

JACOBI_TOL = 1e-12
MAX_SWEEPS = 100


def _off_norm(a: np.ndarray) -> float:
    # summed directly; subtracting the diagonal from the full norm cancels badly
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _sweep(a: np.ndarray, q: np.ndarray) -> None:
    n = a.shape[0]
    for p in range(n - 1):
        for r in range(p + 1, n):
            apr = a[p, r]
            mag = abs(apr)
            if mag < 1e-300:
                continue
            phase = apr / mag
            app = a[p, p].real
            arr = a[r, r].real
            zeta = (arr - app) / (2.0 * mag)
            if abs(zeta) > 1e150:
                t = 0.5 / zeta
            else:
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = t * c
            # V = diag(1, conj(phase)) @ [[c, s], [-s, c]]
            v = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
            idx = [p, r]
            a[:, idx] = a[:, idx] @ v
            a[idx, :] = v.conj().T @ a[idx, :]
            a[p, r] = a[r, p] = 0.0
            a[p, p] = a[p, p].real
            a[r, r] = a[r, r].real
            q[:, idx] = q[:, idx] @ v


def jacobi_eigh(
    matrix: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Parameters
    ----------
    matrix : ndarray, shape (n, n)
        Hermitian matrix. Only its Hermitian part ``(A + A^H) / 2`` is used.
    tol : float
        Convergence threshold on the off-diagonal Frobenius norm, scaled by
        ``max(1, ||A||_F)``.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`EigenSolverError`.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Ascending real eigenvalues.
    eigenvectors : ndarray, shape (n, n)
        Unitary matrix whose columns are the matching eigenvectors.
    """
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.conj().T)
    q = np.eye(a.shape[0], dtype=complex)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    converged = False
    for _ in range(max_sweeps):
        if _off_norm(a) < threshold:
            converged = True
            break
        _sweep(a, q)
    if not converged:
        if _off_norm(a) >= threshold:
            raise EigenSolverError(f"Jacobi did not converge in {max_sweeps} sweeps")
    # one polishing sweep: convergence is quadratic, so this reaches roundoff
    _sweep(a, q)

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], q[:, order]


def cluster_indices(values: np.ndarray, gap: float) -> list[list[int]]:
    """Group sorted values into runs whose consecutive differences are below ``gap``."""
    if len(values) == 0:
        return []
    groups = [[0]]
    for i in range(1, len(values)):
        if abs(values[i] - values[i - 1]) < gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def null_space_projector(psd: np.ndarray, tol: float) -> np.ndarray:
    """Orthogonal projector onto the eigenvectors of ``psd`` with eigenvalue below ``tol``."""
    w, v = jacobi_eigh(psd)
    kept = v[:, w < tol]
    return kept @ kept.conj().T

