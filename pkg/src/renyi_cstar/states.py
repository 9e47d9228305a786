"""States on finite direct sums of full matrix algebras.

An algebra ``M_{n_1} + ... + M_{n_m}`` is stored as block-diagonal matrices of
size ``sum(n_i)``; a state is a block-diagonal density matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional, Sequence

import numpy as np

from .classical import ProbDist
from .errors import (
    BlockStructureViolated,
    NotHermitian,
    NotPositive,
    StateValidationError,
    TraceNotOne,
)
from .linalg import jacobi_eigh

HERMITIAN_TOL = 1e-10
POSITIVE_TOL = 1e-10
TRACE_TOL = 1e-10
RANK_CUTOFF = 1e-12
ORTHOGONAL_TOL = 1e-9
MAJORIZATION_SLACK = 1e-10


@dataclass(frozen=True)
class AlgebraModel:
    """``M_{n_1} + ... + M_{n_m}`` acting block-diagonally on ``C^{sum n_i}``."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims or any(n < 1 for n in dims):
            raise ValueError(f"block_dims must be a nonempty list of positive ints, got {self.block_dims!r}")
        object.__setattr__(self, "block_dims", dims)

    @classmethod
    def full(cls, n: int) -> "AlgebraModel":
        return cls((n,))

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def dimension(self) -> int:
        """Complex dimension of the algebra, ``sum n_i**2``."""
        return sum(n * n for n in self.block_dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.block_dims)[:-1]]))

    def block_slice(self, b: int) -> slice:
        return slice(self.offsets[b], self.offsets[b] + self.block_dims[b])

    @cached_property
    def block_of_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_blocks), self.block_dims)

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean matrix marking the entries an algebra element may occupy."""
        lab = self.block_of_index
        return lab[:, None] == lab[None, :]

    def block_projector(self, b: int) -> np.ndarray:
        p = np.zeros((self.total_dim, self.total_dim))
        s = self.block_slice(b)
        p[s, s] = np.eye(self.block_dims[b])
        return p

    def matrix_units(self) -> Iterator[tuple[int, int, int, np.ndarray]]:
        """Yield ``(block, i, j, e_ij)`` for every matrix unit, row-major per block."""
        for b, n in enumerate(self.block_dims):
            off = self.offsets[b]
            for i in range(n):
                for j in range(n):
                    e = np.zeros((self.total_dim, self.total_dim), dtype=complex)
                    e[off + i, off + j] = 1.0
                    yield b, i, j, e

    def coords(self, x: np.ndarray) -> np.ndarray:
        """Coordinates of an algebra element in the matrix-unit basis."""
        return np.concatenate([x[self.block_slice(b), self.block_slice(b)].reshape(-1) for b in range(self.n_blocks)])

    def element(self, c: np.ndarray) -> np.ndarray:
        x = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        pos = 0
        for b, n in enumerate(self.block_dims):
            s = self.block_slice(b)
            x[s, s] = np.asarray(c[pos : pos + n * n]).reshape(n, n)
            pos += n * n
        return x

    def is_element(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(x[~self.mask]) <= tol))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated state ``phi(A) = Tr(rho A)``; build with :func:`validate_state`."""

    algebra: AlgebraModel
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.algebra.total_dim

    def expectation(self, a: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ a))

    def block(self, b: int) -> np.ndarray:
        s = self.algebra.block_slice(b)
        return self.matrix[s, s]

    @cached_property
    def spectrum(self) -> "SpectralData":
        return schatten(self)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > RANK_CUTOFF))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return self.purity() >= 1.0 - tol

    def is_faithful(self) -> bool:
        return self.rank == self.dim

    def __repr__(self) -> str:
        return f"DensityMatrix(block_dims={self.algebra.block_dims}, eigenvalues={np.round(self.eigenvalues, 6).tolist()})"


def validate_state(m, algebra: Optional[AlgebraModel] = None) -> DensityMatrix:
    """Check the density-matrix invariants and return a frozen :class:`DensityMatrix`.

    The matrix is symmetrized as ``(m + m^H) / 2`` after the Hermiticity check.
    Off-block entries must be exactly zero.

    Raises
    ------
    NotHermitian, NotPositive, TraceNotOne, BlockStructureViolated
    """
    m = np.array(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StateValidationError(f"state matrix must be square, got shape {m.shape}")
    if algebra is None:
        algebra = AlgebraModel.full(m.shape[0])
    if m.shape[0] != algebra.total_dim:
        raise StateValidationError(f"matrix is {m.shape[0]}x{m.shape[0]} but algebra has total dimension {algebra.total_dim}")
    if not np.all(np.isfinite(m)):
        raise StateValidationError("matrix has non-finite entries")
    dev = np.max(np.abs(m - m.conj().T))
    if dev > HERMITIAN_TOL:
        raise NotHermitian(f"Hermiticity violated by {dev:.3g}")
    if np.any(m[~algebra.mask] != 0):
        raise BlockStructureViolated(f"nonzero entries outside the blocks {algebra.block_dims}")
    m = 0.5 * (m + m.conj().T)
    tr = float(np.real(np.trace(m)))
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"trace is {tr!r}")
    lo = min(float(jacobi_eigh(m[algebra.block_slice(b), algebra.block_slice(b)])[0][0]) for b in range(algebra.n_blocks))
    if lo < -POSITIVE_TOL:
        raise NotPositive(f"minimum eigenvalue {lo:.3g}")
    m.setflags(write=False)
    return DensityMatrix(algebra, m)


def project_to_algebra(m: np.ndarray, algebra: AlgebraModel) -> np.ndarray:
    """Zero the off-block entries (the conditional expectation onto the algebra)."""
    out = np.array(m, dtype=complex)
    out[~algebra.mask] = 0.0
    return out


def pure_state(vec, algebra: Optional[AlgebraModel] = None) -> DensityMatrix:
    """``|v><v|`` for a nonzero vector, compressed onto the algebra's blocks.

    Positivity and unit trace hold by construction, so the eigenvalue check of
    :func:`validate_state` is skipped.
    """
    v = np.asarray(vec, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0:
        raise StateValidationError("pure_state needs a finite nonzero vector")
    v = v / norm
    algebra = algebra or AlgebraModel.full(v.size)
    if v.size != algebra.total_dim:
        raise StateValidationError(f"vector has length {v.size} but algebra has total dimension {algebra.total_dim}")
    m = project_to_algebra(np.outer(v, v.conj()), algebra)
    m = 0.5 * (m + m.conj().T)
    m.setflags(write=False)
    return DensityMatrix(algebra, m)


def maximally_mixed(algebra: AlgebraModel) -> DensityMatrix:
    return validate_state(np.eye(algebra.total_dim) / algebra.total_dim, algebra)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Descending eigenvalues with orthonormal eigenvectors as columns.

    ``blocks[k]`` is the central block that eigenvector ``k`` lives in.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    blocks: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))


def schatten(rho: DensityMatrix) -> SpectralData:
    """Spectral decomposition, block by block, with eigenvalues sorted descending.

    Eigenvalues below ``1e-12`` are clamped to zero; their vectors are kept so
    the eigenvectors form a full basis.
    """
    alg = rho.algebra
    n = alg.total_dim
    vals, vecs, blocks = [], [], []
    for b in range(alg.n_blocks):
        s = alg.block_slice(b)
        w, v = jacobi_eigh(rho.matrix[s, s])
        full = np.zeros((n, v.shape[1]), dtype=complex)
        full[s, :] = v
        vals.append(w)
        vecs.append(full)
        blocks.append(np.full(w.size, b))
    w = np.concatenate(vals)
    v = np.concatenate(vecs, axis=1)
    blk = np.concatenate(blocks)
    order = np.argsort(-w, kind="stable")
    w, v, blk = w[order], v[:, order], blk[order]
    w = np.where(w < RANK_CUTOFF, 0.0, w)
    for arr in (w, v, blk):
        arr.setflags(write=False)
    return SpectralData(w, v, blk)


def majorizes(p: Sequence[float], q: Sequence[float], slack: float = MAJORIZATION_SLACK) -> bool:
    """True iff every prefix sum of ``p`` is at least that of ``q`` minus ``slack``.

    Both vectors are sorted descending and the shorter one is zero-padded.
    """
    a = np.sort(np.asarray(p, dtype=float))[::-1]
    b = np.sort(np.asarray(q, dtype=float))[::-1]
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - slack))


def support_projector(rho: DensityMatrix) -> np.ndarray:
    sd = rho.spectrum
    v = sd.eigenvectors[:, sd.eigenvalues > 0]
    return v @ v.conj().T


def orthogonal_states(rho1: DensityMatrix, rho2: DensityMatrix, tol: float = ORTHOGONAL_TOL) -> bool:
    """Support-orthogonality: ``supp(rho1) supp(rho2) = 0``."""
    if rho1.algebra != rho2.algebra:
        raise ValueError("states live on different algebras")
    prod = support_projector(rho1) @ support_projector(rho2)
    return bool(np.max(np.abs(prod)) <= tol)


def tensor(rho: DensityMatrix, sigma: DensityMatrix) -> DensityMatrix:
    """Kronecker product of two states on single-block algebras."""
    if rho.algebra.n_blocks != 1 or sigma.algebra.n_blocks != 1:
        raise ValueError("tensor products are only defined here for single-block algebras")
    return validate_state(np.kron(rho.matrix, sigma.matrix), AlgebraModel.full(rho.dim * sigma.dim))


def direct_sum(states: Sequence[DensityMatrix], weights: Sequence[float]) -> DensityMatrix:
    """Block-diagonal mixture ``w_1 rho_1 + ... + w_m rho_m`` on the direct-sum algebra."""
    dims = []
    for st in states:
        dims.extend(st.algebra.block_dims)
    alg = AlgebraModel(tuple(dims))
    m = np.zeros((alg.total_dim, alg.total_dim), dtype=complex)
    pos = 0
    for st, w in zip(states, weights):
        m[pos : pos + st.dim, pos : pos + st.dim] = w * st.matrix
        pos += st.dim
    return validate_state(m, alg)


def block_weights(rho: DensityMatrix) -> ProbDist:
    """Trace mass carried by each central block."""
    w = np.array([np.real(np.trace(rho.block(b))) for b in range(rho.algebra.n_blocks)])
    return ProbDist(np.clip(w, 0.0, None))


def random_density_matrix(
    algebra: AlgebraModel, rng: np.random.Generator, rank: Optional[int] = None
) -> DensityMatrix:
    """Random state from Ginibre blocks; ``rank`` limits the total rank."""
    n = algebra.total_dim
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    m = project_to_algebra(g @ g.conj().T, algebra)
    if rank is not None:
        # block projection can raise the rank; rebuild from the top spectrum
        w, v = jacobi_eigh(m)
        w[: n - rank] = 0.0
        m = project_to_algebra((v * w) @ v.conj().T, algebra)
    m = m / np.real(np.trace(m))
    return validate_state(m, algebra)
