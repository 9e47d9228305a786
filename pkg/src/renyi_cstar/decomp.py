"""Pure-state decompositions of a density matrix and the weight-functional search.

Every decomposition of ``rho = sum_j p_j |x_j><x_j|`` into ``m`` pure states
comes from an ``m x r`` isometry ``U``:  ``|psi_k~> = sum_j U_kj sqrt(p_j) |x_j>``
with weight ``lambda_k = <psi_k~|psi_k~>``. The weights are the diagonal of the
Gram matrix ``U diag(p) U^H``, which is what the search works on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classical import check_alpha, renyi_of_weights
from .errors import DecompositionError
from .states import RANK_CUTOFF, DensityMatrix, pure_state

RECONSTRUCTION_TOL = 1e-8
ORTHONORMAL_TOL = 1e-10
DEDUP_FIDELITY = 1.0 - 1e-10
TIE_TOL = 1e-12
DEFAULT_SEED = 42


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Convex decomposition ``rho = sum_k weights[k] * components[k]``."""

    weights: np.ndarray
    components: tuple[DensityMatrix, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.components):
            raise DecompositionError("one weight per component required")
        if np.any(w <= 0):
            raise DecompositionError("decomposition weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-10:
            raise DecompositionError(f"weights sum to {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def m(self) -> int:
        return self.weights.size

    def mixture(self) -> np.ndarray:
        return sum(w * c.matrix for w, c in zip(self.weights, self.components))

    def reconstruction_error(self, rho: DensityMatrix) -> float:
        return float(np.max(np.abs(self.mixture() - rho.matrix)))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return all(c.is_pure(tol) for c in self.components)

    def sorted_weights(self) -> np.ndarray:
        return np.sort(self.weights)[::-1]


@dataclass(frozen=True, eq=False)
class IsometryParam:
    """``m x r`` complex matrix with orthonormal columns."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.array(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] < u.shape[1]:
            raise DecompositionError(f"isometry must be m x r with m >= r, got shape {u.shape}")
        dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))) if u.size else 0.0
        if dev > ORTHONORMAL_TOL:
            raise DecompositionError(f"isometry columns not orthonormal (deviation {dev:.3g})")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 20
    iterations: int = 200
    seed: int = DEFAULT_SEED
    m_cap: Optional[int] = None

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 0:
            raise ValueError("restarts must be >= 1 and iterations >= 0")
        if self.m_cap is not None and self.m_cap < 1:
            raise ValueError("m_cap must be positive")


@dataclass(frozen=True, eq=False)
class SearchResult:
    decomposition: Decomposition
    value: float
    converged: bool
    sampled_values: np.ndarray = field(repr=False)
    sweeps: int = 0

    def __iter__(self):
        # unpacks as (decomposition, value)
        return iter((self.decomposition, self.value))


# ---------------------------------------------------------------------------
# weight functional


def smix_weight_value(weights, alpha: float) -> float:
    """``log2(sum w**alpha) / (1 - alpha)``; ``alpha = 1`` gives ``-sum w log2 w``.

    Accepts a weight vector or a :class:`Decomposition`.
    """
    a = check_alpha(alpha, allow_one=True)
    w = weights.weights if isinstance(weights, Decomposition) else np.asarray(weights, dtype=float)
    w = w[w > 0]
    if a == 1.0:
        w = w / w.sum()
        return float(-np.sum(w * np.log2(w))) + 0.0
    return renyi_of_weights(w, a)


def _cost(lam: np.ndarray, alpha: float) -> np.ndarray:
    """Per-weight cost whose sum is minimized exactly when the functional is.

    For ``alpha = 0`` the support count is flat under pair moves, so the
    square-root cost drives them instead; pair moves never enlarge the support.
    """
    lam = np.asarray(lam, dtype=float)
    pos = lam > 0
    out = np.zeros_like(lam)
    if alpha == 0:
        out[pos] = np.sqrt(lam[pos])
    elif alpha == 1:
        out[pos] = -lam[pos] * np.log2(lam[pos])
    elif alpha < 1:
        out[pos] = lam[pos] ** alpha
    else:
        out[pos] = -(lam[pos] ** alpha)
    return out


# ---------------------------------------------------------------------------
# isometry <-> decomposition


def _spectral_columns(rho: DensityMatrix):
    sd = rho.spectrum
    keep = sd.eigenvalues > RANK_CUTOFF
    return sd.eigenvalues[keep], sd.eigenvectors[:, keep], sd.blocks[keep]


def _dedup(weights: np.ndarray, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge components whose pure states have fidelity >= 1 - 1e-10."""
    out_w: list[float] = []
    out_v: list[np.ndarray] = []
    for w, v in zip(weights, vectors):
        for i, u in enumerate(out_v):
            if abs(np.vdot(u, v)) ** 2 >= DEDUP_FIDELITY:
                out_w[i] += w
                break
        else:
            out_w.append(float(w))
            out_v.append(v)
    return np.array(out_w), np.array(out_v)


def _decomposition_from_rows(rho: DensityMatrix, psi: np.ndarray, vecs: np.ndarray) -> Decomposition:
    full = psi @ vecs.T
    weights = np.sum(np.abs(full) ** 2, axis=1)
    keep = weights >= RANK_CUTOFF
    weights, full = weights[keep], full[keep]
    units = full / np.sqrt(weights)[:, None]
    weights, units = _dedup(weights, units)
    # exact normalization: the clamped spectrum already defines the support
    weights = weights / weights.sum()
    comps = tuple(pure_state(u, rho.algebra) for u in units)
    return Decomposition(weights, comps)


def decomposition_from_isometry(rho: DensityMatrix, u) -> Decomposition:
    """Pure-state decomposition generated by an ``m x rank`` isometry over the Schatten data.

    Columns of ``u`` follow the eigenvalues of ``rho`` in descending order. On a
    multi-block algebra each row may only mix eigenvectors from one central
    block, otherwise its vector is not a pure state of the algebra.
    """
    iso = u if isinstance(u, IsometryParam) else IsometryParam(u)
    p, vecs, blocks = _spectral_columns(rho)
    mat = iso.matrix
    if mat.shape[1] != p.size:
        raise DecompositionError(f"isometry has {mat.shape[1]} columns but rank(rho) = {p.size}")
    for k, row in enumerate(mat):
        used = np.unique(blocks[np.abs(row) > 1e-14])
        if used.size > 1:
            raise DecompositionError(f"row {k} mixes eigenvectors of central blocks {used.tolist()}")
    dec = _decomposition_from_rows(rho, mat * np.sqrt(p), vecs)
    err = dec.reconstruction_error(rho)
    if err > RECONSTRUCTION_TOL:
        raise DecompositionError(f"reconstruction error {err:.3g}")
    return dec


def schatten_decomposition(rho: DensityMatrix) -> Decomposition:
    p, _, _ = _spectral_columns(rho)
    return decomposition_from_isometry(rho, np.eye(p.size))


def component_cap(rho: DensityMatrix) -> int:
    r = rho.rank
    return r * r + 1


def _row_blocks(col_blocks: np.ndarray, m: int) -> np.ndarray:
    """Assign ``m`` rows to central blocks: ``rank_b`` each, extras round-robin."""
    labels, counts = np.unique(col_blocks, return_counts=True)
    rows = {int(b): int(c) for b, c in zip(labels, counts)}
    extra = m - int(counts.sum())
    spread = [int(b) for b, c in zip(labels, counts) if c >= 2] or [int(b) for b in labels]
    for i in range(extra):
        rows[spread[i % len(spread)]] += 1
    return np.concatenate([np.full(rows[int(b)], int(b)) for b in labels])


def _haar_isometry(rng: np.random.Generator, col_blocks: np.ndarray, row_blocks: np.ndarray) -> np.ndarray:
    u = np.zeros((row_blocks.size, col_blocks.size), dtype=complex)
    for b in np.unique(col_blocks):
        ri = np.flatnonzero(row_blocks == b)
        ci = np.flatnonzero(col_blocks == b)
        g = rng.normal(size=(ri.size, ci.size)) + 1j * rng.normal(size=(ri.size, ci.size))
        q, r = np.linalg.qr(g)
        # fix the phase ambiguity of QR so the distribution is Haar
        d = np.diag(r)
        q = q * (d / np.abs(d))
        u[np.ix_(ri, ci)] = q
    return u


def _padded_identity(col_blocks: np.ndarray, row_blocks: np.ndarray) -> np.ndarray:
    u = np.zeros((row_blocks.size, col_blocks.size), dtype=complex)
    for b in np.unique(col_blocks):
        ri = np.flatnonzero(row_blocks == b)
        ci = np.flatnonzero(col_blocks == b)
        u[np.ix_(ri[: ci.size], ci)] = np.eye(ci.size)
    return u


def _check_m(rho: DensityMatrix, m: int, m_cap: Optional[int]) -> None:
    r = rho.rank
    cap = component_cap(rho) if m_cap is None else m_cap
    if not r <= m <= max(cap, r):
        raise ValueError(f"need rank <= m <= cap, got m={m}, rank={r}, cap={cap}")


def sample_decompositions(
    rho: DensityMatrix,
    m: int,
    n_samples: int,
    seed: int = DEFAULT_SEED,
    include_identity: bool = False,
    m_cap: Optional[int] = None,
) -> list[Decomposition]:
    """Decompositions from Haar-random isometries; one PCG64 stream per sample.

    With ``include_identity`` the first entry is the Schatten decomposition
    (identity isometry padded with zero rows).
    """
    _check_m(rho, m, m_cap)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    p, vecs, cols = _spectral_columns(rho)
    rows = _row_blocks(cols, m)
    streams = np.random.SeedSequence(seed).spawn(n_samples)
    out = []
    for i, ss in enumerate(streams):
        if include_identity and i == 0:
            u = _padded_identity(cols, rows)
        else:
            u = _haar_isometry(np.random.Generator(np.random.PCG64(ss)), cols, rows)
        out.append(_decomposition_from_rows(rho, u * np.sqrt(p), vecs))
    return out


# ---------------------------------------------------------------------------
# search


def _pair_rotation(psi_k: np.ndarray, psi_l: np.ndarray):
    """Unitary mixing two rows so their 2x2 Gram matrix becomes diagonal.

    Returns ``(W, mu_plus, mu_minus)`` with new rows ``W @ [psi_k; psi_l]``.
    ``mu_plus`` and ``mu_minus`` are the extreme weights reachable by mixing
    the pair; every cost used here is optimized at one of these extremes.
    """
    a_k = float(np.vdot(psi_k, psi_k).real)
    a_l = float(np.vdot(psi_l, psi_l).real)
    g = complex(np.vdot(psi_k, psi_l))
    half = 0.5 * (a_k - a_l)
    rad = math.hypot(half, abs(g))
    mean = 0.5 * (a_k + a_l)
    mu_p, mu_m = mean + rad, max(mean - rad, 0.0)
    d = mu_p - a_k
    norm = math.hypot(abs(g), d)
    if norm == 0.0:
        return None, a_k, a_l
    v_p = np.array([g, d]) / norm
    v_m = np.array([-d, g.conjugate()]) / norm
    # Gram of W rows is conj(W) G W^T, so W^T holds the eigenvectors
    w = np.array([v_p, v_m])
    return w, mu_p, mu_m


def _refine(u: np.ndarray, p: np.ndarray, row_blocks: np.ndarray, alpha: float, max_sweeps: int):
    """Cyclic pair rotations within central blocks, accepting strict improvements."""
    sq = np.sqrt(p)
    psi = u * sq
    lam = np.sum(np.abs(psi) ** 2, axis=1)
    pairs = [(k, l) for k in range(u.shape[0]) for l in range(k + 1, u.shape[0]) if row_blocks[k] == row_blocks[l]]
    total = float(_cost(lam, alpha).sum())
    sweeps = 0
    converged = max_sweeps == 0 and not pairs
    for sweeps in range(1, max_sweeps + 1):
        for k, l in pairs:
            w, mu_p, mu_m = _pair_rotation(psi[k], psi[l])
            if w is None:
                continue
            old = _cost(lam[[k, l]], alpha).sum()
            new = _cost(np.array([mu_p, mu_m]), alpha).sum()
            if new < old - 1e-15 * max(1.0, abs(old)):
                idx = [k, l]
                u[idx] = w @ u[idx]
                psi[idx] = u[idx] * sq
                lam[idx] = np.sum(np.abs(psi[idx]) ** 2, axis=1)
        new_total = float(_cost(lam, alpha).sum())
        improvement = total - new_total
        total = min(total, new_total)
        if improvement <= 1e-10 * max(1.0, abs(total)):
            converged = True
            break
    return u, converged, sweeps


def _better(cand: tuple[float, Decomposition], best: Optional[tuple[float, Decomposition]]) -> bool:
    if best is None:
        return True
    v, d = cand
    bv, bd = best
    if v < bv - TIE_TOL:
        return True
    if v > bv + TIE_TOL:
        return False
    if d.m != bd.m:
        return d.m < bd.m
    return tuple(d.sorted_weights()) < tuple(bd.sorted_weights())


def minimize_weight_functional(
    rho: DensityMatrix, alpha: float, budget: Optional[SearchBudget] = None
) -> SearchResult:
    """Search pure-state decompositions for the smallest weight functional.

    Each restart draws a Haar isometry with ``m_cap`` rows (default
    ``rank**2 + 1``) and refines it by pairwise row rotations inside central
    blocks until the relative improvement per sweep drops below ``1e-10`` or
    ``budget.iterations`` sweeps are spent. The best restart wins; ties go to
    fewer components, then to the lexicographically smaller sorted weights.
    Running out of sweeps is not an error: ``converged`` is then ``False``.
    ``alpha = 1`` minimizes the Shannon entropy of the weights.
    """
    a = check_alpha(alpha, allow_one=True)
    budget = budget or SearchBudget()
    p, vecs, cols = _spectral_columns(rho)
    m = budget.m_cap if budget.m_cap is not None else component_cap(rho)
    m = max(m, p.size)
    rows = _row_blocks(cols, m)
    streams = np.random.SeedSequence(budget.seed).spawn(budget.restarts)
    best = None
    all_converged = True
    sampled = []
    total_sweeps = 0
    for ss in streams:
        u = _haar_isometry(np.random.Generator(np.random.PCG64(ss)), cols, rows)
        sampled.append(smix_weight_value(np.sum(np.abs(u * np.sqrt(p)) ** 2, axis=1), a))
        u, conv, sweeps = _refine(u, p, rows, a, budget.iterations)
        all_converged &= conv
        total_sweeps += sweeps
        dec = _decomposition_from_rows(rho, u * np.sqrt(p), vecs)
        cand = (smix_weight_value(dec.weights, a), dec)
        if _better(cand, best):
            best = cand
    assert best is not None
    return SearchResult(best[1], best[0], all_converged, np.array(sampled), total_sweeps)


def weights_multiset_equal(a: Sequence[float], b: Sequence[float], tol: float = 1e-9) -> bool:
    x = np.sort(np.asarray(a, dtype=float))[::-1]
    y = np.sort(np.asarray(b, dtype=float))[::-1]
    n = max(x.size, y.size)
    x, y = np.pad(x, (0, n - x.size)), np.pad(y, (0, n - y.size))
    return bool(np.max(np.abs(x - y)) <= tol) if n else True
