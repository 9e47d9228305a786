"""Reference systems: invariant states, KMS states, and the GNS picture.

Dynamics are inner: either a Hamiltonian ``H`` generating ``A -> e^{itH} A e^{-itH}``
or a finite group of unitaries acting by conjugation. Everything is
block-diagonal with respect to the algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .decomp import Decomposition
from .errors import DynamicsError, NotInvariant, NotKMS
from .linalg import cluster_indices, jacobi_eigh, null_space_projector
from .states import (
    RANK_CUTOFF,
    AlgebraModel,
    DensityMatrix,
    block_weights,
    orthogonal_states,
    validate_state,
)

INVARIANCE_TOL = 1e-9
DEGENERACY_GAP = 1e-10
KMS_TOL = 1e-8
GNS_TOL = 1e-9
SECTOR_SEED = 42


@dataclass(frozen=True, eq=False)
class Dynamics:
    """Inner dynamics on an algebra.

    ``kind == "hamiltonian"``: one-parameter group generated by ``hamiltonian``.
    ``kind == "group"``: the finite group ``unitaries`` (contains the identity,
    closed under products).
    """

    kind: Literal["hamiltonian", "group"]
    algebra: AlgebraModel
    hamiltonian: Optional[np.ndarray] = None
    unitaries: tuple[np.ndarray, ...] = ()

    @classmethod
    def hamiltonian_flow(cls, h, algebra: Optional[AlgebraModel] = None) -> "Dynamics":
        h = np.array(h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DynamicsError(f"Hamiltonian must be square, got shape {h.shape}")
        algebra = algebra or AlgebraModel.full(h.shape[0])
        if h.shape[0] != algebra.total_dim:
            raise DynamicsError("Hamiltonian size does not match the algebra")
        if np.max(np.abs(h - h.conj().T)) > 1e-10:
            raise DynamicsError("Hamiltonian is not Hermitian")
        if not algebra.is_element(h, 1e-12):
            raise DynamicsError("Hamiltonian is not block-diagonal for the algebra")
        h = 0.5 * (h + h.conj().T)
        h[~algebra.mask] = 0.0
        h.setflags(write=False)
        return cls("hamiltonian", algebra, hamiltonian=h)

    @classmethod
    def finite_group(cls, unitaries: Sequence, algebra: Optional[AlgebraModel] = None) -> "Dynamics":
        us = [np.array(u, dtype=complex) for u in unitaries]
        if not us:
            raise DynamicsError("a group needs at least the identity")
        n = us[0].shape[0]
        algebra = algebra or AlgebraModel.full(n)
        for i, u in enumerate(us):
            if u.shape != (algebra.total_dim, algebra.total_dim):
                raise DynamicsError(f"unitary {i} has shape {u.shape}")
            if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-10:
                raise DynamicsError(f"matrix {i} is not unitary")
            if not algebra.is_element(u, 1e-12):
                raise DynamicsError(f"unitary {i} is not block-diagonal for the algebra")
        if _find(us, np.eye(n)) is None:
            raise DynamicsError("group does not contain the identity")
        for a in us:
            for b in us:
                if _find(us, a @ b) is None:
                    raise DynamicsError("unitaries are not closed under multiplication")
        for u in us:
            u.setflags(write=False)
        return cls("group", algebra, unitaries=tuple(us))

    @classmethod
    def from_generators(cls, generators: Sequence, algebra: Optional[AlgebraModel] = None, max_order: int = 4096) -> "Dynamics":
        """Close a set of unitaries under multiplication."""
        gens = [np.array(g, dtype=complex) for g in generators]
        n = gens[0].shape[0]
        elems = [np.eye(n, dtype=complex)]
        frontier = list(elems)
        while frontier:
            new = []
            for a in frontier:
                for g in gens:
                    c = g @ a
                    if _find(elems, c) is None:
                        elems.append(c)
                        new.append(c)
                        if len(elems) > max_order:
                            raise DynamicsError(f"group order exceeds {max_order}")
            frontier = new
        return cls.finite_group(elems, algebra)

    @classmethod
    def trivial(cls, algebra: AlgebraModel) -> "Dynamics":
        return cls.finite_group([np.eye(algebra.total_dim)], algebra)

    def act(self, x: np.ndarray) -> list[np.ndarray]:
        """Images of ``x`` under the generators of the dynamics (excluding the identity)."""
        if self.kind == "hamiltonian":
            return [self.hamiltonian @ x - x @ self.hamiltonian]
        return [u @ x @ u.conj().T - x for u in self.unitaries]


def _find(elems: Sequence[np.ndarray], x: np.ndarray, tol: float = 1e-9) -> Optional[int]:
    for i, e in enumerate(elems):
        if np.max(np.abs(e - x)) <= tol:
            return i
    return None


@dataclass(frozen=True)
class ReferenceSystem:
    """Which convex set of states decompositions are taken in."""

    tag: Literal["full", "invariant", "kms"]
    dynamics: Optional[Dynamics] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.tag not in ("full", "invariant", "kms"):
            raise ValueError(f"unknown reference system {self.tag!r}")
        if self.tag != "full" and self.dynamics is None:
            raise ValueError(f"reference system {self.tag!r} needs dynamics")
        if self.tag == "kms":
            if self.dynamics.kind != "hamiltonian":
                raise ValueError("KMS states need Hamiltonian dynamics")
            if self.beta is None or not self.beta > 0:
                raise ValueError("KMS states need beta > 0")

    @classmethod
    def full(cls) -> "ReferenceSystem":
        return cls("full")

    @classmethod
    def invariant(cls, dynamics: Dynamics) -> "ReferenceSystem":
        return cls("invariant", dynamics)

    @classmethod
    def kms(cls, dynamics: Dynamics, beta: float) -> "ReferenceSystem":
        return cls("kms", dynamics, float(beta))


def _check_algebra(dyn: Dynamics, alg: Optional[AlgebraModel]) -> AlgebraModel:
    if alg is not None and alg != dyn.algebra:
        raise DynamicsError(f"dynamics defined on {dyn.algebra.block_dims}, not {alg.block_dims}")
    return dyn.algebra


def is_invariant(rho: DensityMatrix, dyn: Dynamics, tol: float = INVARIANCE_TOL) -> bool:
    """``[H, rho] = 0`` or ``U rho U^H = rho`` for every group element, within ``tol``."""
    if rho.dim != dyn.algebra.total_dim:
        raise DynamicsError("state and dynamics have different dimensions")
    return all(np.max(np.abs(d)) <= tol for d in dyn.act(rho.matrix))


# ---------------------------------------------------------------------------
# invariant states


@dataclass(frozen=True, eq=False)
class InvariantSector:
    """Isotypic component of the dynamics inside one central block.

    Invariant states restricted here look like ``sigma (x) I_d / d`` on
    ``multiplicity`` copies of a ``d``-dimensional irreducible subspace; the
    extreme ones have ``sigma`` pure. For Hamiltonian flows ``d = 1`` and the
    sector is an energy eigenspace.
    """

    algebra_block: int
    basis: np.ndarray
    irrep_dim: int
    multiplicity: int
    copies: tuple[np.ndarray, ...]
    energy: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class InvariantStructure:
    sectors: tuple[InvariantSector, ...]
    representatives: tuple[DensityMatrix, ...]

    @property
    def sector_dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.sectors)


def _group_restricted(dyn: Dynamics, basis: np.ndarray) -> list[np.ndarray]:
    return [basis.conj().T @ u @ basis for u in dyn.unitaries]


def _split_copies(us: list[np.ndarray], d: int, rng: np.random.Generator, attempts: int = 8) -> list[np.ndarray]:
    """Split a subspace carrying copies of one irrep into ``d``-dimensional copies.

    ``us`` are the group unitaries restricted to the subspace; returns bases in
    the subspace's coordinates. A random element of the commutant has
    eigenspaces that are exactly irreducible copies.
    """
    k = us[0].shape[0]
    if d == k:
        return [np.eye(k, dtype=complex)]
    for _ in range(attempts):
        x = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        x = x + x.conj().T
        avg = sum(u @ x @ u.conj().T for u in us) / len(us)
        w, v = jacobi_eigh(avg)
        groups = cluster_indices(w, 1e-8 * max(1.0, float(np.max(np.abs(w)))))
        if all(len(g) == d for g in groups):
            return [v[:, g] for g in groups]
    raise DynamicsError("could not split the sector into irreducible copies")


def _hamiltonian_sectors(dyn: Dynamics) -> list[InvariantSector]:
    alg = dyn.algebra
    out = []
    for b in range(alg.n_blocks):
        s = alg.block_slice(b)
        w, v = jacobi_eigh(dyn.hamiltonian[s, s])
        for g in cluster_indices(w, DEGENERACY_GAP):
            basis = np.zeros((alg.total_dim, len(g)), dtype=complex)
            basis[s, :] = v[:, g]
            copies = tuple(np.eye(len(g), dtype=complex)[:, [i]] for i in range(len(g)))
            out.append(InvariantSector(b, basis, 1, len(g), copies, float(np.mean(w[g]))))
    return out


def _group_sectors(dyn: Dynamics) -> list[InvariantSector]:
    alg = dyn.algebra
    rng = np.random.default_rng(SECTOR_SEED)
    order = len(dyn.unitaries)
    out = []
    for b in range(alg.n_blocks):
        s = alg.block_slice(b)
        n = alg.block_dims[b]
        us = [u[s, s] for u in dyn.unitaries]
        # random combination of class sums: central, separates inequivalent irreps
        z = np.zeros((n, n), dtype=complex)
        for g in us:
            c = sum(h @ g @ h.conj().T for h in us)
            z += rng.normal() * 0.5 * (c + c.conj().T) + rng.normal() * (c - c.conj().T) / 2j
        w, v = jacobi_eigh(z)
        for grp in cluster_indices(w, 1e-8 * max(1.0, float(np.max(np.abs(w))))):
            local = v[:, grp]
            restricted = [local.conj().T @ u @ local for u in us]
            chi_norm = sum(abs(np.trace(r)) ** 2 for r in restricted) / order
            mult = int(round(math.sqrt(chi_norm)))
            dim = len(grp)
            if mult < 1 or abs(mult * mult - chi_norm) > 1e-6 or dim % mult:
                raise DynamicsError("inconsistent isotypic decomposition (accidental degeneracy?)")
            d = dim // mult
            copies = tuple(_split_copies(restricted, d, rng))
            basis = np.zeros((alg.total_dim, dim), dtype=complex)
            basis[s, :] = local
            out.append(InvariantSector(b, basis, d, mult, copies))
    return out


def invariant_sectors(dyn: Dynamics) -> list[InvariantSector]:
    return _hamiltonian_sectors(dyn) if dyn.kind == "hamiltonian" else _group_sectors(dyn)


def extremal_invariant_states(dyn: Dynamics, alg: Optional[AlgebraModel] = None) -> InvariantStructure:
    """Block structure of the invariant states and one extreme point per irreducible copy.

    The full set of extreme points is the union over sectors of
    ``|v><v| (x) I_d / d`` for unit ``v`` in the multiplicity space; the
    representatives are the copies found for the sector basis.
    """
    alg = _check_algebra(dyn, alg)
    sectors = invariant_sectors(dyn)
    reps = []
    for sec in sectors:
        for copy in sec.copies:
            vecs = sec.basis @ copy
            reps.append(validate_state(vecs @ vecs.conj().T / sec.irrep_dim, alg))
    return InvariantStructure(tuple(sectors), tuple(reps))


@dataclass(frozen=True, eq=False)
class ErgodicDecomposition:
    """Ergodic decomposition plus the multiplicity-space weights per sector."""

    decomposition: Decomposition
    sector_weights: tuple[np.ndarray, ...]

    @property
    def unique(self) -> bool:
        """True when no sector carries more than one component."""
        return all(w.size <= 1 for w in self.sector_weights)

    def multiplicity_state(self) -> DensityMatrix:
        """``sigma_1 + sigma_2 + ...`` as a diagonal state on ``M_{k_1} + M_{k_2} + ...``.

        Decompositions of the original state into extreme invariant states
        correspond one-to-one (with equal weights) to pure-state
        decompositions of this state.
        """
        ws = [w for w in self.sector_weights if w.size]
        alg = AlgebraModel(tuple(w.size for w in ws))
        return validate_state(np.diag(np.concatenate(ws)).astype(complex), alg)


def ergodic_decomposition(rho: DensityMatrix, dyn: Dynamics) -> ErgodicDecomposition:
    if not is_invariant(rho, dyn):
        raise NotInvariant("state is not invariant under the dynamics")
    alg = rho.algebra
    rng = np.random.default_rng(SECTOR_SEED + 1)
    weights: list[float] = []
    comps: list[DensityMatrix] = []
    per_sector = []
    for sec in invariant_sectors(dyn):
        local = sec.basis.conj().T @ rho.matrix @ sec.basis
        w, v = jacobi_eigh(local)
        sec_w = []
        for grp in cluster_indices(w, DEGENERACY_GAP):
            lam = float(np.mean(w[grp]))
            if lam * sec.irrep_dim <= RANK_CUTOFF:
                continue
            eig = v[:, grp]
            if sec.irrep_dim == 1:
                parts = [eig[:, [i]] for i in range(len(grp))]
            else:
                us = _group_restricted(dyn, sec.basis @ eig)
                parts = [eig @ c for c in _split_copies(us, sec.irrep_dim, rng)]
            for part in parts:
                vecs = sec.basis @ part
                comps.append(validate_state(vecs @ vecs.conj().T / sec.irrep_dim, alg))
                weights.append(lam * sec.irrep_dim)
                sec_w.append(lam * sec.irrep_dim)
        per_sector.append(np.array(sec_w))
    total = sum(weights)
    w_arr = np.array(weights) / total
    return ErgodicDecomposition(Decomposition(w_arr, tuple(comps)), tuple(s / total for s in per_sector))


def ergodic_decompose(rho: DensityMatrix, dyn: Dynamics) -> Decomposition:
    """Decompose an invariant state into extremal invariant states.

    Weights are the eigenvalues of the state inside each sector (times the
    irrep dimension); components are pure within the sector up to the
    irrep factor. When a sector carries several components the decomposition
    is one of many; :func:`ergodic_decomposition` exposes the data needed to
    search over the others.

    Raises
    ------
    NotInvariant
    """
    return ergodic_decomposition(rho, dyn).decomposition


# ---------------------------------------------------------------------------
# KMS states


def _gibbs_block(h: np.ndarray, beta: float, shift: float) -> np.ndarray:
    w, v = jacobi_eigh(h)
    boltz = np.exp(-beta * (w - shift))
    return (v * boltz) @ v.conj().T


def gibbs_state(dyn: Dynamics, beta: float, alg: Optional[AlgebraModel] = None) -> DensityMatrix:
    """``exp(-beta H) / Tr exp(-beta H)`` over the whole algebra."""
    if dyn.kind != "hamiltonian":
        raise DynamicsError("Gibbs states need Hamiltonian dynamics")
    if not beta > 0:
        raise ValueError("beta must be positive")
    alg = _check_algebra(dyn, alg)
    shift = float(jacobi_eigh(dyn.hamiltonian)[0][0])
    m = np.zeros((alg.total_dim, alg.total_dim), dtype=complex)
    for b in range(alg.n_blocks):
        s = alg.block_slice(b)
        m[s, s] = _gibbs_block(dyn.hamiltonian[s, s], beta, shift)
    return validate_state(m / np.real(np.trace(m)), alg)


def extremal_kms_states(dyn: Dynamics, beta: float, alg: Optional[AlgebraModel] = None) -> list[DensityMatrix]:
    """One Gibbs state per central block; a factor has exactly one KMS state."""
    if dyn.kind != "hamiltonian":
        raise DynamicsError("KMS states need Hamiltonian dynamics")
    if not beta > 0:
        raise ValueError("beta must be positive")
    alg = _check_algebra(dyn, alg)
    out = []
    for b in range(alg.n_blocks):
        s = alg.block_slice(b)
        blk = _gibbs_block(dyn.hamiltonian[s, s], beta, 0.0)
        m = np.zeros((alg.total_dim, alg.total_dim), dtype=complex)
        m[s, s] = blk / np.real(np.trace(blk))
        out.append(validate_state(m, alg))
    return out


def kms_mixture(dyn: Dynamics, beta: float, weights: Sequence[float]) -> DensityMatrix:
    """Convex combination of the per-block Gibbs states."""
    ext = extremal_kms_states(dyn, beta)
    if len(weights) != len(ext):
        raise ValueError(f"{len(weights)} weights for {len(ext)} central blocks")
    return validate_state(sum(w * e.matrix for w, e in zip(weights, ext)), dyn.algebra)


def kms_deviation(rho: DensityMatrix, dyn: Dynamics, beta: float) -> float:
    """Largest max-entry deviation of a normalized block from its block Gibbs state."""
    ext = extremal_kms_states(dyn, beta, rho.algebra)
    masses = block_weights(rho).probs
    dev = 0.0
    for b, (w, e) in enumerate(zip(masses, ext)):
        if w <= RANK_CUTOFF:
            continue
        dev = max(dev, float(np.max(np.abs(rho.block(b) / w - e.block(b)))))
    return dev


def is_kms(rho: DensityMatrix, dyn: Dynamics, beta: float, tol: float = KMS_TOL) -> bool:
    return dyn.kind == "hamiltonian" and kms_deviation(rho, dyn, beta) <= tol


def kms_decompose(rho: DensityMatrix, dyn: Dynamics, beta: float) -> Decomposition:
    """Unique decomposition of a KMS state into per-block Gibbs states.

    Raises
    ------
    NotKMS
        Some normalized block deviates from its Gibbs state by more than 1e-8.
    """
    if dyn.kind != "hamiltonian":
        raise NotKMS("KMS states need Hamiltonian dynamics")
    dev = kms_deviation(rho, dyn, beta)
    if dev > KMS_TOL:
        raise NotKMS(f"block deviates from the Gibbs state by {dev:.3g}")
    ext = extremal_kms_states(dyn, beta, rho.algebra)
    masses = block_weights(rho).probs
    keep = [b for b, w in enumerate(masses) if w > RANK_CUTOFF]
    comps = tuple(ext[b] for b in keep)
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            if not orthogonal_states(comps[i], comps[j]):
                raise AssertionError("extremal KMS states must be mutually orthogonal")
    w = masses[keep]
    return Decomposition(w / w.sum(), comps)


# ---------------------------------------------------------------------------
# GNS


@dataclass(frozen=True, eq=False)
class GnsData:
    """Finite-dimensional GNS triple with the invariant-vector projection.

    ``to_gns`` maps matrix-unit coordinates of an algebra element to its class
    in the GNS space; ``from_gns`` is a right inverse on that space.
    """

    algebra: AlgebraModel
    state: DensityMatrix
    rep_dim: int
    to_gns: np.ndarray = field(repr=False)
    from_gns: np.ndarray = field(repr=False)
    cyclic_vector: np.ndarray = field(repr=False)
    invariant_projection: np.ndarray = field(repr=False)
    rep_matrices: dict = field(repr=False)

    def pi(self, a: np.ndarray) -> np.ndarray:
        """GNS representative of the algebra element ``a`` (left multiplication)."""
        return self.to_gns @ _left_mult(self.algebra, a) @ self.from_gns

    def vector_of(self, a: np.ndarray) -> np.ndarray:
        return self.to_gns @ self.algebra.coords(a)

    def reproduction_error(self) -> float:
        """Max over matrix units of ``|<x, pi(e) x> - phi(e)|``."""
        x = self.cyclic_vector
        return max(
            abs(np.vdot(x, self.rep_matrices[(b, i, j)] @ x) - self.state.expectation(e))
            for b, i, j, e in self.algebra.matrix_units()
        )


def _left_mult(alg: AlgebraModel, a: np.ndarray) -> np.ndarray:
    cols = [alg.coords(a @ e) for _, _, _, e in alg.matrix_units()]
    return np.array(cols).T


def _superop(alg: AlgebraModel, fn) -> np.ndarray:
    return np.array([alg.coords(fn(e)) for _, _, _, e in alg.matrix_units()]).T


def gns_construct(alg: AlgebraModel, rho: DensityMatrix, dyn: Optional[Dynamics] = None) -> GnsData:
    """GNS space as the algebra modulo the null space of ``<a, b> = Tr(rho a^H b)``.

    The dynamics is implemented on the GNS space by ``[a] -> [U a U^H]`` (group)
    or by the derivation ``[a] -> [[H, a]]`` (Hamiltonian); the projection onto
    their joint fixed vectors is ``invariant_projection``. Without dynamics
    the projection is the identity.
    """
    if rho.algebra != alg:
        raise ValueError("state lives on a different algebra")
    units = list(alg.matrix_units())
    dim = len(units)
    gram = np.zeros((dim, dim), dtype=complex)
    for s, (_, _, _, es) in enumerate(units):
        for t, (_, _, _, et) in enumerate(units):
            gram[s, t] = np.trace(rho.matrix @ es.conj().T @ et)
    w, v = jacobi_eigh(gram)
    keep = w > RANK_CUTOFF
    w, v = w[keep], v[:, keep]
    to_gns = np.sqrt(w)[:, None] * v.conj().T
    from_gns = v / np.sqrt(w)[None, :]
    r = int(keep.sum())

    reps = {}
    for b, i, j, e in units:
        reps[(b, i, j)] = to_gns @ _left_mult(alg, e) @ from_gns
    cyclic = to_gns @ alg.coords(np.eye(alg.total_dim, dtype=complex))

    if dyn is None:
        proj = np.eye(r, dtype=complex)
    else:
        _check_algebra(dyn, alg)
        if dyn.kind == "hamiltonian":
            h = dyn.hamiltonian
            gens = [to_gns @ _superop(alg, lambda x: h @ x - x @ h) @ from_gns]
        else:
            gens = [to_gns @ _superop(alg, lambda x, u=u: u @ x @ u.conj().T) @ from_gns - np.eye(r) for u in dyn.unitaries]
        m = sum(g.conj().T @ g for g in gens)
        proj = null_space_projector(m, 1e-9 * max(1.0, float(np.linalg.norm(m))))
    return GnsData(alg, rho, r, to_gns, from_gns, cyclic, proj, reps)


def is_g_commutative(g: GnsData, alg: Optional[AlgebraModel] = None, tol: float = GNS_TOL) -> bool:
    """Whether ``E pi(A) E`` is commutative, checked on all matrix-unit pairs."""
    if alg is not None and alg != g.algebra:
        raise ValueError("GNS data built for a different algebra")
    e = g.invariant_projection
    comp = [e @ rep @ e for rep in g.rep_matrices.values()]
    for i in range(len(comp)):
        for j in range(i + 1, len(comp)):
            c = comp[i] @ comp[j] - comp[j] @ comp[i]
            if np.max(np.abs(c)) > tol:
                return False
    return True
