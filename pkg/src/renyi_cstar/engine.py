"""Entropy computations for each reference system and the theorem checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .classical import check_alpha, renyi_of_weights
from .decomp import SearchBudget, minimize_weight_functional, smix_weight_value
from .errors import NotInvariant, NotKMS
from .linalg import cluster_indices, jacobi_eigh
from .refsys import (
    DEGENERACY_GAP,
    Dynamics,
    ReferenceSystem,
    ergodic_decomposition,
    gns_construct,
    is_g_commutative,
    is_invariant,
    is_kms,
    kms_decompose,
)
from .states import DensityMatrix

Method = Literal["closed_form", "search"]

# a search value must undercut the closed form by this much to be reported
SEARCH_WIN_TOL = 1e-9
LIMIT_EPS = 1e-3
LIMIT_SLACK = 1e-2
EQUALITY_SLACK = 1e-6
INEQUALITY_SLACK = 1e-8


def quantum_renyi(rho: DensityMatrix, alpha: float) -> float:
    """``log2 Tr rho**alpha / (1 - alpha)`` from the spectrum; ``alpha = 0`` gives ``log2 rank``."""
    a = check_alpha(alpha)
    return renyi_of_weights(rho.eigenvalues, a)


def von_neumann(rho: DensityMatrix) -> float:
    p = rho.eigenvalues
    p = p[p > 0]
    p = p / p.sum()
    return float(-np.sum(p * np.log2(p))) + 0.0


@dataclass(frozen=True)
class EntropyReport:
    """One entropy value with how it was obtained.

    ``method == "search"`` means a decomposition search took part in the
    value; ``attained_by`` says whether the search or the analytic candidate
    produced the reported number. Values are always finite here: every state
    of a finite-dimensional algebra has a finite extremal decomposition.
    """

    alpha: float
    reference: str
    value: float
    method: Method
    decomposition_size: int
    converged: bool
    seed: int
    attained_by: str
    closed_form_value: Optional[float] = None
    search_value: Optional[float] = None
    budget: Optional[SearchBudget] = None
    finite: bool = True

    @property
    def search_gap(self) -> Optional[float]:
        if self.search_value is None or self.closed_form_value is None:
            return None
        return self.search_value - self.closed_form_value


def _infimum_over_pure(
    rho: DensityMatrix,
    alpha: float,
    reference: str,
    budget: SearchBudget,
    cross_check: bool,
    closed_size: int,
) -> EntropyReport:
    """Infimum of the weight functional over pure-state decompositions of ``rho``.

    For ``alpha > 1`` the Schatten weights are optimal and reported directly,
    the search only cross-checks. Otherwise the smaller of the search result
    and the Schatten value is reported.
    """
    closed = smix_weight_value(rho.eigenvalues, alpha)
    if alpha > 1:
        if not cross_check:
            return EntropyReport(alpha, reference, closed, "closed_form", closed_size, True, budget.seed, "schatten", closed)
        res = minimize_weight_functional(rho, alpha, budget)
        return EntropyReport(
            alpha, reference, closed, "closed_form", closed_size, res.converged, budget.seed, "schatten", closed, res.value, budget
        )
    res = minimize_weight_functional(rho, alpha, budget)
    if res.value < closed - SEARCH_WIN_TOL:
        value, size, who = res.value, res.decomposition.m, "search"
    else:
        value, size, who = closed, closed_size, "schatten"
    return EntropyReport(alpha, reference, value, "search", size, res.converged, budget.seed, who, closed, res.value, budget)


def smix_renyi(
    rho: DensityMatrix,
    alpha: float,
    ref: Optional[ReferenceSystem] = None,
    budget: Optional[SearchBudget] = None,
    cross_check: bool = True,
) -> EntropyReport:
    """Renyi entropy of ``rho`` measured from a reference system.

    ``alpha = 1`` returns the mixing (Shannon-weight) entropy.

    Raises
    ------
    NotInvariant, NotKMS
        The state is not in the chosen reference system.
    """
    a = check_alpha(alpha, allow_one=True)
    ref = ref or ReferenceSystem.full()
    budget = budget or SearchBudget()

    if ref.tag == "full":
        return _infimum_over_pure(rho, a, "full", budget, cross_check, rho.rank)

    if ref.tag == "invariant":
        ed = ergodic_decomposition(rho, ref.dynamics)
        if ed.unique:
            value = smix_weight_value(ed.decomposition.weights, a)
            return EntropyReport(a, "invariant", value, "closed_form", ed.decomposition.m, True, budget.seed, "ergodic", value)
        return _infimum_over_pure(ed.multiplicity_state(), a, "invariant", budget, cross_check, ed.decomposition.m)

    dec = kms_decompose(rho, ref.dynamics, ref.beta)
    value = smix_weight_value(dec.weights, a)
    return EntropyReport(a, "kms", value, "closed_form", dec.m, True, budget.seed, "kms", value)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class Problem:
    """Everything the theorem checks need about one instance."""

    state: DensityMatrix
    alphas: tuple[float, ...]
    dynamics: Optional[Dynamics] = None
    beta: Optional[float] = None
    references: tuple[str, ...] = ("full",)
    budget: SearchBudget = field(default_factory=SearchBudget)
    expected: tuple[dict, ...] = ()
    name: str = ""

    @property
    def algebra(self):
        return self.state.algebra

    def reference(self, tag: str) -> ReferenceSystem:
        if tag == "full":
            return ReferenceSystem.full()
        if tag == "invariant":
            return ReferenceSystem.invariant(self.dynamics)
        return ReferenceSystem.kms(self.dynamics, self.beta)


@dataclass(frozen=True)
class VerificationResult:
    theorem_id: str
    status: Literal["pass", "fail", "skip"]
    lhs: float = float("nan")
    rhs: float = float("nan")
    slack: float = float("nan")
    context: str = ""
    alpha: Optional[float] = None
    reference: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _ge(tid, lhs, rhs, slack, alpha, ref, context="") -> VerificationResult:
    return VerificationResult(tid, "pass" if lhs >= rhs - slack else "fail", lhs, rhs, slack, context, alpha, ref)


def _le(tid, lhs, rhs, slack, alpha, ref, context="") -> VerificationResult:
    return VerificationResult(tid, "pass" if lhs <= rhs + slack else "fail", lhs, rhs, slack, context, alpha, ref)


def _eq(tid, lhs, rhs, slack, alpha, ref, context="") -> VerificationResult:
    return VerificationResult(tid, "pass" if abs(lhs - rhs) <= slack else "fail", lhs, rhs, slack, context, alpha, ref)


def _skip(tid, reason, alpha=None, ref="") -> VerificationResult:
    return VerificationResult(tid, "skip", context=reason, alpha=alpha, reference=ref)


def _nondegenerate(values: np.ndarray) -> bool:
    return all(len(g) == 1 for g in cluster_indices(np.sort(values), DEGENERACY_GAP))


class _Evaluator:
    """Caches entropy reports per (reference, alpha) for one problem."""

    def __init__(self, problem: Problem, budget: SearchBudget):
        self.problem = problem
        self.budget = budget
        self.cache: dict = {}
        rho, dyn = problem.state, problem.dynamics
        self.reasons: dict[str, Optional[str]] = {"full": None}
        if dyn is None:
            self.reasons["invariant"] = self.reasons["kms"] = "no dynamics given"
        else:
            self.reasons["invariant"] = None if is_invariant(rho, dyn) else "NotInvariant: state is not invariant"
            if dyn.kind != "hamiltonian" or problem.beta is None:
                self.reasons["kms"] = "KMS states need Hamiltonian dynamics and beta"
            elif not is_kms(rho, dyn, problem.beta):
                self.reasons["kms"] = "NotKMS: state is not a KMS state"
            else:
                self.reasons["kms"] = None

    def available(self, tag: str) -> bool:
        return self.reasons[tag] is None

    def report(self, tag: str, alpha: float) -> EntropyReport:
        key = (tag, float(alpha))
        if key not in self.cache:
            self.cache[key] = smix_renyi(self.problem.state, alpha, self.problem.reference(tag), self.budget)
        return self.cache[key]

    def value(self, tag: str, alpha: float) -> float:
        return self.report(tag, alpha).value


def verify_theorems(problem: Problem, budget: Optional[SearchBudget] = None) -> list[VerificationResult]:
    """Check every applicable theorem on one instance, one result per theorem per alpha.

    Checks whose hypotheses fail are returned with ``status == "skip"`` and
    the reason in ``context``.
    """
    budget = budget or problem.budget
    ev = _Evaluator(problem, budget)
    rho, dyn = problem.state, problem.dynamics
    out: list[VerificationResult] = []
    refs = [t for t in ("full", "invariant", "kms")]
    grid = sorted(set(float(a) for a in problem.alphas))

    g_comm: Optional[bool] = None
    if dyn is not None and ev.available("invariant"):
        g_comm = is_g_commutative(gns_construct(rho.algebra, rho, dyn))

    for a in grid:
        full = ev.report("full", a)
        if a == 1:
            if rho.is_faithful():
                out.append(_eq("full_equals_von_neumann", full.value, von_neumann(rho), EQUALITY_SLACK, a, "full"))
            else:
                out.append(_skip("full_equals_von_neumann", "state is not faithful", a, "full"))
        elif a > 1:
            lhs = full.search_value if full.search_value is not None else full.value
            out.append(_eq("full_equals_quantum_alpha_gt_1", lhs, quantum_renyi(rho, a), EQUALITY_SLACK, a, "full", "search value vs spectrum"))
        else:
            gap = full.search_gap
            ctx = f"search-minus-schatten gap {gap:.3e}" if gap is not None else ""
            out.append(_le("full_le_quantum_alpha_lt_1", full.value, quantum_renyi(rho, a), INEQUALITY_SLACK, a, "full", ctx))

        if ev.available("invariant"):
            inv = ev.value("invariant", a)
            hyp = rho.is_faithful() and (
                _nondegenerate(rho.eigenvalues)
                or (dyn.kind == "hamiltonian" and _nondegenerate(jacobi_eigh(dyn.hamiltonian)[0]))
            )
            if hyp:
                out.append(_eq("invariant_equals_full", inv, full.value, EQUALITY_SLACK, a, "invariant"))
            else:
                out.append(_skip("invariant_equals_full", "needs a faithful state with nondegenerate spectrum (or nondegenerate H)", a, "invariant"))
        else:
            out.append(_skip("invariant_equals_full", ev.reasons["invariant"], a, "invariant"))

        if ev.available("kms"):
            kms = ev.value("kms", a)
            if rho.algebra.n_blocks == 1:
                out.append(_eq("kms_zero_single_block", kms, 0.0, 0.0, a, "kms"))
            else:
                out.append(_skip("kms_zero_single_block", "algebra is not a factor", a, "kms"))
            inv_val = ev.value("invariant", a)
            out.append(_ge("invariant_ge_kms", inv_val, kms, INEQUALITY_SLACK, a, "invariant"))
            out.append(_ge("full_ge_kms", full.value, kms, INEQUALITY_SLACK, a, "full"))
            if g_comm:
                ok = full.value >= inv_val - INEQUALITY_SLACK and inv_val >= kms - INEQUALITY_SLACK
                out.append(
                    VerificationResult(
                        "chain_full_invariant_kms", "pass" if ok else "fail", full.value, kms, INEQUALITY_SLACK,
                        f"invariant value {inv_val:.12g}", a, "invariant",
                    )
                )
            else:
                out.append(_skip("chain_full_invariant_kms", "not G-commutative for this state", a, "invariant"))
        else:
            for tid in ("kms_zero_single_block", "invariant_ge_kms", "full_ge_kms", "chain_full_invariant_kms"):
                out.append(_skip(tid, ev.reasons["kms"], a, "kms"))

    for tag in refs:
        if not ev.available(tag):
            out.append(_skip("monotone_in_alpha", ev.reasons[tag], None, tag))
            out.append(_skip("limit_alpha_to_1", ev.reasons[tag], None, tag))
            continue
        vals = [ev.value(tag, a) for a in grid]
        for (a0, v0), (a1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
            out.append(_ge("monotone_in_alpha", v0, v1, INEQUALITY_SLACK, a1, tag, f"alpha {a0:g} -> {a1:g}"))
        centre = ev.value(tag, 1.0)
        lo, hi = ev.value(tag, 1.0 - LIMIT_EPS), ev.value(tag, 1.0 + LIMIT_EPS)
        dev = max(abs(lo - centre), abs(hi - centre))
        out.append(_le("limit_alpha_to_1", dev, 0.0, LIMIT_SLACK, 1.0, tag, f"S(1-eps)={lo:.12g} S(1)={centre:.12g} S(1+eps)={hi:.12g}"))

    for exp in problem.expected:
        tag, a = exp["reference"], float(exp["alpha"])
        if not ev.available(tag):
            out.append(_skip("expected_value", ev.reasons[tag], a, tag))
            continue
        out.append(_eq("expected_value", ev.value(tag, a), float(exp["value"]), float(exp.get("tol", 1e-9)), a, tag))
    return out


def entropy_table(problem: Problem, budget: Optional[SearchBudget] = None) -> list[EntropyReport]:
    """Reports for every requested reference and alpha, sorted by (reference, alpha).

    Raises
    ------
    NotInvariant, NotKMS
    """
    budget = budget or problem.budget
    rows = []
    for tag in sorted(problem.references):
        ref = problem.reference(tag)
        for a in sorted(set(float(x) for x in problem.alphas)):
            rows.append(smix_renyi(problem.state, a, ref, budget))
    return rows


__all__ = [
    "EntropyReport",
    "Problem",
    "VerificationResult",
    "NotInvariant",
    "NotKMS",
    "entropy_table",
    "quantum_renyi",
    "smix_renyi",
    "verify_theorems",
    "von_neumann",
]
