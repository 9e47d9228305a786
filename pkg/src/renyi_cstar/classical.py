"""Classical Renyi and Shannon entropies and Campbell's exponential-cost coding.

All logarithms are base 2, so entropies and code costs are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidAlpha, InvalidCode, InvalidDistribution

SUM_TOL = 1e-12


def check_alpha(alpha: float, allow_one: bool = False) -> float:
    """Validate a Renyi order and return it as a float."""
    a = float(alpha)
    if not math.isfinite(a) or a < 0:
        raise InvalidAlpha(f"alpha must be a finite real >= 0, got {alpha!r}")
    if a == 1.0 and not allow_one:
        raise InvalidAlpha("alpha = 1 is the Shannon/von Neumann limit; use the dedicated function")
    return a


@dataclass(frozen=True)
class ProbDist:
    """Finite probability vector.

    Entries must be nonnegative and sum to one within ``1e-12``; the stored
    vector is renormalized exactly.
    """

    probs: np.ndarray

    def __init__(self, probs: Sequence[float]):
        p = np.array(probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise InvalidDistribution("distribution must have at least one entry")
        if not np.all(np.isfinite(p)):
            raise InvalidDistribution("distribution has non-finite entries")
        if np.any(p < 0):
            raise InvalidDistribution(f"negative probability {p.min():.3g}")
        total = p.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {float(total):.12g}, not 1")
        p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n: int) -> "ProbDist":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.probs.size

    def support(self) -> np.ndarray:
        return self.probs[self.probs > 0]


def _as_dist(p) -> ProbDist:
    return p if isinstance(p, ProbDist) else ProbDist(p)


def power_sum(weights: np.ndarray, alpha: float) -> float:
    """``sum_k w_k**alpha`` over the strictly positive weights (0**alpha = 0)."""
    w = np.asarray(weights, dtype=float)
    w = w[w > 0]
    if alpha == 0:
        return float(w.size)
    return float(np.sum(w**alpha))


def renyi_of_weights(weights, alpha: float) -> float:
    """Renyi entropy in bits of a nonnegative weight vector, normalized here.

    ``alpha`` is assumed already validated and different from 1. Near
    ``alpha = 1`` the direct formula cancels catastrophically, so there
    ``log sum w**alpha`` is evaluated as ``log1p(sum w * expm1((alpha - 1) log w))``.
    """
    w = np.asarray(weights, dtype=float)
    w = w[w > 0]
    if alpha == 0:
        return math.log2(w.size)
    w = w / w.sum()
    delta = alpha - 1.0
    if abs(delta) < 0.5:
        s = float(np.sum(w * np.expm1(delta * np.log(w))))
        return math.log1p(s) / (-delta * math.log(2.0)) + 0.0
    return math.log2(float(np.sum(w**alpha))) / (1.0 - alpha) + 0.0


def renyi_classical(p, alpha: float) -> float:
    """Renyi entropy ``log2(sum p**alpha) / (1 - alpha)`` in bits.

    ``alpha = 0`` gives the Hartley value ``log2`` of the support size.
    ``alpha = 1`` is rejected; call :func:`shannon` instead.
    """
    a = check_alpha(alpha)
    return renyi_of_weights(_as_dist(p).probs, a)


def shannon(p) -> float:
    q = _as_dist(p).support()
    return float(-np.sum(q * np.log2(q)))


def renyi_limit_check(p, eps: float) -> tuple[float, float]:
    """Renyi entropies just below and just above ``alpha = 1``.

    By monotonicity in alpha the pair brackets :func:`shannon` (first entry
    from above, second from below).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    dist = _as_dist(p)
    return renyi_classical(dist, 1.0 - eps), renyi_classical(dist, 1.0 + eps)


def product_dist(p, q) -> ProbDist:
    """Joint distribution of two independent variables (row-major outer product)."""
    return ProbDist(np.outer(_as_dist(p).probs, _as_dist(q).probs).reshape(-1))


@dataclass(frozen=True)
class CodeSpec:
    """Codeword lengths for a source alphabet and the cost exponent ``beta``.

    ``lengths[x]`` is ``None`` for symbols that receive no codeword (only
    allowed for zero-probability symbols when the cost is evaluated).
    """

    lengths: tuple[Optional[int], ...]
    beta: float

    def __post_init__(self):
        beta = float(self.beta)
        if not beta > -1 or beta == 0 or not math.isfinite(beta):
            raise InvalidCode(f"beta must satisfy beta > -1 and beta != 0, got {self.beta!r}")
        lengths = tuple(None if l is None else int(l) for l in self.lengths)
        if any(l is not None and l < 0 for l in lengths):
            raise InvalidCode("codeword lengths must be nonnegative")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "beta", beta)

    def kraft_sum(self) -> float:
        return sum(2.0 ** (-l) for l in self.lengths if l is not None)

    def satisfies_kraft(self, tol: float = 1e-12) -> bool:
        return self.kraft_sum() <= 1.0 + tol

    @property
    def alpha(self) -> float:
        """Renyi order matched to this cost exponent."""
        return 1.0 / (1.0 + self.beta)


def coding_cost(p, code: CodeSpec) -> float:
    """Exponential-mean codeword length ``(1/beta) log2 sum p(x) 2**(beta l(x))``."""
    dist = _as_dist(p)
    if len(code.lengths) != len(dist):
        raise InvalidCode(f"{len(code.lengths)} lengths for {len(dist)} symbols")
    total = 0.0
    for px, lx in zip(dist.probs, code.lengths):
        if px == 0:
            continue
        if lx is None:
            raise InvalidCode("symbol with positive probability has no codeword")
        total += px * 2.0 ** (code.beta * lx)
    return math.log2(total) / code.beta


def escort(p, alpha: float) -> np.ndarray:
    """Escort distribution ``p**alpha / sum p**alpha`` (zeros stay zero)."""
    probs = _as_dist(p).probs
    q = np.zeros_like(probs)
    pos = probs > 0
    q[pos] = probs[pos] ** alpha
    return q / q.sum()


def build_campbell_code(p, beta: float) -> CodeSpec:
    """Lengths ``ceil(-log2 q(x))`` from the escort distribution of order ``1/(1+beta)``.

    The result satisfies Kraft and ``S_alpha <= L_beta < S_alpha + 1``.
    Zero-probability symbols get no codeword.
    """
    beta = float(beta)
    if not beta > -1 or beta == 0:
        raise InvalidCode(f"beta must satisfy beta > -1 and beta != 0, got {beta!r}")
    dist = _as_dist(p)
    if not np.any(dist.probs > 0):
        raise InvalidDistribution("distribution has no mass")
    # -log2 q(x) in log space: p**alpha underflows for tiny p
    alpha = 1.0 / (1.0 + beta)
    logp = np.full(len(dist), -np.inf)
    pos = dist.probs > 0
    logp[pos] = alpha * np.log2(dist.probs[pos])
    top = np.max(logp[pos])
    log_norm = top + math.log2(float(np.sum(np.exp2(logp[pos] - top))))
    lengths: list[Optional[int]] = []
    for lp in logp:
        if lp == -np.inf:
            lengths.append(None)
            continue
        # guard against -log2(q) landing a few ulps above an integer
        ideal = log_norm - lp
        nearest = round(ideal)
        lengths.append(int(nearest) if abs(ideal - nearest) < 1e-12 else math.ceil(ideal))
    return CodeSpec(tuple(lengths), beta)
