"""Independent reference computations for the tests.

Everything here uses numpy's LAPACK eigensolver and direct formulas, never the
package's own numerics, so agreement is a genuine cross-check.
"""

import math

import numpy as np


def renyi(p, alpha):
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-300]
    if alpha == 1:
        return float(-np.sum(p * np.log2(p)))
    if alpha == 0:
        return math.log2(p.size)
    return math.log2(np.sum(p**alpha)) / (1 - alpha)


def spectrum(m):
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return np.clip(w[::-1], 0.0, None)


def quantum_renyi(m, alpha):
    w = spectrum(m)
    return renyi(w[w > 1e-12], alpha)


def expm_herm(h, t):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(t * w)) @ v.conj().T


def gibbs(h, beta):
    g = expm_herm(h, -beta)
    return g / np.trace(g).real


def block_gibbs_mixture(blocks, weights, beta):
    """Direct sum of per-block Gibbs states of diagonal Hamiltonians ``blocks``."""
    parts = []
    for e, w in zip(blocks, weights):
        g = np.exp(-beta * np.asarray(e, dtype=float))
        parts.append(w * g / g.sum())
    return np.diag(np.concatenate(parts)).astype(complex)


def random_state(rng, n, rank=None):
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    m = g @ g.conj().T
    return m / np.trace(m).real


def haar_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_prob(rng, n, floor=0.0):
    p = rng.random(n) + floor
    return p / p.sum()


def campbell_cost(p, lengths, beta):
    p = np.asarray(p, dtype=float)
    l = np.asarray(lengths, dtype=float)
    return math.log2(np.sum(p * 2.0 ** (beta * l))) / beta


def prefix_majorizes(p, q, slack):
    a = np.sort(p)[::-1]
    b = np.sort(q)[::-1]
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - slack))
