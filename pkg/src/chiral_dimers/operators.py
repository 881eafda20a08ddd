"""Spin-chain operators and column-stacking superoperator helpers.

Basis: |s_1 ... s_N>, site 1 is the most significant bit, g -> 0, e -> 1.
vec() stacks columns, so vec(A X B) = (B^T kron A) vec(X).
"""
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)   # |g><e|


@lru_cache(maxsize=64)
def _lowering(n, j):
    left = sp.identity(2**j, dtype=complex, format="csr")
    right = sp.identity(2 ** (n - j - 1), dtype=complex, format="csr")
    op = sp.kron(sp.kron(left, sp.csr_matrix(_LOWER)), right, format="csr")
    op.sort_indices()
    return op


def lowering(n, j):
    """sigma_j = |g><e| on site j (0-based) of an n-site chain."""
    if not 0 <= j < n:
        raise IndexError(f"site {j} out of range for {n} sites")
    return _lowering(n, j).copy()


def lowering_ops(n):
    return [lowering(n, j) for j in range(n)]


def number_op(n, j):
    s = lowering(n, j)
    return (s.conj().T @ s).tocsr()


def collective(n, weights):
    """sum_j weights[j] sigma_j."""
    out = sp.csr_matrix((2**n, 2**n), dtype=complex)
    for j, w in enumerate(weights):
        if w != 0:
            out = out + w * _lowering(n, j)
    return out.tocsr()


def dag(a):
    return a.conj().T


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d, order="F")


def spre(a):
    d = a.shape[0]
    return sp.kron(sp.identity(d, dtype=complex), a, format="csr")


def spost(b):
    d = b.shape[0]
    return sp.kron(b.T, sp.identity(d, dtype=complex), format="csr")


def sandwich(a, b):
    """Superoperator of X -> a X b^dagger."""
    return sp.kron(b.conj(), a, format="csr")


def site_reversal(n):
    """Permutation matrix relabelling site j -> n-1-j."""
    d = 2**n
    idx = np.arange(d)
    rev = np.zeros(d, dtype=np.int64)
    for j in range(n):
        rev |= ((idx >> j) & 1) << (n - 1 - j)
    return sp.csr_matrix((np.ones(d, dtype=complex), (rev, idx)), shape=(d, d))


def product_state(n, local):
    psi = np.array([1.0 + 0j])
    for _ in range(n):
        psi = np.kron(psi, local)
    return psi


def ground_state(n):
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    return psi
