# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for pure-state trajectories."""
import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport zgemv

cnp.import_array()


cdef inline double _norm2(const double complex[::1] x) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(x.shape[0]):
        s += x[i].real * x[i].real + x[i].imag * x[i].imag
    return s


cdef void _gemv(const double complex[:, ::1] A, const double complex[::1] x,
                double complex[::1] y) nogil:
    # A is row-major, so hand BLAS its transpose view
    cdef int n = <int>A.shape[0]
    cdef int one = 1
    cdef double complex alpha = 1.0
    cdef double complex beta = 0.0
    cdef char trans = b'T'
    zgemv(&trans, &n, &n, &alpha, <double complex*>&A[0, 0], &n,
          <double complex*>&x[0], &one, &beta, &y[0], &one)


cdef void _taylor(const double complex[:, ::1] H, double dt, int order,
                  const double complex[::1] x, double complex[::1] y,
                  double complex[::1] term, double complex[::1] tmp) nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef int k
    cdef double complex f
    for i in range(n):
        y[i] = x[i]
        term[i] = x[i]
    for k in range(1, order + 1):
        _gemv(H, term, tmp)
        f = -1j * dt / k
        for i in range(n):
            term[i] = f * tmp[i]
            y[i] = y[i] + term[i]


cdef void _step(const double complex[:, :, ::1] U, const double complex[:, ::1] H,
                const int[::1] orders, double h0, int k,
                const double complex[::1] x, double complex[::1] y,
                double complex[::1] term, double complex[::1] tmp) nogil:
    if k < U.shape[0]:
        _gemv(U[k], x, y)
    else:
        _taylor(H, h0 / (<double>(1LL << k)), orders[k], x, y, term, tmp)


cdef inline int _fit_level(long long T, long long B, int K) nogil:
    # largest power-of-two step that keeps T aligned and does not pass B
    cdef long long step = 1LL << K
    while step > 1 and ((T % step) != 0 or step > B - T):
        step >>= 1
    cdef int lev = K
    while step > 1:
        step >>= 1
        lev -= 1
    return lev


cdef double _poly_norm2(const double[:, ::1] G, int m, double s) nogil:
    cdef int i, j
    cdef double acc = 0.0, pi, pj
    pi = 1.0
    for i in range(m):
        pj = 1.0
        for j in range(m):
            acc += pi * pj * G[i, j]
            pj *= s
        pi *= s
    return acc


cdef int _advance(const double complex[:, :, ::1] U, const double complex[:, ::1] H,
                  const int[::1] orders, double h0, int K, double complex[::1] psi,
                  double r, long long* T, long long B, double complex[::1] cand,
                  double complex[::1] term, double complex[::1] tmp,
                  double complex[:, ::1] V, double[:, ::1] G) nogil:
    cdef Py_ssize_t n = psi.shape[0], i
    cdef int lev, k, j, a, b, m
    cdef int n_dense = <int>U.shape[0]
    cdef double nrm, s, trial, p
    cdef double complex f, acc
    while T[0] < B:
        lev = _fit_level(T[0], B, K)
        _step(U, H, orders, h0, lev, psi, cand, term, tmp)
        nrm = _norm2(cand)
        if nrm > r:
            for i in range(n):
                psi[i] = cand[i]
            T[0] += 1LL << (K - lev)
            if nrm < 1e-300:
                return 2
            continue
        # bisect the crossing down to one tick
        k = lev + 1
        while k <= K and k < n_dense:
            _gemv(U[k], psi, cand)
            if _norm2(cand) > r:
                for i in range(n):
                    psi[i] = cand[i]
                T[0] += 1LL << (K - k)
            k += 1
        if k <= K:
            # below the dense ladder the norm is a polynomial in the offset
            m = orders[k] + 1
            for i in range(n):
                V[0, i] = psi[i]
            for j in range(1, m):
                _gemv(H, V[j - 1], V[j])
                f = -1j / j
                for i in range(n):
                    V[j, i] = f * V[j, i]
            for a in range(m):
                for b in range(m):
                    acc = 0.0
                    for i in range(n):
                        acc = acc + V[a, i].conjugate() * V[b, i]
                    G[a, b] = acc.real
            s = 0.0
            for j in range(k, K + 1):
                trial = s + h0 / (<double>(1LL << j))
                if _poly_norm2(G, m, trial) > r:
                    s = trial
                    T[0] += 1LL << (K - j)
            for i in range(n):
                acc = 0.0
                p = 1.0
                for j in range(m):
                    acc = acc + p * V[j, i]
                    p *= s
                psi[i] = acc
        return 1
    return 0


def advance(const double complex[:, :, ::1] U, const double complex[:, ::1] H,
            const int[::1] orders, double h0, int K,
            double complex[::1] psi, double r, long long T, long long B):
    """Propagate psi without jumps from tick T towards tick B.

    Returns (T, status): status 0 reached B, 1 the squared norm would drop
    below r within the next finest tick, 2 norm underflow.
    """
    cdef Py_ssize_t n = psi.shape[0]
    cdef int m = 1
    cdef Py_ssize_t k
    for k in range(orders.shape[0]):
        if orders[k] + 1 > m:
            m = orders[k] + 1
    cdef double complex[::1] cand = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] term = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)
    cdef double complex[:, ::1] V = np.empty((m, n), dtype=np.complex128)
    cdef double[:, ::1] G = np.empty((m, m), dtype=np.float64)
    cdef long long t = T
    cdef int status
    with nogil:
        status = _advance(U, H, orders, h0, K, psi, r, &t, B, cand, term, tmp, V, G)
    return t, status


def collective_lower(const double complex[::1] psi, const double complex[::1] weights, int n):
    """sum_j weights[j] sigma_j psi with site 0 the most significant bit."""
    cdef Py_ssize_t d = psi.shape[0], i
    cdef int j
    cdef long long bit
    out_arr = np.zeros(d, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    with nogil:
        for j in range(n):
            if weights[j] == 0:
                continue
            bit = 1LL << (n - 1 - j)
            for i in range(d):
                if (i & bit) == 0:
                    out[i] = out[i] + weights[j] * psi[i | bit]
    return out_arr


def pair_marginals(const double complex[::1] psi, int n, const long[:, ::1] pairs):
    """4x4 reduced states of a pure state for each (a, b) pair of 1-based sites."""
    cdef Py_ssize_t d = psi.shape[0], i
    cdef Py_ssize_t P = pairs.shape[0], p
    cdef int x, y
    cdef long long ba, bb, ix, iy
    out_arr = np.zeros((P, 4, 4), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex va, vb
    with nogil:
        for p in range(P):
            ba = 1LL << (n - pairs[p, 0])
            bb = 1LL << (n - pairs[p, 1])
            for i in range(d):
                if (i & ba) or (i & bb):
                    continue
                for x in range(4):
                    ix = i | (ba if x & 2 else 0) | (bb if x & 1 else 0)
                    va = psi[ix]
                    if va == 0:
                        continue
                    for y in range(4):
                        iy = i | (ba if y & 2 else 0) | (bb if y & 1 else 0)
                        vb = psi[iy]
                        out[p, x, y] = out[p, x, y] + va * vb.conjugate()
    return out_arr
