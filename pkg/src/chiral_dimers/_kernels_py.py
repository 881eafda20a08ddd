"""Pure-numpy versions of the trajectory kernels (same signatures)."""
import numpy as np


def _fit_level(T, B, K):
    step = 1 << K
    while step > 1 and (T % step != 0 or step > B - T):
        step >>= 1
    return K - (step.bit_length() - 1)


def _step(U, H, orders, h0, k, x):
    if k < U.shape[0]:
        return U[k] @ x
    dt = h0 / (1 << k)
    y = x.copy()
    term = x
    for m in range(1, orders[k] + 1):
        term = (-1j * dt / m) * (H @ term)
        y += term
    return y


def _taylor_basis(H, x, order):
    """Vectors v_j = (-iH)^j x / j!, so that exp(-iHs) x ~ sum_j s^j v_j."""
    V = [x.copy()]
    for j in range(1, order + 1):
        V.append((-1j / j) * (H @ V[-1]))
    V = np.array(V)
    return V, (V.conj() @ V.T).real


def _poly_norm2(G, s):
    p = s ** np.arange(G.shape[0])
    return float(p @ G @ p)


def advance(U, H, orders, h0, K, psi, r, T, B):
    T, B = int(T), int(B)
    n_dense = U.shape[0]
    while T < B:
        lev = _fit_level(T, B, K)
        cand = _step(U, H, orders, h0, lev, psi)
        nrm = np.vdot(cand, cand).real
        if nrm > r:
            psi[:] = cand
            T += 1 << (K - lev)
            if nrm < 1e-300:
                return T, 2
            continue
        # bisect the crossing down to one tick
        k = lev + 1
        while k <= K and k < n_dense:
            cand = U[k] @ psi
            if np.vdot(cand, cand).real > r:
                psi[:] = cand
                T += 1 << (K - k)
            k += 1
        if k <= K:
            # below the dense ladder the norm is a polynomial in the offset
            V, G = _taylor_basis(H, psi, int(orders[k]))
            s = 0.0
            for kk in range(k, K + 1):
                trial = s + h0 / (1 << kk)
                if _poly_norm2(G, trial) > r:
                    s = trial
                    T += 1 << (K - kk)
            psi[:] = (s ** np.arange(V.shape[0])) @ V
        return T, 1
    return T, 0


def collective_lower(psi, weights, n):
    out = np.zeros_like(psi)
    idx = np.arange(psi.size)
    for j, w in enumerate(weights):
        if w == 0:
            continue
        bit = 1 << (n - 1 - j)
        empty = (idx & bit) == 0
        out[empty] += w * psi[idx[empty] | bit]
    return out


def pair_marginals(psi, n, pairs):
    t = psi.reshape((2,) * n)
    out = np.empty((len(pairs), 4, 4), dtype=complex)
    for p, (a, b) in enumerate(pairs):
        a, b = int(a) - 1, int(b) - 1
        rest = [x for x in range(n) if x not in (a, b)]
        m = t.transpose([a, b] + rest).reshape(4, -1)
        out[p] = m @ m.conj().T
    return out
