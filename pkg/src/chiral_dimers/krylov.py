"""Arnoldi approximation of exp(t A) v for matrix-free linear generators."""
import math

import numpy as np
from scipy.linalg import expm

from .errors import ToleranceFailure


def expmv(matvec, v, t, m=40, tol=1e-10, dt0=None, max_steps=100000):
    """Propagate v by exp(t A) with adaptive substeps.

    The local error estimate is the standard Krylov residual term
    beta * |h_{m+1,m} e_m^T exp(dt H_m) e_1|, required below tol * dt per step.
    Returns (w, info) where info counts matvecs, steps and the last step size.
    """
    w = np.array(v, dtype=complex, copy=True)
    n = w.size
    m = min(m, n)
    tcur = 0.0
    dt = t if dt0 is None else min(dt0, t)
    nmv = nsteps = 0
    V = np.empty((m + 1, n), dtype=complex)
    while tcur < t * (1 - 1e-15) and t - tcur > 1e-300:
        beta = np.linalg.norm(w)
        if beta == 0:
            break
        H = np.zeros((m + 2, m + 2), dtype=complex)
        V[0] = w / beta
        k = m
        breakdown = False
        for j in range(m):
            p = matvec(V[j])
            nmv += 1
            # two passes of classical Gram-Schmidt
            for _ in range(2):
                c = V[: j + 1].conj() @ p
                p = p - c @ V[: j + 1]
                H[: j + 1, j] += c
            hn = np.linalg.norm(p)
            if hn <= 1e-13 * beta:
                k = j + 1
                breakdown = True
                break
            H[j + 1, j] = hn
            V[j + 1] = p / hn
        if breakdown:
            dt = t - tcur
            E = expm(dt * H[:k, :k])
            w = beta * (E[:, 0] @ V[:k])
            tcur = t
            nsteps += 1
            break
        H[m + 1, m] = 1.0
        Hm = H[: m + 2, : m + 2]
        for _ in range(60):
            dt = min(dt, t - tcur)
            E = expm(dt * Hm)
            err = beta * abs(E[m, 0]) * 1.0
            if err <= tol * max(dt, 1e-300):
                break
            dt *= 0.5
        else:
            raise ToleranceFailure("Krylov step size collapsed")
        w = beta * (E[: m + 1, 0] @ V[: m + 1])
        tcur += dt
        nsteps += 1
        if nsteps > max_steps:
            raise ToleranceFailure("Krylov propagation exceeded the step budget")
        grow = 0.9 * (tol * dt / err) ** (1.0 / m) if err > 0 else 2.0
        dt = dt * min(2.0, max(0.5, grow))
    return w, {"matvecs": nmv, "steps": nsteps, "dt": dt}
