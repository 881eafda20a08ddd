"""Driven spin chain coupled to a chiral 1D bath.

The generator is kept in factored form

    L(X) = A X + X B + sum_{a,b} K[a, b] s_a X s_b^dagger

with s_a the site lowering operators.  Everything else (sparse matrix,
matrix-free action, adjoint) is derived from (A, B, K).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace as dc_replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from . import operators as ops
from .errors import (
    DegenerateNullspace,
    DimensionOverflow,
    InvalidState,
    OddChain,
    SolverDivergence,
    ToleranceFailure,
    ZeroAsymmetry,
)
from .krylov import expmv
from .observables import (
    PairObservables,
    adjacent_pairs,
    fidelity,
    purity,
    reduced_pair,
    validate_density,
)

SPARSE_CAP = 12
DENSE_CAP = 7
SHIFT = 1e-3            # shift-invert target, in units of the largest rate
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ChainParams:
    n_spins: int
    rabi: complex = 0.5
    detuning: float = 0.0
    gamma_l: float = 0.0
    gamma_r: float = 1.0
    epsilon_comm: float = 0.0
    gamma_prime: float = 0.0
    site_phases: tuple | None = None

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins}")
        for name in ("gamma_l", "gamma_r", "gamma_prime"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.site_phases is not None:
            if len(self.site_phases) != self.n_spins:
                raise ValueError("site_phases needs one entry per spin")
            object.__setattr__(self, "site_phases", tuple(float(x) for x in self.site_phases))
        object.__setattr__(self, "rabi", complex(self.rabi))

    @property
    def delta_gamma(self):
        return self.gamma_r - self.gamma_l

    @property
    def mirrored(self):
        """True when gamma_l > gamma_r, handled by relabelling sites."""
        return self.gamma_l > self.gamma_r

    def mirror(self):
        phases = None if self.site_phases is None else tuple(reversed(self.site_phases))
        return dc_replace(self, gamma_l=self.gamma_r, gamma_r=self.gamma_l,
                          site_phases=phases)

    def drives(self):
        if self.site_phases is None:
            return [self.rabi] * self.n_spins
        return [self.rabi * np.exp(1j * ph) for ph in self.site_phases]

    def pair_phase(self, j, l):
        return (j - l) * self.epsilon_comm / 2

    @property
    def rate_scale(self):
        return max(self.gamma_r, self.gamma_l, 1e-300)

    def replace(self, **kw):
        return dc_replace(self, **kw)


def _ct(x):
    # contiguous conjugate transpose; sparse @ strided views is several times slower
    return np.ascontiguousarray(x.conj().T)


class Superoperator:
    """Linear map on 2^N x 2^N matrices in factored form."""

    def __init__(self, n, left, right, jump_ops, coeffs, scale=1.0, label=""):
        self.n = n
        self.d = 2**n
        self.dim = self.d**2
        self.left = sp.csr_matrix(left)
        self.right = sp.csr_matrix(right)
        self.jump_ops = [sp.csr_matrix(j) for j in jump_ops]
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.scale = scale
        self.label = label
        self._matrix = None
        self._channels = None
        self._rh = None
        self.hermitian_form = (
            abs(self.left - self.right.conj().T).max() < 1e-14 * max(1.0, abs(self.left).max())
            and np.allclose(self.coeffs, self.coeffs.conj().T, atol=1e-14)
        )

    # -- representations
    def matrix(self):
        """Sparse 4^N x 4^N matrix acting on column-stacked vectors."""
        if self._matrix is None:
            M = ops.spre(self.left) + ops.spost(self.right)
            for a, b in zip(*np.nonzero(np.abs(self.coeffs) > 0)):
                M = M + self.coeffs[a, b] * ops.sandwich(self.jump_ops[a], self.jump_ops[b])
            M = M.tocsr()
            M.eliminate_zeros()
            self._matrix = M
        return self._matrix

    def dense(self):
        if self.n > DENSE_CAP:
            raise DimensionOverflow(f"dense Liouvillian requested for N = {self.n} > {DENSE_CAP}")
        return self.matrix().toarray()

    def channels(self):
        """Diagonalize K to collective channels c_m with weights kappa_m."""
        if self._channels is None:
            K = 0.5 * (self.coeffs + self.coeffs.conj().T)
            w, W = np.linalg.eigh(K)
            keep = np.abs(w) > 1e-13 * max(1.0, np.abs(w).max())
            chans = []
            for kap, col in zip(w[keep], W.T[keep]):
                c = sp.csr_matrix((self.d, self.d), dtype=complex)
                for a, x in enumerate(col):
                    if x != 0:
                        c = c + x * self.jump_ops[a]
                chans.append((float(kap), c.tocsr()))
            self._channels = chans
        return self._channels

    def _right_h(self):
        if self._rh is None:
            self._rh = self.right.conj().T.tocsr()
        return self._rh

    # -- actions
    def apply(self, X):
        """L(X) for a general (not necessarily Hermitian) matrix X."""
        X = np.asarray(X, dtype=complex)
        Xh = _ct(X)
        out = self.left @ X + _ct(self._right_h() @ Xh)
        if not self.hermitian_form:
            for a in range(len(self.jump_ops)):
                for b in range(len(self.jump_ops)):
                    k = self.coeffs[a, b]
                    if k != 0:
                        out += k * (self.jump_ops[a] @ _ct(self.jump_ops[b] @ Xh))
            return out
        for kap, c in self.channels():
            out += kap * (c @ _ct(c @ Xh))
        return out

    def apply_hermitian(self, rho):
        """L(rho) assuming rho is Hermitian and the generator is in Lindblad form."""
        if not self.hermitian_form:
            return self.apply(rho)
        Y = self.left @ rho
        out = Y + _ct(Y)
        for kap, c in self.channels():
            out += kap * (c @ _ct(c @ rho))
        return out

    def apply_vec(self, v):
        return ops.vec(self.apply(ops.unvec(v, self.d)))

    def adjoint_apply(self, Y):
        """Heisenberg-picture map L^dagger(Y)."""
        Y = np.asarray(Y, dtype=complex)
        out = self.left.conj().T @ Y + (self.right @ Y.conj().T).conj().T
        for a in range(len(self.jump_ops)):
            for b in range(len(self.jump_ops)):
                k = self.coeffs[a, b]
                if k != 0:
                    Ja = self.jump_ops[a]
                    out += np.conj(k) * (Ja.conj().T @ (self.jump_ops[b].T @ Y.T).T)
        return out

    def trace_defect(self):
        """max |L^dagger(1)|, zero for a trace-preserving generator."""
        return float(np.abs(self.adjoint_apply(np.eye(self.d))).max())

    def conjugated(self, P):
        """Relabel the basis with permutation matrix P (X -> P X P^T)."""
        Pt = P.T
        return Superoperator(self.n, P @ self.left @ Pt, P @ self.right @ Pt,
                             [P @ j @ Pt for j in self.jump_ops], self.coeffs,
                             scale=self.scale, label=self.label)

    def __sub__(self, other):
        return self.matrix() - other.matrix()

    @classmethod
    def zero(cls, n):
        d = 2**n
        z = sp.csr_matrix((d, d), dtype=complex)
        return cls(n, z, z, [], np.zeros((0, 0)))


def _build_direct(p: ChainParams) -> Superoperator:
    n = p.n_spins
    s = ops.lowering_ops(n)
    sd = [x.conj().T.tocsr() for x in s]
    d = 2**n
    gl, dg, gp = p.gamma_l, p.delta_gamma, p.gamma_prime
    left = sp.csr_matrix((d, d), dtype=complex)
    right = sp.csr_matrix((d, d), dtype=complex)
    K = np.zeros((n, n), dtype=complex)

    # coherent drive and detuning
    H = sp.csr_matrix((d, d), dtype=complex)
    for j, W in enumerate(p.drives()):
        H = H + W * s[j] + np.conj(W) * sd[j] - p.detuning * (sd[j] @ s[j])
    left = left - 1j * H
    right = right + 1j * H

    # bidirectional part: coherent exchange plus correlated decay
    if gl > 0:
        for j in range(n):
            for l in range(n):
                phi = abs(p.pair_phase(j, l))
                hop = sd[l] @ s[j]
                sn, cs = math.sin(phi), math.cos(phi)
                if sn != 0:
                    left = left - 1j * gl * sn * hop
                    right = right + 1j * gl * sn * hop
                # D(s_j, s_l) = 2 s_j X s_l^+ - s_l^+ s_j X - X s_l^+ s_j
                K[j, l] += 2 * gl * cs
                left = left - gl * cs * hop
                right = right - gl * cs * hop

    # cascaded part
    for j in range(n):
        ss = sd[j] @ s[j]
        rate = dg / 2 + gp / 2
        K[j, j] += 2 * rate
        left = left - rate * ss
        right = right - rate * ss
        for l in range(j):
            ph = np.exp(-1j * p.pair_phase(j, l))
            # e^{-i phi}[s_j, X s_l^+] + h.c.
            K[j, l] += dg * ph
            right = right - dg * ph * (sd[l] @ s[j])
            K[l, j] += dg * np.conj(ph)
            left = left - dg * np.conj(ph) * (sd[j] @ s[l])

    return Superoperator(n, left, right, s, K, scale=p.rate_scale,
                         label="chain")


def build_liouvillian(params: ChainParams, sparse_cap=SPARSE_CAP) -> Superoperator:
    if params.n_spins > sparse_cap:
        raise DimensionOverflow(f"N = {params.n_spins} exceeds the cap {sparse_cap}")
    if not params.mirrored:
        return _build_direct(params)
    L = _build_direct(params.mirror())
    return L.conjugated(ops.site_reversal(params.n_spins))


# --- target state ------------------------------------------------------------

@dataclass(frozen=True)
class DimerProduct:
    n_pairs: int
    alpha: complex
    pair_state: np.ndarray
    state: np.ndarray

    def projector(self):
        return np.outer(self.state, self.state.conj())


def singlet_fraction(rabi, delta_gamma):
    return 2j * math.sqrt(2) * np.conj(rabi) / delta_gamma


def dimer_pair(alpha):
    a = alpha / math.sqrt(2)
    v = np.array([1.0, a, -a, 0.0], dtype=complex)
    return v / math.sqrt(1 + abs(alpha) ** 2)


def dimer_product(params: ChainParams) -> DimerProduct:
    if params.n_spins % 2:
        raise OddChain(f"dimer product needs an even chain, got N = {params.n_spins}")
    if params.delta_gamma == 0:
        raise ZeroAsymmetry("gamma_r == gamma_l: singlet fraction undefined")
    alpha = singlet_fraction(params.rabi, params.delta_gamma)
    pair = dimer_pair(alpha)
    state = np.array([1.0 + 0j])
    for _ in range(params.n_spins // 2):
        state = np.kron(state, pair)
    return DimerProduct(params.n_spins // 2, complex(alpha), pair, state)


# --- time evolution -------------------------------------------------------------

def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing and start at 0")
    return t


def _finalize(rho, herm_tol, trace_tol, psd_tol):
    validate_density(rho, herm_tol=herm_tol, trace_tol=trace_tol, psd_tol=psd_tol)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def evolve(liouvillian: Superoperator, rho0, t_grid, method="rk", rtol=1e-8, atol=1e-10,
           krylov_dim=40, krylov_tol=1e-10, check=True, check_tol=1e-7, psd_tol=1e-8):
    """Density matrices at the requested times.

    method "rk" integrates with an adaptive 8th-order embedded Runge-Kutta
    pair; "krylov" uses Arnoldi propagation between grid points, which is
    cheaper for large chains where explicit steps are stability-limited.
    """
    t = _check_grid(t_grid)
    rho0 = np.asarray(rho0, dtype=complex)
    validate_density(rho0)
    d = liouvillian.d
    if rho0.shape != (d, d):
        raise InvalidState("rho0 dimension does not match the generator")
    herm = liouvillian.hermitian_form
    out = []
    if method == "rk":
        def rhs(_, y):
            r = y.reshape(d, d)
            return (liouvillian.apply_hermitian(r) if herm else liouvillian.apply(r)).ravel()

        sol = solve_ivp(rhs, (t[0], t[-1]), rho0.ravel(), method="DOP853", t_eval=t,
                        rtol=rtol, atol=atol)
        if sol.status != 0 or sol.y.shape[1] != t.size:
            raise ToleranceFailure(
                f"step control failed: {sol.message}; the problem may be too stiff "
                "for explicit steps, try method='krylov' or smaller rate ratios")
        states = [sol.y[:, i].reshape(d, d) for i in range(t.size)]
    elif method == "krylov":
        def mv(v):
            return liouvillian.apply(v.reshape(d, d)).ravel()

        states = [rho0.copy()]
        v = rho0.ravel()
        dt0 = None
        for a, b in zip(t[:-1], t[1:]):
            v, info = expmv(mv, v, b - a, m=krylov_dim, tol=krylov_tol, dt0=dt0)
            dt0 = info["dt"]
            states.append(v.reshape(d, d))
    else:
        raise ValueError(f"unknown method {method!r}")
    for r in states:
        out.append(_finalize(r, check_tol, check_tol, psd_tol) if check else r)
    return out


# --- spectra -------------------------------------------------------------------

@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray | None


def _spectrum_near_zero(L: Superoperator, k=16, dense_max=5):
    if L.n <= dense_max:
        w, V = np.linalg.eig(L.dense())
        return Spectrum(w, V)
    if L.n > 8:
        raise DimensionOverflow(f"eigensolver supports N <= 8, got {L.n}")
    M = L.matrix().tocsc()
    k = min(k, M.shape[0] - 2)
    # shift just off the (singular) origin; at sigma = 0 the factorization is
    # singular and every eigenpair except the null vector comes back unconverged
    sigma = SHIFT * L.scale
    try:
        w, V = spla.eigs(M, k=k, sigma=sigma, which="LM", tol=1e-13, maxiter=10000)
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        raise SolverDivergence(str(exc)) from exc
    res = np.linalg.norm(M @ V - V * w, axis=0)
    if res.max() > RESIDUAL_TOL * L.scale:
        raise SolverDivergence(f"Arnoldi eigenpair residual {res.max():.2e}")
    return Spectrum(w, V)


def _null_threshold(L, rel):
    return rel * L.scale


def steady_state(liouvillian: Superoperator, null_tol=1e-9, spectrum=None, evolve_fallback=True):
    """Return (rho_ss, nullspace_dim).  rho_ss is None when the nullspace is degenerate."""
    L = liouvillian
    if L.n > 8:
        if not evolve_fallback:
            raise DimensionOverflow("no eigensolver beyond N = 8")
        return _steady_by_evolution(L), 1
    spec = spectrum or _spectrum_near_zero(L)
    thr = _null_threshold(L, null_tol)
    idx = np.nonzero(np.abs(spec.eigenvalues) < thr)[0]
    if idx.size == 0:
        raise SolverDivergence("no eigenvalue inside the nullspace threshold")
    if idx.size > 1:
        return None, int(idx.size)
    v = spec.vectors[:, idx[0]]
    rho = ops.unvec(v, L.d)
    rho = 0.5 * (rho + rho.conj().T) if abs(np.trace(rho)) == 0 else rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return rho, 1


def _steady_by_evolution(L, chunk=50.0, tol=1e-10, max_time=1e5):
    rho = np.zeros((L.d, L.d), dtype=complex)
    rho[0, 0] = 1
    t = 0.0
    while t < max_time:
        nxt = evolve(L, rho, [0.0, chunk])[-1]
        change = np.abs(nxt - rho).max()
        rho, t = nxt, t + chunk
        if change < tol:
            return rho
    raise SolverDivergence("long-time evolution did not settle")


def liouvillian_gap(liouvillian: Superoperator, null_tol=1e-9, strict=False, spectrum=None):
    """(lambda_1, t_ss): slowest nonzero eigenvalue and -1/Re(lambda_1)."""
    L = liouvillian
    spec = spectrum or _spectrum_near_zero(L)
    thr = _null_threshold(L, null_tol)
    w = spec.eigenvalues
    null = np.abs(w) < thr
    if null.sum() > 1:
        if strict:
            raise DegenerateNullspace(f"nullspace dimension {int(null.sum())}")
        warnings.warn("degenerate nullspace; gap taken relative to it", RuntimeWarning,
                      stacklevel=2)
    rest = w[~null]
    if rest.size == 0:
        raise SolverDivergence("no nonzero eigenvalue found")
    lam = complex(rest[np.argmax(rest.real)])
    if lam.real >= 0:
        raise SolverDivergence(f"gap eigenvalue with non-negative real part {lam}")
    return lam, -1.0 / lam.real


# --- observables and scans ------------------------------------------------------

def dimer_observables(rho, n):
    pairs = adjacent_pairs(n)
    ob = PairObservables(rho, pairs)
    return ob


def imperfection_scan(params: ChainParams, scan="epsilon_comm", values=(0.0,)):
    """Steady-state pair purities and global purity along one imperfection axis.

    Returns a list of dict rows with keys value, P_j_l for each dimer pair,
    purity, nullspace_dim and error.
    """
    if params.n_spins % 2:
        raise OddChain("imperfection scans need an even chain")
    if scan not in ("epsilon_comm", "gamma_prime", "detuning"):
        raise ValueError(f"cannot scan {scan!r}")
    pairs = adjacent_pairs(params.n_spins)
    rows = []
    for v in values:
        row = {"value": float(v)}
        try:
            p = params.replace(**{scan: float(v)})
            rho, nd = steady_state(build_liouvillian(p))
            row["nullspace_dim"] = nd
            if rho is None:
                raise SolverDivergence(f"nullspace dimension {nd}")
            for (j, l) in pairs:
                row[f"P_{j}_{l}"] = purity(reduced_pair(rho, j, l))
            row["purity"] = purity(rho)
            row["error"] = ""
        except (SolverDivergence, DimensionOverflow) as exc:
            for (j, l) in pairs:
                row.setdefault(f"P_{j}_{l}", float("nan"))
            row.setdefault("purity", float("nan"))
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def pair_purity_trend(rows, n):
    """Fraction of scan rows whose pair purities do not increase left to right."""
    pairs = adjacent_pairs(n)
    ok = 0
    total = 0
    for r in rows:
        vals = [r[f"P_{j}_{l}"] for j, l in pairs]
        if any(np.isnan(vals)):
            continue
        total += 1
        if all(vals[i] >= vals[i + 1] - 1e-9 for i in range(len(vals) - 1)):
            ok += 1
    return ok / total if total else float("nan")


def pure_to_density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def ground_density(n):
    return pure_to_density(ops.ground_state(n))


__all__ = [
    "ChainParams", "Superoperator", "build_liouvillian", "DimerProduct", "dimer_product",
    "evolve", "steady_state", "liouvillian_gap", "imperfection_scan", "fidelity",
    "purity", "reduced_pair",
]
