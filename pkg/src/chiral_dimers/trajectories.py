"""Monte Carlo wave-function unraveling of the chiral chain generator.

Jumps are located on an integer tick lattice: the coarse step dt_max is split
into 2^K ticks, and a greedy binary descent over exact no-jump propagators
finds the first tick at which the squared norm drops below the drawn
threshold.  Observation times are snapped to that lattice.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from . import kernels
from . import operators as ops
from .chain import ChainParams, Superoperator, build_liouvillian, dimer_product
from .errors import EquivalenceCheckFailed, NormUnderflow, TrajectoryFailure
from .observables import adjacent_pairs, entropy, neighbour_pairs, purity

WORKERS_ENV = "CHIRAL_DIMERS_WORKERS"


@dataclass
class UnraveledGenerator:
    n: int
    h_eff: sp.csr_matrix
    weights: np.ndarray          # (channels, N): c_m = sum_j weights[m, j] sigma_j
    labels: list
    params: ChainParams | None = None
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def jumps(self):
        return [ops.collective(self.n, w) for w in self.weights]

    def dense_h(self):
        if self._dense is None:
            self._dense = np.ascontiguousarray(self.h_eff.toarray())
        return self._dense

    def anti_hermitian_defect(self):
        """max |i (h_eff - h_eff^dagger) - sum_m c_m^dagger c_m|."""
        lhs = 1j * (self.h_eff - self.h_eff.conj().T)
        rhs = sp.csr_matrix(lhs.shape, dtype=complex)
        for c in self.jumps:
            rhs = rhs + c.conj().T @ c
        diff = (lhs - rhs).tocsr()
        return float(abs(diff).max()) if diff.nnz else 0.0

    def reconstruct(self) -> Superoperator:
        K = self.weights.T @ self.weights.conj()      # K[a, b] = sum_m w_ma conj(w_mb)
        h = self.h_eff
        return Superoperator(self.n, -1j * h, 1j * h.conj().T, ops.lowering_ops(self.n), K,
                             scale=self.params.rate_scale if self.params else 1.0,
                             label="unraveled")


def _unravel_direct(p: ChainParams):
    n = p.n_spins
    s = ops.lowering_ops(n)
    sd = [x.conj().T.tocsr() for x in s]
    d = 2**n
    site_phase = np.array([j * p.epsilon_comm / 2 for j in range(n)])
    rows, labels = [], []
    if p.gamma_r > 0:
        rows.append(math.sqrt(p.gamma_r) * np.exp(-1j * site_phase))
        labels.append("R")
    if p.gamma_l > 0:
        rows.append(math.sqrt(p.gamma_l) * np.exp(1j * site_phase))
        labels.append("L")
    if p.gamma_prime > 0:
        for j in range(n):
            w = np.zeros(n, dtype=complex)
            w[j] = math.sqrt(p.gamma_prime)
            rows.append(w)
            labels.append(f"site{j + 1}")
    W = np.array(rows, dtype=complex).reshape(len(rows), n)

    H = sp.csr_matrix((d, d), dtype=complex)
    for j, Wj in enumerate(p.drives()):
        H = H + Wj * s[j] + np.conj(Wj) * sd[j] - p.detuning * (sd[j] @ s[j])
    for j in range(n):
        for l in range(n):
            if j != l and p.gamma_l > 0:
                sn = math.sin(abs(p.pair_phase(j, l)))
                if sn != 0:
                    H = H + p.gamma_l * sn * (sd[l] @ s[j])
    dg = p.delta_gamma
    for j in range(n):
        for l in range(j):
            e = np.exp(1j * p.pair_phase(j, l))
            H = H - 0.5j * dg * (e * (sd[j] @ s[l]) - np.conj(e) * (sd[l] @ s[j]))
    for w in W:
        c = ops.collective(n, w)
        H = H - 0.5j * (c.conj().T @ c)
    return sp.csr_matrix(H), W, labels


def unravel(params: ChainParams, check=True, check_max_n=6, tol=1e-9) -> UnraveledGenerator:
    if params.mirrored:
        h, W, labels = _unravel_direct(params.mirror())
        P = ops.site_reversal(params.n_spins)
        h = (P @ h @ P.T).tocsr()
        W = W[:, ::-1].copy()
        labels = [{"R": "L", "L": "R"}.get(x, x) for x in labels]
        labels = [f"site{params.n_spins + 1 - int(x[4:])}" if x.startswith("site") else x
                  for x in labels]
    else:
        h, W, labels = _unravel_direct(params)
    gen = UnraveledGenerator(params.n_spins, h, W, labels, params)
    if check and params.n_spins <= check_max_n:
        res = generator_residual(gen, params)
        if res > tol:
            raise EquivalenceCheckFailed(res)
        defect = gen.anti_hermitian_defect()
        if defect > 1e-10:
            raise EquivalenceCheckFailed(defect, f"anti-Hermitian defect {defect:.3e}")
    return gen


def generator_residual(gen, params):
    diff = (gen.reconstruct().matrix() - build_liouvillian(params).matrix()).tocsr()
    return float(abs(diff).max()) if diff.nnz else 0.0


# --- propagation ---------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryConfig:
    seed: int = 0
    n_traj: int = 100
    dt_max: float = 0.125
    t_final: float = 10.0
    observables: tuple = ("populations", "pairs")
    t_grid: tuple | None = None
    jump_resolution: float = 1e-10

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not self.dt_max > 0 or not self.t_final > 0:
            raise ValueError("dt_max and t_final must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        known = {"populations", "pairs", "dimer_fidelity", "purity"}
        bad = set(self.observables) - known
        if bad:
            raise ValueError(f"unknown observables {sorted(bad)}")

    @property
    def levels(self):
        return max(1, math.ceil(math.log2(self.dt_max / self.jump_resolution)))

    @property
    def tick(self):
        return self.dt_max / 2**self.levels

    def grid(self):
        if self.t_grid is not None:
            t = np.asarray(self.t_grid, dtype=float)
        else:
            t = np.arange(0.0, self.t_final + 0.5 * self.dt_max, self.dt_max)
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must start at 0 and increase")
        return t

    def grid_ticks(self):
        per = 2**self.levels
        return np.rint(self.grid() / self.dt_max * per).astype(np.int64)


class Propagators:
    """No-jump propagators on a binary ladder of step sizes."""

    def __init__(self, gen: UnraveledGenerator, dt_max, levels, taylor_switch=1e-3):
        H = gen.dense_h()
        self.h0 = dt_max
        self.K = levels
        hn = float(np.abs(H).sum(axis=0).max())
        n_dense = 0
        while n_dense <= levels and hn * dt_max / 2**n_dense > taylor_switch:
            n_dense += 1
        n_dense = max(n_dense, 1)
        d = H.shape[0]
        U = np.empty((n_dense, d, d), dtype=complex)
        U[n_dense - 1] = expm(-1j * H * (dt_max / 2 ** (n_dense - 1)))
        for k in range(n_dense - 2, -1, -1):
            U[k] = U[k + 1] @ U[k + 1]
        self.U = U
        self.H = H
        orders = np.zeros(levels + 1, dtype=np.int32)
        for k in range(n_dense, levels + 1):
            x = hn * dt_max / 2**k
            m = 1
            while x ** (m + 1) / math.factorial(m + 1) > 1e-18:
                m += 1
            orders[k] = m
        self.orders = orders

    def advance(self, psi, r, T, B):
        return kernels.advance(self.U, self.H, self.orders, self.h0, self.K, psi, r, T, B)


def stream_rng(seed, stream_index):
    ss = np.random.SeedSequence(seed, spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class TrajectoryPath:
    t: np.ndarray
    observables: dict
    jump_times: np.ndarray
    jump_channels: np.ndarray
    stream_index: int
    final_state: np.ndarray

    @property
    def n_jumps(self):
        return int(self.jump_times.size)


def _record(psi, n, names, nb_pairs, dimer):
    out = {}
    if "populations" in names:
        prob = np.abs(psi) ** 2
        idx = np.arange(psi.size)
        out["populations"] = np.array([prob[(idx >> (n - 1 - j)) & 1 == 1].sum() for j in range(n)])
    if "pairs" in names and nb_pairs.size:
        out["pairs"] = kernels.pair_marginals(psi, n, nb_pairs)
    if "dimer_fidelity" in names and dimer is not None:
        out["dimer_fidelity"] = np.array(abs(np.vdot(dimer, psi)) ** 2)
    if "purity" in names:
        out["state"] = psi.copy()
    return out


def _dimer_or_none(gen):
    p = gen.params
    try:
        return dimer_product(p).state if p is not None else None
    except Exception:
        return None


def run_trajectory(gen: UnraveledGenerator, psi0, config: TrajectoryConfig, stream_index,
                   propagators: Propagators | None = None):
    psi = np.array(psi0, dtype=complex, copy=True)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("psi0 must be normalized")
    prop = propagators or Propagators(gen, config.dt_max, config.levels)
    rng = stream_rng(config.seed, stream_index)
    n = gen.n
    ticks = config.grid_ticks()
    tick = config.tick
    names = set(config.observables)
    nb_pairs = np.array(neighbour_pairs(n), dtype=np.int64).reshape(-1, 2)
    dimer = _dimer_or_none(gen) if "dimer_fidelity" in names else None
    W = np.ascontiguousarray(gen.weights)
    records = {}
    jt, jc = [], []
    T = 0
    r = rng.random()
    for gi, B in enumerate(ticks):
        while True:
            T, status = prop.advance(psi, r, T, int(B))
            if status == 0:
                break
            if status == 2:
                raise NormUnderflow(f"no-jump norm underflow at t = {T * tick:.6g}")
            # jump at the end of the current tick
            cand = [kernels.collective_lower(psi, W[m], n) for m in range(W.shape[0])]
            wts = np.array([np.vdot(c, c).real for c in cand])
            tot = wts.sum()
            if not tot > 0:
                raise NormUnderflow(f"all jump channels vanish at t = {T * tick:.6g}")
            m = int(np.searchsorted(np.cumsum(wts) / tot, rng.random(), side="right"))
            m = min(m, len(cand) - 1)
            psi[:] = cand[m] / math.sqrt(wts[m])
            jt.append(T * tick)
            jc.append(m)
            r = rng.random()
        nrm = math.sqrt(np.vdot(psi, psi).real)
        rec = _record(psi / nrm, n, names, nb_pairs, dimer)
        for k, v in rec.items():
            records.setdefault(k, []).append(v)
    obs = {k: np.array(v) for k, v in records.items()}
    final = psi / np.linalg.norm(psi)
    return TrajectoryPath(config.grid(), obs, np.array(jt), np.array(jc, dtype=int),
                          int(stream_index), final)


@dataclass
class TrajectoryEnsemble:
    t: np.ndarray
    n_traj: int
    means: dict
    stderr: dict
    jump_histograms: dict
    labels: list
    total_jumps: int

    def pair_entropies(self):
        """Entropy of each neighbour pair (columns) from the mean marginals (rows = times)."""
        m = self.means["pairs"]
        return np.array([[entropy(m[i, p]) for p in range(m.shape[1])] for i in range(m.shape[0])])

    def pair_purities(self):
        m = self.means["pairs"]
        return np.array([[purity(m[i, p]) for p in range(m.shape[1])] for i in range(m.shape[0])])

    def dimer_pair_columns(self, n):
        """Indices of the (2j-1, 2j) pairs inside the neighbour-pair list."""
        return [2 * p for p in range(n // 2)]


_WORKER = {}


def _init_worker(gen, psi0, config):
    _WORKER["args"] = (gen, psi0, config, Propagators(gen, config.dt_max, config.levels))


def _run_chunk(indices):
    gen, psi0, config, prop = _WORKER["args"]
    out = []
    for i in indices:
        try:
            out.append(run_trajectory(gen, psi0, config, i, prop))
        except Exception as exc:   # reported with its index
            out.append(TrajectoryFailure(i, exc))
    return out


def worker_count(workers=None):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def ensemble_average(gen: UnraveledGenerator, psi0, config: TrajectoryConfig, workers=None,
                     keep_paths=False):
    n_workers = worker_count(workers)
    idx = list(range(config.n_traj))
    if n_workers == 1:
        prop = Propagators(gen, config.dt_max, config.levels)
        paths = []
        for i in idx:
            try:
                paths.append(run_trajectory(gen, psi0, config, i, prop))
            except Exception as exc:
                paths.append(TrajectoryFailure(i, exc))
    else:
        chunks = [idx[k::n_workers] for k in range(n_workers)]
        with ProcessPoolExecutor(n_workers, initializer=_init_worker,
                                 initargs=(gen, psi0, config)) as ex:
            results = list(ex.map(_run_chunk, chunks))
        by_index = {}
        for chunk, res in zip(chunks, results):
            for i, r in zip(chunk, res):
                by_index[i] = r
        paths = [by_index[i] for i in idx]
    failures = [p for p in paths if isinstance(p, TrajectoryFailure)]
    if failures:
        raise failures[0]
    return reduce_paths(paths, config, gen.labels, keep_paths)


def reduce_paths(paths, config, labels, keep_paths=False):
    paths = sorted(paths, key=lambda p: p.stream_index)
    n = len(paths)
    t = config.grid()
    sums, sq = {}, {}
    for p in paths:
        for k, v in p.observables.items():
            if k == "state":
                continue
            if k not in sums:
                sums[k] = np.zeros_like(v)
                sq[k] = np.zeros(v.shape)
            sums[k] = sums[k] + v
            sq[k] = sq[k] + np.abs(v) ** 2
    means, errs = {}, {}
    for k in sums:
        mu = sums[k] / n
        if n > 1:
            var = (sq[k] - n * np.abs(mu) ** 2) / (n - 1)
            errs[k] = np.sqrt(np.clip(var, 0, None) / n)
        else:
            errs[k] = np.zeros(mu.shape)
        means[k] = mu
    if paths and "state" in paths[0].observables:
        means["purity"] = ensemble_purity([p.observables["state"] for p in paths])
        errs["purity"] = np.full(t.shape, np.nan)
    hist = {}
    edges = t
    for m, lab in enumerate(labels):
        times = np.concatenate([p.jump_times[p.jump_channels == m] for p in paths]) \
            if paths else np.array([])
        counts, _ = np.histogram(times, bins=edges) if edges.size > 1 else (np.array([]), None)
        hist[lab] = counts
    ens = TrajectoryEnsemble(t, n, means, errs, hist, list(labels),
                             int(sum(p.n_jumps for p in paths)))
    if keep_paths:
        ens.paths = paths
    return ens


def ensemble_purity(states):
    """Tr(rho^2) of the trajectory mixture at each time, excluding self-overlaps.

    ``states`` is a list (one per trajectory) of (times, dim) arrays.  Dropping
    the diagonal of the overlap matrix removes the 1/n bias of the plug-in value.
    """
    S = np.stack(states, axis=1)            # (times, n, dim)
    n = S.shape[1]
    if n == 1:
        return np.ones(S.shape[0])
    out = np.empty(S.shape[0])
    for i in range(S.shape[0]):
        G = S[i].conj() @ S[i].T
        out[i] = (np.sum(np.abs(G) ** 2) - np.sum(np.abs(np.diag(G)) ** 2)) / (n * (n - 1))
    return out


def dimer_pair_entropies(ens: TrajectoryEnsemble, n):
    """Columns of pair_entropies belonging to the dimer pairs (1,2), (3,4), ..."""
    S = ens.pair_entropies()
    cols = [2 * p for p in range(n // 2)]
    return S[:, cols], adjacent_pairs(n)
