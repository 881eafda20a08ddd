"""Reduced states, entropies, purities and fidelities.

Sites are labelled 1..N as in the chain basis; the first listed site of a
pair is the more significant qubit of the returned 4x4 matrix.
"""
import numpy as np

from .errors import IndexOutOfRange, InvalidState

ENTROPY_FLOOR = 1e-14


def n_sites(dim):
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise InvalidState(f"dimension {dim} is not a power of two")
    return n


def _check_sites(n, sites):
    if len(set(sites)) != len(sites):
        raise IndexOutOfRange(f"sites must be distinct, got {sites}")
    for s in sites:
        if not 1 <= s <= n:
            raise IndexOutOfRange(f"site {s} outside 1..{n}")


def reduced_state(rho, sites):
    """Partial trace keeping ``sites`` (1-based) in the given order."""
    rho = np.asarray(rho)
    n = n_sites(rho.shape[0])
    _check_sites(n, sites)
    keep = [s - 1 for s in sites]
    rest = [a for a in range(n) if a not in keep]
    t = rho.reshape((2,) * (2 * n))
    order = keep + rest + [n + a for a in keep] + [n + a for a in rest]
    t = t.transpose(order)
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    return np.einsum("aibi->ab", t.reshape(dk, dr, dk, dr))


def reduced_pair(rho, j, l):
    return reduced_state(rho, (j, l))


def pure_reduced_state(psi, sites):
    psi = np.asarray(psi)
    n = n_sites(psi.size)
    _check_sites(n, sites)
    keep = [s - 1 for s in sites]
    rest = [a for a in range(n) if a not in keep]
    m = psi.reshape((2,) * n).transpose(keep + rest).reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def entropy(rho, floor=ENTROPY_FLOOR):
    """Von Neumann entropy in nats."""
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    w = np.clip(w.real, floor, None)
    return float(-(w * np.log(w)).sum())


pair_entropy = entropy


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.vdot(rho.conj().T, rho)))


def fidelity(rho, psi):
    psi = np.asarray(psi)
    return float(np.real(np.vdot(psi, rho @ psi)))


def adjacent_pairs(n):
    """Dimer pairs (1,2), (3,4), ..."""
    return [(2 * p + 1, 2 * p + 2) for p in range(n // 2)]


def neighbour_pairs(n):
    return [(j, j + 1) for j in range(1, n)]


class PairObservables:
    """Pair marginals, entropies and purities for a chain state."""

    def __init__(self, rho, pairs=None):
        rho = np.asarray(rho)
        self.n = n_sites(rho.shape[0])
        self.pairs = list(pairs) if pairs is not None else neighbour_pairs(self.n)
        self.marginals = {p: reduced_pair(rho, *p) for p in self.pairs}
        self.entropies = {p: entropy(m) for p, m in self.marginals.items()}
        self.pair_purities = {p: purity(m) for p, m in self.marginals.items()}
        self.purity = purity(rho)

    def check(self, tol=1e-9):
        for p in self.pairs:
            if not -tol <= self.entropies[p] <= 2 * np.log(2) + tol:
                raise InvalidState(f"entropy out of range for pair {p}")
            if not 0.25 - tol <= self.pair_purities[p] <= 1 + tol:
                raise InvalidState(f"pair purity out of range for pair {p}")
        return self


def validate_density(rho, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-10):
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidState("density matrix must be square")
    n_sites(rho.shape[0])
    scale = max(1.0, float(np.abs(rho).max()))
    dh = float(np.abs(rho - rho.conj().T).max())
    if dh > herm_tol * scale:
        raise InvalidState(f"not Hermitian (deviation {dh:.2e})")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise InvalidState(f"trace {tr} differs from 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < -psd_tol:
        raise InvalidState(f"negative eigenvalue {w[0]:.3e}")
    return rho


def min_eigenvalue(rho):
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def two_level_steady_state(rabi, decay, detuning=0.0):
    """Driven two-level steady state in the drive frame, H = -detuning n + (rabi sigma + h.c.)."""
    W2 = abs(rabi) ** 2
    pe = W2 / (decay**2 / 4 + detuning**2 + 2 * W2)
    coh = 1j * np.conj(rabi) * (2 * pe - 1) / (decay / 2 - 1j * detuning)   # <sigma> = rho_eg
    # basis (g, e): rho_ge = <e|rho|g>* ... store rho[g, e] = <sigma^dag>, rho[e, g] = <sigma>
    rho = np.array([[1 - pe, np.conj(coh)], [coh, pe]], dtype=complex)
    return rho
