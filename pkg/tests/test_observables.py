import math

import numpy as np
import pytest
from scipy.sparse.linalg import expm_multiply
import scipy.sparse as sp

from chiral_dimers import operators as ops
from chiral_dimers.chain import dimer_pair, pure_to_density
from chiral_dimers.errors import IndexOutOfRange, InvalidState
from chiral_dimers.krylov import expmv
from chiral_dimers.observables import (PairObservables, entropy, fidelity, pure_reduced_state,
                                       purity, reduced_pair, reduced_state, validate_density)


def bell():
    v = np.zeros(4, dtype=complex)
    v[1] = v[2] = 1 / math.sqrt(2)
    return v


def test_reduced_state_of_product():
    a = np.array([0.6, 0.8j])
    b = np.array([1.0, 0.0], dtype=complex)
    c = np.array([1, 1]) / math.sqrt(2)
    psi = np.kron(np.kron(a, b), c)
    rho = pure_to_density(psi)
    assert np.allclose(reduced_state(rho, (1,)), np.outer(a, a.conj()))
    assert np.allclose(reduced_state(rho, (3, 1)), np.kron(np.outer(c, c.conj()),
                                                           np.outer(a, a.conj())))
    assert np.allclose(pure_reduced_state(psi, (1, 3)), reduced_state(rho, (1, 3)))


def test_bell_entropy_and_purity():
    r = pure_to_density(bell())
    assert entropy(r) == pytest.approx(0, abs=1e-12)
    one = reduced_state(r, (1,))
    assert entropy(one) == pytest.approx(math.log(2))
    assert purity(one) == pytest.approx(0.5)
    assert entropy(np.eye(4) / 4) == pytest.approx(2 * math.log(2))


def test_pair_observables_ranges():
    psi = np.kron(dimer_pair(1j), bell())
    ob = PairObservables(pure_to_density(psi)).check()
    assert ob.pair_purities[(1, 2)] == pytest.approx(1)
    assert ob.entropies[(2, 3)] > 0
    assert fidelity(pure_to_density(psi), psi) == pytest.approx(1)


def test_site_errors():
    r = pure_to_density(bell())
    with pytest.raises(IndexOutOfRange):
        reduced_pair(r, 1, 3)
    with pytest.raises(IndexOutOfRange):
        reduced_pair(r, 1, 1)
    with pytest.raises(InvalidState):
        validate_density(np.eye(3) / 3)
    with pytest.raises(InvalidState):
        validate_density(np.diag([1.5, -0.5]))


def test_operators():
    n = 3
    s_mid = ops.lowering(n, 1).toarray()     # 0-based site index
    e = np.zeros(8, dtype=complex)
    e[0b010] = 1
    assert np.allclose(s_mid @ e, ops.ground_state(n))
    plus = np.array([1, 1]) / math.sqrt(2)
    assert np.linalg.norm(ops.product_state(n, plus)) == pytest.approx(1)
    P = ops.site_reversal(n).toarray()
    assert np.allclose(P @ ops.lowering(n, 0).toarray() @ P.T, ops.lowering(n, 2).toarray())
    X = np.arange(16).reshape(4, 4)
    assert np.array_equal(ops.unvec(ops.vec(X)), X)


def test_expmv_against_scipy():
    rng = np.random.default_rng(0)
    A = sp.random(200, 200, density=0.05, random_state=1) * 2 - sp.eye(200) * 3
    A = A.astype(complex) + 1j * sp.random(200, 200, density=0.05, random_state=2)
    v = rng.normal(size=200) + 0j
    w, info = expmv(lambda x: A @ x, v, 2.0, m=20, tol=1e-12)
    ref = expm_multiply(2.0 * A.tocsc(), v)
    assert np.linalg.norm(w - ref) / np.linalg.norm(ref) < 1e-9
    assert info["steps"] >= 1


def test_expmv_happy_breakdown():
    A = np.diag([-1.0, -2.0]).astype(complex)
    w, _ = expmv(lambda x: A @ x, np.array([1.0, 1.0]), 1.0, m=10)
    assert np.allclose(w, [math.exp(-1), math.exp(-2)])
