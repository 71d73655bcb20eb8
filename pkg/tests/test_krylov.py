"""Krylov propagator against dense exponentials."""

import numpy as np
import pytest
from scipy.linalg import expm

from nelson_lab.errors import KrylovBreakdown
from nelson_lab.krylov import expimv


def random_hermitian(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.conj().T) / 2.0


def test_matches_dense_exponential():
    rng = np.random.default_rng(7)
    for trial in range(20):
        n = int(rng.integers(3, 40))
        h = random_hermitian(rng, n, scale=rng.uniform(0.1, 5.0))
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t = float(rng.uniform(-3.0, 3.0))
        want = expm(-1j * t * h) @ v
        got = expimv(lambda x: h @ x, v, t)
        assert np.linalg.norm(got - want) <= 1e-9 * np.linalg.norm(v)


def test_large_time_interval():
    rng = np.random.default_rng(11)
    n = 60
    h = random_hermitian(rng, n, scale=8.0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    t = 12.5
    want = expm(-1j * t * h) @ v
    got = expimv(lambda x: h @ x, v, t)
    assert np.linalg.norm(got - want) <= 1e-8 * np.linalg.norm(v)


def test_norm_preserved():
    rng = np.random.default_rng(3)
    n = 50
    h = random_hermitian(rng, n, scale=4.0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    got = expimv(lambda x: h @ x, v, 7.0)
    assert abs(np.linalg.norm(got) - np.linalg.norm(v)) <= 1e-10 * np.linalg.norm(v)


def test_zero_time_and_zero_vector():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 8)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    out = expimv(lambda x: h @ x, v, 0.0)
    assert np.array_equal(out, v)
    out = expimv(lambda x: h @ x, np.zeros(8, dtype=complex), 1.0)
    assert np.array_equal(out, np.zeros(8, dtype=complex))


def test_happy_breakdown_on_eigenvector():
    # an eigenvector spans an invariant subspace of dimension one
    rng = np.random.default_rng(9)
    h = random_hermitian(rng, 12, scale=2.0)
    evals, evecs = np.linalg.eigh(h)
    v = evecs[:, 4].astype(complex)
    calls = []

    def matvec(x):
        calls.append(1)
        return h @ x

    got = expimv(matvec, v, 2.0)
    want = np.exp(-1j * 2.0 * evals[4]) * v
    assert np.linalg.norm(got - want) <= 1e-12
    # one substep, two vectors examined at most
    assert len(calls) <= 4


def test_diagonal_phase():
    omega = np.array([0.5, 1.0, 2.0, 4.0])
    v = np.array([1.0, 1.0j, -0.5, 0.25 + 0.1j])
    got = expimv(lambda x: omega * x, v, 1.7)
    want = np.exp(-1j * 1.7 * omega) * v
    assert np.linalg.norm(got - want) <= 1e-12


def test_breakdown_raised_when_subspace_too_small():
    rng = np.random.default_rng(13)
    n = 40
    h = random_hermitian(rng, n, scale=30.0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    with pytest.raises(KrylovBreakdown):
        expimv(lambda x: h @ x, v, 5.0, tol=1e-15, max_krylov=2)
