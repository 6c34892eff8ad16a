import numpy as np
import pytest

from riskbudget.cones import ConeStructure, NonNeg, NTScaling, SecondOrder, Zero


def random_interior(struct, rng, scale=1.0):
    u = rng.standard_normal(struct.dim) * scale
    u[struct.nn_idx] = np.abs(u[struct.nn_idx]) + 0.1
    for lo, hi in struct.soc_slices:
        u[lo] = np.linalg.norm(u[lo + 1 : hi]) + 0.1 + abs(u[lo])
    return u


@pytest.fixture
def struct():
    return ConeStructure([NonNeg(3), SecondOrder(4), Zero(2), SecondOrder(2)])


def test_structure_layout(struct):
    assert struct.dim == 9
    assert list(struct.nn_idx) == [0, 1, 2]
    assert struct.soc_slices == [(3, 7), (7, 9)]
    assert struct.degree == 5


def test_identity_and_margin(struct):
    e = struct.identity()
    assert struct.margin(e) == 1.0
    assert np.all(struct.prod(e, e) == e)


def test_jordan_div_roundtrip(struct):
    rng = np.random.default_rng(0)
    for _ in range(20):
        lmbda = random_interior(struct, rng)
        d = rng.standard_normal(struct.dim)
        w = struct.div(lmbda, d)
        assert np.allclose(struct.prod(lmbda, w), d, atol=1e-10)


def test_nt_scaling_identities(struct):
    rng = np.random.default_rng(1)
    for _ in range(25):
        s = random_interior(struct, rng, scale=rng.uniform(0.1, 10))
        z = random_interior(struct, rng, scale=rng.uniform(0.1, 10))
        w = NTScaling(struct, s, z)
        # W z = W^{-1} s = lambda
        assert np.allclose(w.apply(z), w.lmbda, atol=1e-10)
        assert np.allclose(w.apply_inv(s), w.lmbda, atol=1e-10)
        # W (W z) = s, and lambda' lambda = s'z
        assert np.allclose(w.apply(w.apply(z)), s, atol=1e-9)
        assert np.isclose(w.lmbda @ w.lmbda, s @ z, atol=1e-9)
        # lambda stays interior
        assert struct.margin(w.lmbda) > 0


def test_gram_matches_bruteforce(struct):
    rng = np.random.default_rng(2)
    g = rng.standard_normal((struct.dim, 5))
    s = random_interior(struct, rng)
    z = random_interior(struct, rng)
    w = NTScaling(struct, s, z)
    h = w.gram(g)
    brute = np.column_stack([w.apply_inv(w.apply_inv(g[:, j])) for j in range(5)])
    assert np.allclose(h, g.T @ brute, atol=1e-9)
    # cached per-block soc grams give the same answer
    grams = np.stack([g[lo:hi].T @ g[lo:hi] for lo, hi in struct.soc_slices])
    assert np.allclose(w.gram(g, soc_grams=grams), h, atol=1e-12)


def test_max_step(struct):
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = random_interior(struct, rng)
        du = rng.standard_normal(struct.dim)
        alpha = struct.max_step(u, du)
        if np.isinf(alpha):
            assert struct.margin(u + 1e3 * du) >= 0
        else:
            assert struct.margin(u + 0.999 * alpha * du) >= -1e-9
            assert struct.margin(u + 1.01 * (alpha + 1e-12) * du) <= 1e-9


def test_max_step_pure_nonneg():
    struct = ConeStructure([NonNeg(3)])
    u = np.array([1.0, 2.0, 3.0])
    du = np.array([-1.0, 1.0, -6.0])
    assert struct.max_step(u, du) == pytest.approx(0.5)
    assert struct.max_step(u, np.ones(3)) == np.inf
