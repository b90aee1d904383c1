import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdsopt.gp_core import (
    Dataset,
    GPPosterior,
    KernelSpec,
    LatticeFunction,
    NumericalError,
    OffsetKernel,
    cholesky_jitter,
    gram_matrix,
    posterior_extend,
    posterior_moments,
    sample_gp_lattice,
    se_kernel,
)

SPEC = KernelSpec(1.0, 0.1, (0,))


def naive_posterior(X, y, xq, k, noise):
    # independent oracle: dense solve without factorization reuse
    X = np.atleast_2d(np.asarray(X, float))
    K = np.array([[k(a, b) for b in X] for a in X]) + noise * np.eye(len(X))
    kq = np.array([k(a, xq) for a in X])
    w = np.linalg.solve(K, kq)
    return float(w @ y), float(k(xq, xq) + noise - w @ kq)


def test_kernel_examples():
    assert se_kernel([0.3, 0.0], [0.3, 0.0], SPEC) == 1.0
    assert se_kernel([0.3, 0.0], [0.3, 0.5], SPEC) == 1.0
    np.testing.assert_allclose(se_kernel([0.1, 0.0], [0.0, 0.0], SPEC), math.exp(-1), rtol=1e-12)


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        se_kernel([0.0, 1.0], [0.0], SPEC)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(0.0, 0.1)
    with pytest.raises(ValueError):
        KernelSpec(1.0, -1.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, 0.1, (1, 1))


def test_projected_kernel_bandwidth():
    # a coordinates moving together: distance a*dz^2/b^2
    for a in (1, 2, 5):
        k = SPEC.projected(a)
        np.testing.assert_allclose(k(0.0, 0.07)[0, 0], math.exp(-a * 0.07**2 / 0.01), rtol=1e-12)
    np.testing.assert_array_equal(SPEC.projected(0)(np.zeros(3), np.ones(2)), np.ones((3, 2)))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.floats(-1, 1))
def test_kernel_symmetric_bounded_and_ignores_inactive(x, xp, shift):
    spec = KernelSpec(2.0, 0.3, (0, 2))
    k = se_kernel(x, xp, spec)
    assert 0 < k <= 2.0
    assert k == se_kernel(xp, x, spec)
    x2 = list(x)
    x2[1] = shift
    assert se_kernel(x2, xp, spec) == k


def test_gram_matrix_examples():
    np.testing.assert_allclose(gram_matrix([0.0], SPEC, 0.1), [[1.1]])
    G = gram_matrix([0.2, 0.2], SPEC, 0.1)
    assert G[0, 1] == 1.0
    G = gram_matrix([0.0, 0.1], SPEC, 0.1)
    np.testing.assert_allclose(G[0, 1], math.exp(-1), rtol=1e-12)
    np.testing.assert_allclose(G, G.T)


def test_cholesky_jitter_rescues_singular_and_fails_on_indefinite():
    K = np.ones((3, 3))
    L = cholesky_jitter(K, 1.0)
    np.testing.assert_allclose(L @ L.T, K, atol=1e-6)
    with pytest.raises(NumericalError):
        cholesky_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0)


def test_posterior_examples():
    empty = Dataset([], [], 0.1)
    assert posterior_moments(empty, SPEC, [0.0]) == (0.0, pytest.approx(1.1))
    one = Dataset([0.3], [1.1], 0.1)
    m = posterior_moments(one, SPEC, [0.3])
    np.testing.assert_allclose(m.mean, 1.0, rtol=1e-12)
    np.testing.assert_allclose(m.variance, 0.1 + 1 - 1 / 1.1, rtol=1e-12)
    far = posterior_moments(Dataset([0.0], [1.1], 0.1), SPEC, [1.0])
    assert abs(far.mean) < 1e-9
    assert abs(far.variance - 1.1) < 1e-9


def test_posterior_matches_naive_solve():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(12, 2))
    y = rng.standard_normal(12)
    spec = KernelSpec(1.5, 0.4, (0, 1))
    xq = np.array([0.1, -0.2])
    got = posterior_moments(Dataset(X, y, 0.05), spec, xq)
    want = naive_posterior(X, y, xq, lambda a, b: se_kernel(a, b, spec), 0.05)
    np.testing.assert_allclose(got, want, rtol=1e-9)


def test_incremental_equals_batch():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, size=10)
    y = rng.standard_normal(10)
    grid = np.linspace(-1, 1, 21)
    post = GPPosterior(SPEC, 0.1, grid)
    for i in range(10):
        posterior_extend(post, X[i], y[i])
        data = Dataset(X[: i + 1], y[: i + 1], 0.1)
        mean, var = post.candidate_moments()
        for j in (0, 7, 20):
            ref = posterior_moments(data, SPEC, grid[j])
            np.testing.assert_allclose([mean[j], var[j]], ref, rtol=1e-8, atol=1e-12)
    mean_q, var_q = post.predict(np.array([[0.33], [-0.9]]))
    for j, q in enumerate([0.33, -0.9]):
        ref = posterior_moments(Dataset(X, y, 0.1), SPEC, q)
        np.testing.assert_allclose([mean_q[j], var_q[j]], ref, rtol=1e-8, atol=1e-12)


def test_incremental_first_point_and_far_query():
    post = GPPosterior(SPEC, 0.1).extend(0.3, 1.1)
    np.testing.assert_allclose(post.moments(0.3), (1.0, 0.1 + 1 - 1 / 1.1), rtol=1e-12)
    np.testing.assert_allclose(post.moments(-1.0).variance, 1.1, atol=1e-12)
    assert len(post) == 1


def test_incremental_capacity_growth_and_offset_kernel():
    kern = OffsetKernel(SPEC.projected(1), 3.0)
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, 40)
    y = rng.standard_normal(40)
    post = GPPosterior(kern, 0.1, np.linspace(-1, 1, 5))
    for a, b in zip(X, y):
        post.extend(a, b)
    want = naive_posterior(X[:, None], y, np.array([0.5]), lambda a, b: kern(a, b)[0, 0], 0.1)
    np.testing.assert_allclose(post.candidate_moments()[0][3], want[0], rtol=1e-8)
    np.testing.assert_allclose(post.candidate_moments()[1][3], want[1], rtol=1e-8)


def test_max_points_is_a_hard_cap():
    post = GPPosterior(SPEC, 0.1, max_points=2)
    post.extend(0.0, 1.0).extend(0.5, 1.0)
    with pytest.raises(Exception):
        post.extend(0.9, 1.0)


def test_variance_bounded_and_decreasing_with_duplicates():
    post = GPPosterior(SPEC, 0.1, np.array([0.2]))
    prev = 1.1
    for _ in range(8):
        post.extend(0.2, 0.5)
        v = post.candidate_moments()[1][0]
        assert v <= 1.1 + 1e-9
        assert v < prev
        prev = v


def test_mean_interpolates_at_tiny_noise():
    m = posterior_moments(Dataset([0.4], [2.5], 1e-8), SPEC, [0.4])
    assert abs(m.mean - 2.5) < 1e-4


def test_lattice_determinism_and_guard():
    a = sample_gp_lattice(SPEC, 2, 41, seed=5)
    b = sample_gp_lattice(SPEC, 2, 41, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        sample_gp_lattice(SPEC, 3, 100, seed=0)
    with pytest.raises(ValueError):
        sample_gp_lattice(SPEC, 1, 1, seed=0)


def test_lattice_marginal_variance_and_covariance():
    # 2000 draws on a 21-point axis with spacing exactly b
    n = 2000
    draws = np.array([sample_gp_lattice(SPEC, 1, 21, seed=s).values for s in range(n)])
    np.testing.assert_allclose(draws[:, 10].var(), 1.0, rtol=0.1)
    cov = np.mean(draws[:, 10] * draws[:, 11])
    np.testing.assert_allclose(cov, math.exp(-1), rtol=0.1)


def test_lattice_kronecker_matches_dense_covariance():
    # the implied covariance of the 2-d draw equals the dense Gram matrix
    res = 6
    spec = KernelSpec(2.0, 0.5, (0,))
    lat = sample_gp_lattice(spec, 2, res, seed=0)
    t = lat.axis
    g = np.stack(np.meshgrid(t, t, indexing="ij"), -1).reshape(-1, 2)
    dense = KernelSpec(2.0, 0.5, (0, 1))(g, g)
    L = cholesky_jitter(KernelSpec(1.0, 0.5, (0,))(t, t))
    cols = []
    for e in np.eye(res * res):
        # same linear map applied to unit vectors
        v = e.reshape(res, res)
        for ax in range(2):
            v = np.moveaxis(np.tensordot(L, v, axes=([1], [ax])), 0, ax)
        cols.append(np.sqrt(2.0) * v.ravel())
    A = np.array(cols).T
    np.testing.assert_allclose(A @ A.T, dense, atol=1e-6)


def test_lattice_interpolation_and_argmax():
    vals = np.arange(9, dtype=float).reshape(3, 3)
    lat = LatticeFunction(2, 3, vals)
    np.testing.assert_allclose(lat([[-1, -1], [0, 0], [1, 1]]), [0, 4, 8])
    np.testing.assert_allclose(lat([-0.5, 0.0]), [2.5])
    loc, val = lat.argmax()
    np.testing.assert_array_equal(loc, [1.0, 1.0])
    assert val == 8.0
    with pytest.raises(ValueError):
        LatticeFunction(2, 3, np.full((3, 3), np.nan))
