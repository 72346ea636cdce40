import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from lhvdyn.quantum import SIGMA
from lhvdyn.sphere import FOUR_PI, harmonic_index, sample_sphere, sphere_quadrature
from lhvdyn.universal import (
    BasisSpec,
    DMatrix,
    covariance_suite,
    d_matrix,
    random_unitary,
    real_sph_basis,
    rotation_from_unitary,
    softmax_rule,
    transform_hv,
)

BASIS = BasisSpec(5)
seeds = st.integers(0, 2**32 - 1)


def _rz(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def test_basis_size_and_constant_harmonic(rng):
    assert BASIS.K == 36
    n = sample_sphere(rng, 7)
    np.testing.assert_allclose(real_sph_basis(BASIS, n)[:, 0], 1 / np.sqrt(FOUR_PI))
    assert abs(real_sph_basis(BASIS, np.array([0, 0, 1.0]))[harmonic_index(1, 0)] - np.sqrt(3 / FOUR_PI)) < 1e-15


def test_basis_orthonormal():
    q = sphere_quadrature(2 * BASIS.l_max + 2)
    b = real_sph_basis(BASIS, q.nodes)
    np.testing.assert_allclose((b * q.weights[:, None]).T @ b, np.eye(BASIS.K), atol=1e-12)


def test_softmax_examples(rng):
    n = sample_sphere(rng)
    np.testing.assert_array_equal(softmax_rule(np.zeros((2, BASIS.K)), n), [0.5, 0.5])
    lam = rng.standard_normal((2, BASIS.K))
    shifted = lam + rng.standard_normal(BASIS.K)  # same vector added to every row
    np.testing.assert_allclose(softmax_rule(shifted, n), softmax_rule(lam, n), atol=1e-14)
    big = np.zeros((2, BASIS.K))
    big[0, 0] = 40 * np.sqrt(FOUR_PI)  # logit gap 40
    q = softmax_rule(big, n)
    assert abs(q[0] - 1) < 1e-12 and q[1] < 1e-12
    huge = np.zeros((2, BASIS.K))
    huge[1, 0] = 1e6
    assert np.all(np.isfinite(softmax_rule(huge, n)))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_softmax_is_a_distribution(seed):
    rng = np.random.default_rng(seed)
    q = softmax_rule(rng.standard_normal((3, BASIS.K)) * 3, sample_sphere(rng, 5))
    assert np.all(q > 0)
    np.testing.assert_allclose(q.sum(axis=-1), 1, atol=1e-14)


def test_rotation_examples():
    np.testing.assert_array_equal(rotation_from_unitary(np.eye(2)), np.eye(3))
    phi = 0.83
    U = scipy.linalg.expm(-0.5j * phi * SIGMA[2])
    np.testing.assert_allclose(rotation_from_unitary(U), _rz(phi), atol=1e-14)
    with pytest.raises(ValueError):
        rotation_from_unitary(np.array([[1, 1], [0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_rotation_properties(seed):
    rng = np.random.default_rng(seed)
    U1, U2 = random_unitary(rng), random_unitary(rng)
    R = rotation_from_unitary(U1)
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1) < 1e-12
    np.testing.assert_allclose(rotation_from_unitary(U1 @ U2), R @ rotation_from_unitary(U2), atol=1e-12)
    np.testing.assert_allclose(rotation_from_unitary(np.exp(0.4j) * U1), R, atol=1e-14)
    n = sample_sphere(rng)
    lhs = np.einsum("j,jab->ab", R @ n, SIGMA)
    np.testing.assert_allclose(lhs, U1 @ np.einsum("j,jab->ab", n, SIGMA) @ U1.conj().T, atol=1e-12)


def test_d_matrix_of_identity_is_exact():
    np.testing.assert_array_equal(d_matrix(np.eye(2), BASIS).d, np.eye(BASIS.K))


def test_d_matrix_order_guard():
    with pytest.raises(ValueError):
        d_matrix(np.eye(2), BASIS, order=2 * BASIS.l_max + 1)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_d_matrix_properties(seed):
    rng = np.random.default_rng(seed)
    U1, U2 = random_unitary(rng), random_unitary(rng)
    d1, d2 = d_matrix(U1, BASIS), d_matrix(U2, BASIS)
    np.testing.assert_allclose(d_matrix(U1 @ U2, BASIS).d, d1.d @ d2.d, atol=1e-8)
    assert d1.off_block_max() <= 1e-8
    assert d1.block_orthogonality_error() <= 1e-8
    x = sample_sphere(rng, 20)
    R = rotation_from_unitary(U1)
    np.testing.assert_allclose(real_sph_basis(BASIS, x @ R.T), real_sph_basis(BASIS, x) @ d1.d.T, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_transformation_group_action_and_covariance(seed):
    rng = np.random.default_rng(seed)
    U1, U2 = random_unitary(rng), random_unitary(rng)
    lam = rng.standard_normal((2, BASIS.K))
    np.testing.assert_array_equal(transform_hv(lam, np.eye(2), BASIS), lam)
    both = transform_hv(transform_hv(lam, U2, BASIS), U1, BASIS)
    assert np.abs(transform_hv(lam, U1 @ U2, BASIS) - both).max() <= 1e-8 * np.linalg.norm(lam)
    n = sample_sphere(rng)
    moved = rotation_from_unitary(U1.conj().T) @ n
    np.testing.assert_allclose(softmax_rule(lam, moved, BASIS), softmax_rule(transform_hv(lam, U1, BASIS), n, BASIS), atol=1e-8)
    mu = rng.standard_normal((2, BASIS.K))
    np.testing.assert_allclose(transform_hv(2 * lam - mu, U1, BASIS), 2 * transform_hv(lam, U1, BASIS) - transform_hv(mu, U1, BASIS), atol=1e-12)


def test_product_statistics_transform_without_n_dependence(rng):
    # N independent parties: product of per-party covariances
    lams = rng.standard_normal((3, 2, BASIS.K))
    Us = [random_unitary(rng) for _ in range(3)]
    ns = sample_sphere(rng, 3)
    lhs = np.prod([softmax_rule(l, rotation_from_unitary(U.conj().T) @ n, BASIS)[0] for l, U, n in zip(lams, Us, ns)])
    rhs = np.prod([softmax_rule(transform_hv(l, U, BASIS), n, BASIS)[0] for l, U, n in zip(lams, Us, ns)])
    assert abs(lhs - rhs) < 1e-10


def test_d_matrix_depends_smoothly_on_angle():
    axis = np.array([0.3, -0.5, 0.8])
    axis /= np.linalg.norm(axis)
    gen = np.einsum("j,jab->ab", axis, SIGMA)

    def d(phi):
        return d_matrix(scipy.linalg.expm(-0.5j * phi * gen), BASIS).d

    phi = 0.6
    ref = (d(phi + 1e-4) - d(phi - 1e-4)) / 2e-4
    errs = [np.abs((d(phi + h) - d(phi - h)) / (2 * h) - ref).max() for h in (0.1, 0.05, 0.025)]
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_csv_export(tmp_path, rng):
    d = d_matrix(random_unitary(rng), BasisSpec(2))
    path = tmp_path / "d.csv"
    d.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0].split(",")[1:4] == ["0_0", "1_-1", "1_0"]
    back = np.array([[float(x) for x in r.split(",")[1:]] for r in rows[1:]])
    np.testing.assert_array_equal(back, d.d)


def test_covariance_suite_and_negative_control():
    good = covariance_suite(BASIS, n_trials=20, seed=1)
    assert good["passed"]
    assert good["max_deviation"]["identity"] == 0
    bad = covariance_suite(BASIS, n_trials=3, seed=1, corrupt=1e-3)
    assert not bad["passed"]


def test_block_checks_detect_damage():
    d = d_matrix(np.eye(2), BasisSpec(2)).d.copy()
    d[0, 5] = 0.1
    assert DMatrix(d, BasisSpec(2)).off_block_max() == pytest.approx(0.1)
