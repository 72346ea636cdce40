import numpy as np
import pytest

from lhvdyn.dynamics.fields import (
    VelocityCoefficients,
    n_vector_harmonics,
    sphere_divergence,
    surface_divergence,
    vector_harmonic_labels,
    vector_harmonics,
)
from lhvdyn.sphere import FOUR_PI, harmonic_index, real_sph_harm, sample_sphere, sphere_quadrature

ZHAT = np.array([0.0, 0.0, 1.0])


def test_counts():
    assert n_vector_harmonics(1) == 6
    assert len(vector_harmonic_labels(3)) == n_vector_harmonics(3)
    assert VelocityCoefficients.size(2) == 288
    assert VelocityCoefficients.size(8) == 25920


def test_vector_harmonics_tangent_and_orthonormal():
    L = 5
    g = sphere_quadrature(2 * L + 2)
    vals, _ = vector_harmonics(L, g.nodes)
    np.testing.assert_allclose(np.einsum("nac,nc->na", vals, g.nodes), 0, atol=1e-14)
    gram = np.einsum("n,nac,nbc->ab", g.weights, vals, vals)
    np.testing.assert_allclose(gram, np.eye(n_vector_harmonics(L)), atol=1e-12)


def test_spectral_divergence_matches_finite_differences(rng):
    pts = sample_sphere(rng, 30)
    vals, div = vector_harmonics(4, pts)
    for a in range(vals.shape[1]):
        fd = sphere_divergence(lambda x: vector_harmonics(4, x)[0][:, a], pts)
        np.testing.assert_allclose(fd, div[:, a], atol=2e-8)
    np.testing.assert_array_equal(div[:, 1::2], 0.0)


def test_gradient_of_y10_has_divergence_minus_two_y10(rng):
    pts = sample_sphere(rng, 20)
    k = harmonic_index(1, 0)

    def grad_y10(x):
        return real_sph_harm(1, x, gradient=True)[1][:, k]

    np.testing.assert_allclose(sphere_divergence(grad_y10, pts), -2 * real_sph_harm(1, pts)[:, k], atol=1e-9)


def test_rotation_field_is_divergence_free(rng):
    l1, l2 = sample_sphere(rng, 20), sample_sphere(rng, 20)
    div = surface_divergence(lambda a, b: (np.cross(ZHAT, a), np.zeros_like(b)), l1, l2)
    np.testing.assert_allclose(div, 0, atol=1e-10)
    zero = VelocityCoefficients.zeros(3)
    np.testing.assert_array_equal(surface_divergence(zero, l1, l2), 0)


def test_rotation_field_lies_in_degree_one(rng):
    # z x l = -sqrt(8 pi / 3) * (l x grad Y_10) / sqrt(2)
    c = VelocityCoefficients.zeros(1)
    curl_10 = 2 * (harmonic_index(1, 0) - 1) + 1
    c.C1[curl_10, 0] = -np.sqrt(2 * FOUR_PI / 3) * np.sqrt(FOUR_PI)
    l1, l2 = sample_sphere(rng, 10), sample_sphere(rng, 10)
    np.testing.assert_allclose(c.evaluate(l1, l2).V1, np.cross(ZHAT, l1), atol=1e-13)


def test_coefficients_round_trip_and_embed(rng):
    L = 2
    c = VelocityCoefficients.from_vector(L, rng.standard_normal(VelocityCoefficients.size(L)))
    np.testing.assert_array_equal(VelocityCoefficients.from_vector(L, c.as_vector()).as_vector(), c.as_vector())
    big = c.embed(4)
    l1, l2 = sample_sphere(rng, 15), sample_sphere(rng, 15)
    a, b = c.evaluate(l1, l2), big.evaluate(l1, l2)
    np.testing.assert_allclose(a.V1, b.V1, atol=1e-12)
    np.testing.assert_allclose(a.V2, b.V2, atol=1e-12)
    np.testing.assert_allclose(c.divergence(l1, l2), big.divergence(l1, l2), atol=1e-12)
    with pytest.raises(ValueError):
        big.embed(2)
    with pytest.raises(ValueError):
        VelocityCoefficients.from_vector(L, np.zeros(5))


def test_coefficient_fields_tangent_and_divergence(rng):
    L = 3
    c = VelocityCoefficients.from_vector(L, rng.standard_normal(VelocityCoefficients.size(L)))
    l1, l2 = sample_sphere(rng, 25), sample_sphere(rng, 25)
    f = c.evaluate(l1, l2)
    assert f.max_normal_component() < 1e-10
    np.testing.assert_allclose(surface_divergence(c, l1, l2), surface_divergence(lambda a, b: c(a, b), l1, l2), atol=1e-7)
