"""Quadrature, sampling and real spherical harmonics on the unit sphere.

Real harmonics use no Condon-Shortley phase and are ordered by degree, then
order, so index(l, m) = l*l + l + m::

    Y_00, Y_1-1, Y_10, Y_11, Y_2-2, ...

Harmonics are evaluated as polynomials in the Cartesian coordinates of the
point, which keeps values and surface gradients well defined at the poles.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi, sqrt

import numpy as np

FOUR_PI = 4.0 * pi


@dataclass(frozen=True)
class SphereQuadrature:
    """Product rule: Gauss-Legendre in cos(theta) times uniform azimuth."""

    nodes: np.ndarray  # (n, 3) unit vectors
    weights: np.ndarray  # (n,) solid angle, sums to 4 pi
    n_theta: int
    n_phi: int

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def degree(self) -> int:
        """Largest polynomial degree integrated exactly."""
        return min(2 * self.n_theta - 1, self.n_phi - 1)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values; the leading axis runs over nodes."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def product_grid(n_theta: int, n_phi: int, rotation: np.ndarray | None = None) -> SphereQuadrature:
    if n_theta < 1 or n_phi < 1:
        raise ValueError("n_theta and n_phi must be positive")
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * pi * (np.arange(n_phi) + 0.5) / n_phi
    s = np.sqrt(1.0 - z * z)
    nodes = np.stack(
        [np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)), np.repeat(z[:, None], n_phi, axis=1)],
        axis=-1,
    ).reshape(-1, 3)
    weights = np.repeat(wz, n_phi) * (2.0 * pi / n_phi)
    if rotation is not None:
        nodes = nodes @ np.asarray(rotation).T
    return SphereQuadrature(nodes, weights, n_theta, n_phi)


def sphere_quadrature(order: int) -> SphereQuadrature:
    """Smallest product rule that integrates every harmonic up to ``order``."""
    if order < 1:
        raise ValueError(f"unsupported quadrature order {order}")
    return product_grid(order // 2 + 1, order + 1)


def sample_sphere(rng: np.random.Generator, size: int | tuple | None = None) -> np.ndarray:
    """Uniform points on S^2 (normalized Gaussian vectors)."""
    shape = (3,) if size is None else (*np.atleast_1d(size), 3)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def tangent_frame(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent vectors (e1, e2) with e1 x e2 = point."""
    p = np.asarray(points, dtype=float)
    helper = np.zeros_like(p)
    near_pole = np.abs(p[..., 2]) > 0.9
    helper[..., 2] = ~near_pole
    helper[..., 0] = near_pole
    e1 = helper - np.sum(helper * p, axis=-1, keepdims=True) * p
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(p, e1)
    return e1, e2


def project_tangent(points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Remove the radial component of ``vectors`` at ``points``."""
    return vectors - np.sum(vectors * points, axis=-1, keepdims=True) * points


def n_harmonics(l_max: int) -> int:
    return (l_max + 1) ** 2


def harmonic_index(l: int, m: int) -> int:
    return l * l + l + m


def harmonic_degrees(l_max: int) -> np.ndarray:
    """Degree l of each basis slot."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(l_max + 1)])


def harmonic_labels(l_max: int) -> list[tuple[int, int]]:
    return [(l, m) for l in range(l_max + 1) for m in range(-l, l + 1)]


def _legendre_derivatives(l_max: int, z: np.ndarray) -> np.ndarray:
    """a[l, m] = d^m P_l / dz^m at z, shape (l_max + 1, l_max + 2, n)."""
    a = np.zeros((l_max + 1, l_max + 2, z.size))
    for m in range(l_max + 1):
        a[m, m] = float(np.prod(np.arange(1, 2 * m, 2))) if m else 1.0
        if m + 1 <= l_max:
            a[m + 1, m] = (2 * m + 1) * z * a[m, m]
        for l in range(m + 1, l_max):
            a[l + 1, m] = ((2 * l + 1) * z * a[l, m] - (l + m) * a[l - 1, m]) / (l - m + 1)
    return a


def _norm(l: int, m: int) -> float:
    c = sqrt((2 * l + 1) / FOUR_PI * factorial(l - m) / factorial(l + m))
    return c * sqrt(2.0) if m > 0 else c


def real_sph_harm(l_max: int, points: np.ndarray, gradient: bool = False):
    """Real harmonics up to ``l_max`` at unit ``points`` (n, 3).

    Returns values of shape (n, K) with K = (l_max + 1)**2 and, when
    ``gradient`` is set, surface gradients of shape (n, K, 3).
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    n = len(p)
    k = n_harmonics(l_max)
    a = _legendre_derivatives(l_max, z)

    # cos/sin parts of (x + i y)^m
    c = np.zeros((l_max + 1, n))
    s = np.zeros((l_max + 1, n))
    c[0] = 1.0
    for m in range(1, l_max + 1):
        c[m] = x * c[m - 1] - y * s[m - 1]
        s[m] = x * s[m - 1] + y * c[m - 1]

    values = np.empty((n, k))
    grads = np.zeros((n, k, 3)) if gradient else None
    for l in range(l_max + 1):
        for m in range(l + 1):
            nrm = _norm(l, m)
            base = a[l, m]
            dz = a[l, m + 1]
            if m == 0:
                values[:, harmonic_index(l, 0)] = nrm * base
                if gradient:
                    grads[:, harmonic_index(l, 0), 2] = nrm * dz
                continue
            ic, is_ = harmonic_index(l, m), harmonic_index(l, -m)
            values[:, ic] = nrm * base * c[m]
            values[:, is_] = nrm * base * s[m]
            if gradient:
                grads[:, ic] = nrm * np.stack([base * m * c[m - 1], -base * m * s[m - 1], dz * c[m]], axis=-1)
                grads[:, is_] = nrm * np.stack([base * m * s[m - 1], base * m * c[m - 1], dz * s[m]], axis=-1)
    if not gradient:
        return values
    grads -= np.einsum("nkc,nc->nk", grads, p)[:, :, None] * p[:, None, :]
    return values, grads
