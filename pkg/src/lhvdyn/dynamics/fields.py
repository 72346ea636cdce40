"""Tangential velocity fields on S^2 x S^2.

A field V = (V1, V2) is expanded in a tensor basis truncated at degree L:

    V1(l1, l2) = sum C1[alpha, beta] G_alpha(l1) Y_beta(l2)
    V2(l1, l2) = sum C2[beta, alpha] Y_beta(l1) G_alpha(l2)

where Y_beta are the real scalar harmonics of degree <= L and G_alpha the
normalized vector harmonics of degree 1..L, interleaved as

    alpha = 2 * (l*l + l + m - 1) + kind,  kind 0: grad Y_lm / sqrt(l(l+1))
                                           kind 1: lambda x grad Y_lm / sqrt(l(l+1))

Gradient-type fields have divergence -sqrt(l(l+1)) Y_lm, curl-type fields
are divergence free, so divergences are exact and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sphere import harmonic_degrees, n_harmonics, real_sph_harm


def n_vector_harmonics(L: int) -> int:
    return 2 * (n_harmonics(L) - 1)


def vector_harmonics(L: int, points: np.ndarray):
    """Vector harmonics at ``points``: values (n, Kv, 3) and divergences (n, Kv)."""
    points = np.atleast_2d(points)
    y, grad = real_sph_harm(L, points, gradient=True)
    deg = harmonic_degrees(L)[1:]
    scale = np.sqrt(deg * (deg + 1.0))
    g = grad[:, 1:, :] / scale[None, :, None]
    c = np.cross(points[:, None, :], g)
    n, k = len(points), len(deg)
    values = np.empty((n, 2 * k, 3))
    values[:, 0::2] = g
    values[:, 1::2] = c
    div = np.zeros((n, 2 * k))
    div[:, 0::2] = -scale * y[:, 1:]
    return values, div


def vector_harmonic_labels(L: int) -> list[tuple[int, int, str]]:
    return [(l, m, kind) for l in range(1, L + 1) for m in range(-l, l + 1) for kind in ("grad", "curl")]


@dataclass
class TangentField:
    """Sampled field: V1 tangent at l1, V2 tangent at l2 (all arrays (..., 3))."""

    l1: np.ndarray
    l2: np.ndarray
    V1: np.ndarray
    V2: np.ndarray

    def max_normal_component(self) -> float:
        return float(
            max(np.abs(np.sum(self.V1 * self.l1, axis=-1)).max(), np.abs(np.sum(self.V2 * self.l2, axis=-1)).max())
        )

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.V1**2, axis=-1) + np.sum(self.V2**2, axis=-1))


@dataclass
class VelocityCoefficients:
    """Coefficients of a velocity field on S^2 x S^2 at truncation degree L."""

    L: int
    C1: np.ndarray  # (Kv, Ks)
    C2: np.ndarray  # (Ks, Kv)

    @classmethod
    def zeros(cls, L: int) -> VelocityCoefficients:
        kv, ks = n_vector_harmonics(L), n_harmonics(L)
        return cls(L, np.zeros((kv, ks)), np.zeros((ks, kv)))

    @classmethod
    def from_vector(cls, L: int, c: np.ndarray) -> VelocityCoefficients:
        kv, ks = n_vector_harmonics(L), n_harmonics(L)
        c = np.asarray(c, dtype=float)
        if c.size != 2 * kv * ks:
            raise ValueError(f"expected {2 * kv * ks} coefficients for L={L}, got {c.size}")
        return cls(L, c[: kv * ks].reshape(kv, ks).copy(), c[kv * ks :].reshape(ks, kv).copy())

    @staticmethod
    def size(L: int) -> int:
        return 2 * n_vector_harmonics(L) * n_harmonics(L)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.C1.ravel(), self.C2.ravel()])

    def embed(self, L: int) -> VelocityCoefficients:
        """Same field expressed in the (larger) basis of degree L."""
        if L < self.L:
            raise ValueError("can only embed into a larger basis")
        out = VelocityCoefficients.zeros(L)
        kv, ks = self.C1.shape
        out.C1[:kv, :ks] = self.C1
        out.C2[:ks, :kv] = self.C2
        return out

    def evaluate(self, l1, l2) -> TangentField:
        """Field at matching point pairs l1[i], l2[i]."""
        l1 = np.atleast_2d(l1)
        l2 = np.atleast_2d(l2)
        g1, _ = vector_harmonics(self.L, l1)
        g2, _ = vector_harmonics(self.L, l2)
        y1 = real_sph_harm(self.L, l1)
        y2 = real_sph_harm(self.L, l2)
        V1 = np.einsum("nac,ab,nb->nc", g1, self.C1, y2)
        V2 = np.einsum("nb,ba,nac->nc", y1, self.C2, g2)
        return TangentField(l1, l2, V1, V2)

    def divergence(self, l1, l2) -> np.ndarray:
        """div_1 V1 + div_2 V2 at matching point pairs, computed spectrally."""
        l1 = np.atleast_2d(l1)
        l2 = np.atleast_2d(l2)
        _, d1 = vector_harmonics(self.L, l1)
        _, d2 = vector_harmonics(self.L, l2)
        y1 = real_sph_harm(self.L, l1)
        y2 = real_sph_harm(self.L, l2)
        return np.einsum("na,ab,nb->n", d1, self.C1, y2) + np.einsum("nb,ba,na->n", y1, self.C2, d2)

    def __call__(self, l1, l2):
        f = self.evaluate(l1, l2)
        return f.V1, f.V2


def _unit_rows(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def sphere_divergence(field, points, h: float = 1e-5) -> np.ndarray:
    """Divergence of a callable tangential field on one sphere (see :func:`surface_divergence`)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    div = np.zeros(len(points))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        div += (field(_unit_rows(points + e))[:, k] - field(_unit_rows(points - e))[:, k]) / (2 * h)
    return div


def surface_divergence(field, l1=None, l2=None, h: float = 1e-5) -> np.ndarray:
    """Divergence of a tangential field on S^2 x S^2 at point pairs (l1[i], l2[i]).

    ``field`` is either :class:`VelocityCoefficients` (exact, spectral) or a
    callable ``(l1, l2) -> (V1, V2)``.  Callables are differentiated by central
    differences of the degree-0 homogeneous extension V(x / |x|), whose
    ambient divergence equals the surface divergence; this needs no
    coordinate chart and is regular at the poles.
    """
    if isinstance(field, VelocityCoefficients):
        return field.divergence(l1, l2)
    l1 = np.atleast_2d(np.asarray(l1, dtype=float))
    l2 = np.atleast_2d(np.asarray(l2, dtype=float))
    div = np.zeros(len(l1))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        v1p, _ = field(_unit_rows(l1 + e), l2)
        v1m, _ = field(_unit_rows(l1 - e), l2)
        _, v2p = field(l1, _unit_rows(l2 + e))
        _, v2m = field(l1, _unit_rows(l2 - e))
        div += (v1p[:, k] - v1m[:, k] + v2p[:, k] - v2m[:, k]) / (2 * h)
    return div
