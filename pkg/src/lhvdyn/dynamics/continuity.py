"""Ingredients of the continuity equation  dp/dt + div(p V) = 0  at t = 0."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bell import SingleQubitLhvDensity, TwoQubitLhvDensity, step
from ..errors import ConstructionDomainError
from ..quantum import BlochTwoQubit, evolve_bloch
from ..sphere import FOUR_PI, project_tangent

FD_STEP = 1e-5
KINK_RADIUS = 1e-3


@dataclass
class TimeDerivative:
    value: np.ndarray
    error: np.ndarray
    dt: float


def density_time_derivative(
    s: BlochTwoQubit, omega: float, l1, l2, dt: float = FD_STEP
) -> TimeDerivative:
    """d/dt p_{a(t), b(t), T(t)}(l1, l2) at t = 0 by central differences.

    The error estimate compares steps dt and 2 dt (second-order scheme).
    """
    try:
        dens = {h: TwoQubitLhvDensity(evolve_bloch(s, omega, h)) for h in (-2 * dt, -dt, dt, 2 * dt)}
    except ConstructionDomainError as exc:
        raise ConstructionDomainError(f"state leaves the construction domain within |t| <= {2 * dt}: {exc}") from exc
    d1 = (dens[dt](l1, l2) - dens[-dt](l1, l2)) / (2 * dt)
    d2 = (dens[2 * dt](l1, l2) - dens[-2 * dt](l1, l2)) / (4 * dt)
    return TimeDerivative(d1, np.abs(d2 - d1) / 3.0, dt)


def single_qubit_time_derivative(r, omega: float, lam, dt: float = FD_STEP) -> np.ndarray:
    """d/dt p_{r(t)}(lam) for r rotating as r' = omega z x r (H = omega sigma_z / 2)."""
    r = np.asarray(r, dtype=float)

    def rot(t):
        c, s = np.cos(omega * t), np.sin(omega * t)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]) @ r

    return (SingleQubitLhvDensity(rot(dt))(lam) - SingleQubitLhvDensity(rot(-dt))(lam)) / (2 * dt)


def density_surface_gradient(s: BlochTwoQubit, l1, l2, method: str = "analytic", h: float = 1e-6):
    """Tangential gradients of the two-qubit density.

    ``method="fd"`` uses two-sided differences along a tangent frame and is
    meant as an independent check away from kinks.
    """
    dens = TwoQubitLhvDensity(s)
    if method == "analytic":
        return dens.gradient(l1, l2)
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    from ..sphere import tangent_frame

    l1 = np.atleast_2d(np.asarray(l1, dtype=float))
    l2 = np.atleast_2d(np.asarray(l2, dtype=float))
    out = []
    for which, lam in ((0, l1), (1, l2)):
        e1, e2 = tangent_frame(lam)
        g = np.zeros_like(lam)
        for e in (e1, e2):
            plus = lam + h * e
            minus = lam - h * e
            plus /= np.linalg.norm(plus, axis=-1, keepdims=True)
            minus /= np.linalg.norm(minus, axis=-1, keepdims=True)
            if which == 0:
                d = (dens(plus, l2) - dens(minus, l2)) / (2 * h)
            else:
                d = (dens(l1, plus) - dens(l1, minus)) / (2 * h)
            g += d[:, None] * e
        out.append(g)
    return tuple(out)


def rank_one_family_density(u, eps: float, sign: int, l1, l2):
    """Density for a = b = 0, T = sign * eps * u u^T."""
    x = np.asarray(l1) @ u
    y = np.asarray(l2) @ u
    return (1.0 - eps + 8.0 * eps * np.maximum(sign * x * y, 0.0)) / FOUR_PI**2


def rank_one_family_gradient(u, eps: float, sign: int, l1, l2):
    """(4pi)^2 grad_j p = sign 8 eps Theta(sign (u.l1)(u.l2)) (u.l_other) u, projected to the tangent planes."""
    u = np.asarray(u, dtype=float)
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    x = l1 @ u
    y = l2 @ u
    th = step(sign * x * y)
    c = sign * 8.0 * eps * th / FOUR_PI**2
    g1 = (c * y)[..., None] * u
    g2 = (c * x)[..., None] * u
    return project_tangent(l1, g1), project_tangent(l2, g2)


def kink_free(points, axes, radius: float = KINK_RADIUS) -> np.ndarray:
    """True where ``points`` are farther than ``radius`` (radians) from every great circle axis.lambda = 0."""
    points = np.atleast_2d(points)
    keep = np.ones(len(points), dtype=bool)
    if len(axes):
        dots = np.abs(points @ np.asarray(axes).T)
        keep &= np.all(dots > np.sin(radius), axis=1)
    return keep


def pair_kink_free(c, radius: float = KINK_RADIUS) -> np.ndarray:
    """True where l1.l2 = c stays away from {-1, 0, 1} by more than ``radius`` radians."""
    c = np.asarray(c)
    return (np.abs(c) > np.sin(radius)) & (np.abs(c) < np.cos(radius))
