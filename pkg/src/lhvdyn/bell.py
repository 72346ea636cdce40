"""Bell hidden-variable model on the sphere.

Each qubit carries a unit vector lambda; a spin measurement along n gives
"up" iff n.lambda > 0.  States near the maximally mixed one get the
closed-form densities built from the ramp R(x) = x Theta(x):

    4pi p_r(l)          = 4 R(r.l) + 1 - |r|
    (4pi)^2 p(l1, l2)   = 1 - |a| - |b| - sum S_j + 4 R(a.l1) + 4 R(b.l2)
                          + 8 sum_j S_j R((u_j.l1)(v_j.l2))

with T = sum_j S_j u_j v_j^T.  Densities are taken with respect to the
solid-angle measure, so the uniform density is 1/(4pi) per sphere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionDomainError, IntegrationBudgetError
from .quantum import UP, BlochTwoQubit, MeasurementEvent, singular_data
from .sphere import FOUR_PI, product_grid, project_tangent

VALIDITY_SLACK = 1e-12


def step(x):
    """Heaviside step with step(0) = 1/2."""
    return np.heaviside(x, 0.5)


def ramp(x):
    """R(x) = x Theta(x)."""
    return np.maximum(x, 0.0)


def bell_rule(direction, lam, outcome: int = UP):
    """Probability of ``outcome`` when measuring along ``direction`` with hidden variable ``lam``."""
    up = step(np.sum(np.asarray(direction) * np.asarray(lam), axis=-1))
    return up if outcome == UP else 1.0 - up


def validity(s: BlochTwoQubit) -> bool:
    """|a| + |b| + sum_j S_j <= 1 (up to rounding slack)."""
    return _budget(s) <= 1.0 + VALIDITY_SLACK


def _budget(s: BlochTwoQubit) -> float:
    return float(np.linalg.norm(s.a) + np.linalg.norm(s.b) + singular_data(s.T).S.sum())


class SingleQubitLhvDensity:
    """4pi p_r(lambda) = 4 R(r.lambda) + 1 - |r|."""

    n_parties = 1

    def __init__(self, r):
        self.r = np.asarray(r, dtype=float).reshape(3)
        self.norm_r = float(np.linalg.norm(self.r))
        if self.norm_r > 1.0 + VALIDITY_SLACK:
            raise ConstructionDomainError(f"|r| = {self.norm_r} exceeds 1")

    def __call__(self, lam):
        return (4.0 * ramp(np.asarray(lam) @ self.r) + 1.0 - self.norm_r) / FOUR_PI

    def gradient(self, lam):
        lam = np.asarray(lam, dtype=float)
        g = (4.0 / FOUR_PI) * step(lam @ self.r)[..., None] * self.r
        return project_tangent(lam, g)

    def kink_axes(self):
        return [self.r / self.norm_r] if self.norm_r > 0 else []

    def product_terms(self):
        """Terms (coefficient, axes); axis None means the constant 1, else 4 R(axis.lambda)."""
        terms = [((1.0 - self.norm_r) / FOUR_PI, (None,))]
        if self.norm_r > 0:
            terms.append((self.norm_r / FOUR_PI, (self.r / self.norm_r,)))
        return terms


def single_qubit_density(r, lam):
    return SingleQubitLhvDensity(r)(lam)


class TwoQubitLhvDensity:
    """Separable-decomposition density for a two-qubit state; the SVD of T is cached."""

    n_parties = 2

    def __init__(self, state: BlochTwoQubit):
        self.state = state
        self.svd = singular_data(state.T)
        self.norm_a = float(np.linalg.norm(state.a))
        self.norm_b = float(np.linalg.norm(state.b))
        self.const = 1.0 - self.norm_a - self.norm_b - float(self.svd.S.sum())
        if self.const < -VALIDITY_SLACK:
            raise ConstructionDomainError(
                f"|a| + |b| + sum S = {1.0 - self.const:.6g} > 1; closed-form density is not valid"
            )

    def scaled_value(self, l1, l2):
        """(4pi)^2 p(l1, l2); arguments broadcast over leading axes."""
        l1 = np.asarray(l1, dtype=float)
        l2 = np.asarray(l2, dtype=float)
        x = l1 @ self.svd.u  # u_j . l1
        y = l2 @ self.svd.v  # v_j . l2
        val = self.const + 4.0 * ramp(l1 @ self.state.a) + 4.0 * ramp(l2 @ self.state.b)
        return val + 8.0 * np.sum(self.svd.S * ramp(x * y), axis=-1)

    def __call__(self, l1, l2):
        return self.scaled_value(l1, l2) / FOUR_PI**2

    def gradient(self, l1, l2):
        """Tangential gradients (d p / d l1, d p / d l2), with Theta(0) = 1/2 on kinks."""
        l1 = np.asarray(l1, dtype=float)
        l2 = np.asarray(l2, dtype=float)
        x = l1 @ self.svd.u
        y = l2 @ self.svd.v
        th = self.svd.S * step(x * y)
        g1 = 4.0 * step(l1 @ self.state.a)[..., None] * self.state.a + 8.0 * (th * y) @ self.svd.u.T
        g2 = 4.0 * step(l2 @ self.state.b)[..., None] * self.state.b + 8.0 * (th * x) @ self.svd.v.T
        scale = 1.0 / FOUR_PI**2
        return scale * project_tangent(l1, g1), scale * project_tangent(l2, g2)

    def kink_axes(self, tol: float = 1e-14):
        """Normals of the great circles where the density is not smooth, per sphere."""
        first, second = [], []
        if self.norm_a > tol:
            first.append(self.state.a / self.norm_a)
        if self.norm_b > tol:
            second.append(self.state.b / self.norm_b)
        for j in range(3):
            if self.svd.S[j] > tol:
                first.append(self.svd.u[:, j])
                second.append(self.svd.v[:, j])
        return first, second

    def product_terms(self):
        """Separable form: sum of coef * f1(l1) * f2(l2), f = 1 or 4 R(axis.l)."""
        c = 1.0 / FOUR_PI**2
        terms = [(c * self.const, (None, None))]
        if self.norm_a > 0:
            terms.append((c * self.norm_a, (self.state.a / self.norm_a, None)))
        if self.norm_b > 0:
            terms.append((c * self.norm_b, (None, self.state.b / self.norm_b)))
        for j in range(3):
            sj = self.svd.S[j]
            if sj > 0:
                u, v = self.svd.u[:, j], self.svd.v[:, j]
                terms.append((c * sj / 2, (u, v)))
                terms.append((c * sj / 2, (-u, -v)))
        return terms


def two_qubit_density(s: BlochTwoQubit, l1, l2):
    return TwoQubitLhvDensity(s)(l1, l2)


def lhv_density(state):
    """Closed-form density for a Bloch vector (one qubit) or a two-qubit state."""
    if isinstance(state, BlochTwoQubit):
        return TwoQubitLhvDensity(state)
    return SingleQubitLhvDensity(state)


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings for LHV expectation values.

    mode "monte_carlo" draws seeded uniform samples in batches until
    3 standard errors fall below ``tol`` (or ``max_samples`` is spent);
    mode "product" uses Gauss-Legendre x uniform-azimuth grids, doubled
    and Richardson-extrapolated until successive estimates agree to ``tol``.
    """

    mode: str = "product"
    tol: float = 5e-3
    n_samples: int = 1_000_000
    max_samples: int = 4_000_000
    batch: int = 1 << 17
    seed: int = 0
    n_theta: int = 64
    n_phi: int = 128
    max_refinements: int = 2


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float


def _settings_array(settings, n_parties):
    arr = np.asarray(settings, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, None, :]
    if arr.shape[1:] != (n_parties, 3):
        raise ValueError(f"settings must have shape (k, {n_parties}, 3)")
    return arr


def lhv_probabilities(density, settings, config: IntegratorConfig | None = None):
    """LHV outcome tables for many setting tuples at once.

    ``settings`` has shape (k, n_parties, 3).  Returns (values, errors), each
    of shape (k, 2, ..., 2) indexed by outcome (0 = up, 1 = down) per party.
    """
    config = config or IntegratorConfig()
    settings = _settings_array(settings, density.n_parties)
    if config.mode == "monte_carlo":
        return _monte_carlo(density, settings, config)
    if config.mode == "product":
        return _product(density, settings, config)
    raise ValueError(f"unknown integrator mode {config.mode!r}")


def lhv_probability(density, event: MeasurementEvent, config: IntegratorConfig | None = None) -> Estimate:
    """<Q_m(lambda)> under ``density`` for one measurement event."""
    if event.n_parties != density.n_parties:
        raise ValueError("event and density have different numbers of parties")
    values, errors = lhv_probabilities(density, event.directions[None], config)
    idx = (0,) + tuple(0 if o == UP else 1 for o in event.outcomes)
    return Estimate(float(values[idx]), float(errors[idx]))


def _outer_pairs(pairs):
    """Outer product over parties of (..., 2) arrays -> (..., 2, ..., 2)."""
    table = pairs[0]
    for pair in pairs[1:]:
        extra = table.ndim - pair.ndim + 1
        table = table[..., None] * pair.reshape(pair.shape[:-1] + (1,) * extra + (2,))
    return table


def _monte_carlo(density, settings, config):
    rng = np.random.default_rng(config.seed)
    n_par = density.n_parties
    shape = (len(settings),) + (2,) * n_par
    total = np.zeros(shape)
    total_sq = np.zeros(shape)
    n = 0
    while True:
        m = config.batch
        lams = [rng.standard_normal((m, 3)) for _ in range(n_par)]
        lams = [l / np.linalg.norm(l, axis=1, keepdims=True) for l in lams]
        w = FOUR_PI**n_par * (density(*lams))
        ups = [step(lams[k] @ settings[:, k, :].T) for k in range(n_par)]  # (m, k) each
        tab = _outer_pairs([np.stack([up, 1.0 - up], axis=-1) for up in ups])
        vals = w.reshape((m,) + (1,) * (tab.ndim - 1)) * tab
        total += vals.sum(axis=0)
        total_sq += (vals**2).sum(axis=0)
        n += m
        if n < config.n_samples:
            continue
        mean = total / n
        err = np.sqrt(np.maximum(total_sq / n - mean**2, 0.0) / n)
        if 3.0 * err.max() <= config.tol:
            return mean, err
        if n >= config.max_samples:
            raise IntegrationBudgetError(
                f"Monte Carlo error {3 * err.max():.2e} above tolerance after {n} samples", mean, err
            )


def _sphere_factor(axis, grid, directions):
    """Integral over one sphere of f(l) * [up, down](n.l) for each direction; f = 1 or 4 R(axis.l)."""
    f = np.ones(grid.size) if axis is None else 4.0 * ramp(grid.nodes @ axis)
    up = step(grid.nodes @ directions.T)  # (nodes, k)
    wf = grid.weights * f
    ups = wf @ up
    return np.stack([ups, wf.sum() - ups], axis=-1)  # (k, 2)


def _product_once(density, settings, n_theta, n_phi):
    grid = product_grid(n_theta, n_phi)
    n_par = density.n_parties
    out = np.zeros((len(settings),) + (2,) * n_par)
    for coef, axes in density.product_terms():
        factors = [_sphere_factor(axes[k], grid, settings[:, k, :]) for k in range(n_par)]
        out += coef * _outer_pairs(factors)
    return out


def _product(density, settings, config):
    if not hasattr(density, "product_terms"):
        raise ValueError("product quadrature needs a density with a separable form")
    nt, nphi = config.n_theta, config.n_phi
    prev = _product_once(density, settings, nt, nphi)
    for _ in range(config.max_refinements + 1):
        nt, nphi = 2 * nt, 2 * nphi
        cur = _product_once(density, settings, nt, nphi)
        # kinked integrands converge at second order in the node spacing
        extrap = cur + (cur - prev) / 3.0
        err = np.abs(extrap - cur)
        if err.max() <= config.tol:
            return extrap, err
        prev = cur
    raise IntegrationBudgetError(f"quadrature refinement stalled at {err.max():.2e}", extrap, err)
