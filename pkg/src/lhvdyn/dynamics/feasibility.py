"""Least-squares test for a state-independent velocity field.

For every state s and grid node (l1, l2) the continuity equation at t = 0,

    dp_s/dt + p_s div V + grad p_s . V = 0,

is linear in the coefficients c of V.  Stacking rows over states and nodes
(weighted by the square root of the product quadrature weight) gives
A c = b with b = -dp/dt.  A is never formed: at a node the row only sees the
five local quantities

    u = (div V, V1.e1, V1.e2, V2.f1, V2.f2)

(e, f are tangent frames), and u on the whole product grid is a handful of
matrix products of the tensor basis.  Because V is shared by all states, the
per-node block of state rows can be reduced by a QR factorization to five
rows plus a constant: the constant is the residual no field at all (smooth
or not) can remove at that node, which bounds the minimal residual from
below for every truncation degree.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, lsqr

from ..bell import SingleQubitLhvDensity, TwoQubitLhvDensity
from ..quantum import BlochTwoQubit, rank_one_correlation_state, sample_noisy_ball
from ..sphere import SphereQuadrature, product_grid, real_sph_harm, tangent_frame
from .continuity import (
    KINK_RADIUS,
    density_time_derivative,
    kink_free,
    pair_kink_free,
    single_qubit_time_derivative,
)
from .fields import (
    TangentField,
    VelocityCoefficients,
    n_vector_harmonics,
    sphere_divergence,
    surface_divergence,
    vector_harmonics,
)

# dense solves are used below this many matrix entries
DENSE_LIMIT = 30_000_000


@dataclass(frozen=True)
class DynamicsGrid:
    """Product of two sphere rules; node (i, j) is (sphere1.nodes[i], sphere2.nodes[j])."""

    sphere1: SphereQuadrature
    sphere2: SphereQuadrature

    @classmethod
    def product(cls, n_theta: int = 16, n_phi: int = 32) -> DynamicsGrid:
        g = product_grid(n_theta, n_phi)
        return cls(g, g)

    @property
    def shape(self) -> tuple[int, int]:
        return self.sphere1.size, self.sphere2.size

    def points(self):
        """Broadcastable node arrays of shape (n1, 1, 3) and (1, n2, 3)."""
        return self.sphere1.nodes[:, None, :], self.sphere2.nodes[None, :, :]

    def pair_cosines(self) -> np.ndarray:
        return self.sphere1.nodes @ self.sphere2.nodes.T

    def weights(self) -> np.ndarray:
        return np.outer(self.sphere1.weights, self.sphere2.weights)


def usable_nodes(states, grid: DynamicsGrid, radius: float = KINK_RADIUS) -> np.ndarray:
    """Nodes away from every kink circle of the given states and from l1.l2 in {-1, 0, 1}."""
    axes1, axes2 = [], []
    for s in states:
        a1, a2 = TwoQubitLhvDensity(s).kink_axes()
        axes1 += a1
        axes2 += a2
    keep1 = kink_free(grid.sphere1.nodes, axes1, radius)
    keep2 = kink_free(grid.sphere2.nodes, axes2, radius)
    return np.outer(keep1, keep2) & pair_kink_free(grid.pair_cosines(), radius)


class _BasisTables:
    """Tensor-basis values on the grid: divergence and tangent components per sphere."""

    def __init__(self, grid: DynamicsGrid, L: int):
        self.L = L
        self.kv = n_vector_harmonics(L)
        self.ks = (L + 1) ** 2
        self.sides = []
        for g in (grid.sphere1, grid.sphere2):
            vals, div = vector_harmonics(L, g.nodes)
            e1, e2 = tangent_frame(g.nodes)
            comp = np.stack(
                [div, np.einsum("nac,nc->na", vals, e1), np.einsum("nac,nc->na", vals, e2)]
            )  # (3, n, Kv)
            self.sides.append((comp, real_sph_harm(L, g.nodes)))

    def local(self, C1, C2) -> np.ndarray:
        """u(i, j, :) for coefficient blocks C1 (Kv, Ks), C2 (Ks, Kv) -> (n1, n2, 5)."""
        (F1, Y1), (F2, Y2) = self.sides
        a = np.einsum("kia,aj->kij", F1, C1 @ Y2.T)  # (3, n1, n2)
        b = np.einsum("ia,kja->kij", Y1 @ C2, F2)
        return np.stack([a[0] + b[0], a[1], a[2], b[1], b[2]], axis=-1)

    def adjoint(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Adjoint of :meth:`local`: z (n1, n2, 5) -> (C1, C2)."""
        (F1, Y1), (F2, Y2) = self.sides
        z1 = np.stack([z[..., 0], z[..., 1], z[..., 2]])
        z2 = np.stack([z[..., 0], z[..., 3], z[..., 4]])
        C1 = np.einsum("kia,kij->aj", F1, z1) @ Y2
        C2 = Y1.T @ np.einsum("kij,kja->ia", z2, F2)
        return C1, C2


@dataclass
class FeasibilitySystem:
    """Matrix-free A c = b; rows (n1, n2, r, 5) act on the local quantities u."""

    L: int
    grid: DynamicsGrid
    rows: np.ndarray
    rhs: np.ndarray
    mask: np.ndarray
    n_states: int
    floor_sq: float = 0.0
    rhs_norm: float | None = None
    _tables: _BasisTables | None = field(default=None, repr=False)

    def __post_init__(self):
        if self._tables is None:
            self._tables = _BasisTables(self.grid, self.L)
        if self.rhs_norm is None:
            self.rhs_norm = float(np.linalg.norm(self.rhs))

    @property
    def n_unknowns(self) -> int:
        return VelocityCoefficients.size(self.L)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rhs.size, self.n_unknowns

    @property
    def b(self) -> np.ndarray:
        return self.rhs.ravel()

    def with_degree(self, L: int) -> FeasibilitySystem:
        """Same rows and right-hand side with a different velocity basis."""
        return FeasibilitySystem(L, self.grid, self.rows, self.rhs, self.mask, self.n_states, self.floor_sq, self.rhs_norm)

    def matvec(self, c) -> np.ndarray:
        v = VelocityCoefficients.from_vector(self.L, c)
        u = self._tables.local(v.C1, v.C2)
        return np.einsum("ijrk,ijk->ijr", self.rows, u).ravel()

    def rmatvec(self, y) -> np.ndarray:
        y = np.asarray(y).reshape(self.rhs.shape)
        z = np.einsum("ijrk,ijr->ijk", self.rows, y)
        C1, C2 = self._tables.adjoint(z)
        return np.concatenate([C1.ravel(), C2.ravel()])

    def operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.rmatvec, dtype=float)

    def dense(self) -> np.ndarray:
        """Explicit A (small systems only)."""
        n = self.n_unknowns
        if self.rhs.size * n > DENSE_LIMIT:
            raise MemoryError(f"dense A would have {self.rhs.size * n} entries")
        return np.stack([self.matvec(e) for e in np.eye(n)], axis=1)

    def residual_norm(self, c) -> float:
        """||A c - b|| of the original (uncompressed) system."""
        r = self.matvec(c) - self.b
        return float(np.sqrt(r @ r + self.floor_sq))

    def column_norms(self) -> np.ndarray:
        """Exact column norms of A from the per-node Gram blocks."""
        t = self._tables
        gram = np.einsum("ijrk,ijrl->ijkl", self.rows, self.rows)
        (F1, Y1), (F2, Y2) = t.sides
        sq1 = np.zeros((t.kv, t.ks))
        sq2 = np.zeros((t.ks, t.kv))
        idx2 = (0, 3, 4)
        for k in range(3):
            for l in range(3):
                w1 = gram[:, :, k, l] @ (Y2**2)  # (n1, Ks)
                sq1 += (F1[k] * F1[l]).T @ w1
                w2 = (Y1**2).T @ gram[:, :, idx2[k], idx2[l]]  # (Ks, n2)
                sq2 += w2 @ (F2[k] * F2[l])
        return np.sqrt(np.maximum(np.concatenate([sq1.ravel(), sq2.ravel()]), 0.0))

    def compress(self) -> FeasibilitySystem:
        """Equivalent system with five rows per node; the dropped part goes to ``floor_sq``."""
        q, r = np.linalg.qr(self.rows)  # (n1, n2, S, 5), (n1, n2, 5, 5)
        qb = np.einsum("ijrk,ijr->ijk", q, self.rhs)
        floor_sq = self.floor_sq + max(float(np.sum(self.rhs**2) - np.sum(qb**2)), 0.0)
        return FeasibilitySystem(self.L, self.grid, r, qb, self.mask, self.n_states, floor_sq, self.rhs_norm, self._tables)

    @property
    def floor_relative(self) -> float:
        return float(np.sqrt(self.floor_sq) / self.rhs_norm) if self.rhs_norm > 0 else 0.0


def assemble_feasibility(
    states, omega: float, grid: DynamicsGrid, L: int, radius: float = KINK_RADIUS, mask=None, workers: int = 1
) -> FeasibilitySystem:
    """Stack the continuity rows of all states at all usable nodes.

    States are independent; ``workers`` threads fill disjoint slices, so the
    result does not depend on the worker count.
    """
    states = list(states)
    if not states:
        raise ValueError("no states given")
    if mask is None:
        mask = usable_nodes(states, grid, radius)
    if not mask.any():
        raise ValueError("no usable nodes left after kink exclusion")
    l1, l2 = grid.points()
    n1, n2 = grid.shape
    e1, e2 = tangent_frame(grid.sphere1.nodes)
    f1, f2 = tangent_frame(grid.sphere2.nodes)
    w = np.sqrt(grid.weights()) * mask
    rows = np.zeros((n1, n2, len(states), 5))
    rhs = np.zeros((n1, n2, len(states)))

    def fill(k):
        s = states[k]
        dens = TwoQubitLhvDensity(s)
        g1, g2 = dens.gradient(l1, l2)
        rows[:, :, k, 0] = w * dens(l1, l2)
        rows[:, :, k, 1] = w * np.einsum("ijc,ic->ij", g1, e1)
        rows[:, :, k, 2] = w * np.einsum("ijc,ic->ij", g1, e2)
        rows[:, :, k, 3] = w * np.einsum("ijc,jc->ij", g2, f1)
        rows[:, :, k, 4] = w * np.einsum("ijc,jc->ij", g2, f2)
        rhs[:, :, k] = -w * density_time_derivative(s, omega, l1, l2).value

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, range(len(states))))
    else:
        for k in range(len(states)):
            fill(k)
    return FeasibilitySystem(L, grid, rows, rhs, mask, len(states))


@dataclass
class FeasibilityReport:
    L: int
    n_states: int
    n_nodes: int
    n_unknowns: int
    abs_residual: float
    rel_residual: float
    floor_rel_residual: float
    rank: int | None
    cond_estimate: float | None
    rank_deficient: bool
    solver: str
    iterations: int | None = None
    optimality: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _relative(abs_res, rhs_norm):
    if rhs_norm == 0.0:
        return 0.0 if abs_res == 0.0 else float("inf")
    return abs_res / rhs_norm


def fit_velocity_field(
    system: FeasibilitySystem,
    method: str = "auto",
    x0: VelocityCoefficients | None = None,
    tol: float = 1e-12,
    iter_lim: int = 20_000,
    rcond: float = 1e-12,
):
    """Minimize ||A c - b||; returns (VelocityCoefficients, FeasibilityReport).

    ``dense`` uses an SVD-based solver (rank revealing, minimum norm);
    ``lsqr`` runs column-scaled LSQR on the matrix-free operator, warm
    started from ``x0`` if given.  ``auto`` picks dense for small systems.
    """
    m, n = system.shape
    if method == "auto":
        method = "dense" if m * n <= DENSE_LIMIT else "lsqr"
    if system.rhs_norm == 0.0 and x0 is None:
        c = np.zeros(n)
        return VelocityCoefficients.from_vector(system.L, c), FeasibilityReport(
            system.L, system.n_states, int(system.mask.sum()), n, 0.0, 0.0, 0.0, 0, None, False, method, 0, 0.0
        )
    if method == "dense":
        A = system.dense()
        c, _, rank, sv = scipy.linalg.lstsq(A, system.b, cond=rcond, lapack_driver="gelsd")
        cond = float(sv[0] / sv[rank - 1]) if rank > 0 else float("inf")
        iterations, optimality = None, None
        rank_deficient = rank < n
    elif method == "lsqr":
        scale = system.column_norms()
        scale[scale == 0.0] = 1.0
        op = system.operator()
        scaled = LinearOperator(
            op.shape, matvec=lambda y: op.matvec(y / scale), rmatvec=lambda r: op.rmatvec(r) / scale, dtype=float
        )
        y0 = None if x0 is None else x0.embed(system.L).as_vector() * scale
        out = lsqr(scaled, system.b, atol=tol, btol=tol, conlim=1e14, iter_lim=iter_lim, x0=y0)
        y, istop, itn, r1norm, _, anorm, acond, arnorm = out[:8]
        c = y / scale
        rank, cond = None, float(acond)
        iterations = int(itn)
        optimality = float(arnorm / (anorm * r1norm)) if r1norm > 0 else 0.0
        rank_deficient = acond > 1e12
    else:
        raise ValueError(f"unknown method {method!r}")
    abs_res = system.residual_norm(c)
    report = FeasibilityReport(
        L=system.L,
        n_states=system.n_states,
        n_nodes=int(system.mask.sum()),
        n_unknowns=n,
        abs_residual=abs_res,
        rel_residual=_relative(abs_res, system.rhs_norm),
        floor_rel_residual=system.floor_relative,
        rank=None if rank is None else int(rank),
        cond_estimate=cond,
        rank_deficient=bool(rank_deficient),
        solver=method,
        iterations=iterations,
        optimality=optimality,
    )
    return VelocityCoefficients.from_vector(system.L, c), report


def headline_ensemble(eps: float = 0.1, n_random: int = 32, visibility: float = 0.2, seed: int = 0):
    """T = +-eps u u^T for u in {x, y, z}, the maximally mixed state and random noisy states."""
    states = [rank_one_correlation_state(u, eps, sign) for u in np.eye(3) for sign in (1, -1)]
    states.append(BlochTwoQubit.maximally_mixed())
    rng = np.random.default_rng(seed)
    states += [sample_noisy_ball(visibility, rng) for _ in range(n_random)]
    return states


def residual_curve(states, omega: float, grid: DynamicsGrid, degrees=(2, 4, 6, 8), radius: float = KINK_RADIUS, **fit_kw):
    """Minimal relative residual for each degree; each fit warm starts from the previous one."""
    base = assemble_feasibility(states, omega, grid, min(degrees), radius).compress()
    reports, fields = [], []
    prev = None
    for L in sorted(degrees):
        system = base.with_degree(L)
        coeffs, rep = fit_velocity_field(system, x0=prev, **fit_kw)
        reports.append(rep)
        fields.append(coeffs)
        prev = coeffs
    return reports, fields


# --- single-sphere positive control --------------------------------------


@dataclass
class SphereVelocity:
    """V(l) = sum_alpha c_alpha G_alpha(l) on one sphere."""

    L: int
    c: np.ndarray

    def __call__(self, lam):
        g, _ = vector_harmonics(self.L, np.atleast_2d(lam))
        return np.einsum("nac,a->nc", g, self.c)

    def divergence(self, lam):
        _, d = vector_harmonics(self.L, np.atleast_2d(lam))
        return d @ self.c


def fit_single_sphere(r_samples, omega: float, grid: SphereQuadrature, L: int, radius: float = KINK_RADIUS):
    """Control problem for one qubit under H = omega sigma_z / 2; returns (SphereVelocity, FeasibilityReport)."""
    r_samples = np.atleast_2d(np.asarray(r_samples, dtype=float))
    if not len(r_samples):
        raise ValueError("no states given")
    axes = []
    for r in r_samples:
        axes += SingleQubitLhvDensity(r).kink_axes()
    mask = kink_free(grid.nodes, axes, radius)
    if not mask.any():
        raise ValueError("no usable nodes left after kink exclusion")
    nodes = grid.nodes
    w = np.sqrt(grid.weights) * mask
    vals, div = vector_harmonics(L, nodes)
    blocks, rhs = [], []
    for r in r_samples:
        dens = SingleQubitLhvDensity(r)
        g = dens.gradient(nodes)
        blocks.append(w[:, None] * (dens(nodes)[:, None] * div + np.einsum("nc,nac->na", g, vals)))
        rhs.append(-w * single_qubit_time_derivative(r, omega, nodes))
    A = np.concatenate(blocks)
    b = np.concatenate(rhs)
    bn = float(np.linalg.norm(b))
    if bn == 0.0:
        c, rank, cond = np.zeros(A.shape[1]), 0, None
    else:
        c, _, rank, sv = scipy.linalg.lstsq(A, b, lapack_driver="gelsd")
        cond = float(sv[0] / sv[rank - 1]) if rank > 0 else None
    res = float(np.linalg.norm(A @ c - b))
    report = FeasibilityReport(
        L=L,
        n_states=len(r_samples),
        n_nodes=int(mask.sum()),
        n_unknowns=A.shape[1],
        abs_residual=res,
        rel_residual=_relative(res, bn),
        floor_rel_residual=0.0,
        rank=int(rank),
        cond_estimate=cond,
        rank_deficient=bool(rank < A.shape[1]),
        solver="dense",
    )
    return SphereVelocity(L, c), report


def single_qubit_control(omega: float, r_samples, grid: SphereQuadrature, L: int, radius: float = KINK_RADIUS) -> FeasibilityReport:
    """Feasibility report for rigidly rotating single-qubit densities (expected residual ~ 0)."""
    return fit_single_sphere(r_samples, omega, grid, L, radius)[1]


def control_pointwise_residual(omega: float, r, points, field=None) -> np.ndarray:
    """dp/dt + div(p V) at ``points`` for V = omega z x lambda (or a given callable field)."""
    points = np.atleast_2d(points)
    if field is None:
        zhat = np.array([0.0, 0.0, 1.0])

        def field(lam):
            return omega * np.cross(zhat, np.atleast_2d(lam))

    dens = SingleQubitLhvDensity(r)
    v = field(points)
    div = sphere_divergence(field, points)
    dpdt = single_qubit_time_derivative(r, omega, points)
    return dpdt + dens(points) * div + np.sum(dens.gradient(points) * v, axis=-1)


def random_bloch_vectors(n: int, rng: np.random.Generator, max_norm: float = 1.0) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (max_norm * rng.random(n) ** (1 / 3))[:, None]


# --- deduction chain on a fitted field -------------------------------------


@dataclass
class ChainReport:
    """Largest violation of each step in the argument that V must vanish."""

    divergence: float
    cross_orthogonality: float
    collinearity: float
    identity: float
    magnitude: float
    forced_magnitude: float
    min_constraint_singular_value: float
    n_nodes: int

    def to_dict(self) -> dict:
        return asdict(self)


def divergence_free_projection(coeffs: VelocityCoefficients) -> VelocityCoefficients:
    """Orthogonal projection of the coefficients onto divergence-free fields.

    div V has coefficient -s_g C1[grad g, b] - s_b C2[g, grad b] on Y_g(l1) Y_b(l2),
    s = sqrt(l(l+1)); each such pair is projected independently.
    """
    from ..sphere import harmonic_degrees

    L = coeffs.L
    deg = harmonic_degrees(L)
    s = np.sqrt(deg * (deg + 1.0))
    C1 = coeffs.C1.copy()
    C2 = coeffs.C2.copy()
    ks = len(deg)
    # rows/cols of the grad-kind vector harmonic for scalar slot g >= 1
    grad_slot = 2 * (np.arange(1, ks) - 1)
    for g in range(ks):
        for b in range(ks):
            x = C1[grad_slot[g - 1], b] if g >= 1 else 0.0
            y = C2[g, grad_slot[b - 1]] if b >= 1 else 0.0
            sg = s[g] if g >= 1 else 0.0
            sb = s[b] if b >= 1 else 0.0
            nn = sg * sg + sb * sb
            if nn == 0.0:
                continue
            t = (sg * x + sb * y) / nn
            if g >= 1:
                C1[grad_slot[g - 1], b] = x - t * sg
            if b >= 1:
                C2[g, grad_slot[b - 1]] = y - t * sb
    return VelocityCoefficients(L, C1, C2)


def _identity_map(l1, l2, d1, d2):
    """Linear map (v1, v2) -> sym(v1 d1 l2^T + v2 d2 l1^T) per node, shape (n, 6, 2)."""
    iu = np.triu_indices(3)

    def sym(d, l):
        m = d[:, :, None] * l[:, None, :]
        return (0.5 * (m + np.swapaxes(m, 1, 2)))[:, iu[0], iu[1]]

    return np.stack([sym(d1, l2), sym(d2, l1)], axis=-1)


def analytic_chain_check(field, l1, l2, radius: float = KINK_RADIUS, rtol: float = 1e-10) -> ChainReport:
    """Evaluate the steps forcing V = 0 at the point pairs (l1[i], l2[i]).

    Stages on the given field: (i) div V, (ii) V_j . l_other, (iii) distance
    of V_j from the line through l1 x l2, the identity
    sym(V1 l2^T + V2 l1^T) = 0, and |V|.  The forced field is obtained by
    projecting onto divergence-free fields (coefficient input only), then
    onto the l1 x l2 line per component, then onto the null space of the
    identity, computed numerically by SVD.  Only nodes with l1.l2 away from
    {-1, 0, 1} are considered.
    """
    l1 = np.atleast_2d(np.asarray(l1, dtype=float))
    l2 = np.atleast_2d(np.asarray(l2, dtype=float))
    keep = pair_kink_free(np.sum(l1 * l2, axis=-1), radius)
    l1, l2 = l1[keep], l2[keep]
    if isinstance(field, VelocityCoefficients):
        f = field.evaluate(l1, l2)
        div = field.divergence(l1, l2)
        forced_src = divergence_free_projection(field).evaluate(l1, l2)
    else:
        V1, V2 = field(l1, l2)
        f = TangentField(l1, l2, V1, V2)
        div = surface_divergence(field, l1, l2)
        forced_src = f
    vhat = np.cross(l1, l2)
    vhat /= np.linalg.norm(vhat, axis=-1, keepdims=True)

    def line(v):
        return np.sum(v * vhat, axis=-1)

    def biggest(x):
        return float(np.max(np.abs(x))) if x.size else 0.0

    m = _identity_map(l1, l2, f.V1, f.V2)
    ident = m @ np.ones(2)

    # forced field: keep only the l1 x l2 components, then project onto null(identity)
    v = np.stack([line(forced_src.V1), line(forced_src.V2)], axis=-1)
    k = _identity_map(l1, l2, vhat, vhat)
    _, sv, vt = np.linalg.svd(k)
    null = sv < rtol * np.maximum(sv[:, :1], 1e-300)
    proj = np.einsum("nij,nj,njk->nik", np.swapaxes(vt, 1, 2), null.astype(float), vt) if len(v) else np.zeros((0, 2, 2))
    forced = np.einsum("nij,nj->ni", proj, v) if len(v) else v

    return ChainReport(
        divergence=biggest(div),
        cross_orthogonality=max(biggest(np.sum(f.V1 * l2, -1)), biggest(np.sum(f.V2 * l1, -1))),
        collinearity=max(
            biggest(np.linalg.norm(f.V1 - line(f.V1)[:, None] * vhat, axis=-1)),
            biggest(np.linalg.norm(f.V2 - line(f.V2)[:, None] * vhat, axis=-1)),
        ),
        identity=biggest(ident),
        magnitude=biggest(f.norm()),
        forced_magnitude=biggest(np.linalg.norm(forced, axis=-1)),
        min_constraint_singular_value=float(sv[:, -1].min()) if len(sv) else 0.0,
        n_nodes=int(len(l1)),
    )
