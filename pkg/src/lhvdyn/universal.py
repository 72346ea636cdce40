"""Softmax hidden-variable model over real spherical harmonics, and its exact dynamics.

A hidden variable is a real matrix lam of shape (n_outcomes, K).  For a
measurement direction n the outcome distribution is softmax(lam @ B(n)),
with B the vector of K = (l_max + 1)^2 real spherical harmonics.

A qubit unitary U rotates directions by R_U.  Harmonics of fixed degree
transform among themselves, B(R_U x) = d_U B(x), so

    T_U(lam) = lam @ d_{U^dagger}

moves the measurement rotation onto the hidden variable.  d_U is computed
by projecting rotated harmonics onto the basis with an exact quadrature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax
from scipy.stats import unitary_group

from .quantum import SIGMA
from .sphere import harmonic_labels, n_harmonics, real_sph_harm, sample_sphere, sphere_quadrature


@dataclass(frozen=True)
class BasisSpec:
    """Real harmonics Y_lm up to ``l_max``, no Condon-Shortley phase, index l*l + l + m."""

    l_max: int = 5
    convention: str = "real, no Condon-Shortley phase, index l*l+l+m"

    def __post_init__(self):
        if self.l_max < 0:
            raise ValueError("l_max must be non-negative")

    @property
    def K(self) -> int:
        return n_harmonics(self.l_max)

    def labels(self) -> list[tuple[int, int]]:
        return harmonic_labels(self.l_max)

    def blocks(self) -> list[slice]:
        return [slice(l * l, (l + 1) ** 2) for l in range(self.l_max + 1)]


def real_sph_basis(basis: BasisSpec, n) -> np.ndarray:
    """B(n), shape (K,) for one direction or (m, K) for several."""
    n = np.asarray(n, dtype=float)
    out = real_sph_harm(basis.l_max, np.atleast_2d(n))
    return out[0] if n.ndim == 1 else out


def softmax_rule(lam, n, basis: BasisSpec | None = None) -> np.ndarray:
    """Outcome distribution softmax(lam @ B(n)); trailing axis runs over outcomes."""
    lam = np.asarray(lam, dtype=float)
    basis = basis or BasisSpec(int(round(np.sqrt(lam.shape[-1]))) - 1)
    if lam.shape[-1] != basis.K:
        raise ValueError(f"hidden variable has {lam.shape[-1]} columns, basis has {basis.K}")
    logits = real_sph_basis(basis, n) @ np.swapaxes(lam, -1, -2)
    return softmax(logits, axis=-1)


def check_unitary(U, atol: float = 1e-12) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2) or np.max(np.abs(U.conj().T @ U - np.eye(2))) > atol:
        raise ValueError("expected a 2x2 unitary matrix")
    return U


def rotation_from_unitary(U) -> np.ndarray:
    """R with (R n).sigma = U (n.sigma) U^dagger, i.e. R_ij = Tr(sigma_i U sigma_j U^dagger) / 2."""
    U = check_unitary(U)
    conj = np.einsum("ab,jbc,dc->jad", U, SIGMA, U.conj())
    return 0.5 * np.einsum("iba,jab->ij", SIGMA, conj).real


def _min_order(basis: BasisSpec) -> int:
    return 2 * basis.l_max + 2


@dataclass(frozen=True)
class DMatrix:
    """d with B(R x) = d B(x); block diagonal in the degree l."""

    d: np.ndarray
    basis: BasisSpec

    def block(self, l: int) -> np.ndarray:
        s = self.basis.blocks()[l]
        return self.d[s, s]

    def off_block_max(self) -> float:
        off = self.d.copy()
        for s in self.basis.blocks():
            off[s, s] = 0.0
        return float(np.max(np.abs(off)))

    def block_orthogonality_error(self) -> float:
        return max(float(np.max(np.abs(b.T @ b - np.eye(len(b))))) for b in map(self.block, range(self.basis.l_max + 1)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l_m"] + [f"{l}_{m}" for l, m in self.basis.labels()])
            for (l, m), row in zip(self.basis.labels(), self.d):
                w.writerow([f"{l}_{m}"] + [repr(float(x)) for x in row])


def d_matrix_of_rotation(R, basis: BasisSpec, order: int | None = None) -> DMatrix:
    """d[m, n] = integral of B_m(R x) B_n(x) over the sphere."""
    order = _min_order(basis) if order is None else order
    if order < _min_order(basis):
        raise ValueError(f"quadrature order {order} too low for l_max={basis.l_max} (need >= {_min_order(basis)})")
    if np.array_equal(R, np.eye(3)):
        return DMatrix(np.eye(basis.K), basis)
    q = sphere_quadrature(order)
    b = real_sph_harm(basis.l_max, q.nodes)
    b_rot = real_sph_harm(basis.l_max, q.nodes @ np.asarray(R).T)
    d = (b_rot * q.weights[:, None]).T @ b
    return DMatrix(d, basis)


def d_matrix(U, basis: BasisSpec | None = None, order: int | None = None) -> DMatrix:
    """Degree-preserving representation of U: B(R_U x) = d_U B(x), with d_{U1 U2} = d_{U1} d_{U2}."""
    basis = basis or BasisSpec()
    return d_matrix_of_rotation(rotation_from_unitary(U), basis, order)


def transform_hv(lam, U, basis: BasisSpec | None = None, d: DMatrix | None = None) -> np.ndarray:
    """T_U(lam) = lam @ d_{U^dagger}."""
    lam = np.asarray(lam, dtype=float)
    if d is None:
        basis = basis or BasisSpec(int(round(np.sqrt(lam.shape[-1]))) - 1)
        d = d_matrix(np.asarray(U).conj().T, basis)
    return lam @ d.d


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(2, random_state=rng)


def covariance_suite(basis: BasisSpec | None = None, n_trials: int = 100, seed: int = 0, n_outcomes: int = 2, corrupt: float = 0.0, tol: float = 1e-8) -> dict:
    """Group-action, covariance and block-structure checks on random unitaries.

    ``corrupt`` adds that amount to one entry of every d-matrix used for the
    transformations (a negative control: the suite must then fail).
    """
    basis = basis or BasisSpec()
    rng = np.random.default_rng(seed)

    def dm(U):
        d = d_matrix(U, basis)
        if corrupt:
            arr = d.d.copy()
            arr[-1, -2] += corrupt
            d = DMatrix(arr, basis)
        return d

    ident = dm(np.eye(2))
    dev = {
        "identity": float(np.max(np.abs(ident.d - np.eye(basis.K)))),
        "composition": 0.0,
        "covariance": 0.0,
        "off_block": 0.0,
        "block_orthogonality": 0.0,
    }
    for _ in range(n_trials):
        U1, U2 = random_unitary(rng), random_unitary(rng)
        lam = rng.standard_normal((n_outcomes, basis.K))
        n = sample_sphere(rng)
        d1, d2, d12 = dm(U1.conj().T), dm(U2.conj().T), dm((U1 @ U2).conj().T)
        both = transform_hv(transform_hv(lam, U2, d=d2), U1, d=d1)
        dev["composition"] = max(dev["composition"], float(np.max(np.abs(transform_hv(lam, U1 @ U2, d=d12) - both)) / np.linalg.norm(lam)))
        lhs = softmax_rule(lam, rotation_from_unitary(U1.conj().T) @ n, basis)
        rhs = softmax_rule(transform_hv(lam, U1, d=d1), n, basis)
        dev["covariance"] = max(dev["covariance"], float(np.max(np.abs(lhs - rhs))))
        dev["off_block"] = max(dev["off_block"], d1.off_block_max())
        dev["block_orthogonality"] = max(dev["block_orthogonality"], d1.block_orthogonality_error())
    return {
        "l_max": basis.l_max,
        "n_trials": n_trials,
        "max_deviation": dev,
        "passed": all(v <= tol for v in dev.values()),
    }
