"""Exact quantum reference for one and two qubits.

States of two qubits are handled in the Pauli (Bloch) parameterization

    rho = 1/4 (1x1 + a.sigma x 1 + 1 x b.sigma + sum_jk T_jk sigma_j x sigma_k)

and evolve under the Heisenberg exchange Hamiltonian
H = (omega / 4) sum_k sigma_k x sigma_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnphysicalStateError

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
ID2 = np.eye(2, dtype=complex)

UP, DOWN = 1, -1

# sigma_j x 1, 1 x sigma_k, sigma_j x sigma_k
_SIG_A = np.array([np.kron(s, ID2) for s in SIGMA])
_SIG_B = np.array([np.kron(ID2, s) for s in SIGMA])
_SIG_AB = np.array([[np.kron(s, t) for t in SIGMA] for s in SIGMA])


@dataclass(frozen=True)
class BlochTwoQubit:
    """Two-qubit state as local Bloch vectors and correlation matrix."""

    a: np.ndarray
    b: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(3))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(3))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float).reshape(3, 3))

    @classmethod
    def maximally_mixed(cls) -> BlochTwoQubit:
        return cls(np.zeros(3), np.zeros(3), np.zeros((3, 3)))

    @classmethod
    def from_vector(cls, values) -> BlochTwoQubit:
        """Inverse of :meth:`as_vector` (a, b, then T row-major)."""
        v = np.asarray(values, dtype=float).ravel()
        if v.size != 15:
            raise ValueError(f"expected 15 numbers, got {v.size}")
        return cls(v[:3], v[3:6], v[6:].reshape(3, 3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.T.ravel()])

    def scaled(self, v: float) -> BlochTwoQubit:
        """Bloch data of v*rho + (1 - v)*identity/4."""
        return BlochTwoQubit(v * self.a, v * self.b, v * self.T)


@dataclass(frozen=True)
class SingularData:
    """T = sum_j S_j u_j v_j^T; u_j and v_j are the columns of ``u`` and ``v``."""

    S: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.S) @ self.v.T


@dataclass(frozen=True)
class MeasurementEvent:
    """Projective spin measurement per party: unit direction and outcome +1/-1."""

    directions: np.ndarray
    outcomes: tuple = field(default=(UP,))

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        outcomes = tuple(int(o) for o in np.atleast_1d(self.outcomes))
        if len(outcomes) != len(d):
            raise ValueError("one outcome per direction required")
        if any(o not in (UP, DOWN) for o in outcomes):
            raise ValueError("outcomes must be +1 (up) or -1 (down)")
        if np.any(np.abs(np.linalg.norm(d, axis=1) - 1.0) > 1e-12):
            raise ValueError("measurement directions must be unit vectors")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n_parties(self) -> int:
        return len(self.outcomes)


def qubit_density(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 0.5 * (ID2 + np.einsum("j,jab->ab", r, SIGMA))


def density_from_bloch(s: BlochTwoQubit, validate: bool = False, atol: float = 1e-10) -> np.ndarray:
    rho = 0.25 * (
        np.eye(4, dtype=complex)
        + np.einsum("j,jab->ab", s.a, _SIG_A)
        + np.einsum("k,kab->ab", s.b, _SIG_B)
        + np.einsum("jk,jkab->ab", s.T, _SIG_AB)
    )
    if validate:
        check_density(rho, atol=atol)
    return rho


def bloch_from_density(rho: np.ndarray) -> BlochTwoQubit:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    a = np.einsum("jab,ba->j", _SIG_A, rho).real
    b = np.einsum("jab,ba->j", _SIG_B, rho).real
    T = np.einsum("jkab,ba->jk", _SIG_AB, rho).real
    return BlochTwoQubit(a, b, T)


def check_density(rho: np.ndarray, atol: float = 1e-10) -> None:
    """Raise :class:`UnphysicalStateError` unless rho is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise UnphysicalStateError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise UnphysicalStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-12:
        raise UnphysicalStateError(f"trace {np.trace(rho).real:.3e} != 1")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -atol:
        raise UnphysicalStateError(f"negative eigenvalue {lo:.3e}")


def is_density(rho: np.ndarray, atol: float = 1e-10) -> bool:
    try:
        check_density(rho, atol)
    except UnphysicalStateError:
        return False
    return True


def projector(direction, outcome: int) -> np.ndarray:
    """(1 + outcome * n.sigma) / 2."""
    n = np.asarray(direction, dtype=float)
    return 0.5 * (ID2 + outcome * np.einsum("j,jab->ab", n, SIGMA))


def quantum_probability(rho: np.ndarray, event: MeasurementEvent) -> float:
    """Born rule Tr(rho M) for a product of projective spin measurements."""
    op = np.ones((1, 1), dtype=complex)
    for n, o in zip(event.directions, event.outcomes):
        op = np.kron(op, projector(n, o))
    if op.shape != np.shape(rho):
        raise ValueError("event and state have different numbers of qubits")
    return float(np.real(np.trace(rho @ op)))


def correlator(s: BlochTwoQubit, n1, n2) -> float:
    """<(n1.sigma) x (n2.sigma)> = n1^T T n2."""
    return float(np.asarray(n1) @ s.T @ np.asarray(n2))


def heisenberg_hamiltonian(omega: float) -> np.ndarray:
    return 0.25 * omega * sum(np.kron(s, s) for s in SIGMA)


def _unitary_from_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def heisenberg_unitary(omega: float, t: float) -> np.ndarray:
    """exp(-i H t), exact via the eigendecomposition of H."""
    return _unitary_from_hermitian(heisenberg_hamiltonian(omega), t)


def evolve_bloch(s: BlochTwoQubit, omega: float, t: float) -> BlochTwoQubit:
    u = heisenberg_unitary(omega, t)
    return bloch_from_density(u @ density_from_bloch(s) @ u.conj().T)


def antisym_of_vec(z) -> np.ndarray:
    """Matrix A(z) with A(z) v = z x v."""
    z = np.asarray(z, dtype=float)
    return np.array([[0.0, -z[2], z[1]], [z[2], 0.0, -z[0]], [-z[1], z[0], 0.0]])


def z_of_antisym(A) -> np.ndarray:
    """Vector z(A) with z(A) x v = A v; A must be antisymmetric."""
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A + A.T)) > 1e-12:
        raise ValueError("matrix is not antisymmetric")
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def bloch_derivatives(s: BlochTwoQubit, omega: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives (a', b', T') under the Heisenberg Hamiltonian at t = 0.

    a' = -b' = omega z((T - T^T)/2),  T' = -omega A((a - b)/2)
    """
    adot = omega * z_of_antisym(0.5 * (s.T - s.T.T))
    tdot = -omega * antisym_of_vec(0.5 * (s.a - s.b))
    return adot, -adot, tdot


def singular_data(T) -> SingularData:
    """Plain SVD; no sign fixing (formulas using it are invariant under (u_j, v_j) -> (-u_j, -v_j))."""
    u, S, vt = np.linalg.svd(np.asarray(T, dtype=float))
    return SingularData(S, u, vt.T)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    """G G^dagger / Tr with complex standard-normal G."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def sample_noisy_ball(v: float, seed=None) -> BlochTwoQubit:
    """Random element of {v rho + (1 - v) 1/4}; ``seed`` may be an int or a Generator."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility {v} outside [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return bloch_from_density(random_density(4, rng)).scaled(v)


def rank_one_correlation_state(u, eps: float, sign: int = 1) -> BlochTwoQubit:
    """a = b = 0, T = sign * eps * u u^T."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    return BlochTwoQubit(np.zeros(3), np.zeros(3), sign * eps * np.outer(u, u))


def singlet() -> np.ndarray:
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return np.outer(psi, psi.conj())


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))
