"""Dimension counting for hidden-variable dynamics of N qudits.

A group G acting by isometries on a connected Riemannian manifold of
dimension n has dim G <= n(n+1)/2.  Realizing all of PU(D^N) on N copies of
a d-dimensional single-particle space therefore requires

    B_QM = D^(2N) - 1  <=  B_LHV = Nd (Nd + 1) / 2,

which fails for large N.  All arithmetic uses Python integers (exact).
"""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass


def _check(D: int, N: int) -> None:
    if int(D) != D or D < 2:
        raise ValueError(f"qudit dimension must be an integer >= 2, got {D}")
    if int(N) != N or N < 1:
        raise ValueError(f"particle number must be an integer >= 1, got {N}")


def dim_projective_unitary(D: int, N: int) -> int:
    """dim PU(D^N) = D^(2N) - 1."""
    _check(D, N)
    return int(D) ** (2 * int(N)) - 1


def dim_separable_unitary(D: int, N: int) -> int:
    """Dimension of the product-unitary group modulo phases, N (D^2 - 1)."""
    _check(D, N)
    return int(N) * (int(D) ** 2 - 1)


def iso_dim_bound(dim_lambda: int) -> int:
    """Largest isometry-group dimension of an n-dimensional manifold, n(n+1)/2."""
    n = int(dim_lambda)
    if n != dim_lambda or n < 0:
        raise ValueError(f"dimension must be a non-negative integer, got {dim_lambda}")
    return n * (n + 1) // 2


def feasible(D: int, N: int, d: int, kernel: int = 0) -> bool:
    """Whether B_QM - kernel <= B_LHV (kernel: dimension of the non-faithful part of the action)."""
    return dim_projective_unitary(D, N) - int(kernel) <= iso_dim_bound(int(N) * int(d))


def max_particles(D: int, d: int, kernel: int = 0) -> int:
    """Largest N satisfying the constraint, 0 if N = 1 already fails.

    Scans N = 1, 2, ... and stops at the first failure: going from N to N+1
    multiplies B_QM + 1 by D^2 >= 4 while B_LHV grows by less than a factor 4,
    so no later N can pass again.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"hidden-variable dimension must be an integer >= 1, got {d}")
    _check(D, 1)
    n = 0
    while feasible(D, n + 1, d, kernel):
        n += 1
    return n


@dataclass(frozen=True)
class ConstraintRow:
    D: int
    d: int
    N: int
    B_QM: int
    B_LHV: int
    feasible: bool


COLUMNS = ("D", "d", "N", "B_QM", "B_LHV", "feasible")


def constraint_table(D_list, d_list, N_max: int, kernel: int = 0) -> list[ConstraintRow]:
    """Rows (D, d, N, B_QM, B_LHV, feasible) for N = 1..N_max."""
    D_list, d_list = list(D_list), list(d_list)
    if not D_list or not d_list:
        raise ValueError("D and d lists must be non-empty")
    rows = []
    for D in D_list:
        for d in d_list:
            for N in range(1, int(N_max) + 1):
                qm = dim_projective_unitary(D, N)
                lhv = iso_dim_bound(N * d)
                rows.append(ConstraintRow(int(D), int(d), N, qm, lhv, qm - int(kernel) <= lhv))
    return rows


def critical_table(D_list, d_list, kernel: int = 0) -> list[tuple[int, int, int]]:
    """(D, d, max_particles) for every pair."""
    return [(int(D), int(d), max_particles(D, d, kernel)) for D in D_list for d in d_list]


def write_table_csv(rows, path_or_file) -> None:
    def emit(fh):
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            D, d, N, qm, lhv, ok = astuple(r)
            w.writerow([D, d, N, qm, lhv, int(ok)])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)
