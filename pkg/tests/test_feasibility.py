import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lhvdyn.bell import TwoQubitLhvDensity
from lhvdyn.dynamics import (
    DynamicsGrid,
    FeasibilitySystem,
    VelocityCoefficients,
    analytic_chain_check,
    assemble_feasibility,
    control_pointwise_residual,
    density_time_derivative,
    divergence_free_projection,
    fit_single_sphere,
    fit_velocity_field,
    headline_ensemble,
    single_qubit_control,
    surface_divergence,
    usable_nodes,
)
from lhvdyn.dynamics.feasibility import random_bloch_vectors
from lhvdyn.quantum import BlochTwoQubit
from lhvdyn.sphere import product_grid, sample_sphere

ZHAT = np.array([0.0, 0.0, 1.0])
SMALL = DynamicsGrid.product(6, 12)


@pytest.fixture(scope="module")
def small_system():
    return assemble_feasibility(headline_ensemble(n_random=3, seed=1), 1.0, SMALL, 2)


def test_operator_adjoint(small_system, rng):
    m, n = small_system.shape
    x, y = rng.standard_normal(n), rng.standard_normal(m)
    assert abs(small_system.matvec(x) @ y - x @ small_system.rmatvec(y)) < 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


def test_column_norms_match_dense(small_system):
    A = small_system.dense()
    np.testing.assert_allclose(small_system.column_norms(), np.linalg.norm(A, axis=0), rtol=1e-12)


def test_compression_preserves_residual(small_system, rng):
    comp = small_system.compress()
    for _ in range(3):
        c = rng.standard_normal(small_system.n_unknowns)
        assert abs(comp.residual_norm(c) - small_system.residual_norm(c)) < 1e-12 * small_system.residual_norm(c)
    assert comp.floor_relative > 0


def test_dense_and_lsqr_agree(small_system):
    _, dense = fit_velocity_field(small_system, method="dense")
    _, iterative = fit_velocity_field(small_system.compress(), method="lsqr")
    assert abs(dense.rel_residual - iterative.rel_residual) < 1e-8
    assert dense.rank == dense.n_unknowns and not dense.rank_deficient
    assert 0 <= dense.rel_residual <= 1


def test_rows_match_direct_continuity_evaluation(small_system, rng):
    # assembled row . u  ==  w * (dp/dt + p div V + grad p . V)  evaluated independently
    states = headline_ensemble(n_random=3, seed=1)
    c = VelocityCoefficients.from_vector(2, rng.standard_normal(small_system.n_unknowns))
    Ac = small_system.matvec(c.as_vector()).reshape(small_system.rhs.shape)
    b = small_system.rhs
    ii, jj = np.nonzero(small_system.mask)
    pick = rng.choice(len(ii), 40, replace=False)
    l1, l2 = SMALL.sphere1.nodes[ii[pick]], SMALL.sphere2.nodes[jj[pick]]
    w = np.sqrt(SMALL.sphere1.weights[ii[pick]] * SMALL.sphere2.weights[jj[pick]])
    field = c.evaluate(l1, l2)
    div = surface_divergence(lambda a, b_: c(a, b_), l1, l2)
    for k, s in enumerate(states):
        dens = TwoQubitLhvDensity(s)
        g1, g2 = dens.gradient(l1, l2)
        dpdt = density_time_derivative(s, 1.0, l1, l2).value
        direct = dpdt + dens(l1, l2) * div + np.sum(g1 * field.V1 + g2 * field.V2, axis=1)
        assembled = Ac[ii[pick], jj[pick], k] - b[ii[pick], jj[pick], k]
        np.testing.assert_allclose(assembled, w * direct, atol=1e-10, rtol=1e-6)


def test_mixed_state_only_gives_zero_field():
    system = assemble_feasibility([BlochTwoQubit.maximally_mixed()], 1.0, SMALL, 2)
    assert system.rhs_norm == 0
    coeffs, rep = fit_velocity_field(system)
    assert np.all(coeffs.as_vector() == 0)
    assert rep.abs_residual == 0 and rep.rel_residual == 0


def test_consistent_synthetic_system_is_solved(small_system, rng):
    c_star = rng.standard_normal(small_system.n_unknowns)
    rhs = small_system.matvec(c_star).reshape(small_system.rhs.shape)
    synth = FeasibilitySystem(2, SMALL, small_system.rows, rhs, small_system.mask, small_system.n_states)
    _, rep = fit_velocity_field(synth, method="dense")
    assert rep.rel_residual <= 1e-10


def test_residual_never_increases_with_degree():
    system = assemble_feasibility(headline_ensemble(n_random=2, seed=3), 1.0, DynamicsGrid.product(8, 16), 1).compress()
    res, prev = [], None
    for L in (1, 2, 3):
        coeffs, rep = fit_velocity_field(system.with_degree(L), x0=prev)
        res.append(rep.rel_residual)
        prev = coeffs
    assert res[0] >= res[1] - 1e-9 >= res[2] - 2e-9
    assert res[-1] >= system.floor_relative


def test_kink_exclusion():
    states = headline_ensemble(n_random=0)
    mask = usable_nodes(states, SMALL)
    l1, l2 = SMALL.points()
    c = np.abs(SMALL.pair_cosines())
    assert not np.any(mask & (c < np.sin(1e-3)))
    assert mask.any() and not mask.all()
    with pytest.raises(ValueError):
        assemble_feasibility(states, 1.0, SMALL, 2, radius=1.0)
    with pytest.raises(ValueError):
        assemble_feasibility([], 1.0, SMALL, 2)


def test_threaded_assembly_is_identical():
    states = headline_ensemble(n_random=2, seed=5)
    a = assemble_feasibility(states, 1.0, SMALL, 2)
    b = assemble_feasibility(states, 1.0, SMALL, 2, workers=3)
    np.testing.assert_array_equal(a.rows, b.rows)
    np.testing.assert_array_equal(a.rhs, b.rhs)


def test_headline_ensemble_is_valid():
    states = headline_ensemble()
    assert len(states) == 39
    for s in states:
        dens = TwoQubitLhvDensity(s)
        assert dens.const > 0.2


# single-qubit control


def test_control_recovers_rotation_field(rng):
    r = random_bloch_vectors(10, rng)
    g = product_grid(12, 24)
    for L in (1, 2, 4):
        field, rep = fit_single_sphere(r, 1.0, g, L)
        assert rep.rel_residual <= 1e-8
        np.testing.assert_allclose(field(g.nodes), np.cross(ZHAT, g.nodes), atol=1e-8)
    assert single_qubit_control(1.0, r, g, 2).rel_residual <= 1e-8


def test_control_with_zero_vector_is_trivial():
    rep = single_qubit_control(1.0, np.zeros((1, 3)), product_grid(6, 12), 2)
    assert rep.abs_residual == 0 and rep.rel_residual == 0


def test_analytic_control_field_pointwise(rng):
    for r in random_bloch_vectors(10, rng):
        lam = sample_sphere(rng, 500)
        keep = np.abs(lam @ r) > np.sin(1e-3) * np.linalg.norm(r)
        assert np.abs(control_pointwise_residual(1.0, r, lam[keep])).max() <= 1e-8


def test_control_rejects_empty():
    with pytest.raises(ValueError):
        fit_single_sphere(np.zeros((0, 3)), 1.0, product_grid(4, 8), 1)


# deduction chain


def _pairs(rng, n=300):
    l1, l2 = sample_sphere(rng, n), sample_sphere(rng, n)
    return l1, l2


def test_chain_zero_field(rng):
    l1, l2 = _pairs(rng)
    rep = analytic_chain_check(VelocityCoefficients.zeros(2), l1, l2)
    for name in ("divergence", "cross_orthogonality", "collinearity", "identity", "magnitude", "forced_magnitude"):
        assert getattr(rep, name) == 0


def test_chain_rotation_field_fails_cross_orthogonality(rng):
    l1, l2 = _pairs(rng)
    rep = analytic_chain_check(lambda a, b: (np.cross(ZHAT, a), np.zeros_like(b)), l1, l2)
    assert rep.divergence < 1e-8
    assert rep.cross_orthogonality > 0.1
    assert rep.forced_magnitude <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_identity_forces_collinear_fields_to_zero(seed):
    # V_j = alpha_j (l1 x l2)/|l1 x l2| passes stages (ii)-(iii); the identity then has only the trivial solution
    rng = np.random.default_rng(seed)
    l1, l2 = _pairs(rng, 50)
    w = rng.standard_normal((2, 6))

    def field(a, b):
        vhat = np.cross(a, b)
        vhat /= np.linalg.norm(vhat, axis=1, keepdims=True)
        alpha = np.hstack([a, b]) @ w.T
        return alpha[:, :1] * vhat, alpha[:, 1:] * vhat

    rep = analytic_chain_check(field, l1, l2)
    assert rep.cross_orthogonality < 1e-12 and rep.collinearity < 1e-12
    assert rep.identity > 0
    assert rep.forced_magnitude <= 1e-6
    assert rep.min_constraint_singular_value > 0


def test_divergence_free_projection(rng):
    c = VelocityCoefficients.from_vector(3, rng.standard_normal(VelocityCoefficients.size(3)))
    p = divergence_free_projection(c)
    l1, l2 = _pairs(rng, 50)
    assert np.abs(p.divergence(l1, l2)).max() < 1e-12
    np.testing.assert_allclose(divergence_free_projection(p).as_vector(), p.as_vector(), atol=1e-14)
    assert abs((c.as_vector() - p.as_vector()) @ p.as_vector()) < 1e-10
