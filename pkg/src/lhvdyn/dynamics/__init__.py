"""Continuity-equation test for hidden-variable dynamics on S^2 x S^2."""

from .continuity import (
    FD_STEP,
    KINK_RADIUS,
    TimeDerivative,
    density_surface_gradient,
    density_time_derivative,
    kink_free,
    pair_kink_free,
    rank_one_family_density,
    rank_one_family_gradient,
    single_qubit_time_derivative,
)
from .feasibility import (
    ChainReport,
    DynamicsGrid,
    FeasibilityReport,
    FeasibilitySystem,
    SphereVelocity,
    analytic_chain_check,
    assemble_feasibility,
    control_pointwise_residual,
    divergence_free_projection,
    fit_single_sphere,
    fit_velocity_field,
    headline_ensemble,
    residual_curve,
    single_qubit_control,
    usable_nodes,
)
from .fields import (
    TangentField,
    VelocityCoefficients,
    n_vector_harmonics,
    sphere_divergence,
    surface_divergence,
    vector_harmonics,
)
