"""Looking for one velocity field that transports every density correctly.

A single qubit under a field rotation is fitted almost exactly.  The two-qubit
exchange dynamics leaves a residual that does not shrink as the basis grows.
This uses a small grid so it finishes in well under a minute; the command
``lhvdyn fit-velocity`` runs the full-size version.

Run: python demos/03_velocity_fit.py
"""

from lhvdyn.config import ExperimentConfig
from lhvdyn.experiments import fit_velocity_experiment

cfg = ExperimentConfig(
    n_random=8,
    grid_n_theta=10,
    grid_n_phi=20,
    L_list=[2, 3, 4],
    control_n_states=8,
    control_n_theta=12,
    control_n_phi=24,
    chain_n_pairs=500,
)
result = fit_velocity_experiment(cfg, log=print)

print("\n L   single qubit   two qubits   (relative residuals)")
for c, t in zip(result["control"], result["counterexample"]):
    print(f"{c['L']:2d}   {c['rel_residual']:.1e}        {t['rel_residual']:.4f}")
print("pointwise floor for every basis size:", f"{result['summary']['pointwise_floor']:.4f}")

chain = result["chain"]
print("\nbest two-qubit field pushed through the deduction chain:")
for key in ("divergence", "cross_orthogonality", "collinearity", "identity", "magnitude", "forced_magnitude"):
    print(f"  {key:20s} {chain[key]:.2e}")
