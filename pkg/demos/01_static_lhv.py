"""Hidden-variable densities for two qubits reproduce spin-measurement statistics.

Run: python demos/01_static_lhv.py
"""

import numpy as np

from lhvdyn import IntegratorConfig, MeasurementEvent, lhv_probability
from lhvdyn.bell import TwoQubitLhvDensity, validity
from lhvdyn.quantum import DOWN, UP, density_from_bloch, quantum_probability, sample_noisy_ball

rng = np.random.default_rng(1)

# A random state mixed with white noise at visibility 0.2.
state = sample_noisy_ball(0.2, rng)
print("local vectors a, b:", np.round(state.a, 4), np.round(state.b, 4))
print("correlation matrix T:\n", np.round(state.T, 4))
print("inside the construction domain:", validity(state))

# Each party draws a unit vector; the outcome is the sign of n . lambda.
density = TwoQubitLhvDensity(state)
rho = density_from_bloch(state)
cfg = IntegratorConfig()
n1, n2 = rng.standard_normal((2, 3))
n1, n2 = n1 / np.linalg.norm(n1), n2 / np.linalg.norm(n2)

print("\noutcomes  P_lhv      P_quantum  |diff|")
for o1 in (UP, DOWN):
    for o2 in (UP, DOWN):
        ev = MeasurementEvent(np.array([n1, n2]), (o1, o2))
        est = lhv_probability(density, ev, cfg)
        pq = quantum_probability(rho, ev)
        print(f"{o1:+d} {o2:+d}     {est.value:.6f}   {pq:.6f}   {abs(est.value - pq):.1e}")

# The same density evaluated pointwise.
lam = rng.standard_normal((4, 3))
lam /= np.linalg.norm(lam, axis=1, keepdims=True)
print("\ndensity at four random pairs:", np.round(density(lam, lam[::-1]), 5))
