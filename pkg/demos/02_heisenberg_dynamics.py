"""Bloch data under the exchange Hamiltonian, and what it does to hidden-variable densities.

Run: python demos/02_heisenberg_dynamics.py
"""

import numpy as np

from lhvdyn.dynamics import density_time_derivative, kink_free
from lhvdyn.bell import TwoQubitLhvDensity
from lhvdyn.quantum import BlochTwoQubit, bloch_derivatives, evolve_bloch, sample_noisy_ball
from lhvdyn.sphere import sample_sphere

rng = np.random.default_rng(2)
omega = 1.0

# Closed-form derivatives against a finite difference of the exact evolution.
s = sample_noisy_ball(1.0, rng)
da, db, dT = bloch_derivatives(s, omega)
h = 1e-5
fd = (evolve_bloch(s, omega, h).T - evolve_bloch(s, omega, -h).T) / (2 * h)
print("da/dt =", np.round(da, 6), " db/dt =", np.round(db, 6))
print("max |dT/dt - finite difference| =", f"{np.abs(fd - dT).max():.1e}")

# a = b with symmetric T is a fixed point, so its densities do not move.
a = np.array([0.05, -0.02, 0.04])
fixed = BlochTwoQubit(a, a, np.diag([0.1, -0.05, 0.02]))
print("\nfixed point derivatives vanish:", all(np.all(x == 0) for x in bloch_derivatives(fixed, omega)))

# A state with an antisymmetric part moves, and its density changes in time.
moving = BlochTwoQubit(np.array([0.1, 0, 0]), np.zeros(3), np.array([[0, 0.1, 0], [-0.1, 0, 0], [0, 0, 0.05]]))
l1, l2 = sample_sphere(rng, 2000), sample_sphere(rng, 2000)
ax1, ax2 = TwoQubitLhvDensity(moving).kink_axes()
keep = kink_free(l1, ax1) & kink_free(l2, ax2)
dp = density_time_derivative(moving, omega, l1[keep], l2[keep])
print("moving state: max |dp/dt| =", f"{np.abs(dp.value).max():.3e}", "with median FD error estimate", f"{np.median(dp.error):.1e}")
