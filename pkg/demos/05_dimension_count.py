"""Counting dimensions: when can a hidden-variable space host the unitary group?

The projective unitary group on N qudits has dimension D^(2N) - 1.  Any group
acting by isometries on a space of dimension N d is at most
N d (N d + 1) / 2 dimensional.  The first grows exponentially, the second
quadratically.

Run: python demos/05_dimension_count.py
"""

from lhvdyn.nogo import constraint_table, dim_projective_unitary, iso_dim_bound, max_particles

for D, d in ((2, 2), (2, 20), (3, 20)):
    print(f"D={D}, d={d}: largest feasible N = {max_particles(D, d)}")

print("\n N   dim PU(2^N)   bound (d=20)   feasible")
for row in constraint_table([2], [20], 9):
    print(f"{row.N:2d}   {row.B_QM:11d}   {row.B_LHV:12d}   {row.feasible}")

N = 64
print(f"\nN={N}: ratio {dim_projective_unitary(2, N) / iso_dim_bound(N * 20):.2e}")
