"""
Refinement studies
==================

Second order in space for the elliptic counterexample, first order in time
for the heat equation, measured against the closed-form solutions.
"""
from chplab.cli import convergence_table
from chplab.scenarios import elliptic_convergence, heat_convergence

rows = elliptic_convergence((64, 128, 256, 512))
print(convergence_table(*zip(*rows)))

# a fine mesh keeps the spatial error below the temporal one
rows = heat_convergence((0.1, 0.05, 0.025, 0.0125), cells=512)
print(convergence_table(*zip(*rows)))
