"""
Fourier series on SU(2)
=======================

Sample a band-limited function on the Haar grid, transform it, and look at
where its energy sits among the spin labels.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from noncomm_fourier import SU2, forward, grid_function, grid_l2_norm, inverse, plancherel_norm

su2 = SU2()
band = 4

# A function built from a few matrix coefficients: t^1_{0,0} = cos(beta) plus a spin-3/2 entry.
def f(x):
    return su2.irrep_matrix(1, x)[:, 1, 1] + 0.5 * su2.irrep_matrix(Fraction(3, 2), x)[:, 0, 3]

phi = grid_function(su2, band, f)
print(f"grid: {phi.grid.size} nodes for band limit {band}")

coeffs = forward(phi)
for lab, block in coeffs.items():
    energy = lab.dim * np.sum(np.abs(block) ** 2)
    if energy > 1e-20:
        print(f"  spin {str(lab):>3}: d * |hat phi|_HS^2 = {energy:.6f}")

# Plancherel: the two norms agree to rounding.
print(f"l2 norm of coefficients {plancherel_norm(coeffs):.15f}")
print(f"L2 norm on the grid     {grid_l2_norm(phi):.15f}")

back = inverse(coeffs, phi.grid)
print(f"round trip error {np.max(np.abs(back.values - phi.values)):.2e}")
