"""
Checking multiplier conditions on a truncation
==============================================

The checker evaluates suprema of weighted difference norms over labels up to
a cutoff, and reports them at a smaller cutoff too. A bounded multiplier
gives constants that settle; a growing symbol does not.
"""

from __future__ import annotations

from noncomm_fourier import SU2, check_class, check_hm, difference_profile, zoo_symbol

su2 = SU2()

for name in ("identity", "riesz", "growing"):
    report = check_hm(zoo_symbol(name, su2, 18), cutoffs=[8, 16])
    print(f"{name:>8}: {report.verdict:<12} max constant {report.max_constant():8.3f} "
          f"instability {report.instability:.3f}")

# The sub-Laplacian parametrix lies in the (1/2)-class of order -1 but not in the 1-class.
sigma = zoo_symbol("sublaplacian-parametrix", su2, 18)
profile = difference_profile(sigma, 2, 16)
for rho in (0.5, 1.0):
    report = check_class(profile, -1, rho, 2, cutoffs=[8, 16])
    print(f"parametrix, rho={rho}: {report.verdict} (instability {report.instability:.3f})")

print(report.caveat)
