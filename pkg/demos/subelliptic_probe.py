"""
An a priori estimate for the sub-Laplacian
==========================================

At p = 2 the ratio ||u||_{W^{2,1}} / ||L_s u||_2 is maximised on single
coefficients, and the maximum sits at spin 1/2: sqrt(7). For p != 2 the probe
only gives a lower bound, but it should stay bounded as the band grows.
"""

from __future__ import annotations

from noncomm_fourier import SubElliptic, apriori_ratio, subelliptic_oracle

for p in (2.0, 4.0):
    result = apriori_ratio(SubElliptic(), p, [2, 4, 8], trials=4, seed=1)
    print(f"p = {p}: r = {result.params['r']}, trend {result.trend:+.3f}")
    for band, stat in zip(result.band_limits, result.statistics):
        print(f"  band {band}: {stat:.12f}")

print(f"diagonal oracle: {subelliptic_oracle(8):.12f}")
