"""Band structure of the diamond chain.

Run with ``python demos/01_bands.py``.  Prints the three propagation-constant
bands at a few quasi-momenta, shows the flat band at phi = pi, and locates
the exceptional points where the flat band meets the dispersive ones.
"""

# %%
import math

import numpy as np

from diamondchain import GAMMA_C, ModelParams, band_sweep, characteristic_coefficients, classify_gaps

# %% [markdown]
# Each unit cell holds three sites (a, b, c).  The Bloch operator is a 3x3
# matrix, so the bands are the roots of a depressed cubic
# lambda^3 - P(k) lambda + Q(k) = 0.  The solver uses Cardano's formula and
# checks every grid point against a dense eigensolver.

# %%
p = ModelParams(gamma=0.05, phi=math.pi)
P, Q = characteristic_coefficients(p, [0.0, math.pi / 2, math.pi])
print("P(k) at k = 0, pi/2, pi:", np.round(P, 6))
print("Q(k) at k = 0, pi/2, pi:", np.round(Q, 12))

# %%
sweep = band_sweep(p, n_k=401)
print(f"\n{len(sweep.grid)} k points, worst Cardano vs eig deviation {sweep.max_eig_deviation:.1e}")
for k in (0, 100, 200):
    print(f"k = {sweep.grid[k]: .4f}  lambda =", np.round(sweep.lambdas[k], 5))

# %% [markdown]
# At phi = pi, Q vanishes identically, so lambda = 0 is a flat band.  Near
# k = 0 the two dispersive bands turn complex: the gain/loss dominates the
# coupling there.  The crossover sits at k* = acos(1 - gamma^2 / 4).

# %%
flat = np.abs(sweep.lambdas).min(axis=1).max()
print(f"\nflat band: max_k min|lambda| = {flat:.1e}")
kstar = math.acos(1 - p.gamma**2 / 4)
complex_k = sweep.grid[np.abs(sweep.lambdas.imag).max(axis=1) > 1e-9]
print(f"complex for |k| <= {np.abs(complex_k).max():.4f}, k* = {kstar:.4f}")

# %% [markdown]
# ``classify_gaps`` decides whether the flat band touches a dispersive one.
# The touchings move with gamma and vanish above the critical value GAMMA_C.

# %%
for g in (0.05, 2.0, GAMMA_C + 0.05):
    r = classify_gaps(band_sweep(ModelParams(gamma=g, phi=math.pi)))
    where = ", ".join(f"{t.k:.4f}" for t in r.touching_points[:4])
    print(f"gamma = {g:.4f}: gapless = {r.is_gapless}, min separation {r.min_separation:.2e}, touching at k = [{where}]")
