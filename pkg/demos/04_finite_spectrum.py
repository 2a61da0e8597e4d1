"""Spectrum of the finite, tilted lattice and its PT symmetry.

With E_perp = 0 the operator commutes with PT (parity times complex
conjugation), so eigenvalues are either real or come in conjugate pairs.
"""

# %%
import math

import numpy as np

from diamondchain import GROWTH_LAW, ModelParams, conjugate_pairing_error, finite_spectrum, pt_check

# %%
p = ModelParams(gamma=0.05, phi=math.pi / 2, e_par=0.05)
rep = finite_spectrum(p, im_tolerance=1e-6)
print(f"{len(rep)} eigenvalues on {p.n_cells} cells, {rep.complex_count} with |Im| > 1e-6:")
for v in rep.eigenvalues[rep.complex_indices]:
    print(f"  {v:.6f}")
print(f"conjugate pairing error {conjugate_pairing_error(rep.eigenvalues):.1e}")
print("growth law:", GROWTH_LAW)
print("the member of the pair with Im < 0 is the amplified one")

# %% [markdown]
# A nonzero E_perp detunes the b sites and breaks PT symmetry.

# %%
for e_perp in (0.0, 0.01, 0.05):
    c = pt_check(p.with_(e_perp=e_perp, n_min=-20, n_max=20))
    print(f"E_perp = {e_perp:.2f}: PT symmetric = {c.is_pt_symmetric}, residual {c.residual:.1e}")
