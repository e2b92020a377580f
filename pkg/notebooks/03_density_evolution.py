"""
Decodable regions from density evolution
========================================

Thresholds along rays through the (eps_s1d, eps_s2d) plane for Code A and
Code B, compared with the pentagon of their design rates. A short chain keeps
this to a couple of minutes; set L = 600 for the full-length picture.
"""

# %%
import numpy as np

from bilayer_sc.density_evolution import (
    DEParams,
    fan_directions,
    lemma1_equivalence_check,
    region_scan,
    threshold_on_ray,
)
from bilayer_sc.ensemble import CODE_A, CODE_B
from bilayer_sc.theory import achievable_region_sd

L = 100

# %% [markdown]
# Symmetric independent sources: the bilayer recursion collapses to a single
# (l + ls, r) chain.

# %%
print(lemma1_equivalence_check(4, 2, 8, L, 5, 0.4, 200))

# %%
rays = fan_directions(7)
for name, code, p_corr in (("A", CODE_A, 0.3), ("B", CODE_B, 0.2)):
    ens = code.with_chain(L=L)
    print("Code", name)
    for p in (0.0, p_corr):
        prm = DEParams(ens, p=p)
        pent = achievable_region_sd(code.rate_bundle(), p, punctured=True)
        t = [threshold_on_ray((0, 0), d, prm, bisect_tol=1e-3).t for d in rays]
        lim = [pent.ray_exit((0, 0), d) for d in rays]
        print(f"  p={p}: DE   ", np.round(t, 3))
        print(f"  p={p}: limit", np.round(lim, 3))

# %% [markdown]
# Coupling width matters more than degrees (Code B, p = 0.2).

# %%
for w in (4, 6, 8, 10):
    prm = DEParams(CODE_B.with_chain(L=L, w=w), p=0.2)
    print(w, threshold_on_ray((0, 0), (1, 1), prm, bisect_tol=1e-3).t)

# %% [markdown]
# A coarse grid scan of the Code A region; the boundary walks down like a
# staircase.

# %%
scan = region_scan(DEParams(CODE_A.with_chain(L=L), p=0.0), grid_step=0.05)
for x, y in zip(scan.grid, scan.boundary()):
    print(f"{x:.2f}  {y:.2f}")
