"""
Relay limits for two correlated sources
=======================================

Closed-form optimal time sharing next to a brute-force grid search, and the
two achievable erasure-probability pentagons for a fixed code.
"""

# %%
import numpy as np

from bilayer_sc.ensemble import CODE_A
from bilayer_sc.theory import (
    ChannelSet,
    achievable_region_sd,
    achievable_region_sr,
    brute_force_allocation,
    df_rate_bounds,
    optimal_allocation,
    source_entropies,
)

# %% [markdown]
# A symmetric network where the relay links are clearly better than the
# direct ones. The maximum common rate grows as the sources get more alike.

# %%
ch = ChannelSet.from_capacities(0.8, 0.8, 0.5, 0.5, 1.0)
for p in (0.0, 0.3, 0.6, 1.0):
    opt = optimal_allocation(ch, p)
    grid = brute_force_allocation(ch, p, grid_step=0.01)
    hc, hj = source_entropies(p)
    print(f"p={p:.1f}  H(U1|U2)={hc:.2f}  Rmax={opt.Rmax:.4f}  grid={grid.Rmax:.4f}  "
          f"theta=({opt.alloc.theta1:.3f}, {opt.alloc.theta2:.3f}, {opt.alloc.theta_r:.3f})")

# %% [markdown]
# At the optimum the two per-user bounds and the sum bound meet.

# %%
opt = optimal_allocation(ch, 0.3)
print(np.round(df_rate_bounds(opt.alloc, opt.Rs1_star, ch, 0.3), 6))

# %% [markdown]
# Random asymmetric networks: closed form against the grid.

# %%
rng = np.random.default_rng(0)
gaps = []
for _ in range(20):
    c_sd = rng.uniform(0.1, 0.8, 2)
    c_sr = rng.uniform(c_sd, 1.0)
    ch = ChannelSet.from_capacities(c_sr[0], c_sr[1], c_sd[0], c_sd[1], rng.uniform(c_sd.max(), 1))
    gaps.append(optimal_allocation(ch, 0.2).Rmax - brute_force_allocation(ch, 0.2, 0.01).Rmax)
print("max closed - grid:", max(gaps), " min:", min(gaps))

# %% [markdown]
# Pentagons for Code A (punctured systematic bits).

# %%
rates = CODE_A.rate_bundle()
for p in (0.0, 0.3):
    print("p =", p)
    print("  relay      ", np.round(achievable_region_sr(rates, p, True).corners, 4).tolist())
    print("  destination", np.round(achievable_region_sd(rates, p, True).corners, 4).tolist())
